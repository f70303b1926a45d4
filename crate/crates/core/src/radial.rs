//! Radial single-well problem
//!
//! `-h^2 (1/r) (r u')' + v_B(r) u = mu u`, `u'(0) = 0`, `u(R_max) = 0`,
//! discretised by conservative finite volumes on a uniform vertex grid
//! (`r_i = i * dr`, node 0 carries the control volume `[0, dr/2]`). The
//! lowest two eigenvalues come from Sturm bisection on three grids
//! (`dr`, `dr/2`, `dr/4`) and are Richardson-extrapolated. The ground state
//! is rebuilt by an inward ratio recurrence, which is stable in the
//! forbidden region and keeps relative accuracy in the exponentially small
//! tail; it is stored as `ln u`.

use crate::agmon::ACTION_QUADRATURE;
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::quadrature::Quadrature;
use crate::tridiag::SymTridiagonal;
use std::f64::consts::PI;

/// Grid controls for [`solve_radial`]. `None` selects the defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    /// Dirichlet radius; default `2L + a + 6 sqrt(h/B)`.
    pub r_max: Option<f64>,
    /// Coarsest spacing of the three-level ladder; default
    /// `min(sqrt(h/B)/40, h/(B R_max))`, snapped so that `a` is a node.
    pub spacing: Option<f64>,
    /// Largest accepted shift of the extrapolated `mu_h` between the two
    /// Richardson pairs.
    pub richardson_tol: f64,
}

impl Default for RadialGrid {
    fn default() -> Self {
        RadialGrid {
            r_max: None,
            spacing: None,
            richardson_tol: 1e-8,
        }
    }
}

impl RadialGrid {
    pub fn with_spacing(spacing: f64) -> Self {
        RadialGrid {
            spacing: Some(spacing),
            ..Default::default()
        }
    }
}

/// Single-well radial ground state.
#[derive(Debug, Clone)]
pub struct RadialState {
    pub h: f64,
    /// Spacing of `grid`.
    pub dr: f64,
    /// Nodes `0, dr, ..., R_max`.
    pub grid: Vec<f64>,
    /// `ln u` at the nodes (`-inf` at the Dirichlet node).
    pub log_u: Vec<f64>,
    pub mu_h: f64,
    pub mu_h1: f64,
    /// `2 pi int u^2 r dr` (Simpson on `grid`).
    pub norm_2d: f64,
    /// Eigen-equation residual on the finest grid, relative to `|mu_h| + B h`.
    pub residual: f64,
    /// Raw ground eigenvalues on the `dr`, `dr/2`, `dr/4` grids.
    pub mu_ladder: [f64; 3],
    /// Raw first-excited eigenvalues on the same grids.
    pub mu1_ladder: [f64; 3],
    /// Shift between the two Richardson estimates of `mu_h`.
    pub mu_error: f64,
}

impl RadialState {
    pub fn u(&self, i: usize) -> f64 {
        self.log_u[i].exp()
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_u.iter().map(|l| l.exp()).collect()
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    /// Node index of `r` if it lies on the grid.
    pub fn node_of(&self, r: f64) -> Option<usize> {
        let x = r / self.dr;
        let i = x.round();
        ((x - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.grid.len()).then_some(i as usize)
    }

    /// Observed convergence order of the raw ground eigenvalue.
    pub fn observed_order(&self) -> f64 {
        let [c, m, f] = self.mu_ladder;
        ((c - m) / (m - f)).abs().log2()
    }

    fn log_u_ext(&self, i: isize) -> f64 {
        // u is even in r
        self.log_u[i.unsigned_abs()]
    }

    /// `ln u(r)` by 4-point Lagrange interpolation of `ln u`.
    pub fn log_u_at(&self, r: f64) -> Result<f64> {
        let n = self.grid.len();
        if !(0.0..=self.grid[n - 3]).contains(&r) {
            return Err(Error::DomainError(format!(
                "r = {r} outside interpolation range [0, {}]",
                self.grid[n - 3]
            )));
        }
        let x = r / self.dr;
        let i0 = (x.floor() as isize).min(n as isize - 3);
        let t = x - i0 as f64;
        let (fm, f0, f1, f2) = (
            self.log_u_ext(i0 - 1),
            self.log_u_ext(i0),
            self.log_u_ext(i0 + 1),
            self.log_u_ext(i0 + 2),
        );
        Ok(-t * (t - 1.0) * (t - 2.0) / 6.0 * fm + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * f0
            - (t + 1.0) * t * (t - 2.0) / 2.0 * f1
            + (t + 1.0) * t * (t - 1.0) / 6.0 * f2)
    }

    /// `u'/u` at node `i` (fourth-order central difference of `ln u`).
    pub fn log_derivative_at_node(&self, i: usize) -> f64 {
        let i = i as isize;
        (-self.log_u_ext(i + 2) + 8.0 * self.log_u_ext(i + 1) - 8.0 * self.log_u_ext(i - 1)
            + self.log_u_ext(i - 2))
            / (12.0 * self.dr)
    }
}

struct Level {
    mu0: f64,
    mu1: f64,
    log_u: Vec<f64>,
    residual: f64,
}

/// Finite-volume pieces: flux coefficients `k_{i+1/2}`, control volumes `m_i`.
fn assemble(spec: &PotentialSpec, h: f64, dr: f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    // unknowns at nodes 0..n-1, node n is Dirichlet
    let flux: Vec<f64> = (0..n).map(|i| h * h * (i as f64 + 0.5)).collect(); // r_{i+1/2} / dr * h^2 = (i+1/2) h^2
    let mass: Vec<f64> = (0..n)
        .map(|i| if i == 0 { dr * dr / 8.0 } else { i as f64 * dr * dr })
        .collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { flux[i - 1] };
            left + flux[i] + mass[i] * spec.effective(i as f64 * dr)
        })
        .collect();
    (flux, mass, diag)
}

fn solve_level(spec: &PotentialSpec, h: f64, dr: f64, n: usize) -> Result<Level> {
    let (flux, mass, diag) = assemble(spec, h, dr, n);
    let sq: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let t = SymTridiagonal::new(
        (0..n).map(|i| diag[i] / mass[i]).collect(),
        (0..n - 1).map(|i| -flux[i] / (sq[i] * sq[i + 1])).collect(),
    );
    let mu0 = t.eigenvalue(0);
    let mu1 = t.eigenvalue(1);
    if !(mu0.is_finite() && mu1.is_finite() && mu0 < mu1) {
        return Err(Error::NonConvergence(format!(
            "bisection returned {mu0}, {mu1}"
        )));
    }

    // inward ratio recurrence: s = u_{i+1}/u_i, t = u_{i-1}/u_i
    let mut log_u = vec![0.0; n + 1];
    log_u[n] = f64::NEG_INFINITY;
    let mut s = 0.0;
    for i in (1..n).rev() {
        let ti = ((diag[i] - mu0 * mass[i]) - flux[i] * s) / flux[i - 1];
        if !(ti > 0.0) {
            return Err(Error::NonConvergence(format!(
                "ground-state recurrence changed sign at node {i} (ratio {ti})"
            )));
        }
        log_u[i - 1] = log_u[i] + ti.ln();
        s = 1.0 / ti;
    }
    normalize_fv(&mut log_u, &mass);

    // residual of the symmetric form (M^{-1/2} A M^{-1/2} - mu) w, w = M^{1/2} u
    let top = log_u[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = (0..n).map(|i| sq[i] * (log_u[i] - top).exp()).collect();
    let mut aw = vec![0.0; n];
    t.matvec(&w, &mut aw);
    let rnorm = aw
        .iter()
        .zip(&w)
        .map(|(a, x)| (a - mu0 * x).powi(2))
        .sum::<f64>()
        .sqrt();
    let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual = rnorm / wnorm / (mu0.abs() + spec.b * h);
    Ok(Level {
        mu0,
        mu1,
        log_u,
        residual,
    })
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    top + terms.map(|t| (t - top).exp()).sum::<f64>().ln()
}

fn normalize_fv(log_u: &mut [f64], mass: &[f64]) {
    let log_norm = (2.0 * PI).ln()
        + log_sum_exp(mass.iter().zip(log_u.iter()).map(|(m, l)| m.ln() + 2.0 * l));
    for l in log_u.iter_mut() {
        *l -= 0.5 * log_norm;
    }
}

fn simpson_log_norm(log_u: &[f64], dr: f64) -> f64 {
    let n = log_u.len() - 1;
    debug_assert!(n % 2 == 0);
    let terms = (1..=n).map(move |i| {
        let w = if i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        (w * i as f64 * dr).ln() + 2.0 * log_u[i]
    });
    (2.0 * PI * dr / 3.0).ln() + log_sum_exp(terms)
}

/// Default Dirichlet radius.
pub fn default_r_max(spec: &PotentialSpec, h: f64) -> f64 {
    2.0 * spec.l + spec.a + 6.0 * (h / spec.b).sqrt()
}

/// Lowest two `m = 0` eigenpairs of the radial single-well operator.
pub fn solve_radial(spec: &PotentialSpec, h: f64, grid: &RadialGrid) -> Result<RadialState> {
    assert!(h > 0.0, "h must be positive");
    let r_max = grid.r_max.unwrap_or_else(|| default_r_max(spec, h));
    if r_max < 2.0 * spec.l + spec.a {
        return Err(Error::GridTooCoarse(format!(
            "R_max = {r_max} < 2L + a = {}",
            2.0 * spec.l + spec.a
        )));
    }
    let osc = (h / spec.b).sqrt();
    let target = grid
        .spacing
        .unwrap_or_else(|| (osc / 40.0).min(h / (spec.b * r_max)));
    if target > osc / 4.0 {
        return Err(Error::GridTooCoarse(format!(
            "spacing {target} does not resolve the oscillator length {osc}"
        )));
    }
    let per_a = (spec.a / target).ceil().max(1.0);
    let dr = spec.a / per_a;
    let mut n_c = (r_max / dr).ceil() as usize;
    if n_c % 2 == 1 {
        n_c += 1;
    }

    let levels: Vec<Level> = [1usize, 2, 4]
        .iter()
        .map(|&k| solve_level(spec, h, dr / k as f64, n_c * k))
        .collect::<Result<_>>()?;
    let mu_ladder = [levels[0].mu0, levels[1].mu0, levels[2].mu0];
    let mu1_ladder = [levels[0].mu1, levels[1].mu1, levels[2].mu1];
    let rich = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    let mu_h = rich(mu_ladder[1], mu_ladder[2]);
    let mu_h1 = rich(mu1_ladder[1], mu1_ladder[2]);
    let mu_error = (mu_h - rich(mu_ladder[0], mu_ladder[1])).abs();
    if mu_error > grid.richardson_tol {
        return Err(Error::GridTooCoarse(format!(
            "extrapolated mu_h moved by {mu_error:e} under refinement (tolerance {:e})",
            grid.richardson_tol
        )));
    }

    let mut log_u: Vec<f64> = (0..=n_c)
        .map(|i| {
            let m = levels[1].log_u[2 * i];
            let f = levels[2].log_u[4 * i];
            if i == n_c {
                f64::NEG_INFINITY
            } else {
                f + (f - m) / 3.0
            }
        })
        .collect();
    let log_norm = simpson_log_norm(&log_u, dr);
    for l in log_u.iter_mut() {
        *l -= 0.5 * log_norm;
    }
    let norm_2d = simpson_log_norm(&log_u, dr).exp();

    Ok(RadialState {
        h,
        dr,
        grid: (0..=n_c).map(|i| i as f64 * dr).collect(),
        log_u,
        mu_h,
        mu_h1,
        norm_2d,
        residual: levels[2].residual,
        mu_ladder,
        mu1_ladder,
        mu_error,
    })
}

/// Lower limit of the explicit `K` quadrature; below it the summed
/// integrand is replaced by its linear small-`s` behaviour.
fn wkb_cutoff(spec: &PotentialSpec) -> f64 {
    1e-4 * spec.a
}

/// The summed `K` integrand
/// `v_B'/(4(v_B - v0)) + 1/(2s) - omega/(2 sqrt(v_B - v0))`.
pub fn wkb_integrand(spec: &PotentialSpec, s: f64) -> f64 {
    let e = spec.effective_excess(s);
    spec.effective_slope(s) / (4.0 * e) + 0.5 / s - 0.5 * spec.omega() / e.sqrt()
}

/// `K(0)`, fixed by the 2D normalisation of the harmonic ground state.
pub fn wkb_prefactor_origin(spec: &PotentialSpec) -> f64 {
    (spec.omega() / (2.0 * PI)).sqrt()
}

fn wkb_log_integral(spec: &PotentialSpec, r0: f64, r1: f64, quad: &Quadrature) -> Result<f64> {
    let eps = wkb_cutoff(spec);
    let slope = wkb_integrand(spec, eps) / eps;
    let small = |x: f64| 0.5 * slope * x.min(eps).powi(2);
    let mut total = small(r1) - small(r0);
    let (lo, hi) = (r0.max(eps), r1.max(eps));
    if hi > lo {
        let mut pts = vec![lo];
        if lo < spec.a && spec.a < hi {
            pts.push(spec.a);
        }
        pts.push(hi);
        total += quad
            .integrate_with_breaks(|s| wkb_integrand(spec, s), &pts)
            .map_err(|e| Error::SingularIntegrand(e.to_string()))?
            .value;
    }
    Ok(total)
}

/// WKB amplitude `K(r)` of the ground state, `phi ~ h^{-1/2} K(r) e^{-d(0,r)/h}`.
pub fn wkb_prefactor(spec: &PotentialSpec, r: f64) -> Result<f64> {
    assert!(r >= 0.0);
    Ok(wkb_prefactor_origin(spec) * (-wkb_log_integral(spec, 0.0, r, &ACTION_QUADRATURE)?).exp())
}

/// `sup_{r <= r_max} |e^{d(0,r)/h} u(r) - h^{-1/2} K(r)|` over grid nodes
/// (at most ~400 samples), evaluated in log space.
pub fn wkb_residual(state: &RadialState, spec: &PotentialSpec, r_max: f64) -> Result<f64> {
    let last = ((r_max / state.dr).floor() as usize).min(state.grid.len() - 2);
    let stride = (last / 400).max(1);
    let mut nodes: Vec<usize> = (0..=last).step_by(stride).collect();
    if *nodes.last().unwrap() != last {
        nodes.push(last);
    }
    let h = state.h;
    let k0 = wkb_prefactor_origin(spec);
    let (mut d, mut log_k) = (0.0, 0.0);
    let mut prev = 0.0;
    let mut sup: f64 = 0.0;
    for &i in &nodes {
        let r = state.grid[i];
        if r > prev {
            d += crate::agmon::agmon_distance(spec, prev, r)?;
            log_k -= wkb_log_integral(spec, prev, r, &ACTION_QUADRATURE)?;
            prev = r;
        }
        let scaled = (d / h + state.log_u[i]).exp();
        let wkb = k0 * log_k.exp() / h.sqrt();
        sup = sup.max((scaled - wkb).abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Profile;

    #[test]
    fn pure_magnetic_oscillator() {
        let spec = PotentialSpec::new(1.0, 2.0, 1.0, 0.0, Profile::Zero).unwrap();
        let st = solve_radial(&spec, 0.1, &RadialGrid::default()).unwrap();
        assert!((st.mu_h - 0.1).abs() < 1e-6, "{}", st.mu_h);
        // m = 0 second level of the 2D oscillator: 3 B h
        assert!((st.mu_h1 - 0.3).abs() < 1e-6, "{}", st.mu_h1);
    }

    #[test]
    fn state_invariants() {
        let spec = PotentialSpec::canonical();
        let st = solve_radial(&spec, 0.1, &RadialGrid::default()).unwrap();
        assert!((st.norm_2d - 1.0).abs() < 1e-10);
        assert!(st.log_u[..st.log_u.len() - 1].iter().all(|l| l.is_finite()));
        assert!(spec.v0 < st.mu_h && st.mu_h < st.mu_h1 && st.mu_h1 < 0.0);
        assert!(st.residual < 1e-9, "{}", st.residual);
    }

    #[test]
    fn convergence_order_is_two() {
        let spec = PotentialSpec::canonical();
        let st = solve_radial(&spec, 0.1, &RadialGrid::with_spacing(0.01)).unwrap();
        let p = st.observed_order();
        assert!((p - 2.0).abs() < 0.5, "observed order {p}");
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let spec = PotentialSpec::canonical();
        let r = solve_radial(&spec, 0.1, &RadialGrid::with_spacing(0.2));
        assert!(matches!(r, Err(Error::GridTooCoarse(_))));
        let grid = RadialGrid {
            richardson_tol: 1e-14,
            ..RadialGrid::with_spacing(0.05)
        };
        assert!(matches!(
            solve_radial(&spec, 0.1, &grid),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn prefactor_at_origin() {
        let spec = PotentialSpec::canonical();
        let k0 = wkb_prefactor(&spec, 0.0).unwrap();
        assert!((k0 - (5f64.sqrt() / (2.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((k0 - 0.596_558).abs() < 1e-6);
    }

    #[test]
    fn summed_integrand_has_finite_limit() {
        let spec = PotentialSpec::canonical();
        let a = wkb_integrand(&spec, 1e-4);
        let b = wkb_integrand(&spec, 1e-6);
        assert!((a - b).abs() < 1e-3, "{a} {b}");
        // each term alone is ~1/s
        assert!((spec.effective_slope(1e-6) / (4.0 * spec.effective_excess(1e-6))) > 1e5);
    }

    #[test]
    fn prefactor_is_continuous_at_rim() {
        let spec = PotentialSpec::canonical();
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
            let jump = (wkb_prefactor(&spec, spec.a - eps).unwrap()
                - wkb_prefactor(&spec, spec.a + eps).unwrap())
            .abs();
            assert!(jump < last);
            last = jump;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let spec = PotentialSpec::canonical();
        let st = solve_radial(&spec, 0.2, &RadialGrid::default()).unwrap();
        for i in [0, 3, 50, 200] {
            assert!((st.log_u_at(st.grid[i]).unwrap() - st.log_u[i]).abs() < 1e-12);
        }
        assert!(st.log_u_at(st.r_max()).is_err());
        let node = st.node_of(spec.a).unwrap();
        assert!((st.grid[node] - spec.a).abs() < 1e-12);
    }
}
