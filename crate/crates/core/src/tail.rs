//! Outside the support the radial equation has no potential, and the ground
//! state is an explicit Laplace-type integral
//!
//! `phi(r) = C_h e^{-B r^2/4h} int_0^inf e^{-B r^2 t/2h} t^{alpha-1} (1+t)^{-alpha} dt`,
//! `alpha = 1/2 - mu_h/(2Bh)`.
//!
//! The t-integral is done in `s = ln t` by the trapezoid rule on the window
//! where the log-integrand is within [`TAIL_DROP`] nats of its maximum. The
//! integrand is analytic in a strip around the real `s` axis and decays
//! doubly exponentially on the right, so the rule converges geometrically.

use crate::agmon::{agmon_distance, free_distance};
use crate::error::{Error, Result};
use crate::logval::{LogComplex, LogScalar};
use crate::potential::PotentialSpec;
use crate::quadrature::log_window;
use crate::radial::{wkb_prefactor, RadialState};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Truncation depth of all improper integrals, in nats.
pub const TAIL_DROP: f64 = 60.0;

const MAX_NODES: usize = 400_000;

/// Largest accepted log-derivative mismatch at `r = a` before matching is
/// declared failed.
pub const MATCH_FAILURE: f64 = 1e-2;

/// `int_0^inf e^{-kappa t} t^{alpha-1} (1+t)^{-alpha} (c0 + c1 t) dt` for
/// `Re kappa > 0`, `alpha > 0`.
pub fn laplace_integral(kappa: Complex64, alpha: f64, poly: [f64; 2]) -> Result<LogComplex> {
    if !(kappa.re > 0.0) || !(alpha > 0.0) {
        return Err(Error::DomainError(format!(
            "need Re kappa > 0 and alpha > 0 (kappa = {kappa}, alpha = {alpha})"
        )));
    }
    let kr = kappa.re;
    let weight = |t: f64| poly[0] + poly[1] * t;
    // real part of the log-integrand in s = ln t (Jacobian included)
    let log_re = |s: f64| {
        let t = s.exp();
        -kr * t + alpha * s - alpha * s.exp().ln_1p() + weight(t).abs().ln()
    };
    let t_peak = 0.5 * (-1.0 + (1.0 + 4.0 * alpha / kr).sqrt());
    let s_peak = t_peak.ln();
    let curv = kr * t_peak + alpha * t_peak / (1.0 + t_peak).powi(2);
    let width = 1.0 / curv.sqrt();
    let (lo, hi) = log_window(log_re, s_peak, width, TAIL_DROP + 10.0, 1e4)?;
    let phase_rate = kappa.im.abs() * hi.exp();
    let step = (width / 8.0).min(0.2).min(PI / (6.0 * phase_rate.max(1e-300)));
    let below = ((s_peak - lo) / step).ceil() as usize;
    let above = ((hi - s_peak) / step).ceil() as usize;
    if below + above > MAX_NODES {
        return Err(Error::QuadratureFailure(format!(
            "trapezoid would need {} nodes",
            below + above
        )));
    }
    let top = log_re(s_peak);
    let mut sum = Complex64::new(0.0, 0.0);
    // fixed summation order: left to right
    for k in 0..=(below + above) {
        let s = s_peak + (k as f64 - below as f64) * step;
        let t = s.exp();
        let w = weight(t);
        if w == 0.0 {
            continue;
        }
        let re = -kr * t + alpha * s - alpha * t.ln_1p() + w.abs().ln() - top;
        let z = Complex64::from_polar(re.exp(), -kappa.im * t);
        sum += if w < 0.0 { -z } else { z };
    }
    let val = LogComplex::from_complex(sum * step);
    Ok(LogComplex::new(val.log_mag + top, val.phase))
}

fn real_part(z: LogComplex) -> Result<LogScalar> {
    if z.phase.abs() > 1e-12 && (PI - z.phase.abs()) > 1e-12 {
        return Err(Error::InternalInconsistency(format!(
            "real integral came out with phase {}",
            z.phase
        )));
    }
    let sign = if z.phase.abs() < 1.0 {
        crate::logval::Sign::Positive
    } else {
        crate::logval::Sign::Negative
    };
    Ok(LogScalar::new(sign, z.log_mag))
}

/// `t_L`, `f''(t_L)`, `nu` of the Laplace expansion of `phi(L)`, where
/// `f(t) = BL^2/4 + BL^2 t/2 - (|v0|/2B) ln(t/(1+t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceInternals {
    pub t_l: f64,
    pub fpp_tl: f64,
    pub nu: f64,
    /// `f(t_L)`, equal to the free distance at `L`.
    pub f_tl: f64,
    /// `|f'(t_L)|`.
    pub newton_residual: f64,
}

fn f_l(spec: &PotentialSpec, t: f64) -> f64 {
    let (b, l, c) = (spec.b, spec.l, spec.depth());
    0.25 * b * l * l + 0.5 * b * l * l * t - 0.5 * c / b * (t / (1.0 + t)).ln()
}

fn fp_l(spec: &PotentialSpec, t: f64) -> f64 {
    let (b, l, c) = (spec.b, spec.l, spec.depth());
    0.5 * b * l * l - 0.5 * c / b / (t * (1.0 + t))
}

pub fn laplace_internals(spec: &PotentialSpec) -> LaplaceInternals {
    let (b, l, c) = (spec.b, spec.l, spec.depth());
    let t_l = 0.5 * (-1.0 + (1.0 + 4.0 * c / (b * b * l * l)).sqrt());
    let fpp_tl = b * b * l.powi(3) / (2.0 * c) * (b * b * l * l + 4.0 * c).sqrt();
    LaplaceInternals {
        t_l,
        fpp_tl,
        nu: 0.5 - spec.omega() / (2.0 * spec.b),
        f_tl: f_l(spec, t_l),
        newton_residual: fp_l(spec, t_l).abs(),
    }
}

/// `C_h ~ h^{-1} K(L) sqrt(f''(t_L)/2pi) t_L^{1-nu} (1+t_L)^nu e^{(d~(L) - d(0,L))/h}`.
pub fn asymptotic_c_h(spec: &PotentialSpec, h: f64, k_l: f64) -> Result<LogScalar> {
    let li = laplace_internals(spec);
    let d = agmon_distance(spec, 0.0, spec.l)?;
    let log = -h.ln() + k_l.ln() + 0.5 * (li.fpp_tl / (2.0 * PI)).ln()
        + (1.0 - li.nu) * li.t_l.ln()
        + li.nu * li.t_l.ln_1p()
        + (free_distance(spec, spec.l) - d) / h;
    Ok(LogScalar::from_log(log))
}

/// Matched exterior representation of one radial ground state.
#[derive(Debug, Clone, Copy)]
pub struct TailModel {
    pub spec: PotentialSpec,
    pub h: f64,
    pub mu_h: f64,
    pub alpha: f64,
    pub c_h_matched: LogScalar,
    pub c_h_asymptotic: LogScalar,
    pub t_l: f64,
    pub fpp_tl: f64,
    pub nu: f64,
    /// `|u'(a)/u(a) - I'(a)/I(a)|`.
    pub match_residual: f64,
}

/// Exponential rate `B q / 2h` of the t-integral at squared radius `q`.
pub fn kappa(spec: &PotentialSpec, h: f64, q: Complex64) -> Complex64 {
    q * (spec.b / (2.0 * h))
}

/// The bracketed integral without `C_h`, at complex squared radius `q`:
/// `e^{-Bq/4h} int e^{-Bqt/2h} t^{alpha-1}(1+t)^{-alpha} (c0 + c1 t) dt`.
pub fn bare_tail(spec: &PotentialSpec, h: f64, alpha: f64, q: Complex64, poly: [f64; 2]) -> Result<LogComplex> {
    let k = kappa(spec, h, q);
    let integral = laplace_integral(k, alpha, poly)?;
    Ok(integral * LogComplex::exp(-0.5 * k))
}

impl TailModel {
    fn check_radius(&self, r: f64) -> Result<()> {
        if !(r > self.spec.a) {
            return Err(Error::DomainError(format!(
                "tail representation needs r > a = {}, got {r}",
                self.spec.a
            )));
        }
        Ok(())
    }

    /// `phi(r)` for `r > a`.
    pub fn value(&self, r: f64) -> Result<LogScalar> {
        self.check_radius(r)?;
        let bare = bare_tail(&self.spec, self.h, self.alpha, Complex64::new(r * r, 0.0), [1.0, 0.0])?;
        Ok(real_part(bare)? * self.c_h_matched)
    }

    /// `phi'(r)` for `r > a`.
    pub fn derivative(&self, r: f64) -> Result<LogScalar> {
        self.check_radius(r)?;
        let bare = bare_tail(&self.spec, self.h, self.alpha, Complex64::new(r * r, 0.0), [1.0, 2.0])?;
        let factor = LogScalar::from_f64(-self.spec.b * r / (2.0 * self.h));
        Ok(real_part(bare)? * factor * self.c_h_matched)
    }

    /// `phi(q)` and `phi'(r)/r` continued to complex squared radius `q`.
    pub fn complex_value(&self, q: Complex64) -> Result<(LogComplex, LogComplex)> {
        let (spec, h) = (&self.spec, self.h);
        let c = LogComplex::from_scalar(self.c_h_matched);
        let phi = bare_tail(spec, h, self.alpha, q, [1.0, 0.0])? * c;
        let dphi = bare_tail(spec, h, self.alpha, q, [1.0, 2.0])?
            * c
            * LogComplex::from_complex(Complex64::new(-spec.b / (2.0 * h), 0.0));
        Ok((phi, dphi))
    }

    /// Same model with a different normalisation constant.
    pub fn with_c_h(&self, c_h: LogScalar) -> TailModel {
        TailModel {
            c_h_matched: c_h,
            ..*self
        }
    }
}

pub fn tail_value(r: f64, model: &TailModel) -> Result<LogScalar> {
    model.value(r)
}

pub fn tail_derivative(r: f64, model: &TailModel) -> Result<LogScalar> {
    model.derivative(r)
}

/// Pin `C_h` by continuity of `u` with the exterior representation at `r = a`.
pub fn match_normalization(state: &RadialState, spec: &PotentialSpec) -> Result<TailModel> {
    let h = state.h;
    let a = spec.a;
    let node = state
        .node_of(a)
        .ok_or_else(|| Error::InvalidSpec("support radius is not a grid node".into()))?;
    if state.r_max() <= a {
        return Err(Error::InvalidSpec("radial grid ends inside the support".into()));
    }
    let alpha = 0.5 - state.mu_h / (2.0 * spec.b * h);
    let q = Complex64::new(a * a, 0.0);
    let i0 = real_part(bare_tail(spec, h, alpha, q, [1.0, 0.0])?)?;
    let i1 = real_part(bare_tail(spec, h, alpha, q, [1.0, 2.0])?)?;
    let tail_logd = -spec.b * a / (2.0 * h) * i1.ratio(i0);
    let interior_logd = state.log_derivative_at_node(node);
    let match_residual = (interior_logd - tail_logd).abs();
    if !(match_residual <= MATCH_FAILURE) {
        return Err(Error::MatchFailure(format!(
            "log-derivative mismatch {match_residual:e} at r = a"
        )));
    }
    let c_h_matched = LogScalar::from_log(state.log_u[node]) / i0;
    let li = laplace_internals(spec);
    let c_h_asymptotic = asymptotic_c_h(spec, h, wkb_prefactor(spec, spec.l)?)?;
    Ok(TailModel {
        spec: *spec,
        h,
        mu_h: state.mu_h,
        alpha,
        c_h_matched,
        c_h_asymptotic,
        t_l: li.t_l,
        fpp_tl: li.fpp_tl,
        nu: li.nu,
        match_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;
    use crate::radial::{solve_radial, RadialGrid};

    fn model(h: f64) -> (TailModel, RadialState) {
        let spec = PotentialSpec::canonical();
        let st = solve_radial(&spec, h, &RadialGrid::default()).unwrap();
        (match_normalization(&st, &spec).unwrap(), st)
    }

    #[test]
    fn trapezoid_matches_adaptive_quadrature() {
        for (k, alpha) in [(2.0, 0.3), (12.5, 9.4), (80.0, 25.0), (0.5, 3.0)] {
            let got = laplace_integral(Complex64::new(k, 0.0), alpha, [1.0, 2.0]).unwrap();
            let q = Quadrature::new(0.0, 1e-13).with_max_intervals(20000);
            let f = |u: f64| {
                // t = u/(1-u)
                if u <= 0.0 || u >= 1.0 {
                    return 0.0;
                }
                let t = u / (1.0 - u);
                (-k * t + (alpha - 1.0) * t.ln() - alpha * t.ln_1p()).exp() * (1.0 + 2.0 * t)
                    / (1.0 - u).powi(2)
            };
            let brk = [0.0, 1e-8, 1e-4, 0.01, 0.1, 0.5, 0.9, 1.0];
            let oracle = q.integrate_with_breaks(f, &brk).unwrap().value;
            let rel = (got.to_complex().re / oracle - 1.0).abs();
            assert!(rel < 1e-11, "k={k} alpha={alpha}: {rel:e}");
        }
    }

    #[test]
    fn complex_rate_matches_adaptive_quadrature() {
        let k = Complex64::new(6.0, -4.0);
        let alpha = 4.2;
        let got = laplace_integral(k, alpha, [1.0, 0.0]).unwrap().to_complex();
        let f = |t: f64| {
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            (-k * t + (alpha - 1.0) * t.ln() - alpha * t.ln_1p()).exp()
        };
        let oracle: Complex64 = Quadrature::new(0.0, 1e-13)
            .integrate_with_breaks(f, &[0.0, 0.5, 2.0, 8.0, 40.0])
            .unwrap()
            .value;
        assert!((got - oracle).norm() / oracle.norm() < 1e-11);
    }

    #[test]
    fn laplace_internals_canonical() {
        let spec = PotentialSpec::canonical();
        let li = laplace_internals(&spec);
        assert!((li.t_l - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!((li.t_l - 0.2071068).abs() < 1e-7);
        assert!(li.newton_residual < 1e-12);
        assert!(li.fpp_tl > 0.0);
        // oracle: central difference of f' at t_L
        let d = 1e-5;
        let fd = (fp_l(&spec, li.t_l + d) - fp_l(&spec, li.t_l - d)) / (2.0 * d);
        assert!((fd / li.fpp_tl - 1.0).abs() < 1e-8);
        assert!((li.f_tl - free_distance(&spec, spec.l)).abs() < 1e-10);
        assert!((li.nu + 0.618034).abs() < 1e-6);
    }

    #[test]
    fn matching_residual_is_small() {
        let (m, _) = model(0.1);
        assert!(m.match_residual < 1e-4, "{}", m.match_residual);
        assert!(m.c_h_matched.sign == crate::logval::Sign::Positive);
        assert!(m.c_h_asymptotic.sign == crate::logval::Sign::Positive);
    }

    #[test]
    fn tail_reproduces_interior_solution() {
        let (m, st) = model(0.1);
        let spec = m.spec;
        let stop = 2.0 * spec.l;
        for (i, &r) in st.grid.iter().enumerate() {
            if r <= spec.a || r > stop {
                continue;
            }
            let t = m.value(r).unwrap().log_mag;
            assert!((t - st.log_u[i]).abs() < 1e-5, "r={r}: {} vs {}", t, st.log_u[i]);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (m, _) = model(0.2);
        for r in [1.5, 2.0, 3.0] {
            let d = 1e-5 * r;
            let f = |x: f64| m.value(x).unwrap();
            // fourth-order centred difference, evaluated relative to phi(r)
            let base = f(r);
            let g = |k: f64| f(r + k * d).ratio(base);
            let fd = (-g(2.0) + 8.0 * g(1.0) - 8.0 * g(-1.0) + g(-2.0)) / (12.0 * d);
            let an = m.derivative(r).unwrap().ratio(base);
            assert!((fd / an - 1.0).abs() < 1e-8, "r={r}: {fd} vs {an}");
            assert!(m.derivative(r).unwrap().sign == crate::logval::Sign::Negative);
        }
    }

    #[test]
    fn domain_is_outside_support() {
        let (m, _) = model(0.2);
        assert!(matches!(m.value(1.0), Err(Error::DomainError(_))));
        assert!(matches!(m.derivative(0.5), Err(Error::DomainError(_))));
    }

    #[test]
    fn normalisation_is_linear() {
        let (m, mut st) = model(0.2);
        for l in st.log_u.iter_mut() {
            *l += 2f64.ln();
        }
        let m2 = match_normalization(&st, &m.spec).unwrap();
        assert!((m2.c_h_matched.ratio(m.c_h_matched) - 2.0).abs() < 1e-12);
    }
}
