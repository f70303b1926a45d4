//! Action integrals: Agmon distance `d`, free distance `d~`, the tunneling
//! action `S`, its classical bounds and the separation conditions.

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::quadrature::{Estimate, Quadrature};

/// Tolerance for all action quadratures.
pub const ACTION_QUADRATURE: Quadrature = Quadrature {
    abs_tol: 1e-12,
    rel_tol: 1e-14,
    max_intervals: 4000,
};

/// Agreement required between the three algebraic forms of `S`.
pub const ACTION_FORMS_TOL: f64 = 1e-10;

/// `L / a` above which the separation condition is guaranteed.
pub fn geometric_threshold() -> f64 {
    1.0 + 3f64.sqrt() / 2.0
}

fn breaks(spec: &PotentialSpec, r1: f64, r2: f64) -> Vec<f64> {
    let mut pts = vec![r1];
    if r1 < spec.a && spec.a < r2 {
        pts.push(spec.a);
    }
    pts.push(r2);
    pts
}

/// `d(r1, r2)` with its quadrature error estimate.
pub fn agmon_distance_estimate(
    spec: &PotentialSpec,
    r1: f64,
    r2: f64,
    quad: &Quadrature,
) -> Result<Estimate<f64>> {
    assert!(0.0 <= r1 && r1 <= r2, "need 0 <= r1 <= r2, got {r1}, {r2}");
    quad.integrate_with_breaks(|r| spec.effective_excess(r).sqrt(), &breaks(spec, r1, r2))
}

/// Agmon distance `d(r1, r2) = int_{r1}^{r2} sqrt(v_B(r) - v0) dr`.
pub fn agmon_distance(spec: &PotentialSpec, r1: f64, r2: f64) -> Result<f64> {
    Ok(agmon_distance_estimate(spec, r1, r2, &ACTION_QUADRATURE)?.value)
}

/// Closed form of `d~(r) = int_0^r sqrt(B^2 s^2 / 4 + |v0|) ds`.
pub fn free_distance(spec: &PotentialSpec, r: f64) -> f64 {
    let k = 0.5 * spec.b;
    let c = spec.depth();
    let root = (k * k * r * r + c).sqrt();
    if c == 0.0 {
        return 0.5 * k * r * r;
    }
    0.5 * r * root + 0.5 * c / k * (k * r / c.sqrt()).asinh()
}

/// `d~(r)` by adaptive quadrature (the independent route).
pub fn free_distance_quadrature(spec: &PotentialSpec, r: f64) -> Result<f64> {
    let (k, c) = (0.5 * spec.b, spec.depth());
    Ok(ACTION_QUADRATURE
        .integrate(|s| (k * k * s * s + c).sqrt(), 0.0, r)?
        .value)
}

/// `S` in three algebraically equal forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionForms {
    /// `2 d(0,L) + int_0^L [sqrt(B^2(2L-r)^2/4 - v0) - sqrt(B^2 r^2/4 - v0)] dr`.
    pub line_form: f64,
    /// `d(0,2L) + d(0,L) - d~(L)`.
    pub mixed_form: f64,
    /// `2 d(0,2L) - d~(2L)`.
    pub doubled_form: f64,
}

impl ActionForms {
    pub fn max_disagreement(&self) -> f64 {
        let v = [self.line_form, self.mixed_form, self.doubled_form];
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

pub fn action_forms(spec: &PotentialSpec) -> Result<ActionForms> {
    let l = spec.l;
    let (k, c) = (0.5 * spec.b, spec.depth());
    let d_0_l = agmon_distance(spec, 0.0, l)?;
    let d_0_2l = agmon_distance(spec, 0.0, 2.0 * l)?;
    let magnetic = ACTION_QUADRATURE
        .integrate(
            |r| {
                let far = k * (2.0 * l - r);
                (far * far + c).sqrt() - (k * k * r * r + c).sqrt()
            },
            0.0,
            l,
        )?
        .value;
    Ok(ActionForms {
        line_form: 2.0 * d_0_l + magnetic,
        mixed_form: d_0_2l + d_0_l - free_distance(spec, l),
        doubled_form: 2.0 * d_0_2l - free_distance(spec, 2.0 * l),
    })
}

/// Tunneling action `S`, reconciled across its three forms.
pub fn action_s(spec: &PotentialSpec) -> Result<f64> {
    let forms = action_forms(spec)?;
    let spread = forms.max_disagreement();
    if spread > ACTION_FORMS_TOL {
        return Err(Error::InternalInconsistency(format!(
            "forms of S disagree by {spread:e}: {forms:?}"
        )));
    }
    Ok(forms.line_form)
}

/// `gamma0 = int_0^a sqrt(v - v0) dr`.
pub fn gamma0(spec: &PotentialSpec) -> Result<f64> {
    Ok(ACTION_QUADRATURE
        .integrate(|r| spec.single_well_excess(r).sqrt(), 0.0, spec.a)?
        .value)
}

/// Which conditions guarantee that the two-level reduction error is
/// smaller than the hopping coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Separation {
    /// `L > (1 + sqrt(3)/2) a`.
    pub geometric: bool,
    /// `d(2L-a, 2L) < d~(2L-a)`.
    pub integral: bool,
    /// `S < 2 d(0, 2L-a)`.
    pub raw: bool,
}

impl Separation {
    /// The chain geometric => integral => raw.
    pub fn chain_holds(&self) -> bool {
        (!self.geometric || self.integral) && (!self.integral || self.raw)
    }
}

pub fn check_separation(spec: &PotentialSpec) -> Result<Separation> {
    let (l, a) = (spec.l, spec.a);
    let s = action_s(spec)?;
    Ok(Separation {
        geometric: l > geometric_threshold() * a,
        integral: agmon_distance(spec, 2.0 * l - a, 2.0 * l)? < free_distance(spec, 2.0 * l - a),
        raw: s < 2.0 * agmon_distance(spec, 0.0, 2.0 * l - a)?,
    })
}

/// Every action quantity of one instance plus the bound checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgmonReport {
    pub d_0_l: f64,
    pub d_0_a: f64,
    pub d_0_2l: f64,
    /// `d(0, 2L - a)`.
    pub d_0_2lma: f64,
    /// `d(2L - a, 2L)`.
    pub d_2lma_2l: f64,
    pub dt_l: f64,
    pub dt_2l: f64,
    pub dt_2lma: f64,
    pub s: f64,
    pub gamma0: f64,
    /// `d(0,2L-a) + d(0,a)`.
    pub lower_radial: f64,
    /// `d(0,2L)`.
    pub upper_radial: f64,
    /// `B L^2 - B L a`.
    pub lower_flux: f64,
    /// `B L^2 + 2 sqrt|v0| L + gamma0`.
    pub upper_flux: f64,
    /// Largest disagreement between the forms of `S`.
    pub forms_spread: f64,
    /// All four bounds hold (non-strict).
    pub bounds_ok: bool,
    /// All four bounds hold strictly.
    pub bounds_strict: bool,
    pub separation: Separation,
    pub separation_ok: bool,
    pub geometry_ok: bool,
}

pub fn check_bounds(spec: &PotentialSpec) -> Result<AgmonReport> {
    let (b, l, a) = (spec.b, spec.l, spec.a);
    let forms = action_forms(spec)?;
    let s = action_s(spec)?;
    let d_0_a = agmon_distance(spec, 0.0, a)?;
    let d_0_2lma = agmon_distance(spec, 0.0, 2.0 * l - a)?;
    let d_2lma_2l = agmon_distance(spec, 2.0 * l - a, 2.0 * l)?;
    let d_0_2l = agmon_distance(spec, 0.0, 2.0 * l)?;
    let g0 = gamma0(spec)?;
    let lower_radial = d_0_2lma + d_0_a;
    let upper_radial = d_0_2l;
    let lower_flux = b * l * l - b * l * a;
    let upper_flux = b * l * l + 2.0 * spec.depth().sqrt() * l + g0;
    let separation = check_separation(spec)?;
    // quadrature slack for the non-strict comparison
    let tol = ACTION_FORMS_TOL;
    Ok(AgmonReport {
        d_0_l: agmon_distance(spec, 0.0, l)?,
        d_0_a,
        d_0_2l,
        d_0_2lma,
        d_2lma_2l,
        dt_l: free_distance(spec, l),
        dt_2l: free_distance(spec, 2.0 * l),
        dt_2lma: free_distance(spec, 2.0 * l - a),
        s,
        gamma0: g0,
        lower_radial,
        upper_radial,
        lower_flux,
        upper_flux,
        forms_spread: forms.max_disagreement(),
        bounds_ok: lower_radial - tol <= s
            && s <= upper_radial + tol
            && lower_flux - tol <= s
            && s <= upper_flux + tol,
        bounds_strict: lower_radial < s && s < upper_radial && lower_flux < s && s < upper_flux,
        separation,
        separation_ok: separation.raw,
        geometry_ok: separation.geometric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Profile;
    use rand::{Rng, SeedableRng};

    fn free(l: f64, v0: f64) -> PotentialSpec {
        PotentialSpec::new(1.0, l, 1.0, v0, Profile::Zero).unwrap()
    }

    #[test]
    fn free_magnetic_distance_closed_form() {
        let s = free(2.0, 0.0);
        // int_0^L B r / 2 dr = B L^2 / 4
        assert!((agmon_distance(&s, 0.0, 2.0).unwrap() - 1.0).abs() < 1e-13);
        assert_eq!(agmon_distance(&s, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn distance_is_additive() {
        let s = PotentialSpec::canonical();
        let l = s.l;
        let lhs = agmon_distance(&s, 0.0, 2.0 * l).unwrap() - agmon_distance(&s, 0.0, l).unwrap();
        assert!((lhs - agmon_distance(&s, l, 2.0 * l).unwrap()).abs() < 1e-12);
        let three = agmon_distance(&s, 0.3, 0.8).unwrap() + agmon_distance(&s, 0.8, 2.5).unwrap();
        assert!((three - agmon_distance(&s, 0.3, 2.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn free_distance_example_value() {
        let s = PotentialSpec::canonical();
        let exact = 2.0 * 5f64.sqrt() + 2f64.asinh();
        assert!((free_distance(&s, 4.0) - exact).abs() < 1e-14);
        assert!((free_distance(&s, 4.0) - 5.915771).abs() < 1e-6);
        assert!((free_distance_quadrature(&s, 4.0).unwrap() - exact).abs() < 1e-12);
        assert_eq!(free_distance(&s, 0.0), 0.0);
    }

    #[test]
    fn free_distance_degenerates_without_depth() {
        let s = free(2.0, 0.0);
        for r in [0.5, 1.0, 3.0] {
            assert!((free_distance(&s, r) - r * r / 4.0).abs() < 1e-15);
        }
        let tiny = free(2.0, -1e-12);
        assert!((free_distance(&tiny, 3.0) - 2.25).abs() < 1e-5);
    }

    #[test]
    fn free_distance_routes_agree_at_random_radii() {
        let s = PotentialSpec::canonical();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..10 {
            let r = rng.gen_range(0.0..6.0);
            let q = free_distance_quadrature(&s, r).unwrap();
            assert!((q - free_distance(&s, r)).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn action_forms_agree() {
        let s = PotentialSpec::canonical();
        let f = action_forms(&s).unwrap();
        assert!(f.max_disagreement() < ACTION_FORMS_TOL, "{f:?}");
    }

    #[test]
    fn action_without_well_is_flux() {
        // v == 0 and v0 -> 0: every integrand is B r / 2, S = B L^2
        let s = free(2.0, -1e-14);
        let a = action_s(&s).unwrap();
        assert!((a - 4.0).abs() < 1e-6, "{a}");
    }

    #[test]
    fn action_bounds_hold_for_canonical() {
        let r = check_bounds(&PotentialSpec::canonical()).unwrap();
        assert!(r.bounds_strict, "{r:?}");
        assert!((r.lower_flux - 2.0).abs() < 1e-15);
        assert!((r.upper_flux - (8.0 + r.gamma0)).abs() < 1e-14);
        assert!(r.separation_ok && r.geometry_ok);
    }

    #[test]
    fn bounds_collapse_without_well() {
        let s = free(2.0, -1e-14);
        let r = check_bounds(&s).unwrap();
        // S = d(0,2L) exactly when v vanishes
        assert!((r.s - r.upper_radial).abs() < 1e-9);
        assert!(r.bounds_ok);
    }

    #[test]
    fn integrand_level_inequalities() {
        let s = PotentialSpec::canonical();
        let (k, c) = (0.5 * s.b, s.depth());
        for i in 0..=400 {
            let r = s.l * i as f64 / 400.0;
            let upper = s.effective_excess(r).sqrt() - (k * k * r * r + c).sqrt();
            assert!(upper <= 0.0);
            if r <= s.a {
                let far = k * (2.0 * s.l - r);
                assert!((far * far + c).sqrt() - (k * k * r * r + c).sqrt() >= 0.0);
            }
        }
    }

    #[test]
    fn halving_tolerance_changes_less_than_estimate() {
        let s = PotentialSpec::canonical();
        let coarse = Quadrature::new(1e-8, 0.0);
        let fine = Quadrature::new(5e-9, 0.0);
        for (r1, r2) in [(0.0, 1.0), (0.0, 4.0), (3.0, 4.0)] {
            let a = agmon_distance_estimate(&s, r1, r2, &coarse).unwrap();
            let b = agmon_distance_estimate(&s, r1, r2, &fine).unwrap();
            assert!((a.value - b.value).abs() <= a.error.max(1e-15));
        }
    }

    #[test]
    fn separation_threshold() {
        assert!((geometric_threshold() - 1.866025).abs() < 1e-6);
        let s = PotentialSpec::canonical();
        assert!(check_separation(&s).unwrap().geometric);
        let near = s.with_separation(1.8).unwrap();
        let sep = check_separation(&near).unwrap();
        assert!(!sep.geometric);
        assert!(sep.chain_holds());
    }

    #[test]
    fn implication_chain_random_specs() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let a = rng.gen_range(0.5..1.5);
            let l = a * rng.gen_range(1.87..3.0);
            let b = rng.gen_range(0.3..3.0);
            let v0 = -rng.gen_range(0.2..4.0);
            let s = PotentialSpec::bump(b, l, a, v0).unwrap();
            let sep = check_separation(&s).unwrap();
            assert!(sep.geometric && sep.integral && sep.raw, "{s:?} {sep:?}");
        }
    }

    #[test]
    fn distances_are_monotone() {
        let s = PotentialSpec::canonical();
        let mut last = 0.0;
        for i in 1..=30 {
            let d = agmon_distance(&s, 0.0, 0.2 * i as f64).unwrap();
            assert!(d > last);
            last = d;
        }
    }
}
