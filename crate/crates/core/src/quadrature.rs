//! Globally adaptive Gauss–Kronrod (7/15) quadrature for real and complex
//! integrands.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

/// Tolerances for [`Quadrature::integrate`]. The run stops once the summed
/// error estimate is below `max(abs_tol, rel_tol * |I|)` or every remaining
/// interval is at its round-off floor.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

struct Piece<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
    splittable: bool,
}

impl<V> PartialEq for Piece<V> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl<V> Eq for Piece<V> {}
impl<V> PartialOrd for Piece<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Piece<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().total_cmp(&other.key())
    }
}
impl<V> Piece<V> {
    fn key(&self) -> f64 {
        if self.splittable {
            self.error
        } else {
            -1.0
        }
    }
}

fn gk15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64, bool) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = fc.norm() * WGK[7];
    let mut fv1 = [V::zero(); 7];
    let mut fv2 = [V::zero(); 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k = res_k + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            res_g = res_g + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    let hl = half.abs();
    let res_abs = res_abs * hl;
    let res_asc = res_asc * hl;
    let mut err = ((res_k - res_g) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    let at_floor = err <= floor;
    if at_floor {
        err = floor;
    }
    (res_k * half, err, !at_floor)
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    pub fn integrate<V, F>(&self, f: F, a: f64, b: f64) -> Result<Estimate<V>>
    where
        V: QuadValue,
        F: FnMut(f64) -> V,
    {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrate over `[points[0], points[last]]`, starting from the given
    /// subdivision (use it to place breakpoints at kinks of the integrand).
    pub fn integrate_with_breaks<V, F>(&self, mut f: F, points: &[f64]) -> Result<Estimate<V>>
    where
        V: QuadValue,
        F: FnMut(f64) -> V,
    {
        assert!(points.len() >= 2, "need at least one interval");
        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        for w in points.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let (value, error, splittable) = gk15(&mut f, w[0], w[1]);
            evaluations += 15;
            heap.push(Piece {
                a: w[0],
                b: w[1],
                value,
                error,
                splittable,
            });
        }
        if heap.is_empty() {
            return Ok(Estimate {
                value: V::zero(),
                error: 0.0,
                evaluations: 0,
                intervals: 0,
            });
        }
        loop {
            let (total, err) = heap
                .iter()
                .fold((V::zero(), 0.0), |(s, e), p| (s + p.value, e + p.error));
            let tol = self.abs_tol.max(self.rel_tol * total.norm());
            let worst = heap.peek().expect("non-empty");
            if err <= tol || !worst.splittable {
                return Ok(Estimate {
                    value: total,
                    error: err,
                    evaluations,
                    intervals: heap.len(),
                });
            }
            if heap.len() >= self.max_intervals {
                return Err(Error::QuadratureFailure(format!(
                    "{} intervals used, error {:e} above tolerance {:e}",
                    heap.len(),
                    err,
                    tol
                )));
            }
            let worst = heap.pop().expect("non-empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
                heap.push(Piece {
                    splittable: false,
                    ..worst
                });
                continue;
            }
            for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
                let (value, error, splittable) = gk15(&mut f, lo, hi);
                evaluations += 15;
                heap.push(Piece {
                    a: lo,
                    b: hi,
                    value,
                    error,
                    splittable,
                });
            }
        }
    }
}

/// Locate the window where a unimodal log-integrand stays within `drop`
/// nats of its maximum.
///
/// `peak` must be (close to) the argmax; the search expands geometrically
/// from `step` on each side and then bisects. Fails if the log-integrand
/// has not fallen by `drop` within `max_extent` of the peak.
pub fn log_window<F: FnMut(f64) -> f64>(
    mut logf: F,
    peak: f64,
    step: f64,
    drop: f64,
    max_extent: f64,
) -> Result<(f64, f64)> {
    let top = logf(peak);
    let target = top - drop;
    let mut side = |dir: f64| -> Result<f64> {
        let mut inner = 0.0;
        let mut outer = step;
        loop {
            if logf(peak + dir * outer) < target {
                break;
            }
            inner = outer;
            outer *= 2.0;
            if outer > max_extent {
                return Err(Error::TruncationError(format!(
                    "log-integrand still above max-{drop} at distance {max_extent} from the peak"
                )));
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (inner + outer);
            if logf(peak + dir * mid) < target {
                outer = mid;
            } else {
                inner = mid;
            }
            if outer - inner < 1e-6 * step {
                break;
            }
        }
        Ok(peak + dir * outer)
    };
    let lo = side(-1.0)?;
    let hi = side(1.0)?;
    Ok((lo, hi))
}

/// Maximize a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_integrate_constants() {
        let s: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomials_are_exact() {
        let q = Quadrature::default();
        let est = q.integrate(|x: f64| x.powi(13) - 3.0 * x.powi(7), 0.0, 1.0).unwrap();
        assert!((est.value - (1.0 / 14.0 - 3.0 / 8.0)).abs() < 1e-15);
        assert_eq!(est.intervals, 1);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let q = Quadrature::new(1e-13, 1e-13);
        let est = q.integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((est.value - 2.0).abs() < 1e-11, "{}", est.value);
    }

    #[test]
    fn kink_with_breakpoint() {
        let q = Quadrature::new(1e-14, 1e-14);
        let est = q
            .integrate_with_breaks(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0])
            .unwrap();
        assert!((est.value - (0.045 + 0.245)).abs() < 1e-15);
    }

    #[test]
    fn complex_gaussian() {
        let q = Quadrature::new(1e-14, 1e-14);
        // integral of exp(-x^2 + i x) over R = sqrt(pi) exp(-1/4)
        let est = q
            .integrate(|x: f64| Complex64::new(-x * x, x).exp(), -12.0, 12.0)
            .unwrap();
        let exact = std::f64::consts::PI.sqrt() * (-0.25f64).exp();
        assert!((est.value.re - exact).abs() < 1e-13);
        assert!(est.value.im.abs() < 1e-14);
    }

    #[test]
    fn interval_budget_is_enforced() {
        let q = Quadrature::new(0.0, 0.0).with_max_intervals(5);
        let r = q.integrate(|x: f64| (50.0 * x).sin() / x.sqrt(), 0.0, 10.0);
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }

    #[test]
    fn window_brackets_gaussian() {
        let (lo, hi) = log_window(|x| -x * x / 2.0, 0.0, 0.1, 60.0, 1e3).unwrap();
        let edge = (120.0f64).sqrt();
        assert!((lo + edge).abs() < 1e-5 && (hi - edge).abs() < 1e-5);
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = golden_max(|x| -(x - 1.234).powi(2), -5.0, 5.0, 1e-10);
        assert!((x - 1.234).abs() < 1e-8);
    }
}
