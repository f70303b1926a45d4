//! Hopping coefficient between the magnetically translated well states.
//!
//! `w` is computed three ways: the mid-line integral, the reduced `(t, s)`
//! double integral obtained after the Gaussian `y`-integration, and the
//! Laplace asymptotic at the saddle `t = s = t*`.

use crate::agmon::{action_s, agmon_distance, free_distance};
use crate::error::{Error, Result};
use crate::logval::{LogComplex, LogScalar, Sign};
use crate::potential::PotentialSpec;
use crate::quadrature::{golden_max, log_window, Quadrature};
use crate::radial::{wkb_prefactor, RadialState};
use crate::tail::{laplace_internals, TailModel, TAIL_DROP};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Inner/outer tolerances of the hopping quadratures.
const LINE_QUADRATURE: Quadrature = Quadrature {
    abs_tol: 0.0,
    rel_tol: 1e-11,
    max_intervals: 4000,
};
const INNER_QUADRATURE: Quadrature = Quadrature {
    abs_tol: 0.0,
    rel_tol: 1e-13,
    max_intervals: 2000,
};
const OUTER_QUADRATURE: Quadrature = Quadrature {
    abs_tol: 0.0,
    rel_tol: 1e-12,
    max_intervals: 2000,
};

/// Error gate above which the gap prediction is not trusted.
pub const RHO_GATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Gauge phase `sigma` of the translated state centred at `(-L, 0)` (left)
/// or `(L, 0)` (right).
pub fn gauge_phase(side: Side, spec: &PotentialSpec, x: f64, y: f64) -> f64 {
    match side {
        Side::Left => 0.5 * spec.b * y * (spec.l - x),
        Side::Right => -0.5 * spec.b * y * (spec.l + x),
    }
}

/// `phi_l(x, y) = e^{-i sigma_l/h} phi(x + L, y)` and
/// `phi_r(x, y) = e^{-i sigma_r/h} phi(x - L, y)`.
pub fn translated_state(
    side: Side,
    x: f64,
    y: f64,
    model: &TailModel,
    state: &RadialState,
) -> Result<LogComplex> {
    let spec = &model.spec;
    let dx = match side {
        Side::Left => x + spec.l,
        Side::Right => x - spec.l,
    };
    let rho = dx.hypot(y);
    let modulus = if rho > spec.a {
        model.value(rho)?
    } else if rho <= state.r_max() {
        LogScalar::from_log(state.log_u_at(rho)?)
    } else {
        return Err(Error::DomainError(format!("no representation at radius {rho}")));
    };
    let phase = -gauge_phase(side, spec, x, y) / model.h;
    Ok(LogComplex::new(modulus.log_mag, phase))
}

/// The mid-line integrand `e^{-iBLz/h} [(iBz/h) Phi^2 + 2 L Phi Psi]` at
/// complex `z`, with `Phi(q)`, `Psi(q) = phi'/rho` at `q = L^2 + z^2`.
fn line_integrand(model: &TailModel, z: Complex64) -> Result<LogComplex> {
    let (b, l, h) = (model.spec.b, model.spec.l, model.h);
    let q = l * l + z * z;
    let (phi, psi) = model.complex_value(q)?;
    let t1 = phi * phi * LogComplex::from_complex(I * b * z / h);
    let t2 = phi * psi * LogComplex::from_complex(Complex64::new(2.0 * l, 0.0));
    Ok(t1.add(t2) * LogComplex::exp(-I * b * l * z / h))
}

/// Contour depth `L/(1 + 2 t*)`: the centre of the `y`-Gaussian at the saddle.
pub fn contour_shift(spec: &PotentialSpec) -> f64 {
    spec.l / (1.0 + 2.0 * saddle(spec).t_star)
}

/// `w = h^2 int [conj(phi_r) d_x phi_l - phi_l conj(d_x phi_r)](0, y) dy`.
///
/// The integrand is entire in `y` within `|Im y| < L`; integrating along
/// `Im y = -L/(1+2t*)` removes the oscillatory cancellation of the real line.
pub fn hopping_line_integral(model: &TailModel) -> Result<LogComplex> {
    hopping_line_integral_at(model, contour_shift(&model.spec))
}

/// Line integral along `Im y = -c` (`0 <= c < L`).
pub fn hopping_line_integral_at(model: &TailModel, c: f64) -> Result<LogComplex> {
    let spec = &model.spec;
    if !(0.0..spec.l).contains(&c) {
        return Err(Error::DomainError(format!("contour depth {c} outside [0, L)")));
    }
    let f = |u: f64| line_integrand(model, Complex64::new(u, -c));
    let reference = f(0.0)?.log_mag;
    let log_mag = |u: f64| f(u).map(|v| v.log_mag).unwrap_or(f64::NEG_INFINITY);
    let width = (model.h / spec.b).sqrt();
    let (lo, hi) = log_window(log_mag, 0.0, width, TAIL_DROP, 1e3)?;
    let mut failure = None;
    let g = |u: f64| match f(u) {
        Ok(v) => v.scaled(reference),
        Err(e) => {
            failure.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    };
    let est = LINE_QUADRATURE.integrate_with_breaks(g, &[lo, 0.0, hi])?;
    if let Some(e) = failure {
        return Err(e);
    }
    let h2 = LogComplex::new(2.0 * model.h.ln(), 0.0);
    Ok(LogComplex::from_complex(est.value) * LogComplex::new(reference, 0.0) * h2)
}

/// `omega(T) = (1+T)^{1/2} - (1+T)^{-3/2} = T(2+T)/(1+T)^{3/2}`.
pub fn omega_weight(t_sum: f64) -> f64 {
    t_sum * (2.0 + t_sum) / (1.0 + t_sum).powf(1.5)
}

/// Log of the reduced integrand in `u = ln t`, `v = ln s` (Jacobian included).
fn reduced_log_integrand(spec: &PotentialSpec, h: f64, alpha: f64, u: f64, v: f64) -> f64 {
    let (t, s) = (u.exp(), v.exp());
    let big = 1.0 + t + s;
    let bl2 = spec.b * spec.l * spec.l;
    -(bl2 / (2.0 * h)) * (big + 1.0 / big) + omega_weight(t + s).ln() + alpha * (u + v)
        - alpha * (t.ln_1p() + s.ln_1p())
}

/// Log of `int int e^{...} omega (ts)^{alpha-1} ((1+t)(1+s))^{-alpha} dt ds`.
pub fn reduced_double_integral(model: &TailModel, symmetric: bool) -> Result<f64> {
    let (spec, h, alpha) = (&model.spec, model.h, model.alpha);
    let f = |u: f64, v: f64| reduced_log_integrand(spec, h, alpha, u, v);
    let span = 40.0 + 4.0 / alpha;
    let u_peak = golden_max(|u| f(u, u), -span, 5.0, 1e-10);
    let reference = f(u_peak, u_peak);
    let width = 0.5 / (1.0 + alpha).sqrt();
    let inner = |u: f64| -> Result<f64> {
        let v_peak = golden_max(|v| f(u, v), -span, 5.0, 1e-10);
        let (lo, hi) = log_window(|v| f(u, v), v_peak, width, TAIL_DROP + 10.0, 1e4)?;
        let hi = if symmetric { hi.min(u) } else { hi };
        if hi <= lo {
            return Ok(0.0);
        }
        let mut pts = vec![lo];
        if v_peak > lo && v_peak < hi {
            pts.push(v_peak);
        }
        pts.push(hi);
        Ok(INNER_QUADRATURE
            .integrate_with_breaks(|v| (f(u, v) - reference).exp(), &pts)?
            .value)
    };
    let log_inner = |u: f64| inner(u).map(f64::ln).unwrap_or(f64::NEG_INFINITY);
    let (lo, hi) = log_window(log_inner, u_peak, width, TAIL_DROP, 1e4)?;
    let mut failure = None;
    let outer = |u: f64| match inner(u) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let est = OUTER_QUADRATURE.integrate_with_breaks(outer, &[lo, u_peak, hi])?;
    if let Some(e) = failure {
        return Err(e);
    }
    let total = if symmetric { 2.0 * est.value } else { est.value };
    if !(total > 0.0) {
        return Err(Error::QuadratureFailure("reduced integral is not positive".into()));
    }
    Ok(reference + total.ln())
}

/// `w = -h^{3/2} C_h^2 sqrt(2 pi B L^2) int int ...` with the exact `alpha`.
pub fn hopping_reduced_integral(model: &TailModel) -> Result<LogScalar> {
    hopping_reduced_integral_with(model, true)
}

pub fn hopping_reduced_integral_with(model: &TailModel, symmetric: bool) -> Result<LogScalar> {
    let (spec, h) = (&model.spec, model.h);
    let c = model.c_h_matched;
    if c.sign != Sign::Positive {
        return Err(Error::InternalInconsistency("C_h must be positive".into()));
    }
    let log = 1.5 * h.ln() + 2.0 * c.log_mag + 0.5 * (2.0 * PI * spec.b * spec.l * spec.l).ln()
        + reduced_double_integral(model, symmetric)?;
    Ok(LogScalar::new(Sign::Negative, log))
}

/// Saddle of `g(t, s) = (BL^2/2)(1+t+s + 1/(1+t+s)) - (|v0|/2B) ln(ts/((1+t)(1+s)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saddle {
    pub t_star: f64,
    pub g_star: f64,
    /// Determinant of the Hessian of `g` at `(t*, t*)`.
    pub hess_det: f64,
    /// `|grad g(t*, t*)|`.
    pub gradient: f64,
}

pub fn g_function(spec: &PotentialSpec, t: f64, s: f64) -> f64 {
    let big = 1.0 + t + s;
    0.5 * spec.b * spec.l * spec.l * (big + 1.0 / big)
        - 0.5 * spec.depth() / spec.b * (t / (1.0 + t) * s / (1.0 + s)).ln()
}

pub fn g_gradient(spec: &PotentialSpec, t: f64, s: f64) -> [f64; 2] {
    let big = 1.0 + t + s;
    let common = 0.5 * spec.b * spec.l * spec.l * (1.0 - 1.0 / (big * big));
    let k = 0.5 * spec.depth() / spec.b;
    [common - k / (t * (1.0 + t)), common - k / (s * (1.0 + s))]
}

pub fn g_hessian(spec: &PotentialSpec, t: f64, s: f64) -> [[f64; 2]; 2] {
    let big = 1.0 + t + s;
    let a = spec.b * spec.l * spec.l / big.powi(3);
    let k = 0.5 * spec.depth() / spec.b;
    let d = |x: f64| k * (1.0 + 2.0 * x) / (x * (1.0 + x)).powi(2);
    [[a + d(t), a], [a, a + d(s)]]
}

pub fn saddle(spec: &PotentialSpec) -> Saddle {
    let n = spec.depth() / (spec.b * spec.b * spec.l * spec.l);
    let t_star = 0.5 * n.sqrt() - 0.5 + 0.5 * (1.0 + n).sqrt();
    let root = (1.0 + n).sqrt();
    let g_star = spec.b * spec.l * spec.l * (root + n * ((1.0 + root) / n.sqrt()).ln());
    let hs = g_hessian(spec, t_star, t_star);
    let gr = g_gradient(spec, t_star, t_star);
    Saddle {
        t_star,
        g_star,
        hess_det: hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0],
        gradient: gr[0].hypot(gr[1]),
    }
}

/// Laplace value of the reduced integral at the saddle, with
/// `alpha -> |v0|/(2Bh) + nu`:
/// `-h^{5/2} C_h^2 (2pi)^{3/2} sqrt(BL^2) det^{-1/2} omega t*^{2nu-2} (1+t*)^{-2nu} e^{-g*/h}`.
pub fn hopping_asymptotic(spec: &PotentialSpec, h: f64, c_h: LogScalar) -> LogScalar {
    let sd = saddle(spec);
    let nu = laplace_internals(spec).nu;
    let t = sd.t_star;
    let log = 2.5 * h.ln() + 2.0 * c_h.log_mag + 1.5 * (2.0 * PI).ln()
        + 0.5 * (spec.b * spec.l * spec.l).ln()
        - 0.5 * sd.hess_det.ln()
        + omega_weight(2.0 * t).ln()
        + (2.0 * nu - 2.0) * t.ln()
        - 2.0 * nu * t.ln_1p()
        - sd.g_star / h;
    LogScalar::new(Sign::Negative, log)
}

/// `C(B, L, v)` in `w ~ -C h^{1/2} e^{-S/h}`.
pub fn c_blv(spec: &PotentialSpec) -> Result<f64> {
    let li = laplace_internals(spec);
    let k_l = wkb_prefactor(spec, spec.l)?;
    // h-independent part of C_h^2 * h^2 e^{-2(d~(L) - d(0,L))/h}
    let log_c2 = 2.0 * k_l.ln() + (li.fpp_tl / (2.0 * PI)).ln()
        + (2.0 - 2.0 * li.nu) * li.t_l.ln()
        + 2.0 * li.nu * li.t_l.ln_1p();
    let unit = LogScalar::from_log(0.5 * log_c2);
    // with h = 1 the remaining h-powers drop out; the exponent is carried separately
    let w = hopping_asymptotic(spec, 1.0, unit);
    let sd = saddle(spec);
    Ok((w.log_mag + sd.g_star).exp())
}

/// Leading-order gap `2 C h^{1/2} e^{-S/h}`.
pub fn asymptotic_gap(spec: &PotentialSpec, h: f64) -> Result<LogScalar> {
    let c = c_blv(spec)?;
    Ok(LogScalar::from_log((2.0 * c).ln() + 0.5 * h.ln() - action_s(spec)? / h))
}

#[derive(Debug, Clone, Copy)]
pub struct HoppingReport {
    pub h: f64,
    pub w_line: LogComplex,
    pub w_reduced: LogScalar,
    pub w_laplace: LogScalar,
    pub t_star: f64,
    pub g_star: f64,
    pub hess_det: f64,
    pub c_blv: f64,
    pub gap_pred: LogScalar,
    pub s_action: f64,
}

impl HoppingReport {
    pub fn ratio_laplace_reduced(&self) -> f64 {
        self.w_laplace.ratio(self.w_reduced)
    }

    /// `|w_line| / |w_reduced| - 1`.
    pub fn line_reduced_mismatch(&self) -> f64 {
        (self.w_line.log_mag - self.w_reduced.log_mag).exp_m1().abs()
    }
}

/// Gap prediction and the two-level error gate.
#[derive(Debug, Clone, Copy)]
pub struct GapPrediction {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: LogScalar,
    /// `h^{-3} e^{-2 d(0, 2L-a)/h} / |w|`.
    pub rho: f64,
}

impl GapPrediction {
    pub fn reliable(&self) -> bool {
        self.rho < RHO_GATE
    }
}

pub fn hopping_report(model: &TailModel) -> Result<HoppingReport> {
    let spec = &model.spec;
    let sd = saddle(spec);
    let w_reduced = hopping_reduced_integral(model)?;
    Ok(HoppingReport {
        h: model.h,
        w_line: hopping_line_integral(model)?,
        w_reduced,
        w_laplace: hopping_asymptotic(spec, model.h, model.c_h_matched),
        t_star: sd.t_star,
        g_star: sd.g_star,
        hess_det: sd.hess_det,
        c_blv: c_blv(spec)?,
        gap_pred: LogScalar::from_log(2f64.ln() + w_reduced.log_mag),
        s_action: action_s(spec)?,
    })
}

pub fn gap_prediction(report: &HoppingReport, spec: &PotentialSpec, mu_h: f64) -> Result<GapPrediction> {
    let h = report.h;
    let w = report.w_reduced.abs();
    let d = agmon_distance(spec, 0.0, 2.0 * spec.l - spec.a)?;
    let rho = (-3.0 * h.ln() - 2.0 * d / h - w.log_mag).exp();
    let wf = w.to_f64();
    Ok(GapPrediction {
        lambda1: mu_h - wf,
        lambda2: mu_h + wf,
        gap: LogScalar::from_log(2f64.ln() + w.log_mag),
        rho,
    })
}

/// `d~(2L)`, the free distance the saddle value must reproduce.
pub fn saddle_reference(spec: &PotentialSpec) -> f64 {
    free_distance(spec, 2.0 * spec.l)
}
