//! Per-`h` computations behind the subcommands; each returns a flat row.

use magtunnel::agmon::{action_s, check_bounds, AgmonReport};
use magtunnel::hopping::{gap_prediction, hopping_report};
use magtunnel::planar::{measure_gap, GapMeasurement, GapOptions, GridSpec, WellLayout};
use magtunnel::radial::{solve_radial, RadialGrid, RadialState};
use magtunnel::tail::{match_normalization, TailModel};
use magtunnel::{LogScalar, PotentialSpec, Result};

use crate::config::{ExperimentConfig, PlanarSettings};

#[derive(Debug, Clone)]
pub struct RadialRow {
    pub h: f64,
    pub mu_h: f64,
    pub mu_h1: f64,
    pub norm: f64,
    pub residual: f64,
    pub mu_error: f64,
}

#[derive(Debug, Clone)]
pub struct TailRow {
    pub h: f64,
    pub alpha: f64,
    pub t_l: f64,
    pub fpp_tl: f64,
    pub nu: f64,
    pub c_h_matched: LogScalar,
    pub c_h_asymptotic: LogScalar,
    pub match_residual: f64,
}

#[derive(Debug, Clone)]
pub struct HoppingRow {
    pub h: f64,
    pub s: f64,
    pub log10_w_line: f64,
    pub phase_w_line: f64,
    pub log10_w_reduced: f64,
    pub log10_w_laplace: f64,
    pub ratio_laplace_reduced: f64,
    pub rho_gate: f64,
    pub log10_gap_pred: f64,
    pub mu_h: f64,
}

#[derive(Debug, Clone)]
pub struct PlanarRow {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub gap: f64,
    pub residual: f64,
    pub extrapolated_gap: f64,
    pub err_estimate: f64,
}

impl PlanarRow {
    fn from_measurement(h: f64, m: &GapMeasurement) -> Self {
        PlanarRow {
            h,
            nx: m.grid.nx,
            ny: m.grid.ny,
            lambda1: m.lambda1,
            lambda2: m.lambda2,
            lambda3: m.lambda3,
            gap: m.gap,
            // the pair that defines the gap
            residual: m.residuals[0].max(m.residuals[1]),
            extrapolated_gap: m.extrapolated_gap,
            err_estimate: m.err_estimate,
        }
    }
}

pub fn radial_state(spec: &PotentialSpec, h: f64, richardson_tol: f64) -> Result<RadialState> {
    let grid = RadialGrid {
        richardson_tol,
        ..RadialGrid::default()
    };
    solve_radial(spec, h, &grid)
}

pub fn radial_row(st: &RadialState) -> RadialRow {
    RadialRow {
        h: st.h,
        mu_h: st.mu_h,
        mu_h1: st.mu_h1,
        norm: st.norm_2d,
        residual: st.residual,
        mu_error: st.mu_error,
    }
}

pub fn agmon_row(spec: &PotentialSpec) -> Result<AgmonReport> {
    check_bounds(spec)
}

pub fn tail_row(m: &TailModel) -> TailRow {
    TailRow {
        h: m.h,
        alpha: m.alpha,
        t_l: m.t_l,
        fpp_tl: m.fpp_tl,
        nu: m.nu,
        c_h_matched: m.c_h_matched,
        c_h_asymptotic: m.c_h_asymptotic,
        match_residual: m.match_residual,
    }
}

const LN10: f64 = std::f64::consts::LN_10;

pub fn hopping_row(spec: &PotentialSpec, m: &TailModel) -> Result<HoppingRow> {
    let rep = hopping_report(m)?;
    let pred = gap_prediction(&rep, spec, m.mu_h)?;
    Ok(HoppingRow {
        h: m.h,
        s: action_s(spec)?,
        log10_w_line: rep.w_line.log_mag / LN10,
        phase_w_line: rep.w_line.phase,
        log10_w_reduced: rep.w_reduced.log_mag / LN10,
        log10_w_laplace: rep.w_laplace.log_mag / LN10,
        ratio_laplace_reduced: rep.ratio_laplace_reduced(),
        rho_gate: pred.rho,
        log10_gap_pred: pred.gap.log_mag / LN10,
        mu_h: m.mu_h,
    })
}

/// Refinement ladder from the coarsest admissible grid, or from explicit
/// x-node counts (consecutive counts `n, 2n-1` are nested).
pub fn ladder(spec: &PotentialSpec, h: f64, settings: &PlanarSettings, nodes_x: Option<&[usize]>) -> Vec<GridSpec> {
    match nodes_x {
        Some(ns) => {
            let mut out: Vec<GridSpec> = Vec::new();
            for &n in ns {
                let g = match out.last() {
                    Some(prev) if prev.nx * 2 - 1 == n => prev.refined(),
                    _ => GridSpec::with_nodes_x(spec, h, WellLayout::Double, settings.order, n),
                };
                out.push(g);
            }
            out
        }
        None => {
            let mut g = GridSpec::covering(spec, h, WellLayout::Double, settings.order);
            let mut out = Vec::new();
            for _ in 0..settings.levels {
                out.push(g);
                g = g.refined();
            }
            out
        }
    }
}

/// Planar gap, gated and tolerance-scaled by the predicted hopping gap.
pub fn planar_row(
    spec: &PotentialSpec,
    hop: &HoppingRow,
    settings: &PlanarSettings,
    grids: &[GridSpec],
    k: usize,
    tol: Option<f64>,
) -> Result<(PlanarRow, GapMeasurement)> {
    let pred = 10f64.powf(hop.log10_gap_pred);
    let opts = GapOptions {
        tol: tol.unwrap_or(settings.tol_factor * pred),
        tol_excited: settings.tol_excited,
        k,
        predicted: Some((pred, hop.mu_h)),
        ..Default::default()
    };
    let m = measure_gap(spec, hop.h, grids, &opts)?;
    Ok((PlanarRow::from_measurement(hop.h, &m), m))
}

/// Everything computed for one `h` of a sweep; `Err` holds the message.
#[derive(Debug, Clone, Default)]
pub struct SweepRow {
    pub h: f64,
    pub radial: Option<std::result::Result<RadialRow, String>>,
    pub tail: Option<std::result::Result<TailRow, String>>,
    pub hopping: Option<std::result::Result<HoppingRow, String>>,
    pub planar: Option<std::result::Result<PlanarRow, String>>,
}

impl SweepRow {
    pub fn failures(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |name: &'static str, e: Option<&String>| {
            if let Some(e) = e {
                out.push((name, e.clone()));
            }
        };
        push("radial", self.radial.as_ref().and_then(|r| r.as_ref().err()));
        push("tail", self.tail.as_ref().and_then(|r| r.as_ref().err()));
        push("hopping", self.hopping.as_ref().and_then(|r| r.as_ref().err()));
        push("planar", self.planar.as_ref().and_then(|r| r.as_ref().err()));
        out
    }
}

pub fn sweep_row(cfg: &ExperimentConfig, h: f64) -> SweepRow {
    use crate::config::Pipeline::*;
    let spec = &cfg.spec;
    let mut row = SweepRow {
        h,
        ..Default::default()
    };
    let need_hop = cfg.runs(Hopping) || cfg.runs(Planar) || cfg.runs(Compare);
    let need_tail = cfg.runs(Tail) || need_hop;
    let need_radial = cfg.runs(Radial) || need_tail;
    if !need_radial {
        return row;
    }
    let upstream = |what: &str| format!("skipped: {what} failed");
    let st = radial_state(spec, h, cfg.radial_richardson_tol).map_err(|e| e.to_string());
    if cfg.runs(Radial) {
        row.radial = Some(st.as_ref().map(radial_row).map_err(Clone::clone));
    }
    if !need_tail {
        return row;
    }
    let model = match &st {
        Ok(st) => match_normalization(st, spec).map_err(|e| e.to_string()),
        Err(_) => Err(upstream("radial solve")),
    };
    if cfg.runs(Tail) {
        row.tail = Some(model.as_ref().map(tail_row).map_err(Clone::clone));
    }
    if !need_hop {
        return row;
    }
    let hop = match &model {
        Ok(m) => hopping_row(spec, m).map_err(|e| e.to_string()),
        Err(_) => Err(upstream("tail matching")),
    };
    if cfg.runs(Planar) {
        row.planar = Some(match &hop {
            Ok(hr) => {
                let grids = ladder(spec, h, &cfg.planar, None);
                planar_row(spec, hr, &cfg.planar, &grids, 3, None)
                    .map(|(r, _)| r)
                    .map_err(|e| e.to_string())
            }
            Err(_) => Err(upstream("hopping")),
        });
    }
    row.hopping = Some(hop);
    row
}
