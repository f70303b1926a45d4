//! CSV emission, the compare join and the summary text.
//!
//! Headers are fixed; a failed row keeps its `h` and has `NA` elsewhere.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use magtunnel::agmon::AgmonReport;
use magtunnel::hopping::RHO_GATE;
use magtunnel::{LogScalar, PotentialSpec};

use crate::pipeline::{HoppingRow, PlanarRow, RadialRow, TailRow};

pub const RADIAL_HEADER: &[&str] = &["h", "mu_h", "mu_h1", "norm", "residual", "mu_error"];
pub const AGMON_HEADER: &[&str] = &[
    "B", "L", "a", "v0", "d_0_L", "d_0_a", "d_0_2L", "d_0_2L-a", "d_2L-a_2L", "dt_L", "dt_2L", "dt_2L-a", "S",
    "gamma0", "lower_radial", "upper_radial", "lower_flux", "upper_flux", "forms_spread", "bounds_ok",
    "bounds_strict", "geometric", "integral", "raw",
];
pub const TAIL_HEADER: &[&str] = &[
    "h",
    "alpha",
    "t_L",
    "fpp_tL",
    "nu",
    "sign_C_h_matched",
    "log10_C_h_matched",
    "sign_C_h_asymptotic",
    "log10_C_h_asymptotic",
    "match_residual",
];
pub const HOPPING_HEADER: &[&str] = &[
    "h",
    "S",
    "log10_w_line",
    "phase_w_line",
    "log10_w_reduced",
    "log10_w_laplace",
    "ratio_laplace_reduced",
    "rho_gate",
    "log10_gap_pred",
];
pub const PLANAR_HEADER: &[&str] = &[
    "h",
    "nx",
    "ny",
    "lambda1",
    "lambda2",
    "lambda3",
    "gap",
    "residual",
    "extrapolated_gap",
    "err_estimate",
];
pub const COMPARE_HEADER: &[&str] = &[
    "h",
    "log10_gap_measured",
    "log10_gap_reduced",
    "log10_gap_laplace",
    "rho_gate",
    "ratio_measured_reduced",
    "ratio_measured_laplace",
];

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        "NA".into()
    }
}

pub fn h_str(h: f64) -> String {
    format!("{h}")
}

fn na_row(h: f64, width: usize) -> Vec<String> {
    let mut v = vec![h_str(h)];
    v.resize(width, "NA".into());
    v
}

fn log_pair(x: LogScalar) -> [String; 2] {
    [x.sign.as_i8().to_string(), num(x.log_mag / std::f64::consts::LN_10)]
}

pub fn radial_record(h: f64, r: Option<&RadialRow>) -> Vec<String> {
    match r {
        Some(r) => vec![h_str(h), num(r.mu_h), num(r.mu_h1), num(r.norm), num(r.residual), num(r.mu_error)],
        None => na_row(h, RADIAL_HEADER.len()),
    }
}

pub fn agmon_record(spec: &PotentialSpec, r: &AgmonReport) -> Vec<String> {
    let mut v: Vec<String> = [
        spec.b,
        spec.l,
        spec.a,
        spec.v0,
        r.d_0_l,
        r.d_0_a,
        r.d_0_2l,
        r.d_0_2lma,
        r.d_2lma_2l,
        r.dt_l,
        r.dt_2l,
        r.dt_2lma,
        r.s,
        r.gamma0,
        r.lower_radial,
        r.upper_radial,
        r.lower_flux,
        r.upper_flux,
        r.forms_spread,
    ]
    .iter()
    .map(|&x| num(x))
    .collect();
    for b in [
        r.bounds_ok,
        r.bounds_strict,
        r.separation.geometric,
        r.separation.integral,
        r.separation.raw,
    ] {
        v.push(b.to_string());
    }
    v
}

pub fn tail_record(h: f64, r: Option<&TailRow>) -> Vec<String> {
    match r {
        Some(r) => {
            let mut v = vec![h_str(h), num(r.alpha), num(r.t_l), num(r.fpp_tl), num(r.nu)];
            v.extend(log_pair(r.c_h_matched));
            v.extend(log_pair(r.c_h_asymptotic));
            v.push(num(r.match_residual));
            v
        }
        None => na_row(h, TAIL_HEADER.len()),
    }
}

pub fn hopping_record(h: f64, r: Option<&HoppingRow>) -> Vec<String> {
    match r {
        Some(r) => vec![
            h_str(h),
            num(r.s),
            num(r.log10_w_line),
            num(r.phase_w_line),
            num(r.log10_w_reduced),
            num(r.log10_w_laplace),
            num(r.ratio_laplace_reduced),
            num(r.rho_gate),
            num(r.log10_gap_pred),
        ],
        None => na_row(h, HOPPING_HEADER.len()),
    }
}

pub fn planar_record(h: f64, r: Option<&PlanarRow>) -> Vec<String> {
    match r {
        Some(r) => vec![
            h_str(h),
            r.nx.to_string(),
            r.ny.to_string(),
            num(r.lambda1),
            num(r.lambda2),
            num(r.lambda3),
            num(r.gap),
            num(r.residual),
            num(r.extrapolated_gap),
            num(r.err_estimate),
        ],
        None => na_row(h, PLANAR_HEADER.len()),
    }
}

/// Writes records as they arrive and flushes after each one, so an
/// interrupted sweep leaves valid partial files.
pub struct CsvSink {
    w: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: &Path, header: &[&str]) -> anyhow::Result<Self> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        w.flush()?;
        Ok(CsvSink { w })
    }

    pub fn row(&mut self, record: &[String]) -> anyhow::Result<()> {
        self.w.write_record(record)?;
        self.w.flush()?;
        Ok(())
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut s = CsvSink::create(path, header)?;
    for r in rows {
        s.row(r)?;
    }
    Ok(())
}

/// The numeric columns of a CSV written by this crate (`NA` -> NaN).
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path, expected: &[&str]) -> anyhow::Result<Table> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != expected {
            bail!("{}: unexpected header {:?}", path.display(), header);
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| if f == "NA" { Ok(f64::NAN) } else { f.parse::<f64>() })
                .collect::<Result<Vec<f64>, _>>()
                .with_context(|| format!("{}: bad number in {:?}", path.display(), rec))?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).expect("known column")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub h: f64,
    pub log10_gap_measured: f64,
    pub log10_gap_reduced: f64,
    pub log10_gap_laplace: f64,
    pub rho_gate: f64,
    pub ratio_measured_reduced: f64,
    pub ratio_measured_laplace: f64,
    /// Ratio against 2|w_reduced| regardless of the gate (summary only).
    pub ungated_ratio: f64,
}

/// Join hopping rows with measured gaps (by `h`); ratios only when the gate
/// is below its threshold.
pub fn compare_rows(hopping: &[HoppingRow], planar: &[PlanarRow]) -> Vec<CompareRow> {
    hopping
        .iter()
        .map(|hr| {
            let measured = planar
                .iter()
                .find(|p| p.h == hr.h)
                .map_or(f64::NAN, |p| p.extrapolated_gap);
            let log10_gap_laplace = 2f64.log10() + hr.log10_w_laplace;
            let lm = measured.log10();
            let ratio = |lp: f64| 10f64.powf(lm - lp);
            let gated = hr.rho_gate < RHO_GATE;
            CompareRow {
                h: hr.h,
                log10_gap_measured: lm,
                log10_gap_reduced: hr.log10_gap_pred,
                log10_gap_laplace,
                rho_gate: hr.rho_gate,
                ratio_measured_reduced: if gated { ratio(hr.log10_gap_pred) } else { f64::NAN },
                ratio_measured_laplace: if gated { ratio(log10_gap_laplace) } else { f64::NAN },
                ungated_ratio: ratio(hr.log10_gap_pred),
            }
        })
        .collect()
}

pub fn compare_record(r: &CompareRow) -> Vec<String> {
    vec![
        h_str(r.h),
        num(r.log10_gap_measured),
        num(r.log10_gap_reduced),
        num(r.log10_gap_laplace),
        num(r.rho_gate),
        num(r.ratio_measured_reduced),
        num(r.ratio_measured_laplace),
    ]
}

/// Hopping rows back from `hopping.csv`.
pub fn hopping_rows_from(t: &Table) -> Vec<HoppingRow> {
    let c = |n| t.col(n);
    t.rows
        .iter()
        .map(|r| HoppingRow {
            h: r[c("h")],
            s: r[c("S")],
            log10_w_line: r[c("log10_w_line")],
            phase_w_line: r[c("phase_w_line")],
            log10_w_reduced: r[c("log10_w_reduced")],
            log10_w_laplace: r[c("log10_w_laplace")],
            ratio_laplace_reduced: r[c("ratio_laplace_reduced")],
            rho_gate: r[c("rho_gate")],
            log10_gap_pred: r[c("log10_gap_pred")],
            mu_h: f64::NAN,
        })
        .collect()
}

pub fn planar_rows_from(t: &Table) -> Vec<PlanarRow> {
    let c = |n| t.col(n);
    t.rows
        .iter()
        .map(|r| PlanarRow {
            h: r[c("h")],
            nx: r[c("nx")] as usize,
            ny: r[c("ny")] as usize,
            lambda1: r[c("lambda1")],
            lambda2: r[c("lambda2")],
            lambda3: r[c("lambda3")],
            gap: r[c("gap")],
            residual: r[c("residual")],
            extrapolated_gap: r[c("extrapolated_gap")],
            err_estimate: r[c("err_estimate")],
        })
        .collect()
}

/// Least-squares line `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / nf, ys.iter().sum::<f64>() / nf);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Fit of `-h ln(gap)` against `h`; points with a non-finite gap are skipped.
pub fn rate_fit(points: &[(f64, f64)]) -> Option<(f64, f64, usize)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, lg)| lg.is_finite())
        .map(|&(h, log10_gap)| (h, -h * log10_gap * std::f64::consts::LN_10))
        .unzip();
    linear_fit(&xs, &ys).map(|(i, s)| (i, s, xs.len()))
}

pub fn summary(
    spec: Option<&PotentialSpec>,
    s_action: f64,
    rows: &[CompareRow],
    failures: &[(f64, &str, String)],
) -> String {
    let mut o = String::new();
    if let Some(spec) = spec {
        let _ = writeln!(
            o,
            "spec: B = {}, L = {}, a = {}, v0 = {}, profile = {}",
            spec.b, spec.l, spec.a, spec.v0, spec.profile
        );
    }
    let _ = writeln!(o, "S = {s_action:.9}");
    let fit = |label: &str, pts: Vec<(f64, f64)>, o: &mut String| match rate_fit(&pts) {
        Some((i, sl, n)) => {
            let _ = writeln!(
                o,
                "rate fit ({label}): -h ln(gap) = {i:.6} + {sl:.6} h over {n} points; intercept/S - 1 = {:+.4}",
                i / s_action - 1.0
            );
        }
        None => {
            let _ = writeln!(o, "rate fit ({label}): fewer than two points");
        }
    };
    fit("2|w_reduced|", rows.iter().map(|r| (r.h, r.log10_gap_reduced)).collect(), &mut o);
    fit("measured gap", rows.iter().map(|r| (r.h, r.log10_gap_measured)).collect(), &mut o);
    let _ = writeln!(o, "error gate threshold rho < {RHO_GATE}");
    for r in rows {
        let gate = if r.rho_gate < RHO_GATE { "ratio reported" } else { "ratio NA" };
        let _ = writeln!(
            o,
            "  h = {}: rho = {:.4}, measured/2|w_reduced| = {} ({gate})",
            r.h,
            r.rho_gate,
            if r.ungated_ratio.is_finite() { format!("{:.6}", r.ungated_ratio) } else { "NA".into() }
        );
    }
    if failures.is_empty() {
        let _ = writeln!(o, "failures: none");
    } else {
        let _ = writeln!(o, "failures: {}", failures.len());
        for (h, what, e) in failures {
            let _ = writeln!(o, "  h = {h}: {what}: {e}");
        }
    }
    o
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
