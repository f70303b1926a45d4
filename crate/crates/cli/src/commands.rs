//! Subcommand bodies. Each returns whether every row succeeded.

use std::path::Path;

use anyhow::Context;
use magtunnel::agmon::action_s;
use magtunnel::radial::RadialState;
use magtunnel::tail::match_normalization;

use crate::config::{ExperimentConfig, Pipeline};
use crate::pipeline::*;
use crate::report::*;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    Partial,
}

impl Status {
    fn from_failures(n: usize) -> Status {
        if n == 0 {
            Status::Complete
        } else {
            Status::Partial
        }
    }
}

fn warn(h: f64, what: &str, e: &str) {
    eprintln!("h = {h}: {what} failed: {e}");
}

pub fn single_well(cfg: &ExperimentConfig, hs: &[f64], dump: bool, out: &Path) -> anyhow::Result<Status> {
    let mut failures = 0;
    for &h in hs {
        match radial_state(&cfg.spec, h, cfg.radial_richardson_tol) {
            Ok(st) => {
                println!(
                    "h = {h}: mu_h = {:.12}, mu_h1 = {:.12}, norm = {:.12}, residual = {:.3e}, mu error = {:.3e}",
                    st.mu_h, st.mu_h1, st.norm_2d, st.residual, st.mu_error
                );
                if dump {
                    let path = out.join(format!("single_well_h{h}.csv"));
                    write_csv(&path, &["r", "u"], &profile_rows(&st))?;
                    println!("  wrote {}", path.display());
                }
            }
            Err(e) => {
                warn(h, "radial solve", &e.to_string());
                failures += 1;
            }
        }
    }
    Ok(Status::from_failures(failures))
}

fn profile_rows(st: &RadialState) -> Vec<Vec<String>> {
    st.grid
        .iter()
        .zip(st.values())
        .map(|(r, u)| vec![num(*r), num(u)])
        .collect()
}

pub fn agmon(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Status> {
    let spec = &cfg.spec;
    let r = match agmon_row(spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("agmon: {e}");
            write_csv(&out.join("agmon.csv"), AGMON_HEADER, &[])?;
            return Ok(Status::Partial);
        }
    };
    let rec = agmon_record(spec, &r);
    for (k, v) in AGMON_HEADER.iter().zip(&rec) {
        println!("{k:>16}  {v}");
    }
    write_csv(&out.join("agmon.csv"), AGMON_HEADER, &[rec])?;
    Ok(Status::Complete)
}

pub fn tail(cfg: &ExperimentConfig, hs: &[f64], out: &Path) -> anyhow::Result<Status> {
    let mut sink = CsvSink::create(&out.join("tail.csv"), TAIL_HEADER)?;
    let mut failures = 0;
    for &h in hs {
        let row = radial_state(&cfg.spec, h, cfg.radial_richardson_tol)
            .and_then(|st| match_normalization(&st, &cfg.spec))
            .map(|m| tail_row(&m));
        match &row {
            Ok(t) => println!(
                "h = {h}: alpha = {:.10}, t_L = {:.10}, f''(t_L) = {:.10}, nu = {:.10}, \
                 C_h matched = {} x 10^{:.6}, asymptotic = {} x 10^{:.6}, match residual = {:.3e}",
                t.alpha,
                t.t_l,
                t.fpp_tl,
                t.nu,
                t.c_h_matched.sign.as_i8(),
                t.c_h_matched.log10_mag(),
                t.c_h_asymptotic.sign.as_i8(),
                t.c_h_asymptotic.log10_mag(),
                t.match_residual
            ),
            Err(e) => {
                warn(h, "tail", &e.to_string());
                failures += 1;
            }
        }
        sink.row(&tail_record(h, row.as_ref().ok()))?;
    }
    Ok(Status::from_failures(failures))
}

fn hopping_for(cfg: &ExperimentConfig, h: f64) -> magtunnel::Result<HoppingRow> {
    let st = radial_state(&cfg.spec, h, cfg.radial_richardson_tol)?;
    let m = match_normalization(&st, &cfg.spec)?;
    hopping_row(&cfg.spec, &m)
}

pub fn hopping(cfg: &ExperimentConfig, hs: &[f64], out: &Path) -> anyhow::Result<Status> {
    let mut sink = CsvSink::create(&out.join("hopping.csv"), HOPPING_HEADER)?;
    let mut failures = 0;
    for &h in hs {
        let row = hopping_for(cfg, h);
        match &row {
            Ok(r) => println!(
                "h = {h}: log10|w_line| = {:.8}, arg w_line = {:.6}, log10|w_reduced| = {:.8}, \
                 laplace/reduced = {:.6}, rho = {:.4}",
                r.log10_w_line, r.phase_w_line, r.log10_w_reduced, r.ratio_laplace_reduced, r.rho_gate
            ),
            Err(e) => {
                warn(h, "hopping", &e.to_string());
                failures += 1;
            }
        }
        sink.row(&hopping_record(h, row.as_ref().ok()))?;
    }
    Ok(Status::from_failures(failures))
}

pub fn planar_gap(
    cfg: &ExperimentConfig,
    hs: &[f64],
    nodes_x: Option<&[usize]>,
    k: usize,
    tol: Option<f64>,
    out: &Path,
) -> anyhow::Result<Status> {
    let mut sink = CsvSink::create(&out.join("planar_gap.csv"), PLANAR_HEADER)?;
    let mut failures = 0;
    for &h in hs {
        let res = hopping_for(cfg, h).and_then(|hop| {
            let grids = ladder(&cfg.spec, h, &cfg.planar, nodes_x);
            planar_row(&cfg.spec, &hop, &cfg.planar, &grids, k, tol)
        });
        match &res {
            Ok((row, m)) => {
                for l in &m.levels {
                    println!(
                        "h = {h}: {} x {}: lambda = {:?}, gap = {:.6e}, residuals = [{}], matvecs = {}",
                        l.grid.nx,
                        l.grid.ny,
                        l.lambdas,
                        l.gap(),
                        l.residuals.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(", "),
                        l.matvecs
                    );
                }
                println!(
                    "h = {h}: extrapolated gap = {:.8e} +- {:.1e}{}",
                    row.extrapolated_gap,
                    row.err_estimate,
                    if m.reliable { "" } else { " (unreliable: residual above 10% of gap)" }
                );
            }
            Err(e) => {
                warn(h, "planar gap", &e.to_string());
                failures += 1;
            }
        }
        sink.row(&planar_record(h, res.as_ref().ok().map(|(r, _)| r)))?;
    }
    Ok(Status::from_failures(failures))
}

/// All configured pipelines, largest `h` first; each CSV is appended and
/// flushed per row.
pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Status> {
    let spec = &cfg.spec;
    let mut failures: Vec<(f64, &str, String)> = Vec::new();
    if cfg.runs(Pipeline::Agmon) && agmon(cfg, out)? == Status::Partial {
        failures.push((f64::NAN, "agmon", "action quantities failed".into()));
    }
    let open = |p: Pipeline, name: &str, header: &[&str]| -> anyhow::Result<Option<CsvSink>> {
        Ok(if cfg.runs(p) { Some(CsvSink::create(&out.join(name), header)?) } else { None })
    };
    let mut radial_csv = open(Pipeline::Radial, "radial.csv", RADIAL_HEADER)?;
    let mut tail_csv = open(Pipeline::Tail, "tail.csv", TAIL_HEADER)?;
    let mut hop_csv = if cfg.runs(Pipeline::Hopping) || cfg.runs(Pipeline::Compare) {
        Some(CsvSink::create(&out.join("hopping.csv"), HOPPING_HEADER)?)
    } else {
        None
    };
    let mut planar_csv = open(Pipeline::Planar, "planar_gap.csv", PLANAR_HEADER)?;
    let (mut hop_rows, mut planar_rows) = (Vec::new(), Vec::new());
    for &h in &cfg.h_values {
        let row = sweep_row(cfg, h);
        for (what, e) in row.failures() {
            warn(h, what, &e);
            failures.push((h, what, e));
        }
        if let (Some(s), Some(r)) = (radial_csv.as_mut(), &row.radial) {
            s.row(&radial_record(h, r.as_ref().ok()))?;
        }
        if let (Some(s), Some(r)) = (tail_csv.as_mut(), &row.tail) {
            s.row(&tail_record(h, r.as_ref().ok()))?;
        }
        if let (Some(s), Some(r)) = (hop_csv.as_mut(), &row.hopping) {
            s.row(&hopping_record(h, r.as_ref().ok()))?;
        }
        if let (Some(s), Some(r)) = (planar_csv.as_mut(), &row.planar) {
            s.row(&planar_record(h, r.as_ref().ok()))?;
        }
        if let Some(Ok(r)) = &row.hopping {
            hop_rows.push(r.clone());
        }
        if let Some(Ok(r)) = &row.planar {
            planar_rows.push(r.clone());
        }
        eprintln!("h = {h}: done");
    }
    if cfg.runs(Pipeline::Compare) {
        let rows = compare_rows(&hop_rows, &planar_rows);
        let recs: Vec<Vec<String>> = rows.iter().map(compare_record).collect();
        write_csv(&out.join("compare.csv"), COMPARE_HEADER, &recs)?;
        let s = action_s(spec).context("action S")?;
        let text = summary(Some(spec), s, &rows, &failures);
        write_text(&out.join("summary.txt"), &text)?;
        print!("{text}");
    }
    Ok(Status::from_failures(failures.len()))
}

/// Join `hopping.csv` and (if present) `planar_gap.csv` from the output
/// directory into `compare.csv` and `summary.txt`.
pub fn compare(out: &Path) -> anyhow::Result<Status> {
    let hop = Table::read(&out.join("hopping.csv"), HOPPING_HEADER)?;
    let planar_path = out.join("planar_gap.csv");
    let planar = if planar_path.exists() {
        planar_rows_from(&Table::read(&planar_path, PLANAR_HEADER)?)
    } else {
        Vec::new()
    };
    let all = hopping_rows_from(&hop);
    let failed: Vec<(f64, &str, String)> = all
        .iter()
        .filter(|r| !r.log10_gap_pred.is_finite())
        .map(|r| (r.h, "hopping", "row marked NA in hopping.csv".to_string()))
        .collect();
    let ok: Vec<HoppingRow> = all.into_iter().filter(|r| r.log10_gap_pred.is_finite()).collect();
    let s = ok.first().map_or(f64::NAN, |r| r.s);
    let rows = compare_rows(&ok, &planar);
    let recs: Vec<Vec<String>> = rows.iter().map(compare_record).collect();
    write_csv(&out.join("compare.csv"), COMPARE_HEADER, &recs)?;
    let text = summary(None, s, &rows, &failed);
    write_text(&out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(Status::from_failures(failed.len()))
}
