use std::path::Path;
use std::process::{Command, Output};

use magtunnel_cli::config::DEFAULT_CONFIG;
use magtunnel_cli::report::{COMPARE_HEADER, HOPPING_HEADER, PLANAR_HEADER};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magtunnel")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

fn field(line: &str, header: &[&str], name: &str) -> f64 {
    let i = header.iter().position(|h| *h == name).unwrap();
    line.split(',').nth(i).unwrap().parse().unwrap()
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let close = write_config(dir.path(), &DEFAULT_CONFIG.replace("L = 2.0", "L = 1.5"));
    let o = run(&["--config", &close, "--out", out, "agmon"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.866a"));
    let o = run(&["--config", &close, "--out", out, "--allow-unproven", "agmon"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let no_b = write_config(dir.path(), &DEFAULT_CONFIG.replace("B = 1.0\n", ""));
    let o = run(&["--config", &no_b, "--out", out, "agmon"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`B`"));

    let o = run(&["--config", "/nonexistent/config.toml", "agmon"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--out", out, "planar-gap", "--h", "0.6", "--k", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn hopping_sweep_recovers_action_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG
        .replace(
            "h = [0.6, 0.5, 0.45, 0.4, 0.35]",
            "h = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]",
        )
        .replace(
            r#"pipelines = ["radial", "agmon", "tail", "hopping", "planar", "compare"]"#,
            r#"pipelines = ["hopping", "compare"]"#,
        );
    let cfg = write_config(dir.path(), &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        let r = run(&["--config", &cfg, "--out", o.to_str().unwrap(), "sweep"]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["hopping.csv", "compare.csv", "summary.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let hop = lines(&a.join("hopping.csv"));
    assert_eq!(hop[0], HOPPING_HEADER.join(","));
    assert_eq!(hop.len(), 11);
    // largest h first
    assert!(hop[1].starts_with("0.5,") && hop[10].starts_with("0.05,"));
    let cmp = lines(&a.join("compare.csv"));
    assert_eq!(cmp[0], COMPARE_HEADER.join(","));
    assert!(cmp[1..].iter().all(|l| l.split(',').nth(1) == Some("NA")));

    let summary = std::fs::read_to_string(a.join("summary.txt")).unwrap();
    let line = summary.lines().find(|l| l.starts_with("rate fit (2|w_reduced|)")).unwrap();
    let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(dev.abs() < 0.10, "{line}");
    assert!(summary.contains("failures: none"));
}

#[test]
fn planar_gap_matches_hopping_and_joins() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--out", out, "hopping", "--h", "0.6"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["--out", out, "planar-gap", "--h", "0.6", "--grids", "109,217"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let pl = lines(&dir.path().join("planar_gap.csv"));
    assert_eq!(pl[0], PLANAR_HEADER.join(","));
    assert_eq!(pl.len(), 2);
    assert_eq!(field(&pl[1], PLANAR_HEADER, "nx"), 217.0);
    let hop = lines(&dir.path().join("hopping.csv"));
    let pred = 10f64.powf(field(&hop[1], HOPPING_HEADER, "log10_gap_pred"));
    let gap = field(&pl[1], PLANAR_HEADER, "extrapolated_gap");
    assert!((gap / pred - 1.0).abs() < 0.25, "{gap} vs {pred}");

    let o = run(&["--out", out, "compare"]);
    assert_eq!(o.status.code(), Some(0));
    let cmp = lines(&dir.path().join("compare.csv"));
    assert_eq!(cmp.len(), 2);
    // the error gate is above 0.1 at h = 0.6: no ratio
    assert!(field(&cmp[1], COMPARE_HEADER, "rho_gate") > 0.1);
    assert_eq!(cmp[1].split(',').nth(5), Some("NA"));
    assert!(field(&cmp[1], COMPARE_HEADER, "log10_gap_measured").is_finite());
}

#[test]
fn unresolvable_rows_are_partial_failures() {
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG
        .replace("h = [0.6, 0.5, 0.45, 0.4, 0.35]", "h = [0.05]")
        .replace(
            r#"pipelines = ["radial", "agmon", "tail", "hopping", "planar", "compare"]"#,
            r#"pipelines = ["radial", "hopping", "planar", "compare"]"#,
        );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().to_str().unwrap();
    let o = run(&["--config", &cfg, "--out", out, "sweep"]);
    assert_eq!(o.status.code(), Some(2));
    let pl = lines(&dir.path().join("planar_gap.csv"));
    assert_eq!(pl.len(), 2);
    assert!(pl[1].starts_with("0.05,NA,"));
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("below the resolvable floor"), "{summary}");
    assert_eq!(lines(&dir.path().join("radial.csv")).len(), 2);
}

#[test]
fn single_well_dump_and_tail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--out", out, "single-well", "--h", "0.2", "--dump"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("mu_h = -0.5275"), "{stdout}");
    let dump = lines(&dir.path().join("single_well_h0.2.csv"));
    assert_eq!(dump[0], "r,u");
    assert!(dump.len() > 100);
    let o = run(&["--out", out, "tail", "--h", "0.2,0.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(lines(&dir.path().join("tail.csv")).len(), 3);
}

/// The default configuration end to end (planar solves at five h; ~10 min).
#[test]
#[ignore = "slow: five planar ladders"]
fn default_sweep_has_five_compare_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--out", out, "sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(lines(&dir.path().join("compare.csv")).len(), 6);
}
