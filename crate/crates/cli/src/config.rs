//! Experiment configuration: a small TOML file with a `[spec]` table and
//! optional `[sweep]`, `[planar]` and `[radial]` tables.

use std::path::{Path, PathBuf};

use magtunnel::agmon::geometric_threshold;
use magtunnel::{PotentialSpec, Profile};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Radial,
    Agmon,
    Tail,
    Hopping,
    Planar,
    Compare,
}

impl Pipeline {
    pub const ALL: [Pipeline; 6] = [
        Pipeline::Radial,
        Pipeline::Agmon,
        Pipeline::Tail,
        Pipeline::Hopping,
        Pipeline::Planar,
        Pipeline::Compare,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSettings {
    /// Grids in the refinement ladder (each halves the spacing).
    pub levels: usize,
    pub order: u8,
    /// Eigen-residual tolerance as a fraction of the predicted gap.
    pub tol_factor: f64,
    pub tol_excited: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: PotentialSpec,
    /// Descending.
    pub h_values: Vec<f64>,
    pub pipelines: Vec<Pipeline>,
    pub planar: PlanarSettings,
    pub radial_richardson_tol: f64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            spec: PotentialSpec::canonical(),
            h_values: vec![0.6, 0.5, 0.45, 0.4, 0.35],
            pipelines: Pipeline::ALL.to_vec(),
            planar: PlanarSettings {
                levels: 3,
                order: 4,
                tol_factor: 1e-3,
                tol_excited: 1e-4,
            },
            radial_richardson_tol: 1e-8,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn runs(&self, p: Pipeline) -> bool {
        self.pipelines.contains(&p)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    spec: RawSpec,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    planar: RawPlanar,
    #[serde(default)]
    radial: RawRadial,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "L")]
    l: f64,
    a: f64,
    v0: f64,
    #[serde(default)]
    profile: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    h: Option<Vec<f64>>,
    pipelines: Option<Vec<Pipeline>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPlanar {
    levels: Option<usize>,
    order: Option<u8>,
    tol_factor: Option<f64>,
    tol_excited: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRadial {
    richardson_tol: Option<f64>,
}

fn invariant(msg: impl Into<String>) -> ConfigError {
    ConfigError::InvariantViolation(msg.into())
}

/// Parse and check a configuration text.
pub fn parse_config(text: &str, allow_unproven: bool) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
    let d = ExperimentConfig::default();
    let profile: Profile = match &raw.spec.profile {
        Some(p) => p.parse().map_err(|e| ConfigError::Parse(format!("{e}")))?,
        None => Profile::Bump,
    };
    let s = &raw.spec;
    let spec = PotentialSpec::new(s.b, s.l, s.a, s.v0, profile).map_err(|e| invariant(e.to_string()))?;
    let mut h_values = raw.sweep.h.unwrap_or(d.h_values);
    if h_values.is_empty() {
        return Err(invariant("sweep.h is empty"));
    }
    if let Some(bad) = h_values.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(invariant(format!("sweep.h must be positive, got {bad}")));
    }
    h_values.sort_by(|a, b| b.total_cmp(a));
    h_values.dedup();
    let mut pipelines = raw.sweep.pipelines.unwrap_or(d.pipelines);
    pipelines.sort();
    pipelines.dedup();
    let planar = PlanarSettings {
        levels: raw.planar.levels.unwrap_or(d.planar.levels),
        order: raw.planar.order.unwrap_or(d.planar.order),
        tol_factor: raw.planar.tol_factor.unwrap_or(d.planar.tol_factor),
        tol_excited: raw.planar.tol_excited.unwrap_or(d.planar.tol_excited),
    };
    if planar.levels == 0 {
        return Err(invariant("planar.levels must be at least 1"));
    }
    if planar.order != 2 && planar.order != 4 {
        return Err(invariant(format!("planar.order must be 2 or 4, got {}", planar.order)));
    }
    let radial_richardson_tol = raw.radial.richardson_tol.unwrap_or(d.radial_richardson_tol);
    for (name, v) in [
        ("planar.tol_factor", planar.tol_factor),
        ("planar.tol_excited", planar.tol_excited),
        ("radial.richardson_tol", radial_richardson_tol),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invariant(format!("{name} must be positive, got {v}")));
        }
    }
    let cfg = ExperimentConfig {
        spec,
        h_values,
        pipelines,
        planar,
        radial_richardson_tol,
        output: raw.output.unwrap_or(d.output),
    };
    check_geometry(&cfg.spec, allow_unproven)?;
    Ok(cfg)
}

/// The two-level reduction is proven only for `L > (1 + sqrt(3)/2) a`.
pub fn check_geometry(spec: &PotentialSpec, allow_unproven: bool) -> Result<(), ConfigError> {
    let t = geometric_threshold();
    if !allow_unproven && spec.l <= t * spec.a {
        return Err(invariant(format!(
            "L = {} must exceed (1 + sqrt(3)/2) a = {:.3}a = {:.4} (separation threshold 1.866a); \
             pass --allow-unproven to run anyway",
            spec.l,
            t,
            t * spec.a
        )));
    }
    Ok(())
}

pub fn validate_config(path: &Path, allow_unproven: bool) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, allow_unproven)
}

pub const DEFAULT_CONFIG: &str = r#"output = "out"

[spec]
B = 1.0
L = 2.0
a = 1.0
v0 = -1.0
profile = "bump"

[sweep]
h = [0.6, 0.5, 0.45, 0.4, 0.35]
pipelines = ["radial", "agmon", "tail", "hopping", "planar", "compare"]

[planar]
levels = 3
order = 4
tol_factor = 1e-3
tol_excited = 1e-4

[radial]
richardson_tol = 1e-8
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_text_parses_to_defaults() {
        let c = parse_config(DEFAULT_CONFIG, false).unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn threshold_is_enforced() {
        let text = DEFAULT_CONFIG.replace("L = 2.0", "L = 1.5");
        match parse_config(&text, false) {
            Err(ConfigError::InvariantViolation(m)) => assert!(m.contains("1.866a"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(parse_config(&text, true).is_ok());
    }

    #[test]
    fn missing_key_is_named() {
        let text = DEFAULT_CONFIG.replace("B = 1.0\n", "");
        match parse_config(&text, false) {
            Err(ConfigError::Parse(m)) => assert!(m.contains("`B`"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn h_values_are_sorted_descending() {
        let text = DEFAULT_CONFIG.replace("h = [0.6, 0.5, 0.45, 0.4, 0.35]", "h = [0.1, 0.3, 0.2, 0.3]");
        let c = parse_config(&text, false).unwrap();
        assert_eq!(c.h_values, vec![0.3, 0.2, 0.1]);
    }

    #[test]
    fn bad_values_are_rejected() {
        for (from, to) in [
            ("tol_factor = 1e-3", "tol_factor = -1.0"),
            ("h = [0.6, 0.5, 0.45, 0.4, 0.35]", "h = [0.6, 0.0]"),
            ("order = 4", "order = 3"),
            ("v0 = -1.0", "v0 = 1.0"),
        ] {
            let text = DEFAULT_CONFIG.replace(from, to);
            assert!(matches!(parse_config(&text, false), Err(ConfigError::InvariantViolation(_))), "{to}");
        }
        let text = DEFAULT_CONFIG.replace("profile = \"bump\"", "profile = \"bump\"\ncolour = 3");
        assert!(matches!(parse_config(&text, false), Err(ConfigError::Parse(_))));
    }
}
