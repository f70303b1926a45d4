//! Browser bindings: three curve generators for the static page in `www/`.

use magtunnel::agmon::{action_s, agmon_distance};
use magtunnel::hopping::hopping_report;
use magtunnel::radial::{solve_radial, RadialGrid};
use magtunnel::tail::match_normalization;
use magtunnel::PotentialSpec;
use wasm_bindgen::prelude::*;

/// A shared abscissa with named series.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Curves {
    x: Vec<f64>,
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
    note: String,
}

#[wasm_bindgen]
impl Curves {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.columns.get(i).cloned().unwrap_or_default()
    }

    #[wasm_bindgen(getter)]
    pub fn note(&self) -> String {
        self.note.clone()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Radial ground state at `h`: `v(r)`, `v_B(r)` and the normalised `u(r)`.
pub fn well_curves(b: f64, a: f64, v0: f64, h: f64) -> Result<Curves, String> {
    // the separation does not enter the single well
    let spec = PotentialSpec::bump(b, 2.0 * a, a, v0).map_err(|e| e.to_string())?;
    let st = solve_radial(&spec, h, &RadialGrid::default()).map_err(|e| e.to_string())?;
    let r_end = (2.5 * a).min(st.r_max());
    let stride = (st.grid.len() / 400).max(1);
    let nodes: Vec<usize> = (0..st.grid.len()).step_by(stride).filter(|&i| st.grid[i] <= r_end).collect();
    let x: Vec<f64> = nodes.iter().map(|&i| st.grid[i]).collect();
    Ok(Curves {
        labels: vec!["v(r)".into(), "v_B(r)".into(), "u(r)".into()],
        columns: vec![
            x.iter().map(|&r| spec.single_well(r)).collect(),
            x.iter().map(|&r| spec.effective(r)).collect(),
            nodes.iter().map(|&i| st.u(i)).collect(),
        ],
        note: format!("mu_h = {:.8}, mu_h1 = {:.8}", st.mu_h, st.mu_h1),
        x,
    })
}

/// `S(L)` with the bounds `d(0,2L-a) + d(0,a) <= S <= d(0,2L)`.
pub fn action_curves(b: f64, a: f64, v0: f64, l_min: f64, l_max: f64, n: usize) -> Result<Curves, String> {
    let x = linspace(l_min, l_max, n);
    let mut cols = vec![Vec::new(), Vec::new(), Vec::new()];
    for &l in &x {
        let spec = PotentialSpec::bump(b, l, a, v0).map_err(|e| e.to_string())?;
        let e = |r: magtunnel::Result<f64>| r.map_err(|e| e.to_string());
        cols[0].push(e(action_s(&spec))?);
        cols[1].push(e(agmon_distance(&spec, 0.0, 2.0 * l - a))? + e(agmon_distance(&spec, 0.0, a))?);
        cols[2].push(e(agmon_distance(&spec, 0.0, 2.0 * l))?);
    }
    Ok(Curves {
        x,
        labels: vec!["S".into(), "d(0,2L-a)+d(0,a)".into(), "d(0,2L)".into()],
        columns: cols,
        note: String::new(),
    })
}

/// `log10` of the predicted gap `2|w|` (reduced integral and Laplace
/// asymptotic) against `h`, with `-S/(h ln 10)` for reference.
pub fn gap_curves(b: f64, l: f64, a: f64, v0: f64, h_min: f64, h_max: f64, n: usize) -> Result<Curves, String> {
    let spec = PotentialSpec::bump(b, l, a, v0).map_err(|e| e.to_string())?;
    let s = action_s(&spec).map_err(|e| e.to_string())?;
    let x = linspace(h_min, h_max, n);
    let ln10 = std::f64::consts::LN_10;
    let mut cols = vec![Vec::new(), Vec::new(), Vec::new()];
    for &h in &x {
        let st = solve_radial(&spec, h, &RadialGrid::default()).map_err(|e| format!("h = {h}: {e}"))?;
        let m = match_normalization(&st, &spec).map_err(|e| format!("h = {h}: {e}"))?;
        let rep = hopping_report(&m).map_err(|e| format!("h = {h}: {e}"))?;
        cols[0].push((2f64.ln() + rep.w_reduced.log_mag) / ln10);
        cols[1].push((2f64.ln() + rep.w_laplace.log_mag) / ln10);
        cols[2].push(-s / (h * ln10));
    }
    Ok(Curves {
        x,
        labels: vec!["log10 2|w_reduced|".into(), "log10 2|w_laplace|".into(), "-S/(h ln 10)".into()],
        columns: cols,
        note: format!("S = {s:.6}"),
    })
}

#[wasm_bindgen(js_name = wellCurves)]
pub fn well_curves_js(b: f64, a: f64, v0: f64, h: f64) -> Result<Curves, JsError> {
    well_curves(b, a, v0, h).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = actionCurves)]
pub fn action_curves_js(b: f64, a: f64, v0: f64, l_min: f64, l_max: f64, n: usize) -> Result<Curves, JsError> {
    action_curves(b, a, v0, l_min, l_max, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gapCurves)]
pub fn gap_curves_js(b: f64, l: f64, a: f64, v0: f64, h_min: f64, h_max: f64, n: usize) -> Result<Curves, JsError> {
    gap_curves(b, l, a, v0, h_min, h_max, n).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_curve_is_normalised_profile() {
        let c = well_curves(1.0, 1.0, -1.0, 0.3).unwrap();
        assert_eq!(c.labels.len(), 3);
        assert!(c.x.len() > 50 && c.columns.iter().all(|col| col.len() == c.x.len()));
        assert_eq!(c.columns[0][0], -1.0);
        assert!(c.column(2)[0] > c.column(2)[c.x.len() - 1]);
        assert!(c.note.starts_with("mu_h = -0.2955"));
    }

    #[test]
    fn action_sits_between_bounds() {
        let c = action_curves(1.0, 1.0, -1.0, 1.9, 3.0, 5).unwrap();
        for k in 0..5 {
            assert!(c.columns[1][k] < c.columns[0][k] && c.columns[0][k] < c.columns[2][k]);
        }
        assert!((c.columns[0][0] - action_s(&PotentialSpec::bump(1.0, 1.9, 1.0, -1.0).unwrap()).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn gap_curve_decreases_with_h() {
        let c = gap_curves(1.0, 2.0, 1.0, -1.0, 0.3, 0.5, 3).unwrap();
        assert!(c.columns[0].windows(2).all(|w| w[1] > w[0]));
        assert!(c.note.contains("5.02777"));
    }

    #[test]
    fn bad_parameters_are_reported() {
        assert!(action_curves(1.0, 1.0, 1.0, 2.0, 3.0, 3).is_err());
    }
}
