use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::Setting;
use crate::error::{Error, Result};

/// One `(n, replication)` cell as written to `rows.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub replication: usize,
    pub empirical_l2: f64,
    pub population_l2: f64,
    pub theta_n: f64,
    /// Empty unless runtime recording is switched on.
    pub runtime_s: Option<f64>,
}

/// Per-`n` summary across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub depth: usize,
    pub width: usize,
    pub param_count: usize,
    pub bound: f64,
    /// `ε_n` including log factors.
    pub rate_value: f64,
    pub median_population_l2: f64,
    pub median_empirical_l2: f64,
    pub median_theta_n: f64,
    pub max_theta_n: f64,
    pub discarded_restarts: usize,
    /// Observations with `|y_t| ≥ B_n`, summed over replications.
    pub exceed_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub setting: Setting,
    /// OLS slope of `ln(median population_l2)` on `ln n`.
    pub fitted_slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub theoretical_exponent: f64,
    pub grid: Vec<GridPoint>,
    #[serde(skip)]
    pub rows: Vec<RateRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub se: f64,
}

/// Least squares of `ln err` on `ln n`.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::validation("slope fit needs at least three points"));
    }
    if let Some((n, e)) = points.iter().find(|(n, e)| !(*e > 0.0) || !(*n > 0.0)) {
        return Err(Error::validation(format!("slope fit needs positive values, got ({n}, {e})")));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::validation("slope fit needs at least two distinct n"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(SlopeFit { slope, intercept, se: (ssr / (k - 2.0) / sxx).sqrt() })
}

#[derive(Serialize)]
struct PlotRow {
    n: usize,
    median_l2: f64,
    theory_curve: f64,
}

/// Writes `rows.csv`, `summary.json` and `plot.csv` into `dir`, creating it
/// if needed. `theory_curve` is `ε_n` rescaled to equal the median error at
/// the smallest `n`.
pub fn emit_report(report: &RateReport, dir: impl AsRef<Path>) -> Result<()> {
    if report.rows.is_empty() || report.grid.is_empty() {
        return Err(Error::validation("report has no rows"));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("rows.csv"))?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;

    let anchor = &report.grid[0];
    let scale = anchor.median_population_l2 / anchor.rate_value;
    let mut w = csv::Writer::from_path(dir.join("plot.csv"))?;
    for g in &report.grid {
        w.serialize(PlotRow { n: g.n, median_l2: g.median_population_l2, theory_curve: scale * g.rate_value })?;
    }
    w.flush()?;

    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(dir.join("summary.json"), text)?;
    Ok(())
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<RateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
