//! Run configuration, the compare/predict pipelines, the invariant suite,
//! and report emission.

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

pub use config::{RunConfig, OUT_DIR_ENV};
pub use report::{Table, SCHEMA_VERSION};
pub use verify::{verify_suite, CheckResult, Level, VerifySummary};

use crate::error::Result;
use crate::exact::exact_sigma;
use crate::integral::{predict_sigma, Prediction};
use crate::quad::{rational_to_f64, rational_to_string, require_admissible};
use crate::series::{coefficients_from_series, singular_series_jet, MainTermCoefficients};
use num_rational::BigRational;
use report::{big, num, opt_num};
use serde_json::Value;
use std::time::Instant;

/// One rung of the `X` ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub x: BigRational,
    pub x_f64: f64,
    pub exact_total: Option<u128>,
    pub lattice_count: Option<u128>,
    pub prediction: Prediction,
    /// `(exact − prediction) / exact`.
    pub relative_error: Option<f64>,
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub k: u32,
    pub coefficients: Option<MainTermCoefficients>,
    pub rows: Vec<PredictionRow>,
    /// Least-squares slope of `log|rel err|` against `log X`.
    pub slope: Option<f64>,
    /// Reasons the configured decrease test failed; empty when it passed.
    pub failures: Vec<String>,
}

impl PredictionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_table(&self, command: &str, cfg: &RunConfig) -> Table {
        let k = self.k as usize;
        let mut columns: Vec<String> =
            vec!["X".into(), "exact_total".into(), "lattice_count".into()];
        columns.extend((0..k).map(|r| format!("piece_r{r}")));
        columns.extend(
            [
                "prediction",
                "relative_error",
                "quadrature_error_estimate",
                "pmax",
                "lmax",
                "tail_estimate",
                "max_levels_used",
                "warnings",
            ]
            .map(String::from),
        );
        if cfg.output.timing {
            columns.push("wall_seconds".into());
        }
        let names: Vec<&str> = columns.iter().map(String::as_str).collect();
        let series = self.coefficients.as_ref().map(|c| &c.series);
        let mut t = Table::new(command, &names)
            .param("k", self.k)
            .param(
                "polynomial",
                cfg.polynomial().map(|p| p.to_string()).unwrap_or_default(),
            )
            .param(
                "box",
                serde_json::to_value(&cfg.region).expect("box serializes"),
            )
            .param("quadrature_tol", num(cfg.quadrature.tol))
            .param(
                "coefficients",
                self.coefficients
                    .as_ref()
                    .map_or(Value::Null, |c| c.c.iter().map(|&v| num(v)).collect()),
            )
            .param("slope", opt_num(self.slope))
            .param("passed", self.passed())
            .param("failures", self.failures.clone());
        for row in &self.rows {
            let mut cells: Vec<Value> = vec![
                rational_to_string(&row.x).into(),
                row.exact_total.map_or(Value::Null, big),
                row.lattice_count.map_or(Value::Null, big),
            ];
            cells.extend(row.prediction.pieces.iter().map(|p| num(p.contribution)));
            cells.extend([
                num(row.prediction.total),
                opt_num(row.relative_error),
                num(row.prediction.abs_error_estimate),
                series.map_or(Value::Null, |s| s.pmax.into()),
                series.map_or(Value::Null, |s| s.lmax.into()),
                series.map_or(Value::Null, |s| num(s.tail_estimate)),
                series.map_or(Value::Null, |s| s.max_levels_used.into()),
                row.prediction.warnings.join("; ").into(),
            ]);
            if cfg.output.timing {
                cells.push(opt_num(row.wall_seconds));
            }
            t.push(cells);
        }
        t
    }
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than
/// two usable points.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `C_{k,0..k-1}` for the configured polynomial and truncation.
pub fn coefficients_for(cfg: &RunConfig) -> Result<MainTermCoefficients> {
    let poly = cfg.polynomial()?;
    let t = &cfg.truncation;
    let series = singular_series_jet(&poly, cfg.k, cfg.jet_order(), t.pmax, t.lmax)?;
    coefficients_from_series(cfg.k, series)
}

fn ladder(cfg: &RunConfig, with_exact: bool) -> Result<PredictionReport> {
    cfg.validate()?;
    let poly = cfg.polynomial()?;
    let regions = cfg
        .x_ladder
        .iter()
        .map(|x| cfg.region_at(&x.0))
        .collect::<Result<Vec<_>>>()?;
    for region in &regions {
        require_admissible(&poly, region)?;
    }
    if regions.is_empty() {
        return Ok(PredictionReport {
            k: cfg.k,
            coefficients: None,
            rows: Vec::new(),
            slope: None,
            failures: Vec::new(),
        });
    }
    let coefficients = coefficients_for(cfg)?;
    let mut rows = Vec::with_capacity(regions.len());
    for region in &regions {
        let start = Instant::now();
        let exact = with_exact
            .then(|| exact_sigma(&poly, cfg.k, region))
            .transpose()?;
        let prediction = predict_sigma(&poly, cfg.k, region, &coefficients.c, cfg.quadrature.tol)?;
        let relative_error = exact
            .as_ref()
            .filter(|e| e.total > 0)
            .map(|e| (e.total as f64 - prediction.total) / e.total as f64);
        rows.push(PredictionRow {
            x: region.dilation().clone(),
            x_f64: rational_to_f64(region.dilation()),
            exact_total: exact.as_ref().map(|e| e.total),
            lattice_count: exact.as_ref().map(|e| e.lattice_count),
            prediction,
            relative_error,
            wall_seconds: cfg.output.timing.then(|| start.elapsed().as_secs_f64()),
        });
    }
    Ok(PredictionReport {
        k: cfg.k,
        coefficients: Some(coefficients),
        rows,
        slope: None,
        failures: Vec::new(),
    })
}

/// Exact sums against predictions over the `X` ladder, with the configured
/// decrease test applied to `|relative error|`.
pub fn run_compare(cfg: &RunConfig) -> Result<PredictionReport> {
    let mut report = ladder(cfg, true)?;
    let errs: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| r.relative_error.map(|e| (r.x_f64, e.abs())))
        .collect();
    report.slope = least_squares_slope(&errs);
    if cfg.compare.require_decrease {
        if let Some(slope) = report.slope.filter(|s| !(*s < 0.0)) {
            report
                .failures
                .push(format!("relative error slope {slope:.4} is not negative"));
        }
    }
    if let (Some(limit), Some(last)) = (cfg.compare.final_rel_error_max, errs.last()) {
        if !(last.1 < limit) {
            report.failures.push(format!(
                "final |relative error| {:.4e} exceeds {limit:e}",
                last.1
            ));
        }
    }
    Ok(report)
}

/// Predictions alone over the `X` ladder.
pub fn run_predict(cfg: &RunConfig) -> Result<PredictionReport> {
    ladder(cfg, false)
}
