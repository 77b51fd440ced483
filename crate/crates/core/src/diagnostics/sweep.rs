use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};
use crate::model::Dataset;

use super::cv::{cross_validated_predictions, pearson, CvConfig, LearnerPair};

/// Pearson correlations of the response with the cross-validated components.
/// A correlation is `None` when that prediction is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub cor_f: Option<f64>,
    pub cor_g: Option<f64>,
    pub cor_fg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub message: String,
    pub numerical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransectConfig {
    /// `log₁₀λ_f + log₁₀λ_g = c`.
    pub c: f64,
    pub lambda_f_grid: Vec<f64>,
    pub learners: LearnerPair,
}

impl TransectConfig {
    pub fn lambda_g(&self, lambda_f: f64) -> f64 {
        10f64.powf(self.c - lambda_f.log10())
    }

    fn validate(&self) -> Result<()> {
        if !self.c.is_finite() {
            return Err(DpmError::Validation(format!("transect constant must be finite, got {}", self.c)));
        }
        check_grid(&self.lambda_f_grid, "λ_f")
    }
}

fn check_grid(grid: &[f64], label: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(DpmError::Validation(format!("{label} grid is empty")));
    }
    if grid.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(DpmError::Validation(format!("{label} grid values must be positive and finite")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DpmError::Validation(format!("{label} grid must be strictly increasing")));
    }
    Ok(())
}

/// Rows in sweep order; failed cells are listed separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<DiagnosticRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepReport {
    /// Largest `cor(y, f̂+ĝ)` over the successful rows.
    pub fn max_cor_fg(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.cor_fg).reduce(f64::max)
    }
}

fn cell(data: &Dataset, learners: &LearnerPair, lambda_f: f64, lambda_g: f64, cv: &CvConfig) -> std::result::Result<DiagnosticRow, CellFailure> {
    let fail = |e: DpmError| CellFailure {
        lambda_f,
        lambda_g,
        numerical: e.is_numerical(),
        message: e.to_string(),
    };
    let p = cross_validated_predictions(data, learners, lambda_f, lambda_g, cv).map_err(fail)?;
    let y = data.y();
    let sum: Vec<f64> = p.f.iter().zip(&p.g).map(|(a, b)| a + b).collect();
    Ok(DiagnosticRow {
        lambda_f,
        lambda_g,
        cor_f: pearson(y, &p.f).ok(),
        cor_g: pearson(y, &p.g).ok(),
        cor_fg: pearson(y, &sum).ok(),
    })
}

fn sweep(data: &Dataset, learners: &LearnerPair, cells: &[(f64, f64)], cv: &CvConfig) -> SweepReport {
    let outcomes: Vec<_> = cells.par_iter().map(|&(lf, lg)| cell(data, learners, lf, lg, cv)).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(f) => {
                log::warn!("cell λ_f = {:e}, λ_g = {:e} failed: {}", f.lambda_f, f.lambda_g, f.message);
                failures.push(f);
            }
        }
    }
    SweepReport { rows, failures }
}

/// Correlation diagnostics along the transect, ordered by `λ_f`.
pub fn transect_sweep(data: &Dataset, config: &TransectConfig, cv: &CvConfig) -> Result<SweepReport> {
    config.validate()?;
    cv.validate(data.n())?;
    let cells: Vec<(f64, f64)> = config.lambda_f_grid.iter().map(|&lf| (lf, config.lambda_g(lf))).collect();
    Ok(sweep(data, &config.learners, &cells, cv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Row-major over `(λ_f, λ_g)`.
    pub grid: SweepReport,
    pub transect: Option<SweepReport>,
    pub grid_max: Option<f64>,
    pub transect_max: Option<f64>,
    /// `grid_max − transect_max`.
    pub gap: Option<f64>,
}

/// Full Cartesian sweep; with `transect_c` also sweeps the transect through
/// the same `λ_f` grid and reports the gap between the two maxima of
/// `cor(y, f̂+ĝ)`. Transect cells that coincide with grid cells are reused.
pub fn grid_sweep(
    data: &Dataset,
    learners: &LearnerPair,
    lambda_f_grid: &[f64],
    lambda_g_grid: &[f64],
    transect_c: Option<f64>,
    cv: &CvConfig,
) -> Result<GridReport> {
    check_grid(lambda_f_grid, "λ_f")?;
    check_grid(lambda_g_grid, "λ_g")?;
    cv.validate(data.n())?;
    let cells: Vec<(f64, f64)> = lambda_f_grid
        .iter()
        .flat_map(|&lf| lambda_g_grid.iter().map(move |&lg| (lf, lg)))
        .collect();
    let grid = sweep(data, learners, &cells, cv);
    let grid_max = grid.max_cor_fg();

    let transect = match transect_c {
        None => None,
        Some(c) => {
            let config = TransectConfig {
                c,
                lambda_f_grid: lambda_f_grid.to_vec(),
                learners: *learners,
            };
            config.validate()?;
            let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
            let mut rows = Vec::new();
            let mut failures = Vec::new();
            for &lf in lambda_f_grid {
                let lg = config.lambda_g(lf);
                let reused = grid.rows.iter().find(|r| same(r.lambda_f, lf) && same(r.lambda_g, lg));
                match reused {
                    Some(r) => rows.push(r.clone()),
                    None => match cell(data, learners, lf, lg, cv) {
                        Ok(r) => rows.push(r),
                        Err(f) => failures.push(f),
                    },
                }
            }
            Some(SweepReport { rows, failures })
        }
    };
    let transect_max = transect.as_ref().and_then(SweepReport::max_cor_fg);
    let gap = grid_max.zip(transect_max).map(|(g, t)| g - t);
    Ok(GridReport {
        grid,
        transect,
        grid_max,
        transect_max,
        gap,
    })
}
