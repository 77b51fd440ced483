//! Seeded simulation studies.
//!
//! Every study fans replications out over rayon with generators from
//! [`SeededRng::derive`](crate::numerics::SeededRng::derive) and folds the
//! results in replication order, so a seed fully determines the output
//! tables regardless of thread count.

mod consistency;
mod example1;
mod example2;
mod functions;
mod sine_linear;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use consistency::{run_consistency, ConsistencyConfig, ConsistencyRow};
pub use example1::{example1_replication, run_example1, Example1Config, Example1Replication, Example1Row};
pub use example2::{run_example2, DesignKind, Example2Config, Example2Row};
pub use functions::{test_function_eval, TestFunction};
pub use sine_linear::{
    run_table1, run_table2, sine_linear_replication, SineLinearReplication, SineLinearSettings, Table1Config, Table1Row,
    Table2Config, Table2Row,
};

/// Result table of one study together with the configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult<C, R> {
    pub experiment: String,
    pub seed: u64,
    pub config: C,
    pub rows: Vec<R>,
    /// Not serialised: output files must be reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl<C: Serialize, R: Serialize> ExperimentResult<C, R> {
    pub fn file_stem(&self) -> String {
        format!("{}_seed{}", self.experiment, self.seed)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON summary: experiment name, crate version, seed, config echo and rows.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a, C, R> {
            experiment: &'a str,
            version: &'a str,
            seed: u64,
            config: &'a C,
            rows: &'a [R],
        }
        Ok(serde_json::to_string_pretty(&Summary {
            experiment: &self.experiment,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config: &self.config,
            rows: &self.rows,
        })?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.file_stem()));
        let json_path = dir.join(format!("{}.json", self.file_stem()));
        self.write_csv(&csv_path)?;
        fs::write(&json_path, self.summary_json()? + "\n")?;
        Ok((csv_path, json_path))
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_median() {
        assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
        assert_eq!(median(&[5.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(mean(&[]).is_nan());
    }
}
