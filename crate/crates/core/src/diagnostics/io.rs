use std::path::Path;

use crate::error::{DpmError, Result};
use crate::model::Dataset;
use crate::numerics::DenseMatrix;

/// Reads a headed CSV into a [`Dataset`] whose features are min-max rescaled
/// to the unit cube; the original ranges stay in [`Dataset::omega`].
///
/// `features` defaults to every column except the response. Constant
/// features are dropped with a warning. Data rows are numbered from 1,
/// not counting the header.
pub fn load_csv(path: &Path, response: &str, features: Option<&[String]>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DpmError::Validation(format!("column {name:?} not found in {}", path.display())))
    };
    let y_col = find(response)?;
    let feature_names: Vec<String> = match features {
        Some(list) => list.to_vec(),
        None => header.iter().filter(|h| h.as_str() != response).cloned().collect(),
    };
    if feature_names.iter().any(|f| f == response) {
        return Err(DpmError::Validation(format!("{response:?} is both response and feature")));
    }
    let x_cols = feature_names.iter().map(|f| find(f)).collect::<Result<Vec<_>>>()?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); x_cols.len()];
    let mut y = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = k + 1;
        let cell = |col: usize| -> Result<f64> {
            let name = &header[col];
            let raw = record.get(col).ok_or_else(|| DpmError::Parse {
                row,
                column: name.clone(),
                message: "missing cell".into(),
            })?;
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(DpmError::Parse {
                    row,
                    column: name.clone(),
                    message: format!("{raw:?} is not a finite number"),
                }),
            }
        };
        y.push(cell(y_col)?);
        for (dst, &col) in columns.iter_mut().zip(&x_cols) {
            dst.push(cell(col)?);
        }
    }
    if y.is_empty() {
        return Err(DpmError::Validation(format!("{} has no data rows", path.display())));
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(DpmError::Validation(format!("response {response:?} is constant")));
    }

    let mut kept_names = Vec::new();
    let mut kept = Vec::new();
    let mut omega = Vec::new();
    for (name, col) in feature_names.into_iter().zip(columns) {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            log::warn!("dropping constant feature {name:?}");
            continue;
        }
        kept_names.push(name);
        kept.push(col);
        omega.push((lo, hi));
    }
    if kept.is_empty() {
        return Err(DpmError::Validation("no non-constant feature columns".into()));
    }
    let n = y.len();
    let x = DenseMatrix::from_fn(n, kept.len(), |i, j| kept[j][i]);
    Dataset::from_domain(x, y, omega)?.with_names(kept_names, response.to_owned())
}

/// Writes features on their original scale followed by the response.
pub fn write_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.push(data.response_name());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.from_unit(data.x().row(i)).iter().map(f64::to_string).collect();
        rec.push(data.y()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `lo:hi:k` into `k` values `10^t` with `t` evenly spaced over
/// `[lo, hi]`.
pub fn parse_log_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| DpmError::Validation(format!("grid {spec:?}: {why}; expected lo:hi:k in log10 units"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let [lo, hi, k] = parts[..] else {
        return Err(bad("wrong number of fields"));
    };
    let lo: f64 = lo.parse().map_err(|_| bad("lo is not a number"))?;
    let hi: f64 = hi.parse().map_err(|_| bad("hi is not a number"))?;
    let k: usize = k.parse().map_err(|_| bad("k is not a count"))?;
    if !lo.is_finite() || !hi.is_finite() || k == 0 {
        return Err(bad("bounds must be finite and k positive"));
    }
    if k == 1 {
        return Ok(vec![10f64.powf(lo)]);
    }
    if !(lo < hi) {
        return Err(bad("lo must be below hi"));
    }
    Ok((0..k)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (k - 1) as f64))
        .collect())
}
