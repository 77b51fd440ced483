//! Basis term lists for `dpm separability --data`.
//!
//! A list is comma-separated; each term is one of `1`, `col`, `col^k`,
//! `sin(col)`, `cos(col)`, `sin(a*col)` or `cos(a*col)`, evaluated on the
//! column values exactly as they appear in the file.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Constant,
    Power { column: String, exponent: i32 },
    Sin { column: String, scale: f64 },
    Cos { column: String, scale: f64 },
}

impl Term {
    pub fn column(&self) -> Option<&str> {
        match self {
            Term::Constant => None,
            Term::Power { column, .. } | Term::Sin { column, .. } | Term::Cos { column, .. } => Some(column),
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match self {
            Term::Constant => 1.0,
            Term::Power { exponent, .. } => v.powi(*exponent),
            Term::Sin { scale, .. } => (scale * v).sin(),
            Term::Cos { scale, .. } => (scale * v).cos(),
        }
    }
}

fn parse_column(s: &str) -> Result<String, String> {
    let s = s.trim();
    if s.is_empty() || s.contains(['(', ')', '*', '^', ',']) {
        return Err(format!("{s:?} is not a column name"));
    }
    Ok(s.to_owned())
}

fn parse_term(raw: &str) -> Result<Term, String> {
    let t = raw.trim();
    if t == "1" {
        return Ok(Term::Constant);
    }
    for (name, is_sin) in [("sin(", true), ("cos(", false)] {
        if let Some(inner) = t.strip_prefix(name).and_then(|r| r.strip_suffix(')')) {
            let (scale, column) = match inner.split_once('*') {
                Some((a, c)) => (
                    a.trim().parse::<f64>().map_err(|_| format!("bad scale in {t:?}"))?,
                    parse_column(c)?,
                ),
                None => (1.0, parse_column(inner)?),
            };
            return Ok(if is_sin {
                Term::Sin { column, scale }
            } else {
                Term::Cos { column, scale }
            });
        }
    }
    match t.split_once('^') {
        Some((c, k)) => Ok(Term::Power {
            column: parse_column(c)?,
            exponent: k.trim().parse().map_err(|_| format!("bad exponent in {t:?}"))?,
        }),
        None => Ok(Term::Power {
            column: parse_column(t)?,
            exponent: 1,
        }),
    }
}

/// Splits on commas outside parentheses.
pub fn parse_terms(spec: &str) -> Result<Vec<Term>, String> {
    let mut terms = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in spec.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                terms.push(parse_term(&spec[start..i])?);
                start = i + 1;
            }
            _ => {}
        }
    }
    terms.push(parse_term(&spec[start..])?);
    Ok(terms)
}

/// Columns of a headed numeric CSV, by name.
pub fn read_columns(path: &std::path::Path) -> Result<HashMap<String, Vec<f64>>, dpm_core::DpmError> {
    use dpm_core::DpmError;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        for (j, name) in header.iter().enumerate() {
            let raw = record.get(j).unwrap_or("");
            let v = raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| DpmError::Parse {
                row: k + 1,
                column: name.clone(),
                message: format!("{raw:?} is not a finite number"),
            })?;
            cols[j].push(v);
        }
    }
    Ok(header.into_iter().zip(cols).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_form() {
        let t = parse_terms("1, x, x^2, sin(3*x), cos(z)").unwrap();
        assert_eq!(t[0], Term::Constant);
        assert_eq!(t[2], Term::Power { column: "x".into(), exponent: 2 });
        assert_eq!(t[3], Term::Sin { column: "x".into(), scale: 3.0 });
        assert_eq!(t[4], Term::Cos { column: "z".into(), scale: 1.0 });
        assert!((t[3].eval(0.5) - 1.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_terms() {
        assert!(parse_terms("sin(a*)").is_err());
        assert!(parse_terms("x^two").is_err());
        assert!(parse_terms("x,,y").is_err());
    }
}
