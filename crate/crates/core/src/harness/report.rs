//! CSV and JSON output. Numbers are written with 12 significant digits so
//! files are byte-stable for a given config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;

use crate::harness::compare::ComparisonReport;
use crate::Result;

/// `x` in scientific notation with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() { fmt12(x).parse().unwrap_or(x) } else { x }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// `index,name,lf,hf,rel_error`.
pub fn comparison_csv(r: &ComparisonReport) -> String {
    let mut s = String::from("index,name,lf,hf,rel_error\n");
    for (i, row) in r.rows.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{},{}", row.name, fmt12(row.lf), fmt12(row.hf), fmt12(row.rel_error));
    }
    s
}

/// `index,lf_re,lf_im,hf_re,hf_im`; shorter list padded with empty cells.
pub fn eigenvalue_csv(r: &ComparisonReport) -> String {
    let mut s = String::from("index,lf_re,lf_im,hf_re,hf_im\n");
    let n = r.lf_eigenvalues.len().max(r.hf_eigenvalues.len());
    let cell = |v: Option<&[f64; 2]>, k: usize| v.map_or(String::new(), |z| fmt12(z[k]));
    for i in 0..n {
        let (a, b) = (r.lf_eigenvalues.get(i), r.hf_eigenvalues.get(i));
        let _ = writeln!(s, "{i},{},{},{},{}", cell(a, 0), cell(a, 1), cell(b, 0), cell(b, 1));
    }
    s
}

/// Rows are LF shapes, columns HF shapes.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::from("lf\\hf");
    for j in 0..m.ncols() {
        let _ = write!(s, ",{j}");
    }
    s.push('\n');
    for i in 0..m.nrows() {
        let _ = write!(s, "{i}");
        for j in 0..m.ncols() {
            let _ = write!(s, ",{}", fmt12(m[(i, j)]));
        }
        s.push('\n');
    }
    s
}

/// Writes `files` under `dir` (created if missing) and returns their paths.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(files.len());
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::compare::{ComparisonRow, Flag};

    fn report() -> ComparisonReport {
        ComparisonReport {
            case: 2,
            title: "t".into(),
            rows: vec![ComparisonRow { name: "a".into(), lf: 1.0 / 3.0, hf: 0.25, rel_error: 1.0 / 3.0 }],
            lf_eigenvalues: vec![[0.0, 1.0], [0.0, 2.0]],
            hf_eigenvalues: vec![[0.0, 1.5]],
            mac: Some(DMatrix::identity(2, 2)),
            flags: vec![Flag { name: "mode_swap".into(), value: false }],
        }
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(fmt12(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout_is_fixed() {
        let r = report();
        assert_eq!(comparison_csv(&r), "index,name,lf,hf,rel_error\n0,a,3.33333333333e-1,2.50000000000e-1,3.33333333333e-1\n");
        let e = eigenvalue_csv(&r);
        assert_eq!(e.lines().count(), 3);
        assert!(e.ends_with("1,0.00000000000e0,2.00000000000e0,,\n"));
        assert!(matrix_csv(r.mac.as_ref().unwrap()).starts_with("lf\\hf,0,1\n0,1.00000000000e0,0.00000000000e0\n"));
    }

    #[test]
    fn json_is_rounded_and_stable() {
        let a = to_json(&report()).unwrap();
        assert_eq!(a, to_json(&report()).unwrap());
        assert!(a.contains("0.333333333333"));
        assert!(!a.contains("0.3333333333333333"));
    }
}
