//! JSON (de)serialization for matrices and Fourier data.
//!
//! Matrices serialize as `{"rows": d, "re": [[..]], "im": [[..]]}`. Floats
//! are written with 17 significant digits, which round-trips every f64
//! bit-exactly through the decimal string.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::CMat;

/// Format one float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a matrix as a JSON object string.
pub fn matrix_to_json(m: &CMat) -> String {
    let d = m.nrows();
    let rows = |part: fn(&Complex64) -> f64| -> String {
        let mut s = String::from("[");
        for i in 0..d {
            if i > 0 {
                s.push(',');
            }
            s.push('[');
            for j in 0..m.ncols() {
                if j > 0 {
                    s.push(',');
                }
                s.push_str(&fmt_f64(part(&m[[i, j]])));
            }
            s.push(']');
        }
        s.push(']');
        s
    };
    format!(
        "{{\"rows\":{},\"re\":{},\"im\":{}}}",
        d,
        rows(|z| z.re),
        rows(|z| z.im)
    )
}

#[derive(Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub fn matrix_from_json_value(v: &serde_json::Value) -> Result<CMat> {
    let mj: MatrixJson = serde_json::from_value(v.clone())?;
    matrix_from_parts(&mj)
}

pub fn matrix_from_json(s: &str) -> Result<CMat> {
    let mj: MatrixJson = serde_json::from_str(s)?;
    matrix_from_parts(&mj)
}

fn matrix_from_parts(mj: &MatrixJson) -> Result<CMat> {
    let d = mj.rows;
    if mj.re.len() != d || mj.im.len() != d {
        return Err(Error::InvalidInput("matrix JSON row count mismatch".into()));
    }
    let cols = mj.re.first().map_or(0, |r| r.len());
    if mj.re.iter().any(|r| r.len() != cols) || mj.im.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("matrix JSON ragged rows".into()));
    }
    let m = Array2::from_shape_fn((d, cols), |(i, j)| Complex64::new(mj.re[i][j], mj.im[i][j]));
    if !crate::matrix::all_finite(&m) {
        return Err(Error::InvalidInput("matrix JSON has non-finite entries".into()));
    }
    Ok(m)
}
