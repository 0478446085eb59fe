//! Row-list ⇄ matrix conversion.

use nalgebra::DVector;
use pyo3::exceptions::PyValueError;
use pyo3::PyResult;
use wnuc::Matrix;

pub fn to_matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(PyValueError::new_err("ragged matrix: rows differ in length"));
    }
    Ok(Matrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn from_matrix(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn to_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
