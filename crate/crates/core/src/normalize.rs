//! Preprocessing normalizations.

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

/// Column-then-row Euclidean normalization.
///
/// Each column is divided by its L2 norm, then each row of the result by its
/// L2 norm. All-zero columns and rows are left untouched.
pub fn normalize_matrix(m: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let mut col_sq = vec![0.0; m.ncols()];
    for (_, c, v) in m.triplet_iter() {
        col_sq[c] += v * v;
    }
    let col_scale: Vec<f64> = col_sq
        .iter()
        .map(|&s| if s > 0.0 { 1.0 / s.sqrt() } else { 1.0 })
        .collect();

    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let (cols, vals) = row.cols_and_values_mut();
        let mut sq = 0.0;
        for (c, v) in cols.iter().zip(vals.iter_mut()) {
            *v *= col_scale[*c];
            sq += *v * *v;
        }
        if sq > 0.0 {
            let s = sq.sqrt();
            vals.iter_mut().for_each(|v| *v /= s);
        }
    }
    out
}

/// Dense counterpart of [`normalize_matrix`].
pub fn normalize_dense(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    for mut row in out.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
    out
}

/// Replaces negative entries by zero.
pub fn clamp_nonnegative(m: &mut DMatrix<f64>) {
    m.iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0
        }
    });
}

/// Row-sum normalization. Negative entries are clamped to zero first and an
/// all-zero row becomes uniform.
pub fn row_stochastic(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    clamp_nonnegative(&mut out);
    let ncols = out.ncols();
    for mut row in out.row_iter_mut() {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row /= s;
        } else {
            row.fill(1.0 / ncols as f64);
        }
    }
    out
}
