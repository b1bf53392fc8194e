//! Soft interference cancellation between the two user groups.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::detect::gaussian::GaussianMsg;
use crate::error::{check_len, Result};
use crate::sparse::SparseChannelMatrix;

/// Shape of the residual covariance handed to the next detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceForm {
    /// Diagonal `m x m` blocks along the main diagonal.
    Blocks(usize),
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Blocks(Vec<DMatrix<Complex64>>),
    Diagonal(Vec<f64>),
}

impl Covariance {
    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Covariance::Diagonal(d) => d.clone(),
            Covariance::Blocks(b) => b.iter().flat_map(|m| (0..m.nrows()).map(move |i| m[(i, i)].re)).collect(),
        }
    }
}

/// `y - H m` and the covariance `noise_var I + H diag(v) H^H` restricted to
/// the requested form.
pub fn cancel_interference(
    y: &[Complex64],
    h_other: &SparseChannelMatrix,
    other: &[GaussianMsg],
    noise_var: f64,
    form: CovarianceForm,
) -> Result<(Vec<Complex64>, Covariance)> {
    let dim = h_other.dim();
    check_len(dim, y.len())?;
    check_len(dim, other.len())?;
    let means: Vec<Complex64> = other.iter().map(|g| g.mean).collect();
    let hx = h_other.matvec(&means);
    let residual = y.iter().zip(&hx).map(|(a, b)| a - b).collect();
    let cov = match form {
        CovarianceForm::Diagonal => Covariance::Diagonal(
            (0..dim)
                .map(|d| {
                    noise_var
                        + h_other
                            .row_range(d)
                            .map(|e| h_other.entry_val(e).norm_sqr() * other[h_other.entry_col(e)].var)
                            .sum::<f64>()
                })
                .collect(),
        ),
        CovarianceForm::Blocks(m) => {
            check_len(0, dim % m)?;
            let mut blocks = Vec::with_capacity(dim / m);
            let mut per_col: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
            let mut used = Vec::new();
            for k in 0..dim / m {
                let mut b = DMatrix::<Complex64>::identity(m, m) * Complex64::new(noise_var, 0.0);
                for r in 0..m {
                    let d = k * m + r;
                    for e in h_other.row_range(d) {
                        let c = h_other.entry_col(e);
                        if per_col[c].is_empty() {
                            used.push(c);
                        }
                        per_col[c].push((r, h_other.entry_val(e)));
                    }
                }
                for &c in &used {
                    let v = other[c].var;
                    for &(r1, h1) in &per_col[c] {
                        for &(r2, h2) in &per_col[c] {
                            b[(r1, r2)] += h1 * h2.conj() * v;
                        }
                    }
                    per_col[c].clear();
                }
                used.clear();
                blocks.push(b);
            }
            Covariance::Blocks(blocks)
        }
    };
    Ok((residual, cov))
}
