//! Exact symbol-wise MAP marginals by exhaustive enumeration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::params::Alphabet;
use crate::pmf::{softmax_in_place, SymbolPmfs};

/// Largest number of hypotheses enumerated.
pub const MAX_HYPOTHESES: usize = 1 << 16;

/// Marginals of `p(x | y) ∝ CN(y; Hx, Σ) prod_i P_i(x_i)`.
pub fn map_oracle(
    y: &[Complex64],
    h: &DMatrix<Complex64>,
    priors: &SymbolPmfs,
    sigma: &DMatrix<Complex64>,
    alphabet: &Alphabet,
) -> Result<SymbolPmfs> {
    let n = h.ncols();
    check_len(h.nrows(), y.len())?;
    check_len(n, priors.len())?;
    check_len(alphabet.size(), priors.q())?;
    let q = alphabet.size();
    let total = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > MAX_HYPOTHESES as u128 {
        return Err(Error::TooLarge(n));
    }
    let sigma_inv = sigma
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Contract("singular noise covariance".into()))?;
    let yv = DVector::from_column_slice(y);
    let mut logp = vec![f64::NEG_INFINITY; total as usize];
    let mut labels = vec![0usize; n];
    for (idx, lp) in logp.iter_mut().enumerate() {
        let mut rest = idx;
        for l in labels.iter_mut() {
            *l = rest % q;
            rest /= q;
        }
        let mut prior = 0.0;
        for (i, &l) in labels.iter().enumerate() {
            prior += priors.get(i)[l].ln();
        }
        if prior == f64::NEG_INFINITY {
            continue;
        }
        let x = DVector::from_iterator(n, labels.iter().map(|&l| alphabet.point(l)));
        let r = &yv - h * x;
        let quad = (r.adjoint() * &sigma_inv * &r)[(0, 0)].re;
        *lp = prior - quad;
    }
    let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut marg = vec![vec![f64::NEG_INFINITY; q]; n];
    for (idx, &lp) in logp.iter().enumerate() {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        let w = lp - max;
        let mut rest = idx;
        for m in marg.iter_mut() {
            let l = rest % q;
            rest /= q;
            m[l] = log_add(m[l], w);
        }
    }
    let mut flat = Vec::with_capacity(n * q);
    for mut m in marg {
        softmax_in_place(&mut m);
        flat.extend(m);
    }
    Ok(SymbolPmfs::from_flat(q, flat))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
