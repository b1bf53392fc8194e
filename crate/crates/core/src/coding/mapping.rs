//! Conversions between symbol pmfs and bit LLRs.

use crate::coding::ldpc::clamp_llr;
use crate::error::{check_len, Result};
use crate::params::Alphabet;
use crate::pmf::{softmax_in_place, SymbolPmfs};

/// Bit LLRs `log P(b=0) - log P(b=1)` of each symbol, MSB first, clamped.
pub fn demap_llr(pmfs: &SymbolPmfs, alphabet: &Alphabet) -> Result<Vec<f64>> {
    check_len(alphabet.size(), pmfs.q())?;
    let r = alphabet.bits_per_symbol();
    let mut out = Vec::with_capacity(pmfs.len() * r);
    for p in pmfs.iter() {
        for j in 0..r {
            let (mut p0, mut p1) = (0.0, 0.0);
            for (a, &pa) in p.iter().enumerate() {
                if alphabet.bit(a, j) == 0 {
                    p0 += pa;
                } else {
                    p1 += pa;
                }
            }
            let l = match (p0 > 0.0, p1 > 0.0) {
                (true, true) => p0.ln() - p1.ln(),
                (true, false) => f64::INFINITY,
                (false, true) => f64::NEG_INFINITY,
                (false, false) => 0.0,
            };
            out.push(clamp_llr(l));
        }
    }
    Ok(out)
}

/// Symbol pmfs with `P(a) ∝ prod_j exp(-bit_j(a) L_j)`.
pub fn map_pmf(llrs: &[f64], alphabet: &Alphabet) -> Result<SymbolPmfs> {
    let r = alphabet.bits_per_symbol();
    let q = alphabet.size();
    if !llrs.len().is_multiple_of(r) {
        return Err(crate::Error::Dimension {
            expected: llrs.len().div_ceil(r) * r,
            actual: llrs.len(),
        });
    }
    let mut probs = Vec::with_capacity(llrs.len() / r * q);
    let mut logw = vec![0.0; q];
    for word in llrs.chunks(r) {
        for (a, w) in logw.iter_mut().enumerate() {
            *w = -(0..r)
                .map(|j| if alphabet.bit(a, j) == 1 { clamp_llr(word[j]) } else { 0.0 })
                .sum::<f64>();
        }
        softmax_in_place(&mut logw);
        probs.extend_from_slice(&logw);
    }
    Ok(SymbolPmfs::from_flat(q, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::ldpc::LLR_CLAMP;

    #[test]
    fn uniform_pmf_gives_zero_llrs() {
        let a = Alphabet::new(16).unwrap();
        let l = demap_llr(&SymbolPmfs::uniform(3, 16), &a).unwrap();
        assert!(l.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn delta_pmf_saturates() {
        let a = Alphabet::new(4).unwrap();
        let l = demap_llr(&SymbolPmfs::deltas(&[0b01], 4), &a).unwrap();
        assert_eq!(l, vec![LLR_CLAMP, -LLR_CLAMP]);
    }

    #[test]
    fn huge_llr_restricts_support() {
        let a = Alphabet::new(4).unwrap();
        let p = map_pmf(&[1e6, 0.0], &a).unwrap();
        for lbl in 0..4 {
            if a.bit(lbl, 0) == 1 {
                assert!(p.get(0)[lbl] < 1e-20);
            }
        }
        let u = map_pmf(&[0.0; 4], &a).unwrap();
        assert!(u.as_flat().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }
}
