//! Regular LDPC codes: PEG construction, systematic encoding and
//! sum-product decoding.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};

/// LLR magnitude limit applied to decoder inputs and outputs.
pub const LLR_CLAMP: f64 = 50.0;

/// Construction attempts before a rank-deficient matrix is shortened.
const MAX_SEED_RETRIES: u64 = 16;

pub fn clamp_llr(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

/// Binary parity-check matrix stored as adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityMatrix {
    n: usize,
    /// Variables of each check, ascending.
    checks: Vec<Vec<usize>>,
    /// Checks of each variable, ascending.
    vars: Vec<Vec<usize>>,
}

impl ParityMatrix {
    pub fn from_checks(n: usize, mut checks: Vec<Vec<usize>>) -> Result<Self> {
        let mut vars = vec![Vec::new(); n];
        for (c, row) in checks.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            for &v in row.iter() {
                if v >= n {
                    return Err(Error::Dimension { expected: n, actual: v + 1 });
                }
                vars[v].push(c);
            }
        }
        Ok(ParityMatrix { n, checks, vars })
    }

    /// Progressive edge growth for a `(dv, dc)`-regular graph. Each new edge
    /// of a variable goes to an unsaturated check as far as possible from it
    /// in the current graph, preferring low check degree, then at random.
    pub fn peg<R: Rng + ?Sized>(n: usize, dv: usize, dc: usize, rng: &mut R) -> Result<Self> {
        if dv == 0 || dc == 0 || n == 0 || !(n * dv).is_multiple_of(dc) || dc > n {
            return Err(Error::Config(format!("infeasible LDPC degrees ({dv},{dc}) at n={n}")));
        }
        let m = n * dv / dc;
        if dv > m {
            return Err(Error::Config(format!("variable degree {dv} exceeds {m} checks")));
        }
        let mut checks: Vec<Vec<usize>> = vec![Vec::with_capacity(dc); m];
        let mut vars: Vec<Vec<usize>> = vec![Vec::with_capacity(dv); n];
        let mut dist = vec![usize::MAX; m];
        let mut seen_var = vec![false; n];
        let mut queue = VecDeque::new();
        let mut cands = Vec::with_capacity(m);
        for j in 0..n {
            for _ in 0..dv {
                // BFS distances (in check layers) from variable j.
                dist.iter_mut().for_each(|d| *d = usize::MAX);
                seen_var.iter_mut().for_each(|s| *s = false);
                seen_var[j] = true;
                queue.clear();
                for &c in &vars[j] {
                    dist[c] = 0;
                    queue.push_back(c);
                }
                while let Some(c) = queue.pop_front() {
                    for &v in &checks[c] {
                        if seen_var[v] {
                            continue;
                        }
                        seen_var[v] = true;
                        for &c2 in &vars[v] {
                            if dist[c2] == usize::MAX {
                                dist[c2] = dist[c] + 1;
                                queue.push_back(c2);
                            }
                        }
                    }
                }
                let eligible = |c: usize| checks[c].len() < dc && !vars[j].contains(&c);
                let best_dist = (0..m).filter(|&c| eligible(c)).map(|c| dist[c]).max();
                let Some(best_dist) = best_dist else {
                    return Err(Error::Contract("PEG ran out of eligible checks".into()));
                };
                let min_deg = (0..m)
                    .filter(|&c| eligible(c) && dist[c] == best_dist)
                    .map(|c| checks[c].len())
                    .min()
                    .unwrap();
                cands.clear();
                cands.extend((0..m).filter(|&c| eligible(c) && dist[c] == best_dist && checks[c].len() == min_deg));
                let &c = cands.choose(rng).unwrap();
                checks[c].push(j);
                vars[j].push(c);
            }
        }
        Self::from_checks(n, checks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn check(&self, c: usize) -> &[usize] {
        &self.checks[c]
    }

    pub fn var(&self, v: usize) -> &[usize] {
        &self.vars[v]
    }

    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        self.checks
            .iter()
            .map(|row| row.iter().fold(0u8, |s, &v| s ^ (bits[v] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n && self.syndrome(bits).iter().all(|&s| s == 0)
    }

    /// Length of the shortest cycle of the Tanner graph (`None` if acyclic).
    pub fn girth(&self) -> Option<usize> {
        let n = self.n;
        let neighbours = |x: usize| -> &[usize] {
            if x < n {
                &self.vars[x]
            } else {
                &self.checks[x - n]
            }
        };
        let total = n + self.checks.len();
        let mut best = usize::MAX;
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        let mut queue = std::collections::VecDeque::new();
        for start in 0..n {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[start] = 0;
            parent[start] = usize::MAX;
            queue.clear();
            queue.push_back(start);
            while let Some(x) = queue.pop_front() {
                if 2 * dist[x] + 1 >= best {
                    break;
                }
                for &w in neighbours(x) {
                    let w = if x < n { w + n } else { w };
                    if dist[w] == usize::MAX {
                        dist[w] = dist[x] + 1;
                        parent[w] = x;
                        queue.push_back(w);
                    } else if parent[x] != w {
                        best = best.min(dist[x] + dist[w] + 1);
                    }
                }
            }
        }
        (best != usize::MAX).then_some(best)
    }

    /// MacKay alist text.
    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let max_col = self.vars.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.checks.iter().map(Vec::len).max().unwrap_or(0);
        let join = |xs: &mut dyn Iterator<Item = usize>| xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(s, "{} {}", self.n, self.checks.len()).unwrap();
        writeln!(s, "{max_col} {max_row}").unwrap();
        writeln!(s, "{}", join(&mut self.vars.iter().map(Vec::len))).unwrap();
        writeln!(s, "{}", join(&mut self.checks.iter().map(Vec::len))).unwrap();
        for col in &self.vars {
            writeln!(s, "{}", join(&mut col.iter().map(|c| c + 1))).unwrap();
        }
        for row in &self.checks {
            writeln!(s, "{}", join(&mut row.iter().map(|v| v + 1))).unwrap();
        }
        s
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        let mut nums = text.split_whitespace().map(|t| t.parse::<usize>().map_err(|e| Error::Parse(e.to_string())));
        let mut next = || nums.next().unwrap_or_else(|| Err(Error::Parse("truncated alist".into())));
        let (n, m) = (next()?, next()?);
        let (_, _) = (next()?, next()?);
        let col_deg: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..m).map(|_| next()).collect::<Result<_>>()?;
        for &d in &col_deg {
            for _ in 0..d {
                next()?;
            }
        }
        let mut checks = Vec::with_capacity(m);
        for &d in &row_deg {
            let row: Vec<usize> = (0..d)
                .map(|_| next().map(|v| v.wrapping_sub(1)))
                .collect::<Result<_>>()?;
            checks.push(row);
        }
        Self::from_checks(n, checks)
    }
}

/// Dense GF(2) row over `words` 64-bit words.
#[derive(Clone)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn xor_with(&mut self, other: &BitRow) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a ^= b);
    }
}

/// A parity matrix reduced to systematic encoding form.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    h: ParityMatrix,
    /// Codeword positions carrying information bits, in info order.
    info_cols: Vec<usize>,
    /// Free columns beyond `k` pinned to zero when H is rank deficient.
    shortened: Vec<usize>,
    /// For each pivot column, the info indices whose XOR gives its bit.
    parity_eqs: Vec<(usize, Vec<usize>)>,
}

/// Result of [`LdpcCode::decode`].
#[derive(Debug, Clone)]
pub struct BpOutput {
    pub bits: Vec<u8>,
    pub posterior: Vec<f64>,
    /// `posterior - input`, the extrinsic information on the coded bits.
    pub extrinsic: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LdpcCode {
    /// PEG-constructed `(dv, dc)`-regular code; a rank-deficient matrix is
    /// rebuilt with the next seed and, after repeated failures, shortened so
    /// that the dimension stays at `n - n*dv/dc`.
    pub fn regular(n: usize, dv: usize, dc: usize, seed: u64) -> Result<Self> {
        let mut last = None;
        for attempt in 0..MAX_SEED_RETRIES {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let h = match ParityMatrix::peg(n, dv, dc, &mut rng) {
                Ok(h) => h,
                Err(Error::Contract(_)) => continue,
                Err(e) => return Err(e),
            };
            let code = Self::from_parity(h)?;
            if code.shortened.is_empty() {
                return Ok(code);
            }
            last = Some(code);
        }
        last.ok_or_else(|| Error::Config(format!("PEG failed for ({dv},{dc}) at n={n}")))
    }

    pub fn from_parity(h: ParityMatrix) -> Result<Self> {
        let n = h.n();
        let m = h.num_checks();
        if m >= n {
            return Err(Error::Config("parity matrix has no information positions".into()));
        }
        let words = n.div_ceil(64);
        let mut rows: Vec<BitRow> = (0..m)
            .map(|c| {
                let mut r = BitRow(vec![0; words]);
                for &v in h.check(c) {
                    r.0[v / 64] |= 1 << (v % 64);
                }
                r
            })
            .collect();
        let mut pivots = Vec::with_capacity(m);
        let mut rank = 0;
        for col in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_with(&pivot);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        let k = n - m;
        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&c| is_pivot[c] = true);
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let info_cols = free[..k].to_vec();
        let shortened = free[k..].to_vec();
        let mut info_index = vec![usize::MAX; n];
        info_cols.iter().enumerate().for_each(|(i, &c)| info_index[c] = i);
        let parity_eqs = pivots
            .iter()
            .enumerate()
            .map(|(r, &pc)| {
                let deps = info_cols
                    .iter()
                    .filter(|&&c| rows[r].get(c))
                    .map(|&c| info_index[c])
                    .collect();
                (pc, deps)
            })
            .collect();
        Ok(LdpcCode {
            h,
            info_cols,
            shortened,
            parity_eqs,
        })
    }

    pub fn parity(&self) -> &ParityMatrix {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn is_shortened(&self) -> bool {
        !self.shortened.is_empty()
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        check_len(self.k(), info.len())?;
        let mut cw = vec![0u8; self.n()];
        for (i, &c) in self.info_cols.iter().enumerate() {
            cw[c] = info[i] & 1;
        }
        for (pc, deps) in &self.parity_eqs {
            cw[*pc] = deps.iter().fold(0, |s, &i| s ^ (info[i] & 1));
        }
        Ok(cw)
    }

    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_cols.iter().map(|&c| codeword[c]).collect()
    }

    /// Flooding sum-product decoding with early stop on a zero syndrome.
    /// LLRs are positive when bit 0 is more likely.
    pub fn decode(&self, llr_in: &[f64], max_iter: usize) -> Result<BpOutput> {
        let n = self.n();
        check_len(n, llr_in.len())?;
        let mut input: Vec<f64> = llr_in.iter().map(|&x| clamp_llr(x)).collect();
        for &c in &self.shortened {
            input[c] = LLR_CLAMP;
        }
        let h = &self.h;
        let mut edge_start = Vec::with_capacity(h.num_checks() + 1);
        let mut edge_var = Vec::new();
        edge_start.push(0);
        for c in 0..h.num_checks() {
            edge_var.extend_from_slice(h.check(c));
            edge_start.push(edge_var.len());
        }
        let ne = edge_var.len();
        let mut v2c: Vec<f64> = edge_var.iter().map(|&v| input[v]).collect();
        let mut c2v = vec![0.0; ne];
        let mut ext = vec![0.0; n];
        let mut bits = vec![0u8; n];
        let mut t = Vec::new();
        let mut fwd = Vec::new();
        let mut iterations = 0;
        let mut converged = false;
        const LIM: f64 = 1.0 - 1e-15;
        for _ in 0..max_iter.max(1) {
            iterations += 1;
            for c in 0..h.num_checks() {
                let (s, e) = (edge_start[c], edge_start[c + 1]);
                t.clear();
                t.extend(v2c[s..e].iter().map(|&x| (0.5 * x).tanh()));
                fwd.clear();
                let mut acc = 1.0;
                for &ti in &t {
                    fwd.push(acc);
                    acc *= ti;
                }
                let mut back = 1.0;
                for i in (0..t.len()).rev() {
                    let p = (fwd[i] * back).clamp(-LIM, LIM);
                    c2v[s + i] = clamp_llr(2.0 * p.atanh());
                    back *= t[i];
                }
            }
            ext.iter_mut().for_each(|x| *x = 0.0);
            for (e, &v) in edge_var.iter().enumerate() {
                ext[v] += c2v[e];
            }
            for v in 0..n {
                ext[v] = clamp_llr(ext[v]);
                bits[v] = u8::from(input[v] + ext[v] < 0.0);
            }
            if h.is_codeword(&bits) {
                converged = true;
                break;
            }
            for (e, &v) in edge_var.iter().enumerate() {
                v2c[e] = clamp_llr(input[v] + ext[v] - c2v[e]);
            }
        }
        let posterior: Vec<f64> = (0..n).map(|v| clamp_llr(llr_in[v]) + ext[v]).collect();
        let extrinsic = (0..n).map(|v| posterior[v] - clamp_llr(llr_in[v])).collect();
        Ok(BpOutput {
            bits,
            posterior,
            extrinsic,
            iterations,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_peg_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = ParityMatrix::peg(8, 3, 6, &mut rng).unwrap();
        assert_eq!(h.num_checks(), 4);
        assert!((0..8).all(|v| h.var(v).len() == 3));
        assert!((0..4).all(|c| h.check(c).len() == 6));
    }

    #[test]
    fn infeasible_degrees_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(ParityMatrix::peg(7, 3, 6, &mut rng).is_err());
    }

    #[test]
    fn encode_gives_codewords() {
        let code = LdpcCode::regular(96, 3, 6, 5).unwrap();
        assert_eq!(code.k(), 48);
        assert_eq!(code.encode(&[0; 48]).unwrap(), vec![0; 96]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let info: Vec<u8> = (0..48).map(|_| rng.random_range(0..2)).collect();
            let cw = code.encode(&info).unwrap();
            assert!(code.parity().is_codeword(&cw));
            assert_eq!(code.extract_info(&cw), info);
        }
    }

    #[test]
    fn alist_roundtrip() {
        let code = LdpcCode::regular(24, 3, 6, 2).unwrap();
        let back = ParityMatrix::from_alist(&code.parity().to_alist()).unwrap();
        assert_eq!(&back, code.parity());
    }

    #[test]
    fn clean_codeword_is_fixed_point() {
        let code = LdpcCode::regular(96, 3, 6, 5).unwrap();
        let llr: Vec<f64> = vec![8.0; 96];
        let out = code.decode(&llr, 10).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert!(out.bits.iter().all(|&b| b == 0));
        assert!(out.extrinsic.iter().all(|x| x.is_finite()));
    }
}
