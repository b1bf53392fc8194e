//! Delay-Doppler effective channel matrices: the sparse mobile matrix, the
//! block-diagonal stationary matrix, and the column-selected OBNOMA pair.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{sample_channel_taps, PathSet, SampledChannel, TapSpan};
use crate::error::{check_len, Error, Result};
use crate::params::{Group, ResourceMap, SystemConfig};
use crate::sparse::SparseChannelMatrix;

/// Relative magnitude below which mobile-matrix entries are dropped.
pub const PRUNE_TOL: f64 = 1e-6;

/// Relative magnitude below which stationary-block entries count as
/// structural zeros when converted to sparse form.
const STATIONARY_ZERO_TOL: f64 = 1e-12;

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// `sum_{n=0}^{N-1} exp(j 2 pi n (q + beta) / N)` in closed form; the
/// aligned case `(q + beta) / N` integer takes its limit `N`.
pub fn theta(q: f64, beta: f64, n: usize) -> Complex64 {
    let x = q + beta;
    let ratio = x / n as f64;
    if (ratio - ratio.round()).abs() < 1e-12 {
        return Complex64::new(n as f64, 0.0);
    }
    (cis(2.0 * PI * x) - 1.0) / (cis(2.0 * PI * ratio) - 1.0)
}

/// Splits a Doppler shift into integer and fractional bin parts,
/// `nu * N * T = k + beta` with `beta` in `[-0.5, 0.5]`.
pub fn doppler_bins(doppler: f64, config: &SystemConfig) -> (i64, f64) {
    let x = doppler * config.frame_duration();
    let k = x.round();
    (k as i64, x - k)
}

/// Delay-Doppler matrix of a (possibly time-varying) channel built from the
/// closed-form leakage kernel.
pub fn build_mobile_matrix(paths: &PathSet, config: &SystemConfig, span: TapSpan) -> Result<SparseChannelMatrix> {
    let mut h = mobile_matrix_unpruned(paths, config, span)?;
    h.prune_relative(PRUNE_TOL);
    Ok(h)
}

pub(crate) fn mobile_matrix_unpruned(
    paths: &PathSet,
    config: &SystemConfig,
    span: TapSpan,
) -> Result<SparseChannelMatrix> {
    let (m, n) = (config.m, config.n);
    let mn = m * n;
    let ts = config.sample_interval();
    let budget = span.delay_budget(ts);
    if paths.max_delay() > budget * (1.0 + 1e-9) + 1e-15 {
        return Err(Error::DelayBudget {
            delay: paths.max_delay(),
            budget,
        });
    }

    struct PathTerms {
        k_nu: i64,
        beta: f64,
        /// theta(q, beta) / N for q = 0..N.
        theta: Vec<Complex64>,
        /// h_i * P_rc per lag.
        amp: Vec<Complex64>,
    }
    let terms: Vec<PathTerms> = paths
        .paths
        .iter()
        .map(|p| {
            let (k_nu, beta) = doppler_bins(p.doppler, config);
            PathTerms {
                k_nu,
                beta,
                theta: (0..n).map(|q| theta(q as f64, beta, n) / n as f64).collect(),
                amp: span
                    .lags()
                    .map(|lag| {
                        p.gain
                            * crate::channel::sample_rc(
                                lag as f64 * ts - paths.timing_offset - p.delay,
                                config.rolloff,
                                ts,
                            )
                    })
                    .collect(),
            }
        })
        .collect();

    // Phase exp(j 2 pi w k' / N) for a block wrap of w slots.
    let wrap_phase = |w: i64, kp: usize| cis(2.0 * PI * (w * kp as i64) as f64 / n as f64);

    let mut acc = vec![Complex64::new(0.0, 0.0); mn];
    let mut touched: Vec<usize> = Vec::new();
    let mut rows = Vec::with_capacity(mn);
    for k in 0..n {
        for l in 0..m {
            for t in &terms {
                for (j, lag) in span.lags().enumerate() {
                    let a = t.amp[j];
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let diff = l as i64 - lag as i64;
                    let lp = diff.rem_euclid(m as i64) as usize;
                    let w = diff.div_euclid(m as i64);
                    let xi = cis(2.0 * PI * diff as f64 * (t.k_nu as f64 + t.beta) / mn as f64);
                    let base = a * xi;
                    for q in 0..n {
                        let kp = (k as i64 - t.k_nu + q as i64).rem_euclid(n as i64) as usize;
                        let col = kp * m + lp;
                        let v = base * t.theta[q] * wrap_phase(w, kp);
                        if acc[col] == Complex64::new(0.0, 0.0) {
                            touched.push(col);
                        }
                        acc[col] += v;
                    }
                }
            }
            let mut row = Vec::with_capacity(touched.len());
            for &col in &touched {
                row.push((col, acc[col]));
                acc[col] = Complex64::new(0.0, 0.0);
            }
            touched.clear();
            rows.push(row);
        }
    }
    SparseChannelMatrix::from_rows(mn, rows)
}

/// `F_M` with symmetric normalisation.
pub fn dft_matrix(m: usize) -> DMatrix<Complex64> {
    let s = 1.0 / (m as f64).sqrt();
    DMatrix::from_fn(m, m, |r, c| cis(-2.0 * PI * (r * c) as f64 / m as f64) * s)
}

/// The N per-slot M x M blocks of a stationary user's matrix together with
/// their frequency-domain diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryBlocks {
    pub blocks: Vec<DMatrix<Complex64>>,
    /// Diagonal of `H̄_k`: `H[k + rN]` for r = 0..M.
    pub freq: Vec<Vec<Complex64>>,
}

impl StationaryBlocks {
    pub fn m(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.nrows())
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// Unitary `U_k = F_M Λ_k`.
    pub fn unitary(m: usize, n: usize, k: usize) -> DMatrix<Complex64> {
        let f = dft_matrix(m);
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(m, |i, _| {
            cis(-2.0 * PI * (i * k) as f64 / (m * n) as f64)
        }));
        f * lam
    }

    pub fn to_sparse(&self) -> Result<SparseChannelMatrix> {
        let (m, n) = (self.m(), self.n());
        let max = self
            .blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let tol = STATIONARY_ZERO_TOL * max;
        let mut rows = vec![Vec::new(); m * n];
        for (k, b) in self.blocks.iter().enumerate() {
            for r in 0..m {
                for c in 0..m {
                    if b[(r, c)].norm() > tol {
                        rows[k * m + r].push((k * m + c, b[(r, c)]));
                    }
                }
            }
        }
        SparseChannelMatrix::from_rows(m * n, rows)
    }

    pub fn scale(&mut self, a: f64) {
        self.blocks.iter_mut().for_each(|b| *b *= Complex64::new(a, 0.0));
        self.freq.iter_mut().flatten().for_each(|z| *z *= a);
    }
}

fn static_taps(paths: &PathSet, config: &SystemConfig, span: TapSpan) -> Result<SampledChannel> {
    if !paths.is_static() {
        return Err(Error::Contract("stationary builder given a path with Doppler".into()));
    }
    sample_channel_taps(paths, config, span)
}

/// Per-slot blocks `H_k = U_k^H H̄_k U_k` of a stationary user.
pub fn build_stationary_blocks(paths: &PathSet, config: &SystemConfig, span: TapSpan) -> Result<StationaryBlocks> {
    let ch = static_taps(paths, config, span)?;
    let taps = ch.static_taps().expect("static channel");
    stationary_blocks_from_taps(taps, span, config.m, config.n)
}

pub fn stationary_blocks_from_taps(
    taps: &[Complex64],
    span: TapSpan,
    m: usize,
    n: usize,
) -> Result<StationaryBlocks> {
    check_len(span.taps(), taps.len())?;
    let mn = m * n;
    let freq_resp: Vec<Complex64> = (0..mn)
        .map(|c| {
            span.lags()
                .zip(taps)
                .map(|(p, &h)| h * cis(-2.0 * PI * (c as i64 * p as i64).rem_euclid(mn as i64) as f64 / mn as f64))
                .sum()
        })
        .collect();
    let mut blocks = Vec::with_capacity(n);
    let mut freq = Vec::with_capacity(n);
    for k in 0..n {
        let diag: Vec<Complex64> = (0..m).map(|r| freq_resp[k + r * n]).collect();
        let u = StationaryBlocks::unitary(m, n, k);
        let hbar = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
        blocks.push(u.adjoint() * hbar * &u);
        freq.push(diag);
    }
    Ok(StationaryBlocks { blocks, freq })
}

/// Dense delay-Doppler matrix of a stationary channel assembled entry by
/// entry from the per-tap cyclic delay with its slot-wrap phase.
pub fn stationary_matrix_bruteforce(paths: &PathSet, config: &SystemConfig, span: TapSpan) -> Result<DMatrix<Complex64>> {
    let ch = static_taps(paths, config, span)?;
    let taps = ch.static_taps().expect("static channel");
    let (m, n) = (config.m, config.n);
    let mut out = DMatrix::zeros(m * n, m * n);
    for k in 0..n {
        for l in 0..m {
            for (p, &h) in span.lags().zip(taps) {
                let diff = l as i64 - p as i64;
                let lp = diff.rem_euclid(m as i64) as usize;
                let wraps = diff.div_euclid(m as i64);
                // One wrap backwards gives exp(-j 2 pi k / N).
                let phase = cis(2.0 * PI * (wraps * k as i64) as f64 / n as f64);
                out[(k * m + l, k * m + lp)] += h * phase;
            }
        }
    }
    Ok(out)
}

/// Where a column of the OBNOMA matrices comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub user: usize,
    pub symbol: usize,
}

/// Column-selected effective channels of both user groups.
#[derive(Debug, Clone)]
pub struct ObnomaChannel {
    pub h_s: SparseChannelMatrix,
    /// Block view of `h_s` (block k from the owner of Doppler bin k).
    pub s_blocks: StationaryBlocks,
    pub h_m: SparseChannelMatrix,
    pub ledger_s: Vec<LedgerEntry>,
    pub ledger_m: Vec<LedgerEntry>,
}

impl ObnomaChannel {
    pub fn dim(&self) -> usize {
        self.h_s.dim()
    }

    pub fn ledger(&self, group: Group) -> &[LedgerEntry] {
        match group {
            Group::Stationary => &self.ledger_s,
            Group::Mobile => &self.ledger_m,
        }
    }

    /// Column positions of a user's symbols, in symbol order.
    pub fn user_columns(&self, group: Group, user: usize) -> Vec<usize> {
        let mut cols: Vec<(usize, usize)> = self
            .ledger(group)
            .iter()
            .enumerate()
            .filter(|(_, e)| e.user == user)
            .map(|(c, e)| (e.symbol, c))
            .collect();
        cols.sort_unstable();
        cols.into_iter().map(|(_, c)| c).collect()
    }
}

/// Selects, for every delay-Doppler position, the column of the user that
/// owns it in each group.
pub fn assemble_obnoma(
    stationary: &[StationaryBlocks],
    mobile: &[SparseChannelMatrix],
    map: &ResourceMap,
) -> Result<ObnomaChannel> {
    let (m, n) = map.dims();
    let mn = m * n;
    if stationary.len() != map.stationary_users() || mobile.len() != map.mobile_users() {
        return Err(Error::Config("user count does not match the resource map".into()));
    }
    let mut ledger_s = Vec::with_capacity(mn);
    let mut ledger_m = Vec::with_capacity(mn);
    for c in 0..mn {
        let (l, k) = (c % m, c / m);
        if let Some((user, symbol)) = map.symbol_at(Group::Stationary, l, k) {
            ledger_s.push(LedgerEntry { user, symbol });
        }
        if let Some((user, symbol)) = map.symbol_at(Group::Mobile, l, k) {
            ledger_m.push(LedgerEntry { user, symbol });
        }
    }
    let s_support = if stationary.is_empty() { mn } else { ledger_s.len() };
    let m_support = if mobile.is_empty() { mn } else { ledger_m.len() };
    if s_support != mn || m_support != mn {
        return Err(Error::Contract(format!(
            "symbol support {s_support}/{m_support} differs from MN={mn}"
        )));
    }

    let s_blocks = if stationary.is_empty() {
        StationaryBlocks {
            blocks: vec![DMatrix::zeros(m, m); n],
            freq: vec![vec![Complex64::new(0.0, 0.0); m]; n],
        }
    } else {
        let mut blocks = Vec::with_capacity(n);
        let mut freq = Vec::with_capacity(n);
        for k in 0..n {
            let (u, _) = map.doppler_owner(k).expect("partition");
            let src = &stationary[u];
            if src.n() != n || src.m() != m {
                return Err(Error::Dimension { expected: mn, actual: src.m() * src.n() });
            }
            blocks.push(src.blocks[k].clone());
            freq.push(src.freq[k].clone());
        }
        StationaryBlocks { blocks, freq }
    };
    let h_s = s_blocks.to_sparse()?;

    let h_m = if mobile.is_empty() {
        SparseChannelMatrix::from_rows(mn, vec![Vec::new(); mn])?
    } else {
        let mut rows = vec![Vec::new(); mn];
        let mut pruned = 0;
        for (v, hv) in mobile.iter().enumerate() {
            check_len(mn, hv.dim())?;
            pruned += hv.pruned;
            for (d, row) in rows.iter_mut().enumerate() {
                for e in hv.row_range(d) {
                    let c = hv.entry_col(e);
                    if ledger_m[c].user == v {
                        row.push((c, hv.entry_val(e)));
                    }
                }
            }
        }
        let mut h = SparseChannelMatrix::from_rows(mn, rows)?;
        h.pruned = pruned;
        h
    };

    Ok(ObnomaChannel {
        h_s,
        s_blocks,
        h_m,
        ledger_s,
        ledger_m,
    })
}
