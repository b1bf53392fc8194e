//! Block-wise OAMP detector with an LMMSE factor node, and its
//! reduced-complexity variant built on the blocks' unitary diagonalisation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::detect::gaussian::{
    combine, damped_extrinsic, gaussian_project, is_converged, BestTracker, DetectorOutput, DetectorParams,
    GaussianMsg, Likelihood, Update,
};
use crate::effective::StationaryBlocks;
use crate::error::{check_len, Error, Result};
use crate::params::Alphabet;
use crate::pmf::SymbolPmfs;

/// Precision below which an extrinsic message counts as uninformative.
const MIN_PREC: f64 = 1e-12;

/// LMMSE posterior of one block: mean `A` and diagonal of `B`.
trait LmmseStage {
    fn posterior(&self, mu: &[Complex64], eta: &[f64]) -> (Vec<Complex64>, Vec<f64>, Vec<f64>);
}

/// Exact LMMSE with the full block covariance.
struct FullLmmse {
    /// `H^H Σ^-1 H`.
    gram: DMatrix<Complex64>,
    /// `H^H Σ^-1 y`.
    matched: DVector<Complex64>,
}

impl FullLmmse {
    fn new(h: &DMatrix<Complex64>, sigma: &DMatrix<Complex64>, y: &[Complex64]) -> Result<Self> {
        let m = h.nrows();
        let yv = DVector::from_column_slice(y);
        let (si_h, si_y) = match sigma.clone().cholesky() {
            Some(ch) => (ch.solve(h), ch.solve(&yv)),
            None => {
                let lu = sigma.clone().lu();
                match (lu.solve(h), lu.solve(&yv)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        // Singular covariance: regularise with a tiny ridge.
                        let ridge = sigma.diagonal().iter().map(|z| z.re.abs()).fold(0.0, f64::max).max(1.0) * 1e-12;
                        let reg = sigma + DMatrix::<Complex64>::identity(m, m) * Complex64::new(ridge, 0.0);
                        let ch = reg
                            .cholesky()
                            .ok_or_else(|| Error::Contract("noise covariance is not positive semidefinite".into()))?;
                        (ch.solve(h), ch.solve(&yv))
                    }
                }
            }
        };
        Ok(FullLmmse {
            gram: h.adjoint() * si_h,
            matched: h.adjoint() * si_y,
        })
    }
}

impl LmmseStage for FullLmmse {
    fn posterior(&self, mu: &[Complex64], eta: &[f64]) -> (Vec<Complex64>, Vec<f64>, Vec<f64>) {
        let m = mu.len();
        let mut a = self.gram.clone();
        let mut rhs = self.matched.clone();
        for i in 0..m {
            a[(i, i)] += 1.0 / eta[i];
            rhs[i] += mu[i] / eta[i];
        }
        let b = match a.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => a.try_inverse().unwrap_or_else(|| DMatrix::identity(m, m) * Complex64::new(1e12, 0.0)),
        };
        let mean = &b * rhs;
        let bdiag = (0..m).map(|i| b[(i, i)].re).collect();
        (mean.iter().cloned().collect(), bdiag, eta.to_vec())
    }
}

/// LMMSE with `Σ ≈ σ̄ I` and prior variances `≈ η̄ I`, which the unitary
/// `U_k` diagonalises.
struct ReducedLmmse {
    u: DMatrix<Complex64>,
    /// `|H̄_r|^2`.
    gain: Vec<f64>,
    /// `H^H y`.
    hy: DVector<Complex64>,
    sigma_bar: f64,
}

impl ReducedLmmse {
    fn new(h: &DMatrix<Complex64>, freq: &[Complex64], u: DMatrix<Complex64>, sigma: &DMatrix<Complex64>, y: &[Complex64]) -> Self {
        let m = h.nrows();
        let sigma_bar = (0..m).map(|i| sigma[(i, i)].re).sum::<f64>() / m as f64;
        ReducedLmmse {
            u,
            gain: freq.iter().map(|z| z.norm_sqr()).collect(),
            hy: h.adjoint() * DVector::from_column_slice(y),
            sigma_bar,
        }
    }
}

impl LmmseStage for ReducedLmmse {
    fn posterior(&self, mu: &[Complex64], eta: &[f64]) -> (Vec<Complex64>, Vec<f64>, Vec<f64>) {
        let m = mu.len();
        let eta_bar = eta.iter().sum::<f64>() / m as f64;
        let sigma_bar = self.sigma_bar.max(f64::MIN_POSITIVE);
        let w: Vec<f64> = self
            .gain
            .iter()
            .map(|g| 1.0 / (g / sigma_bar + 1.0 / eta_bar))
            .collect();
        let v = DVector::from_fn(m, |i, _| self.hy[i] / sigma_bar + mu[i] / eta_bar);
        let mut t = &self.u * v;
        for (ti, wi) in t.iter_mut().zip(&w) {
            *ti *= *wi;
        }
        let mean = self.u.adjoint() * t;
        let b = w.iter().sum::<f64>() / m as f64;
        (mean.iter().cloned().collect(), vec![b; m], vec![eta_bar; m])
    }
}

/// The variance approximant `U^H diag(1/(|H̄|^2/σ̄ + 1/η̄)) U` of a block.
pub fn reduced_posterior_covariance(
    blocks: &StationaryBlocks,
    k: usize,
    sigma_bar: f64,
    eta_bar: f64,
) -> DMatrix<Complex64> {
    let (m, n) = (blocks.m(), blocks.n());
    let u = StationaryBlocks::unitary(m, n, k);
    let w = DVector::from_iterator(
        m,
        blocks.freq[k]
            .iter()
            .map(|z| Complex64::new(1.0 / (z.norm_sqr() / sigma_bar + 1.0 / eta_bar), 0.0)),
    );
    u.adjoint() * DMatrix::from_diagonal(&w) * u
}

struct BlockResult {
    posterior: Vec<f64>,
    extrinsic: Vec<f64>,
    alpha: Vec<f64>,
    mean_var: Vec<f64>,
    skipped: usize,
}

fn detect_block(
    stage: &dyn LmmseStage,
    priors: &SymbolPmfs,
    offset: usize,
    m: usize,
    alphabet: &Alphabet,
    params: &DetectorParams,
) -> BlockResult {
    let q = alphabet.size();
    let mut msgs: Vec<GaussianMsg> = (0..m)
        .map(|i| gaussian_project(priors.get(offset + i), alphabet, params.var_floor))
        .collect();
    let mut best = BestTracker::new();
    let mut out_post = vec![1.0 / q as f64; m * q];
    let mut out_ext = vec![1.0 / q as f64; m * q];
    let mut post = vec![0.0; m * q];
    let mut ext = vec![0.0; m * q];
    let mut alpha = Vec::new();
    let mut mean_var = Vec::new();
    let mut skipped = 0;
    for _ in 0..params.max_iter {
        let mu: Vec<Complex64> = msgs.iter().map(|g| g.mean).collect();
        let eta: Vec<f64> = msgs.iter().map(|g| g.var).collect();
        let (a, b, eta_used) = stage.posterior(&mu, &eta);
        let mut converged = 0;
        for i in 0..m {
            let prec = 1.0 / b[i] - 1.0 / eta_used[i];
            let lik = if prec > MIN_PREC && prec.is_finite() {
                Likelihood::from_var((a[i] / b[i] - mu[i] / eta_used[i]) / prec, 1.0 / prec, params.var_floor)
            } else {
                Likelihood::FLAT
            };
            let p = &mut post[i * q..(i + 1) * q];
            combine(Some(priors.get(offset + i)), std::slice::from_ref(&lik), alphabet, p);
            combine(None, std::slice::from_ref(&lik), alphabet, &mut ext[i * q..(i + 1) * q]);
            if is_converged(p, params.conv_threshold) {
                converged += 1;
            }
            let proj = gaussian_project(p, alphabet, params.var_floor);
            match damped_extrinsic(proj.mean, proj.var, &lik, &msgs[i], params) {
                Update::Applied(g) => msgs[i] = g,
                Update::Skipped => skipped += 1,
            }
        }
        let a_now = converged as f64 / m as f64;
        alpha.push(a_now);
        mean_var.push(msgs.iter().map(|g| g.var).sum::<f64>() / m as f64);
        if best.offer(a_now) {
            out_post.copy_from_slice(&post);
            out_ext.copy_from_slice(&ext);
        }
        if a_now >= 1.0 {
            break;
        }
    }
    BlockResult {
        posterior: out_post,
        extrinsic: out_ext,
        alpha,
        mean_var,
        skipped,
    }
}

fn run_blocks(
    blocks: &StationaryBlocks,
    priors: &SymbolPmfs,
    alphabet: &Alphabet,
    params: &DetectorParams,
    stage_for: impl Fn(usize) -> Result<Box<dyn LmmseStage>>,
) -> Result<DetectorOutput> {
    params.validate()?;
    let (m, n) = (blocks.m(), blocks.n());
    check_len(m * n, priors.len())?;
    check_len(alphabet.size(), priors.q())?;
    let q = alphabet.size();
    let mut post = Vec::with_capacity(m * n * q);
    let mut ext = Vec::with_capacity(m * n * q);
    let mut results = Vec::with_capacity(n);
    for k in 0..n {
        let stage = stage_for(k)?;
        let r = detect_block(stage.as_ref(), priors, k * m, m, alphabet, params);
        post.extend_from_slice(&r.posterior);
        ext.extend_from_slice(&r.extrinsic);
        results.push(r);
    }
    let iterations = results.iter().map(|r| r.alpha.len()).max().unwrap_or(0);
    let at = |v: &Vec<f64>, i: usize| v[i.min(v.len() - 1)];
    let alpha_trace = (0..iterations)
        .map(|i| results.iter().map(|r| at(&r.alpha, i)).sum::<f64>() / n as f64)
        .collect();
    let var_trace = (0..iterations)
        .map(|i| results.iter().map(|r| at(&r.mean_var, i)).sum::<f64>() / n as f64)
        .collect();
    Ok(DetectorOutput {
        posterior: SymbolPmfs::from_flat(q, post),
        extrinsic: SymbolPmfs::from_flat(q, ext),
        alpha_trace,
        var_trace,
        iterations,
        skipped_updates: results.iter().map(|r| r.skipped).sum(),
    })
}

fn block_checks(blocks: &StationaryBlocks, sigma: &[DMatrix<Complex64>], y: &[Complex64]) -> Result<()> {
    check_len(blocks.n(), sigma.len())?;
    check_len(blocks.m() * blocks.n(), y.len())?;
    for s in sigma {
        check_len(blocks.m(), s.nrows())?;
    }
    Ok(())
}

/// OAMP-LMMSE detection of the N independent `M x M` block channels.
/// `y` and `priors` are indexed by column position `k*M + l`.
pub fn oamp_lmmse_detect(
    y: &[Complex64],
    blocks: &StationaryBlocks,
    sigma: &[DMatrix<Complex64>],
    priors: &SymbolPmfs,
    alphabet: &Alphabet,
    params: &DetectorParams,
) -> Result<DetectorOutput> {
    block_checks(blocks, sigma, y)?;
    let m = blocks.m();
    run_blocks(blocks, priors, alphabet, params, |k| {
        Ok(Box::new(FullLmmse::new(&blocks.blocks[k], &sigma[k], &y[k * m..(k + 1) * m])?))
    })
}

/// OAMP-LMMSE with the scalar covariance and prior-variance approximation;
/// no matrix inversion.
pub fn r_oamp_lmmse_detect(
    y: &[Complex64],
    blocks: &StationaryBlocks,
    sigma: &[DMatrix<Complex64>],
    priors: &SymbolPmfs,
    alphabet: &Alphabet,
    params: &DetectorParams,
) -> Result<DetectorOutput> {
    block_checks(blocks, sigma, y)?;
    let (m, n) = (blocks.m(), blocks.n());
    run_blocks(blocks, priors, alphabet, params, |k| {
        Ok(Box::new(ReducedLmmse::new(
            &blocks.blocks[k],
            &blocks.freq[k],
            StationaryBlocks::unitary(m, n, k),
            &sigma[k],
            &y[k * m..(k + 1) * m],
        )))
    })
}

/// LMMSE posterior `(A, diag B)` of one block for given prior moments;
/// exposed for checking the first detector iteration.
pub fn block_lmmse(
    h: &DMatrix<Complex64>,
    sigma: &DMatrix<Complex64>,
    y: &[Complex64],
    mu: &[Complex64],
    eta: &[f64],
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let (a, b, _) = FullLmmse::new(h, sigma, y)?.posterior(mu, eta);
    Ok((a, b))
}
