//! Gaussian message passing with expectation-propagation projection on the
//! sparse factor graph of a channel matrix, its pruned-graph variant, and the
//! discrete message-passing baseline.

use num_complex::Complex64;

use crate::detect::gaussian::{
    combine, damped_extrinsic, gaussian_project, is_converged, BestTracker, DetectorOutput, DetectorParams,
    GaussianMsg, Likelihood, Update,
};
use crate::error::{check_len, Result};
use crate::params::Alphabet;
use crate::pmf::{softmax_in_place, SymbolPmfs};
use crate::sparse::SparseChannelMatrix;

fn checks(y: &[Complex64], h: &SparseChannelMatrix, sigma: &[f64], priors: &SymbolPmfs, alphabet: &Alphabet, params: &DetectorParams) -> Result<()> {
    params.validate()?;
    check_len(h.dim(), y.len())?;
    check_len(h.dim(), sigma.len())?;
    check_len(h.dim(), priors.len())?;
    check_len(alphabet.size(), priors.q())
}

/// Factor-to-variable messages of every edge given the current
/// variable-to-factor moments.
fn factor_messages(
    y: &[Complex64],
    h: &SparseChannelMatrix,
    sigma: &[f64],
    msgs: &[GaussianMsg],
    floor: f64,
    out: &mut [Likelihood],
) {
    for d in 0..h.dim() {
        let range = h.row_range(d);
        let mut s_mean = Complex64::new(0.0, 0.0);
        let mut s_var = 0.0;
        for e in range.clone() {
            let hv = h.entry_val(e);
            s_mean += hv * msgs[e].mean;
            s_var += hv.norm_sqr() * msgs[e].var;
        }
        for e in range {
            let hv = h.entry_val(e);
            let g = hv.norm_sqr();
            let interf = s_mean - hv * msgs[e].mean;
            let var = ((s_var - g * msgs[e].var).max(0.0) + sigma[d]) / g;
            out[e] = Likelihood::from_var((y[d] - interf) / hv, var, floor);
        }
    }
}

/// GAMP-EP detection on the sparse graph of `h`, with per-row noise
/// variances `sigma`.
pub fn gamp_ep_detect(
    y: &[Complex64],
    h: &SparseChannelMatrix,
    sigma: &[f64],
    priors: &SymbolPmfs,
    alphabet: &Alphabet,
    params: &DetectorParams,
) -> Result<DetectorOutput> {
    checks(y, h, sigma, priors, alphabet, params)?;
    let dim = h.dim();
    let q = alphabet.size();
    let prior_msgs: Vec<GaussianMsg> = priors
        .iter()
        .map(|p| gaussian_project(p, alphabet, params.var_floor))
        .collect();
    let mut msgs: Vec<GaussianMsg> = (0..h.nnz()).map(|e| prior_msgs[h.entry_col(e)]).collect();
    let mut lik = vec![Likelihood::FLAT; h.nnz()];
    let mut post = priors.as_flat().to_vec();
    let mut ext = vec![1.0 / q as f64; dim * q];
    let mut best_post = post.clone();
    let mut best_ext = ext.clone();
    let mut best = BestTracker::new();
    let mut alpha_trace = Vec::new();
    let mut var_trace = Vec::new();
    let mut skipped = 0;
    let mut col_lik = Vec::new();
    for _ in 0..params.max_iter {
        factor_messages(y, h, sigma, &msgs, params.var_floor, &mut lik);
        let mut converged = 0;
        for c in 0..dim {
            let entries = h.col_entries(c);
            let p = &mut post[c * q..(c + 1) * q];
            col_lik.clear();
            col_lik.extend(entries.iter().map(|&e| lik[e]));
            combine(Some(priors.get(c)), &col_lik, alphabet, p);
            combine(None, &col_lik, alphabet, &mut ext[c * q..(c + 1) * q]);
            if is_converged(p, params.conv_threshold) {
                converged += 1;
            }
            let proj = gaussian_project(p, alphabet, params.var_floor);
            for &e in entries {
                match damped_extrinsic(proj.mean, proj.var, &lik[e], &msgs[e], params) {
                    Update::Applied(g) => msgs[e] = g,
                    Update::Skipped => skipped += 1,
                }
            }
        }
        let a_now = converged as f64 / dim as f64;
        alpha_trace.push(a_now);
        var_trace.push(msgs.iter().map(|g| g.var).sum::<f64>() / msgs.len().max(1) as f64);
        if best.offer(a_now) {
            best_post.copy_from_slice(&post);
            best_ext.copy_from_slice(&ext);
        }
        if a_now >= 1.0 {
            break;
        }
    }
    Ok(DetectorOutput {
        posterior: SymbolPmfs::from_flat(q, best_post),
        extrinsic: SymbolPmfs::from_flat(q, best_ext),
        iterations: alpha_trace.len(),
        alpha_trace,
        var_trace,
        skipped_updates: skipped,
    })
}

/// GAMP-EP on the graph keeping only the `r` strongest edges of each
/// factor node. Pruned edges are folded into the observation as Gaussian
/// interference with the prior moments of their symbols.
pub fn r_gamp_ep_detect(
    y: &[Complex64],
    h: &SparseChannelMatrix,
    sigma: &[f64],
    priors: &SymbolPmfs,
    alphabet: &Alphabet,
    params: &DetectorParams,
    r: usize,
) -> Result<DetectorOutput> {
    checks(y, h, sigma, priors, alphabet, params)?;
    let r = r.max(1);
    if r >= h.max_row_degree() {
        return gamp_ep_detect(y, h, sigma, priors, alphabet, params);
    }
    let prior_msgs: Vec<GaussianMsg> = priors
        .iter()
        .map(|p| gaussian_project(p, alphabet, params.var_floor))
        .collect();
    let mut keep = vec![false; h.nnz()];
    let mut y2 = y.to_vec();
    let mut sigma2 = sigma.to_vec();
    let mut order = Vec::new();
    for d in 0..h.dim() {
        order.clear();
        order.extend(h.row_range(d));
        // Largest magnitude first; ties by column for determinism.
        order.sort_by(|&a, &b| {
            h.entry_val(b)
                .norm_sqr()
                .total_cmp(&h.entry_val(a).norm_sqr())
                .then(h.entry_col(a).cmp(&h.entry_col(b)))
        });
        for (rank, &e) in order.iter().enumerate() {
            if rank < r {
                keep[e] = true;
            } else {
                let g = prior_msgs[h.entry_col(e)];
                y2[d] -= h.entry_val(e) * g.mean;
                sigma2[d] += h.entry_val(e).norm_sqr() * g.var;
            }
        }
    }
    let mut pruned = h.clone();
    let mut idx = 0;
    pruned.retain(|_, _, _| {
        let k = keep[idx];
        idx += 1;
        k
    });
    gamp_ep_detect(&y2, &pruned, &sigma2, priors, alphabet, params)
}

/// Message-passing baseline: Gaussian interference approximation at the
/// factor nodes, leave-one-out discrete pmfs at the variable nodes, damping
/// applied to the pmfs.
pub fn mp_detect(
    y: &[Complex64],
    h: &SparseChannelMatrix,
    sigma: &[f64],
    priors: &SymbolPmfs,
    alphabet: &Alphabet,
    params: &DetectorParams,
) -> Result<DetectorOutput> {
    checks(y, h, sigma, priors, alphabet, params)?;
    let dim = h.dim();
    let q = alphabet.size();
    let d = params.damping;
    let mut edge_pmf: Vec<f64> = (0..h.nnz()).flat_map(|e| priors.get(h.entry_col(e)).to_vec()).collect();
    let mut msgs: Vec<GaussianMsg> = (0..h.nnz())
        .map(|e| gaussian_project(&edge_pmf[e * q..(e + 1) * q], alphabet, params.var_floor))
        .collect();
    let mut lik = vec![Likelihood::FLAT; h.nnz()];
    let mut post = priors.as_flat().to_vec();
    let mut ext = vec![1.0 / q as f64; dim * q];
    let mut best_post = post.clone();
    let mut best_ext = ext.clone();
    let mut best = BestTracker::new();
    let mut alpha_trace = Vec::new();
    let mut var_trace = Vec::new();
    let mut loo = vec![0.0; q];
    let mut total = vec![0.0; q];
    let mut col_lik = Vec::new();
    for _ in 0..params.max_iter {
        factor_messages(y, h, sigma, &msgs, params.var_floor, &mut lik);
        let mut converged = 0;
        for c in 0..dim {
            let entries = h.col_entries(c);
            col_lik.clear();
            col_lik.extend(entries.iter().map(|&e| lik[e]));
            let p = &mut post[c * q..(c + 1) * q];
            combine(Some(priors.get(c)), &col_lik, alphabet, p);
            combine(None, &col_lik, alphabet, &mut ext[c * q..(c + 1) * q]);
            if is_converged(p, params.conv_threshold) {
                converged += 1;
            }
            // Leave-one-out pmfs from the full log-domain product.
            let prior = priors.get(c);
            for (a, x) in alphabet.points().iter().enumerate() {
                total[a] = prior[a].ln() + col_lik.iter().map(|l| l.log_weight(*x)).sum::<f64>();
            }
            for (j, &e) in entries.iter().enumerate() {
                for (a, x) in alphabet.points().iter().enumerate() {
                    loo[a] = total[a] - col_lik[j].log_weight(*x);
                }
                softmax_in_place(&mut loo);
                let pe = &mut edge_pmf[e * q..(e + 1) * q];
                for (old, new) in pe.iter_mut().zip(&loo) {
                    *old = d * new + (1.0 - d) * *old;
                }
                msgs[e] = gaussian_project(pe, alphabet, params.var_floor);
            }
        }
        let a_now = converged as f64 / dim as f64;
        alpha_trace.push(a_now);
        var_trace.push(msgs.iter().map(|g| g.var).sum::<f64>() / msgs.len().max(1) as f64);
        if best.offer(a_now) {
            best_post.copy_from_slice(&post);
            best_ext.copy_from_slice(&ext);
        }
        if a_now >= 1.0 {
            break;
        }
    }
    Ok(DetectorOutput {
        posterior: SymbolPmfs::from_flat(q, best_post),
        extrinsic: SymbolPmfs::from_flat(q, best_ext),
        iterations: alpha_trace.len(),
        alpha_trace,
        var_trace,
        skipped_updates: 0,
    })
}
