//! Mutual information of consistent Gaussian LLRs and synthetic a-priori
//! LLR generation for EXIT measurements.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;

pub use crate::turbo::estimate_mi;

/// Largest LLR standard deviation the inverse of [`j_function`] returns.
pub const SIGMA_CAP: f64 = 20.0;
const INVERSE_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-10;

/// `J(σ)`: mutual information between a bit and an LLR distributed as
/// `N(σ²/2, σ²)` given the bit is 0.
pub fn j_function(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let mu = sigma * sigma / 2.0;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let f = |x: f64| {
        let z = (x - mu) / sigma;
        let loss = if x > 0.0 { (-x).exp().ln_1p() } else { -x + x.exp().ln_1p() };
        norm * (-0.5 * z * z).exp() * loss
    };
    let (a, b) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
    let loss = adaptive_simpson(&f, a, b, QUAD_TOL, 40) / std::f64::consts::LN_2;
    (1.0 - loss).clamp(0.0, 1.0)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, fc: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
}

fn inverse_cache() -> &'static Mutex<HashMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `σ` with `J(σ) = target`, by bisection on `[0, SIGMA_CAP]`.
pub fn j_inverse(target: f64) -> f64 {
    let target = target.clamp(0.0, 1.0);
    if target == 0.0 {
        return 0.0;
    }
    if let Some(&s) = inverse_cache().lock().expect("cache poisoned").get(&target.to_bits()) {
        return s;
    }
    let (mut lo, mut hi) = (0.0, SIGMA_CAP);
    if j_function(hi) <= target {
        lo = hi;
    }
    while hi - lo > INVERSE_TOL {
        let mid = 0.5 * (lo + hi);
        if j_function(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    inverse_cache().lock().expect("cache poisoned").insert(target.to_bits(), s);
    s
}

/// Consistent Gaussian LLRs `(1-2b)σ²/2 + σz` carrying `target_i` bits of
/// information about `bits`.
pub fn generate_apriori_llrs<R: Rng + ?Sized>(bits: &[u8], target_i: f64, rng: &mut R) -> Vec<f64> {
    let sigma = j_inverse(target_i);
    if sigma == 0.0 {
        return vec![0.0; bits.len()];
    }
    let mu = sigma * sigma / 2.0;
    bits.iter()
        .map(|&b| {
            let z: f64 = rng.sample(StandardNormal);
            let s = if b == 0 { mu } else { -mu };
            s + sigma * z
        })
        .collect()
}
