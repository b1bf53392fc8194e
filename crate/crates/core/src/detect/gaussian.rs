//! Gaussian messages, detector parameters and the shared variable-node
//! machinery of the message-passing detectors.

use num_complex::Complex64;

use crate::params::Alphabet;
use crate::pmf::{softmax_in_place, SymbolPmfs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMsg {
    pub mean: Complex64,
    pub var: f64,
}

/// Iteration controls shared by all detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Damping factor δ in (0, 1].
    pub damping: f64,
    /// Smallest variance allowed anywhere.
    pub var_floor: f64,
    /// ϱ: a symbol counts as converged once its top probability is ≥ 1 - ϱ.
    pub conv_threshold: f64,
    pub max_iter: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            damping: 0.3,
            var_floor: 1e-8,
            conv_threshold: 0.1,
            max_iter: 20,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.damping > 0.0
            && self.damping <= 1.0
            && self.conv_threshold > 0.0
            && self.conv_threshold < 1.0
            && self.max_iter >= 1
            && self.var_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!("invalid detector parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    /// P(x): posterior pmf per symbol.
    pub posterior: SymbolPmfs,
    /// P_E(x): extrinsic pmf per symbol (the channel's contribution only).
    pub extrinsic: SymbolPmfs,
    /// Convergence indicator after each iteration.
    pub alpha_trace: Vec<f64>,
    /// Mean variance passed back by the variable nodes after each iteration.
    pub var_trace: Vec<f64>,
    pub iterations: usize,
    /// Variance updates skipped because they came out non-positive.
    pub skipped_updates: usize,
}

impl DetectorOutput {
    /// `iteration,alpha,mean_var` rows.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,alpha,mean_var\n");
        for (i, (a, v)) in self.alpha_trace.iter().zip(&self.var_trace).enumerate() {
            s.push_str(&format!("{},{a},{v}\n", i + 1));
        }
        s
    }
}

/// Mean and floored variance of a pmf over the alphabet.
pub fn gaussian_project(pmf: &[f64], alphabet: &Alphabet, floor: f64) -> GaussianMsg {
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    for (p, x) in pmf.iter().zip(alphabet.points()) {
        mean += x * *p;
        second += p * x.norm_sqr();
    }
    GaussianMsg {
        mean,
        var: (second - mean.norm_sqr()).max(floor),
    }
}

pub fn project_all(pmfs: &SymbolPmfs, alphabet: &Alphabet, floor: f64) -> Vec<GaussianMsg> {
    pmfs.iter().map(|p| gaussian_project(p, alphabet, floor)).collect()
}

/// Gaussian likelihood message in precision form: `exp(-prec |x - mean|^2)`.
/// `prec == 0` carries no information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Likelihood {
    pub mean: Complex64,
    pub prec: f64,
}

impl Likelihood {
    pub const FLAT: Likelihood = Likelihood {
        mean: Complex64 { re: 0.0, im: 0.0 },
        prec: 0.0,
    };

    /// Message with variance `var` floored at `floor`.
    pub fn from_var(mean: Complex64, var: f64, floor: f64) -> Self {
        if !var.is_finite() {
            return Self::FLAT;
        }
        Likelihood {
            mean,
            prec: 1.0 / var.max(floor),
        }
    }

    #[inline]
    pub fn log_weight(&self, x: Complex64) -> f64 {
        if self.prec == 0.0 {
            0.0
        } else {
            -(x - self.mean).norm_sqr() * self.prec
        }
    }
}

/// Log-space product of a prior pmf and likelihood messages.
pub(crate) fn combine(prior: Option<&[f64]>, msgs: &[Likelihood], alphabet: &Alphabet, out: &mut [f64]) {
    for (a, x) in alphabet.points().iter().enumerate() {
        let mut w = match prior {
            Some(p) => p[a].ln(),
            None => 0.0,
        };
        for l in msgs {
            w += l.log_weight(*x);
        }
        out[a] = w;
    }
    softmax_in_place(out);
}

pub(crate) fn is_converged(pmf: &[f64], conv_threshold: f64) -> bool {
    pmf.iter().cloned().fold(0.0, f64::max) >= 1.0 - conv_threshold
}

/// Outcome of the damped extrinsic update of one variable-to-factor
/// message.
pub(crate) enum Update {
    Applied(GaussianMsg),
    Skipped,
}

/// Removes `incoming` from the projected posterior `(e, f)` and damps the
/// result against the previous outgoing message.
pub(crate) fn damped_extrinsic(
    e: Complex64,
    f: f64,
    incoming: &Likelihood,
    old: &GaussianMsg,
    params: &DetectorParams,
) -> Update {
    let prec_bar = 1.0 / f - incoming.prec;
    let mp_bar = e / f - incoming.mean * incoming.prec;
    let d = params.damping;
    let prec_new = d * prec_bar + (1.0 - d) / old.var;
    let mp_new = mp_bar * d + old.mean * ((1.0 - d) / old.var);
    if !(prec_new > 0.0) || !prec_new.is_finite() || !mp_new.re.is_finite() || !mp_new.im.is_finite() {
        return Update::Skipped;
    }
    let var = (1.0 / prec_new).max(params.var_floor);
    Update::Applied(GaussianMsg {
        mean: mp_new / prec_new,
        var,
    })
}

/// Keeps the iterate with the largest convergence indicator: the first
/// iterate is always taken, later ones only on a strict increase.
pub(crate) struct BestTracker {
    pub alpha: Option<f64>,
}

impl BestTracker {
    pub fn new() -> Self {
        BestTracker { alpha: None }
    }

    pub fn offer(&mut self, alpha: f64) -> bool {
        match self.alpha {
            Some(best) if alpha <= best => false,
            _ => {
                self.alpha = Some(alpha);
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_qpsk_projects_to_unit_variance() {
        let a = Alphabet::new(4).unwrap();
        let g = gaussian_project(&[0.25; 4], &a, 1e-8);
        assert!(g.mean.norm() < 1e-15);
        assert!((g.var - 1.0).abs() < 1e-12);
        let g = gaussian_project(&[0.0, 0.0, 1.0, 0.0], &a, 1e-8);
        assert_eq!(g.mean, a.point(2));
        assert_eq!(g.var, 1e-8);
    }

    #[test]
    fn undamped_update_is_plain_extrinsic() {
        let params = DetectorParams { damping: 1.0, ..Default::default() };
        let inc = Likelihood { mean: Complex64::new(0.3, -0.1), prec: 2.0 };
        let old = GaussianMsg { mean: Complex64::new(5.0, 5.0), var: 7.0 };
        let (e, f) = (Complex64::new(0.2, 0.1), 0.25);
        let Update::Applied(m) = damped_extrinsic(e, f, &inc, &old, &params) else {
            panic!("skipped");
        };
        assert!((m.var - 1.0 / (4.0 - 2.0)).abs() < 1e-15);
        assert!((m.mean - (e / f - inc.mean * 2.0) * m.var).norm() < 1e-15);
    }

    #[test]
    fn tracker_keeps_first_and_strict_increases() {
        let mut t = BestTracker::new();
        assert!(t.offer(0.0));
        assert!(!t.offer(0.0));
        assert!(t.offer(0.5));
        assert!(!t.offer(0.4));
    }
}
