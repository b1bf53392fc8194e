//! Iterative SIC turbo receiver: stationary detection, mobile detection,
//! and per-user LDPC decoding exchanging extrinsic information.

use num_complex::Complex64;

use crate::coding::{demap_llr, map_pmf, Interleaver, LdpcCode};
use crate::detect::{
    cancel_interference, gamp_ep_detect, mp_detect, oamp_lmmse_detect, project_all, r_gamp_ep_detect,
    r_oamp_lmmse_detect, Covariance, CovarianceForm, DetectorOutput, DetectorParams, GaussianMsg,
};
use crate::effective::ObnomaChannel;
use crate::error::{check_len, Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::link::LinkSetup;
use crate::params::{Alphabet, Group};
use crate::pmf::SymbolPmfs;

/// Default number of BP iterations per decoding.
pub const BP_ITERS: usize = 100;

/// LDPC code, alphabet and per-user interleavers shared by transmitter and
/// receiver.
#[derive(Debug, Clone)]
pub struct CodingSetup {
    pub code: LdpcCode,
    pub alphabet: Alphabet,
    pub stationary: Vec<Interleaver>,
    pub mobile: Vec<Interleaver>,
}

impl CodingSetup {
    /// A (3,6)-regular code whose length fills one user's symbols.
    pub fn new(setup: &LinkSetup, seed: u64) -> Result<Self> {
        let cfg = &setup.config;
        let alphabet = Alphabet::new(cfg.q)?;
        let r = alphabet.bits_per_symbol();
        let mut lengths = (0..cfg.u)
            .map(|u| setup.map.symbols_per_user(Group::Stationary, u) * r)
            .chain((0..cfg.v).map(|v| setup.map.symbols_per_user(Group::Mobile, v) * r));
        let n = lengths.next().ok_or_else(|| Error::Config("no users".into()))?;
        if lengths.any(|l| l != n) {
            return Err(Error::Config("users must carry equal codeword lengths".into()));
        }
        let code = LdpcCode::regular(n, 3, 6, crate::coding::interleave::mix_seed(seed ^ 0x4C44_5043))?;
        if (code.rate() - cfg.code_rate).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "code rate {} differs from configured {}",
                code.rate(),
                cfg.code_rate
            )));
        }
        Ok(CodingSetup {
            stationary: (0..cfg.u).map(|u| Interleaver::for_user(n, seed, Group::Stationary, u)).collect(),
            mobile: (0..cfg.v).map(|v| Interleaver::for_user(n, seed, Group::Mobile, v)).collect(),
            code,
            alphabet,
        })
    }

    pub fn interleaver(&self, group: Group, user: usize) -> &Interleaver {
        match group {
            Group::Stationary => &self.stationary[user],
            Group::Mobile => &self.mobile[user],
        }
    }

    pub fn users(&self, group: Group) -> usize {
        match group {
            Group::Stationary => self.stationary.len(),
            Group::Mobile => self.mobile.len(),
        }
    }

    /// Info bits to symbol labels: encode, interleave, map.
    pub fn transmit_labels(&self, group: Group, user: usize, info: &[u8]) -> Result<(Vec<u8>, Vec<usize>)> {
        let cw = self.code.encode(info)?;
        let il = self.interleaver(group, user).interleave(&cw)?;
        Ok((cw, self.alphabet.labels_from_bits(&il)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryDetector {
    OampLmmse,
    ROampLmmse,
    Mp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobileDetector {
    GampEp,
    /// Keeps this many edges per factor node.
    RGampEp(usize),
    Mp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboConfig {
    pub outer_iters: usize,
    pub stationary_params: DetectorParams,
    pub mobile_params: DetectorParams,
    pub stationary_detector: StationaryDetector,
    pub mobile_detector: MobileDetector,
    pub bp_iters: usize,
    /// Cancel the other group with its true symbols.
    pub perfect_sic: bool,
    /// Feed the detectors point-mass priors on the true symbols.
    pub perfect_prior: bool,
    pub exec: ExecMode,
}

impl Default for TurboConfig {
    fn default() -> Self {
        TurboConfig {
            outer_iters: 4,
            stationary_params: DetectorParams::default(),
            mobile_params: DetectorParams::default(),
            stationary_detector: StationaryDetector::OampLmmse,
            mobile_detector: MobileDetector::GampEp,
            bp_iters: BP_ITERS,
            perfect_sic: false,
            perfect_prior: false,
            exec: ExecMode::Sequential,
        }
    }
}

/// What was actually sent, for diagnostics and genie modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    /// Column-ordered symbol labels of each group.
    pub labels_s: Vec<usize>,
    pub labels_m: Vec<usize>,
    pub info_s: Vec<Vec<u8>>,
    pub info_m: Vec<Vec<u8>>,
    /// Codewords before interleaving.
    pub coded_s: Vec<Vec<u8>>,
    pub coded_m: Vec<Vec<u8>>,
}

impl Truth {
    fn info(&self, group: Group) -> &[Vec<u8>] {
        match group {
            Group::Stationary => &self.info_s,
            Group::Mobile => &self.info_m,
        }
    }

    fn coded(&self, group: Group) -> &[Vec<u8>] {
        match group {
            Group::Stationary => &self.coded_s,
            Group::Mobile => &self.coded_m,
        }
    }
}

/// Bit-level mutual information of one group at one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupMi {
    /// A-priori information entering the detector.
    pub detector_in: f64,
    /// Extrinsic information leaving the detector.
    pub detector_out: f64,
    /// Extrinsic information leaving the decoders.
    pub decoder_out: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationStats {
    /// Info-bit error rate per user (empty without truth).
    pub ber_s: Vec<f64>,
    pub ber_m: Vec<f64>,
    pub alpha_s: Vec<f64>,
    pub alpha_m: Vec<f64>,
    pub skipped_s: usize,
    pub skipped_m: usize,
    pub decoder_converged_s: Vec<bool>,
    pub decoder_converged_m: Vec<bool>,
    pub mi_s: Option<GroupMi>,
    pub mi_m: Option<GroupMi>,
}

impl IterationStats {
    pub fn group_ber(&self, group: Group) -> Option<f64> {
        let v = match group {
            Group::Stationary => &self.ber_s,
            Group::Mobile => &self.ber_m,
        };
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TurboDiagnostics {
    pub iterations: Vec<IterationStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboOutput {
    pub decoded_s: Vec<Vec<u8>>,
    pub decoded_m: Vec<Vec<u8>>,
    pub diagnostics: TurboDiagnostics,
}

/// Symbol-level inputs the receiver works on.
pub struct ReceiverInput<'a> {
    pub y: &'a [Complex64],
    /// Channel known at the receiver.
    pub channel: &'a ObnomaChannel,
    pub noise_var: f64,
}

/// `1 - E[log2(1 + exp(-(1-2b) L))]`, clamped to `[0, 1]`.
pub fn estimate_mi(llrs: &[f64], bits: &[u8]) -> f64 {
    assert_eq!(llrs.len(), bits.len(), "llr and bit lengths differ");
    if llrs.is_empty() {
        return 0.0;
    }
    let loss: f64 = llrs
        .iter()
        .zip(bits)
        .map(|(&l, &b)| {
            let s = if b == 0 { l } else { -l };
            // log2(1 + e^{-s}) without overflow.
            if s > 0.0 {
                (-s).exp().ln_1p()
            } else {
                -s + s.exp().ln_1p()
            }
        })
        .sum::<f64>()
        / std::f64::consts::LN_2;
    (1.0 - loss / llrs.len() as f64).clamp(0.0, 1.0)
}

/// Detector priors of one user from decoder extrinsic LLRs in code order.
pub fn feedback_priors(ext: &[f64], il: &Interleaver, alphabet: &Alphabet) -> Result<SymbolPmfs> {
    map_pmf(&il.interleave(ext)?, alphabet)
}

/// Result of one SIC detection pass (stationary then mobile).
pub struct DetectionPass {
    pub stationary: Option<DetectorOutput>,
    pub mobile: Option<DetectorOutput>,
}

/// Runs the stationary detector (mobile group cancelled with its prior
/// moments) and then the mobile detector (stationary group cancelled with
/// the stationary posterior moments).
pub fn detection_pass(
    input: &ReceiverInput,
    priors_s: &SymbolPmfs,
    priors_m: &SymbolPmfs,
    alphabet: &Alphabet,
    cfg: &TurboConfig,
    truth: Option<&Truth>,
) -> Result<DetectionPass> {
    let ch = input.channel;
    let dim = ch.dim();
    let floor = cfg.stationary_params.var_floor;
    let exact = |labels: &[usize]| -> Vec<GaussianMsg> {
        labels
            .iter()
            .map(|&l| GaussianMsg { mean: alphabet.point(l), var: 0.0 })
            .collect()
    };
    let has_s = !ch.ledger_s.is_empty();
    let has_m = !ch.ledger_m.is_empty();

    let stationary = if has_s {
        let mobile_msgs = match (cfg.perfect_sic, truth, has_m) {
            (_, _, false) => vec![GaussianMsg { mean: Complex64::new(0.0, 0.0), var: 0.0 }; dim],
            (true, Some(t), true) => exact(&t.labels_m),
            (true, None, true) => return Err(Error::Config("perfect SIC needs the transmitted symbols".into())),
            (false, _, true) => project_all(priors_m, alphabet, cfg.mobile_params.var_floor),
        };
        let m = ch.s_blocks.m();
        let (res, cov) = cancel_interference(input.y, &ch.h_m, &mobile_msgs, input.noise_var, CovarianceForm::Blocks(m))?;
        let Covariance::Blocks(blocks) = cov else { unreachable!() };
        let p = &cfg.stationary_params;
        Some(match cfg.stationary_detector {
            StationaryDetector::OampLmmse => oamp_lmmse_detect(&res, &ch.s_blocks, &blocks, priors_s, alphabet, p)?,
            StationaryDetector::ROampLmmse => r_oamp_lmmse_detect(&res, &ch.s_blocks, &blocks, priors_s, alphabet, p)?,
            StationaryDetector::Mp => {
                let diag = Covariance::Blocks(blocks).diagonal();
                mp_detect(&res, &ch.h_s, &diag, priors_s, alphabet, p)?
            }
        })
    } else {
        None
    };

    let mobile = if has_m {
        let stat_msgs = match (&stationary, cfg.perfect_sic, truth) {
            (None, _, _) => vec![GaussianMsg { mean: Complex64::new(0.0, 0.0), var: 0.0 }; dim],
            (Some(_), true, Some(t)) => exact(&t.labels_s),
            (Some(_), true, None) => return Err(Error::Config("perfect SIC needs the transmitted symbols".into())),
            (Some(out), false, _) => project_all(&out.posterior, alphabet, floor),
        };
        let (res, cov) = cancel_interference(input.y, &ch.h_s, &stat_msgs, input.noise_var, CovarianceForm::Diagonal)?;
        let diag = cov.diagonal();
        let p = &cfg.mobile_params;
        Some(match cfg.mobile_detector {
            MobileDetector::GampEp => gamp_ep_detect(&res, &ch.h_m, &diag, priors_m, alphabet, p)?,
            MobileDetector::RGampEp(r) => r_gamp_ep_detect(&res, &ch.h_m, &diag, priors_m, alphabet, p, r)?,
            MobileDetector::Mp => mp_detect(&res, &ch.h_m, &diag, priors_m, alphabet, p)?,
        })
    } else {
        None
    };
    Ok(DetectionPass { stationary, mobile })
}

struct UserDecode {
    info: Vec<u8>,
    /// Decoder extrinsic LLRs in code order.
    ext: Vec<f64>,
    /// Detector extrinsic LLRs in code order.
    det_llr: Vec<f64>,
    converged: bool,
}

fn decode_group(
    group: Group,
    ext_pmfs: &SymbolPmfs,
    ch: &ObnomaChannel,
    coding: &CodingSetup,
    cfg: &TurboConfig,
) -> Result<Vec<UserDecode>> {
    let users = coding.users(group);
    let results = map_indexed(cfg.exec, users, |u| -> Result<UserDecode> {
        let cols = ch.user_columns(group, u);
        let llr = demap_llr(&ext_pmfs.select(&cols), &coding.alphabet)?;
        let il = coding.interleaver(group, u);
        let det_llr = il.deinterleave(&llr)?;
        let out = coding.code.decode(&det_llr, cfg.bp_iters)?;
        Ok(UserDecode {
            info: coding.code.extract_info(&out.bits),
            ext: out.extrinsic,
            det_llr,
            converged: out.converged,
        })
    });
    results.into_iter().collect()
}

fn priors_from_decodes(
    group: Group,
    decodes: &[UserDecode],
    ch: &ObnomaChannel,
    coding: &CodingSetup,
    priors: &mut SymbolPmfs,
) -> Result<()> {
    for (u, d) in decodes.iter().enumerate() {
        let p = feedback_priors(&d.ext, coding.interleaver(group, u), &coding.alphabet)?;
        priors.scatter(&ch.user_columns(group, u), &p);
    }
    Ok(())
}

fn group_mi(decodes: &[UserDecode], prior_llrs: &[Vec<f64>], coded: &[Vec<u8>]) -> GroupMi {
    let n = decodes.len().max(1) as f64;
    let mut mi = GroupMi::default();
    for (u, d) in decodes.iter().enumerate() {
        mi.detector_out += estimate_mi(&d.det_llr, &coded[u]) / n;
        mi.decoder_out += estimate_mi(&d.ext, &coded[u]) / n;
        mi.detector_in += match prior_llrs.get(u) {
            Some(l) if !l.is_empty() => estimate_mi(l, &coded[u]) / n,
            _ => 0.0,
        };
    }
    mi
}

fn ber(decoded: &[u8], truth: &[u8]) -> f64 {
    let errs = decoded.iter().zip(truth).filter(|(a, b)| a != b).count();
    errs as f64 / truth.len().max(1) as f64
}

/// Runs the full turbo loop for `cfg.outer_iters` outer iterations.
pub fn run_turbo(
    input: &ReceiverInput,
    coding: &CodingSetup,
    cfg: &TurboConfig,
    truth: Option<&Truth>,
) -> Result<TurboOutput> {
    if cfg.outer_iters == 0 {
        return Err(Error::Config("at least one outer iteration is required".into()));
    }
    let ch = input.channel;
    let dim = ch.dim();
    check_len(dim, input.y.len())?;
    let q = coding.alphabet.size();
    let mut priors_s = SymbolPmfs::uniform(dim, q);
    let mut priors_m = SymbolPmfs::uniform(dim, q);
    if cfg.perfect_prior {
        let t = truth.ok_or_else(|| Error::Config("perfect priors need the transmitted symbols".into()))?;
        priors_s = SymbolPmfs::deltas(&t.labels_s, q);
        priors_m = SymbolPmfs::deltas(&t.labels_m, q);
        if ch.ledger_s.is_empty() {
            priors_s = SymbolPmfs::uniform(dim, q);
        }
        if ch.ledger_m.is_empty() {
            priors_m = SymbolPmfs::uniform(dim, q);
        }
    }
    let mut prior_llr_s: Vec<Vec<f64>> = vec![Vec::new(); coding.users(Group::Stationary)];
    let mut prior_llr_m: Vec<Vec<f64>> = vec![Vec::new(); coding.users(Group::Mobile)];
    let mut diagnostics = TurboDiagnostics::default();
    let mut decoded_s = Vec::new();
    let mut decoded_m = Vec::new();
    for _ in 0..cfg.outer_iters {
        let pass = detection_pass(input, &priors_s, &priors_m, &coding.alphabet, cfg, truth)?;
        let mut stats = IterationStats::default();
        for (group, out) in [(Group::Stationary, &pass.stationary), (Group::Mobile, &pass.mobile)] {
            let Some(out) = out else { continue };
            let decodes = decode_group(group, &out.extrinsic, ch, coding, cfg)?;
            let (prior_llr, priors) = match group {
                Group::Stationary => (&mut prior_llr_s, &mut priors_s),
                Group::Mobile => (&mut prior_llr_m, &mut priors_m),
            };
            if let Some(t) = truth {
                let bers = decodes.iter().zip(t.info(group)).map(|(d, i)| ber(&d.info, i)).collect();
                let mi = group_mi(&decodes, prior_llr, t.coded(group));
                match group {
                    Group::Stationary => {
                        stats.ber_s = bers;
                        stats.mi_s = Some(mi);
                    }
                    Group::Mobile => {
                        stats.ber_m = bers;
                        stats.mi_m = Some(mi);
                    }
                }
            }
            if !cfg.perfect_prior {
                priors_from_decodes(group, &decodes, ch, coding, priors)?;
            }
            for (u, d) in decodes.iter().enumerate() {
                prior_llr[u] = d.ext.clone();
            }
            let converged = decodes.iter().map(|d| d.converged).collect();
            let info = decodes.into_iter().map(|d| d.info).collect();
            match group {
                Group::Stationary => {
                    stats.alpha_s = out.alpha_trace.clone();
                    stats.skipped_s = out.skipped_updates;
                    stats.decoder_converged_s = converged;
                    decoded_s = info;
                }
                Group::Mobile => {
                    stats.alpha_m = out.alpha_trace.clone();
                    stats.skipped_m = out.skipped_updates;
                    stats.decoder_converged_m = converged;
                    decoded_m = info;
                }
            }
        }
        diagnostics.iterations.push(stats);
    }
    Ok(TurboOutput {
        decoded_s,
        decoded_m,
        diagnostics,
    })
}
