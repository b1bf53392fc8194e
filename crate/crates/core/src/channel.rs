//! Random multipath channels: exponential power-delay profile with Jakes
//! Doppler, raised-cosine tap sampling, time-domain application, AWGN and
//! norm-bounded CSI perturbation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modem::TimeSignal;
use crate::params::{Group, SystemConfig};

/// One-sided raised-cosine span kept when sampling taps, in samples.
pub const RC_SPAN: usize = 4;

/// Raised-cosine pulse (the cascade of two root-raised-cosine filters).
pub fn sample_rc(t: f64, rolloff: f64, ts: f64) -> f64 {
    let x = t / ts;
    let sinc = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
    if rolloff == 0.0 {
        return sinc;
    }
    let denom = 1.0 - (2.0 * rolloff * x).powi(2);
    if denom.abs() < 1e-10 {
        // Limit at |t| = T_s / (2 rolloff).
        let y = 1.0 / (2.0 * rolloff);
        let sinc_y = (PI * y).sin() / (PI * y);
        return PI / 4.0 * sinc_y;
    }
    sinc * (PI * rolloff * x).cos() / denom
}

/// A propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Hz.
    pub doppler: f64,
}

/// Paths of one user's channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
    /// Timing offset in seconds, added to every path delay.
    pub timing_offset: f64,
    pub group: Group,
    pub user: usize,
}

#[derive(Serialize, Deserialize)]
struct PathRecord {
    gain_re: f64,
    gain_im: f64,
    delay: f64,
    doppler: f64,
}

#[derive(Serialize, Deserialize)]
struct PathSetRecord {
    group: Group,
    user: usize,
    timing_offset: f64,
    paths: Vec<PathRecord>,
}

impl PathSet {
    /// Single path with the given parameters, owned by user 0.
    pub fn single(gain: Complex64, delay: f64, doppler: f64) -> Self {
        let group = if doppler == 0.0 { Group::Stationary } else { Group::Mobile };
        PathSet {
            paths: vec![Path { gain, delay, doppler }],
            timing_offset: 0.0,
            group,
            user: 0,
        }
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max) + self.timing_offset
    }

    pub fn is_static(&self) -> bool {
        self.paths.iter().all(|p| p.doppler == 0.0)
    }

    pub fn to_json(&self) -> String {
        let rec = PathSetRecord {
            group: self.group,
            user: self.user,
            timing_offset: self.timing_offset,
            paths: self
                .paths
                .iter()
                .map(|p| PathRecord {
                    gain_re: p.gain.re,
                    gain_im: p.gain.im,
                    delay: p.delay,
                    doppler: p.doppler,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&rec).expect("path records serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: PathSetRecord =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(PathSet {
            group: rec.group,
            user: rec.user,
            timing_offset: rec.timing_offset,
            paths: rec
                .paths
                .into_iter()
                .map(|p| Path {
                    gain: Complex64::new(p.gain_re, p.gain_im),
                    delay: p.delay,
                    doppler: p.doppler,
                })
                .collect(),
        })
    }
}

/// Statistical description of a user channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelProfile {
    pub num_paths: usize,
    /// Largest path delay in seconds.
    pub max_delay: f64,
    /// Exponential power-delay decay constant in seconds.
    pub decay: f64,
    /// Largest Doppler shift in Hz (ignored for stationary users).
    pub max_doppler: f64,
    pub timing_offset: f64,
}

impl ChannelProfile {
    /// Exponential-PDP typical-urban stand-in: six paths within 5 us.
    pub fn typical_urban(max_doppler: f64) -> Self {
        ChannelProfile {
            num_paths: 6,
            max_delay: 5e-6,
            decay: 1e-6,
            max_doppler,
            timing_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(Error::Config("channel needs at least one path".into()));
        }
        if !(self.max_delay > 0.0 && self.decay > 0.0) {
            return Err(Error::Config("max_delay and decay must be positive".into()));
        }
        if !(self.max_doppler >= 0.0 && self.timing_offset >= 0.0) {
            return Err(Error::Config("max_doppler and timing_offset must be non-negative".into()));
        }
        Ok(())
    }

    /// Tap range covering the profile's delay budget plus the RC span.
    pub fn tap_span(&self, ts: f64) -> TapSpan {
        let spread = ((self.timing_offset + self.max_delay) / ts - 1e-9).ceil().max(0.0) as usize;
        TapSpan {
            lead: RC_SPAN,
            max_lag: spread + RC_SPAN,
        }
    }

    /// Draws one realisation.
    pub fn draw<R: Rng + ?Sized>(&self, group: Group, user: usize, rng: &mut R) -> Result<PathSet> {
        self.validate()?;
        let delays: Vec<f64> = (0..self.num_paths)
            .map(|_| rng.random::<f64>() * self.max_delay)
            .collect();
        let weights: Vec<f64> = delays.iter().map(|d| (-d / self.decay).exp()).collect();
        let total: f64 = weights.iter().sum();
        let paths = delays
            .iter()
            .zip(&weights)
            .map(|(&delay, &w)| {
                let power = w / total;
                let gain = complex_gaussian(rng) * power.sqrt();
                let doppler = match group {
                    Group::Stationary => 0.0,
                    Group::Mobile => {
                        let rho: f64 = rng.random_range(-PI..=PI);
                        self.max_doppler * rho.cos()
                    }
                };
                Path { gain, delay, doppler }
            })
            .collect();
        Ok(PathSet {
            paths,
            timing_offset: self.timing_offset,
            group,
            user,
        })
    }
}

/// Unit-variance circular complex Gaussian sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [Complex64], noise_var: f64, rng: &mut R) {
    if noise_var == 0.0 {
        return;
    }
    let s = noise_var.sqrt();
    for z in samples {
        *z += complex_gaussian(rng) * s;
    }
}

/// Range of tap lags `-lead ..= max_lag` (in samples). Negative lags hold
/// the raised-cosine precursor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapSpan {
    pub lead: usize,
    pub max_lag: usize,
}

impl TapSpan {
    pub fn taps(&self) -> usize {
        self.lead + self.max_lag + 1
    }

    pub fn lags(&self) -> impl Iterator<Item = isize> {
        -(self.lead as isize)..=self.max_lag as isize
    }

    /// Cyclic prefix that absorbs every positive lag.
    pub fn cp_len(&self) -> usize {
        self.max_lag
    }

    /// Largest path delay (plus timing offset) the span can hold with the
    /// pulse tail truncated as symmetrically as the precursor.
    pub fn delay_budget(&self, ts: f64) -> f64 {
        self.max_lag.saturating_sub(self.lead) as f64 * ts
    }
}

/// Sampled channel `h[c, p]`: one row of taps per sample for mobile
/// users, a single shared row for stationary users.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledChannel {
    pub span: TapSpan,
    frame_len: usize,
    time_varying: bool,
    taps: Vec<Complex64>,
}

impl SampledChannel {
    /// Builds a channel directly from stationary taps (lag `-lead` first).
    pub fn from_static_taps(span: TapSpan, frame_len: usize, taps: Vec<Complex64>) -> Result<Self> {
        crate::error::check_len(span.taps(), taps.len())?;
        Ok(SampledChannel {
            span,
            frame_len,
            time_varying: false,
            taps,
        })
    }

    pub fn is_time_varying(&self) -> bool {
        self.time_varying
    }

    /// Tap at sample `c` and lag `p`.
    #[inline]
    pub fn tap(&self, c: usize, p: isize) -> Complex64 {
        let j = (p + self.span.lead as isize) as usize;
        if self.time_varying {
            self.taps[c * self.span.taps() + j]
        } else {
            self.taps[j]
        }
    }

    /// Stationary taps `h[p]`, lag `-lead` first.
    pub fn static_taps(&self) -> Option<&[Complex64]> {
        (!self.time_varying).then_some(&self.taps[..])
    }
}

/// Samples `h[c,p] = sum_i h_i exp(j 2 pi nu_i (c - p) T_s) P_rc(p T_s - t - tau_i)`.
pub fn sample_channel_taps(paths: &PathSet, config: &SystemConfig, span: TapSpan) -> Result<SampledChannel> {
    let ts = config.sample_interval();
    let budget = span.delay_budget(ts);
    for p in &paths.paths {
        let d = p.delay + paths.timing_offset;
        if d > budget * (1.0 + 1e-9) + 1e-15 {
            return Err(Error::DelayBudget { delay: d, budget });
        }
    }
    let frame_len = config.frame_len();
    let ntaps = span.taps();
    let pulse: Vec<Vec<f64>> = paths
        .paths
        .iter()
        .map(|path| {
            span.lags()
                .map(|p| sample_rc(p as f64 * ts - paths.timing_offset - path.delay, config.rolloff, ts))
                .collect()
        })
        .collect();

    if paths.is_static() {
        let mut taps = vec![Complex64::new(0.0, 0.0); ntaps];
        for (path, w) in paths.paths.iter().zip(&pulse) {
            for (t, &g) in taps.iter_mut().zip(w) {
                *t += path.gain * g;
            }
        }
        return Ok(SampledChannel {
            span,
            frame_len,
            time_varying: false,
            taps,
        });
    }

    let mut taps = vec![Complex64::new(0.0, 0.0); frame_len * ntaps];
    for (path, w) in paths.paths.iter().zip(&pulse) {
        let step = 2.0 * PI * path.doppler * ts;
        for c in 0..frame_len {
            let row = &mut taps[c * ntaps..(c + 1) * ntaps];
            for (j, p) in span.lags().enumerate() {
                let phase = step * (c as f64 - p as f64);
                row[j] += path.gain * w[j] * Complex64::from_polar(1.0, phase);
            }
        }
    }
    Ok(SampledChannel {
        span,
        frame_len,
        time_varying: true,
        taps,
    })
}

/// Convolves a CP-prefixed frame with a time-varying channel and adds
/// white noise. The output keeps the input's cyclic prefix.
///
/// Negative (precursor) lags read samples beyond the end of the frame; these
/// wrap to the frame start, which is the same as a cyclic suffix of `lead`
/// samples.
pub fn transmit_through<R: Rng + ?Sized>(
    s: &TimeSignal,
    ch: &SampledChannel,
    noise_var: f64,
    rng: &mut R,
) -> Result<TimeSignal> {
    let cp = s.cp_len;
    let frame = s.samples.len() - cp;
    crate::error::check_len(ch.frame_len, frame)?;
    if cp < ch.span.max_lag {
        return Err(Error::CpTooShort {
            cp,
            needed: ch.span.max_lag,
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); s.samples.len()];
    for (t, o) in out.iter_mut().enumerate().skip(cp) {
        let c = t - cp;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in ch.span.lags() {
            let src = t as isize - p;
            let x = if src >= s.samples.len() as isize {
                s.samples[cp + (src as usize - cp) % frame]
            } else {
                s.samples[src as usize]
            };
            acc += ch.tap(c, p) * x;
        }
        *o = acc;
    }
    add_awgn(&mut out, noise_var, rng);
    Ok(TimeSignal { samples: out, cp_len: cp })
}

/// Draws norm-bounded perturbations: every gain, delay and Doppler moves by
/// at most `eps` times its own magnitude, uniformly within that bound.
pub fn perturb_csi<R: Rng + ?Sized>(paths: &PathSet, eps: f64, rng: &mut R) -> PathSet {
    let mut out = paths.clone();
    if eps == 0.0 {
        return out;
    }
    for p in &mut out.paths {
        let radius = eps * p.gain.norm() * rng.random::<f64>().sqrt();
        let angle = rng.random_range(-PI..PI);
        p.gain += Complex64::from_polar(radius, angle);
        p.delay += eps * p.delay * rng.random_range(-1.0..=1.0);
        p.doppler += eps * p.doppler * rng.random_range(-1.0..=1.0);
    }
    out
}
