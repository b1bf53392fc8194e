//! One coded uplink frame end to end: data, encoding, waveform, channel,
//! receiver CSI and the turbo receiver.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::perturb_csi;
use crate::coding::interleave::mix_seed;
use crate::error::Result;
use crate::link::{effective_channel, receive_waveform, LinkSetup, UserChannels};
use crate::effective::ObnomaChannel;
use crate::params::{Group, SystemConfig};
use crate::turbo::{run_turbo, CodingSetup, ReceiverInput, TurboConfig, TurboOutput, Truth};

/// Mobile user speed of the default scenario.
pub const DEFAULT_SPEED_KMH: f64 = 300.0;

/// Seeds of the independent random streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    /// Channels, data and noise.
    pub scenario: u64,
    /// Receiver-side CSI errors.
    pub csi: u64,
}

impl TrialSeeds {
    /// Streams of trial `trial` under `seed`. Sweep points that share a
    /// seed see the same channels, data and unit-variance noise draws.
    pub fn derive(seed: u64, trial: u64) -> Self {
        let base = mix_seed(mix_seed(seed) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03));
        TrialSeeds {
            scenario: mix_seed(base ^ 0x5343_454E),
            csi: mix_seed(base ^ 0x4353_4921),
        }
    }
}

/// Fixed link, code and interleavers; trials only differ in their seeds.
#[derive(Debug, Clone)]
pub struct LinkSimulator {
    pub setup: LinkSetup,
    pub coding: CodingSetup,
}

/// Per-iteration group BERs of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub ber_s: Vec<f64>,
    pub ber_m: Vec<f64>,
    pub output: TurboOutput,
}

impl TrialResult {
    pub fn final_ber(&self, group: Group) -> f64 {
        let v = match group {
            Group::Stationary => &self.ber_s,
            Group::Mobile => &self.ber_m,
        };
        v.last().copied().unwrap_or(0.0)
    }
}

impl LinkSimulator {
    pub fn new(config: SystemConfig, speed_kmh: f64) -> Result<Self> {
        let setup = LinkSetup::new(config, speed_kmh)?;
        let coding = CodingSetup::new(&setup, setup.config.seed)?;
        Ok(LinkSimulator { setup, coding })
    }

    /// Same code and interleavers, different SNR/power operating point.
    pub fn with_config(&self, config: SystemConfig) -> Result<Self> {
        config.validate()?;
        Ok(LinkSimulator {
            setup: LinkSetup {
                config,
                ..self.setup.clone()
            },
            coding: self.coding.clone(),
        })
    }

    /// Draws one received frame and the CSI the receiver works with.
    /// `csi_eps` is the relative CSI error bound.
    pub fn draw_frame(&self, csi_eps: f64, seeds: TrialSeeds) -> Result<Frame> {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.scenario);
        let setup = &self.setup;
        let coding = &self.coding;
        let channels = UserChannels::draw(setup, &mut rng)?;
        let k = coding.code.k();

        let mut truth = Truth {
            labels_s: Vec::new(),
            labels_m: Vec::new(),
            info_s: Vec::new(),
            info_m: Vec::new(),
            coded_s: Vec::new(),
            coded_m: Vec::new(),
        };
        let mut grids = [Vec::new(), Vec::new()];
        for (gi, group) in [Group::Stationary, Group::Mobile].into_iter().enumerate() {
            for user in 0..coding.users(group) {
                let info: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
                let (cw, labels) = coding.transmit_labels(group, user, &info)?;
                let symbols: Vec<_> = labels.iter().map(|&l| coding.alphabet.point(l)).collect();
                grids[gi].push(setup.map.place_symbols(group, user, &symbols)?);
                place_labels(setup, group, user, &labels, &mut truth);
                match group {
                    Group::Stationary => {
                        truth.info_s.push(info);
                        truth.coded_s.push(cw);
                    }
                    Group::Mobile => {
                        truth.info_m.push(info);
                        truth.coded_m.push(cw);
                    }
                }
            }
        }
        let [grids_s, grids_m] = grids;
        let noise_var = setup.config.noise_var;
        let y = receive_waveform(setup, &channels, &grids_s, &grids_m, noise_var, &mut rng)?;

        let mut csi_rng = ChaCha8Rng::seed_from_u64(seeds.csi);
        let known = if csi_eps > 0.0 {
            channels.map_paths(|p| perturb_csi(p, csi_eps, &mut csi_rng))
        } else {
            channels
        };
        Ok(Frame {
            y: y.into_vec(),
            channel: effective_channel(setup, &known)?,
            noise_var,
            truth,
        })
    }

    /// Runs one frame through the turbo receiver.
    pub fn run_trial(&self, turbo: &TurboConfig, csi_eps: f64, seeds: TrialSeeds) -> Result<TrialResult> {
        let frame = self.draw_frame(csi_eps, seeds)?;
        let output = run_turbo(&frame.input(), &self.coding, turbo, Some(&frame.truth))?;
        let per_iter = |g: Group| -> Vec<f64> {
            output
                .diagnostics
                .iterations
                .iter()
                .filter_map(|s| s.group_ber(g))
                .collect()
        };
        Ok(TrialResult {
            ber_s: per_iter(Group::Stationary),
            ber_m: per_iter(Group::Mobile),
            output,
        })
    }
}

/// A received frame with the receiver's channel knowledge and the truth.
#[derive(Debug, Clone)]
pub struct Frame {
    pub y: Vec<Complex64>,
    pub channel: ObnomaChannel,
    pub noise_var: f64,
    pub truth: Truth,
}

impl Frame {
    pub fn input(&self) -> ReceiverInput<'_> {
        ReceiverInput {
            y: &self.y,
            channel: &self.channel,
            noise_var: self.noise_var,
        }
    }
}

/// Writes a user's labels into the column-ordered truth vector.
fn place_labels(setup: &LinkSetup, group: Group, user: usize, labels: &[usize], truth: &mut Truth) {
    let (m, n) = setup.map.dims();
    let v = match group {
        Group::Stationary => &mut truth.labels_s,
        Group::Mobile => &mut truth.labels_m,
    };
    if v.is_empty() {
        v.resize(m * n, 0);
    }
    for (i, &l) in labels.iter().enumerate() {
        let (dl, dk) = setup.map.position_of(group, user, i);
        v[dk * m + dl] = l;
    }
}
