//! Customized EXIT charts: detector transfer curves at fixed cross-group
//! a-priori information, the decoder transfer curve and the measured turbo
//! trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::mi::{estimate_mi, generate_apriori_llrs};
use crate::coding::demap_llr;
use crate::coding::interleave::mix_seed;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::params::Group;
use crate::pmf::SymbolPmfs;
use crate::sim::{Frame, LinkSimulator, TrialSeeds};
use crate::turbo::{detection_pass, feedback_priors, run_turbo, CodingSetup, TurboConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    DetectorStationary,
    DetectorMobile,
    Decoder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSample {
    pub i_in: f64,
    pub i_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitCurve {
    pub kind: CurveKind,
    /// A-priori information of the other group, for detector curves.
    pub fixed_other: Option<f64>,
    pub samples: Vec<ExitSample>,
}

impl ExitCurve {
    /// Piecewise-linear value at `x`, constant beyond the end samples.
    pub fn eval(&self, x: f64) -> f64 {
        let s = &self.samples;
        match s.len() {
            0 => 0.0,
            1 => s[0].i_out,
            _ => {
                if x <= s[0].i_in {
                    return s[0].i_out;
                }
                for w in s.windows(2) {
                    if x <= w[1].i_in {
                        let t = (x - w[0].i_in) / (w[1].i_in - w[0].i_in);
                        return w[0].i_out + t * (w[1].i_out - w[0].i_out);
                    }
                }
                s[s.len() - 1].i_out
            }
        }
    }
}

/// Group-averaged information at one outer iteration of a turbo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub detector_in: f64,
    pub detector_out: f64,
    pub decoder_out: f64,
    /// Detector a-priori information of the other group.
    pub other_in: f64,
    /// Mean over frames of the detector output minus the detector curve
    /// at that frame's inputs.
    pub detector_gap: f64,
    /// Mean over frames of the decoder output minus the decoder curve at
    /// that frame's decoder input.
    pub decoder_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitChart {
    pub group: Group,
    pub detector: Vec<ExitCurve>,
    pub decoder: ExitCurve,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Flat CSV row of a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitRow {
    pub series: String,
    pub fixed_other: Option<f64>,
    pub iteration: Option<usize>,
    pub i_in: f64,
    pub i_out: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitSettings {
    pub i_grid: Vec<f64>,
    pub fixed_other: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub turbo: TurboConfig,
    pub exec: ExecMode,
}

impl Default for ExitSettings {
    fn default() -> Self {
        ExitSettings {
            i_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            fixed_other: vec![0.0, 0.5, 1.0],
            trials: 20,
            seed: 1,
            turbo: TurboConfig::default(),
            exec: ExecMode::Parallel,
        }
    }
}

impl ExitChart {
    /// Detector transfer value, interpolated linearly in the other group's
    /// a-priori information between the measured curves.
    pub fn detector_transfer(&self, i_in: f64, other_in: f64) -> f64 {
        transfer(&self.detector, i_in, other_in)
    }

    /// Largest amount by which the trajectory rises above the detector
    /// curve or runs past the decoder curve (0 when it stays inside).
    /// Gaps are taken frame by frame before averaging, each frame's
    /// trajectory against that frame's own detector curves, so channel
    /// fading does not bias the comparison.
    pub fn trajectory_excess(&self) -> f64 {
        self.trajectory
            .iter()
            .map(|p| p.detector_gap.max(p.decoder_gap))
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<ExitRow> {
        let curve_rows = |c: &ExitCurve| {
            let name = match c.kind {
                CurveKind::DetectorStationary => "detector-stationary",
                CurveKind::DetectorMobile => "detector-mobile",
                CurveKind::Decoder => "decoder",
            };
            c.samples
                .iter()
                .map(|s| ExitRow {
                    series: name.into(),
                    fixed_other: c.fixed_other,
                    iteration: None,
                    i_in: s.i_in,
                    i_out: s.i_out,
                })
                .collect::<Vec<_>>()
        };
        let mut rows: Vec<ExitRow> = self.detector.iter().flat_map(curve_rows).collect();
        rows.extend(curve_rows(&self.decoder));
        for p in &self.trajectory {
            rows.push(ExitRow {
                series: "trajectory-detector".into(),
                fixed_other: Some(p.other_in),
                iteration: Some(p.iteration),
                i_in: p.detector_in,
                i_out: p.detector_out,
            });
            rows.push(ExitRow {
                series: "trajectory-decoder".into(),
                fixed_other: None,
                iteration: Some(p.iteration),
                i_in: p.detector_out,
                i_out: p.decoder_out,
            });
        }
        rows
    }
}

/// Interpolates linearly in the other group's a-priori information
/// between curves measured at fixed values of it.
fn transfer(detector: &[ExitCurve], i_in: f64, other_in: f64) -> f64 {
    let mut curves: Vec<&ExitCurve> = detector.iter().collect();
        curves.sort_by(|a, b| a.fixed_other.unwrap_or(0.0).total_cmp(&b.fixed_other.unwrap_or(0.0)));
        let Some(first) = curves.first() else { return 0.0 };
        let f = |c: &ExitCurve| c.fixed_other.unwrap_or(0.0);
        if curves.len() == 1 || other_in <= f(first) {
            return first.eval(i_in);
        }
        for w in curves.windows(2) {
            if other_in <= f(w[1]) {
                let t = (other_in - f(w[0])) / (f(w[1]) - f(w[0]));
                return (1.0 - t) * w[0].eval(i_in) + t * w[1].eval(i_in);
            }
        }
        curves[curves.len() - 1].eval(i_in)
}

/// Decoder transfer resolution. Decoding is cheap next to detection, and
/// the waterfall is too steep for the detector grid.
const DECODER_STEPS: usize = 50;
const DECODER_TRIALS: usize = 100;

fn other(group: Group) -> Group {
    match group {
        Group::Stationary => Group::Mobile,
        Group::Mobile => Group::Stationary,
    }
}

fn coded(frame: &Frame, group: Group) -> &[Vec<u8>] {
    match group {
        Group::Stationary => &frame.truth.coded_s,
        Group::Mobile => &frame.truth.coded_m,
    }
}

/// Detector priors of a whole group from Gaussian a-priori LLRs at `i`.
fn synthetic_priors<R: Rng>(frame: &Frame, coding: &CodingSetup, group: Group, i: f64, rng: &mut R) -> Result<SymbolPmfs> {
    let mut priors = SymbolPmfs::uniform(frame.channel.dim(), coding.alphabet.size());
    for (u, cw) in coded(frame, group).iter().enumerate() {
        let llr = generate_apriori_llrs(cw, i, rng);
        let p = feedback_priors(&llr, coding.interleaver(group, u), &coding.alphabet)?;
        priors.scatter(&frame.channel.user_columns(group, u), &p);
    }
    Ok(priors)
}

/// Extrinsic information of `group` after one detection pass with
/// synthetic priors at `i_in` for the group and `i_other` for the other.
pub fn detector_transfer_point<R: Rng>(
    frame: &Frame,
    coding: &CodingSetup,
    group: Group,
    i_in: f64,
    i_other: f64,
    turbo: &TurboConfig,
    rng: &mut R,
) -> Result<f64> {
    let own = synthetic_priors(frame, coding, group, i_in, rng)?;
    let oth = synthetic_priors(frame, coding, other(group), i_other, rng)?;
    let (ps, pm) = match group {
        Group::Stationary => (own, oth),
        Group::Mobile => (oth, own),
    };
    let pass = detection_pass(&frame.input(), &ps, &pm, &coding.alphabet, turbo, Some(&frame.truth))?;
    let out = match group {
        Group::Stationary => pass.stationary,
        Group::Mobile => pass.mobile,
    }
    .ok_or_else(|| Error::Config("group has no users".into()))?;
    let cws = coded(frame, group);
    let mut mi = 0.0;
    for (u, cw) in cws.iter().enumerate() {
        let cols = frame.channel.user_columns(group, u);
        let llr = demap_llr(&out.extrinsic.select(&cols), &coding.alphabet)?;
        let llr = coding.interleaver(group, u).deinterleave(&llr)?;
        mi += estimate_mi(&llr, cw) / cws.len() as f64;
    }
    Ok(mi)
}

/// Decoder extrinsic information for Gaussian input LLRs at each `i_grid`
/// value, averaged over `trials` random codewords.
pub fn decoder_curve(coding: &CodingSetup, i_grid: &[f64], trials: usize, bp_iters: usize, seed: u64, exec: ExecMode) -> Result<ExitCurve> {
    let code = &coding.code;
    let per_trial = map_indexed(exec, trials, |t| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed ^ 0x4445_434F) ^ t as u64);
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let cw = code.encode(&info)?;
        i_grid
            .iter()
            .map(|&i| {
                let llr = generate_apriori_llrs(&cw, i, &mut rng);
                let out = code.decode(&llr, bp_iters)?;
                Ok(estimate_mi(&out.extrinsic, &cw))
            })
            .collect()
    });
    let per_trial: Vec<Vec<f64>> = per_trial.into_iter().collect::<Result<_>>()?;
    Ok(ExitCurve {
        kind: CurveKind::Decoder,
        fixed_other: None,
        samples: average(i_grid, &per_trial),
    })
}

fn average(i_grid: &[f64], per_trial: &[Vec<f64>]) -> Vec<ExitSample> {
    let n = per_trial.len().max(1) as f64;
    i_grid
        .iter()
        .enumerate()
        .map(|(j, &i_in)| ExitSample {
            i_in,
            i_out: per_trial.iter().map(|v| v[j]).sum::<f64>() / n,
        })
        .collect()
}

/// Detector curves for `group` (one per fixed other-group value), the
/// decoder curve, and the turbo trajectory averaged over the same frames.
pub fn exit_chart(sim: &LinkSimulator, group: Group, settings: &ExitSettings) -> Result<ExitChart> {
    if settings.trials == 0 || settings.i_grid.is_empty() {
        return Err(Error::Config("EXIT chart needs trials and an information grid".into()));
    }
    if settings.i_grid.iter().chain(&settings.fixed_other).any(|i| !(0.0..=1.0).contains(i)) {
        return Err(Error::Config("information values must lie in [0, 1]".into()));
    }
    let coding = &sim.coding;
    let turbo = &settings.turbo;
    let points: Vec<(f64, f64)> = settings
        .fixed_other
        .iter()
        .flat_map(|&f| settings.i_grid.iter().map(move |&i| (f, i)))
        .collect();
    type TrialOut = (Vec<f64>, Vec<[f64; 4]>);
    let per_trial = map_indexed(settings.exec, settings.trials, |t| -> Result<TrialOut> {
        let frame = sim.draw_frame(0.0, TrialSeeds::derive(settings.seed, t as u64))?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(settings.seed ^ 0x4558_4954) ^ t as u64);
        let curve = points
            .iter()
            .map(|&(f, i)| detector_transfer_point(&frame, coding, group, i, f, turbo, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let run = run_turbo(&frame.input(), coding, turbo, Some(&frame.truth))?;
        let traj = run
            .diagnostics
            .iterations
            .iter()
            .map(|s| {
                let (own, oth) = match group {
                    Group::Stationary => (s.mi_s, s.mi_m),
                    Group::Mobile => (s.mi_m, s.mi_s),
                };
                let own = own.unwrap_or_default();
                [own.detector_in, own.detector_out, own.decoder_out, oth.unwrap_or_default().detector_in]
            })
            .collect();
        Ok((curve, traj))
    });
    let per_trial: Vec<TrialOut> = per_trial.into_iter().collect::<Result<_>>()?;
    let n = per_trial.len() as f64;
    let g = settings.i_grid.len();
    let kind = match group {
        Group::Stationary => CurveKind::DetectorStationary,
        Group::Mobile => CurveKind::DetectorMobile,
    };
    let curves_of = |value: &dyn Fn(usize) -> f64| -> Vec<ExitCurve> {
        settings
            .fixed_other
            .iter()
            .enumerate()
            .map(|(fi, &f)| ExitCurve {
                kind,
                fixed_other: Some(f),
                samples: settings
                    .i_grid
                    .iter()
                    .enumerate()
                    .map(|(j, &i_in)| ExitSample { i_in, i_out: value(fi * g + j) })
                    .collect(),
            })
            .collect()
    };
    let detector = curves_of(&|k| per_trial.iter().map(|(c, _)| c[k]).sum::<f64>() / n);
    let own_curves: Vec<Vec<ExitCurve>> = per_trial.iter().map(|(c, _)| curves_of(&|k| c[k])).collect();
    let fine: Vec<f64> = (0..=DECODER_STEPS).map(|i| i as f64 / DECODER_STEPS as f64).collect();
    let decoder = decoder_curve(
        coding,
        &fine,
        settings.trials.max(DECODER_TRIALS),
        turbo.bp_iters,
        settings.seed,
        settings.exec,
    )?;
    let mut chart = ExitChart {
        group,
        detector,
        decoder,
        trajectory: Vec::new(),
    };
    let iters = per_trial[0].1.len();
    chart.trajectory = (0..iters)
        .map(|it| {
            let mean = |f: &dyn Fn(&[f64; 4]) -> f64| per_trial.iter().map(|(_, tr)| f(&tr[it])).sum::<f64>() / n;
            let detector_gap = per_trial
                .iter()
                .zip(&own_curves)
                .map(|((_, tr), own)| tr[it][1] - transfer(own, tr[it][0], tr[it][3]))
                .sum::<f64>()
                / n;
            TrajectoryPoint {
                iteration: it + 1,
                detector_in: mean(&|p| p[0]),
                detector_out: mean(&|p| p[1]),
                decoder_out: mean(&|p| p[2]),
                other_in: mean(&|p| p[3]),
                detector_gap,
                decoder_gap: mean(&|p| p[2] - chart.decoder.eval(p[1])),
            }
        })
        .collect();
    Ok(chart)
}
