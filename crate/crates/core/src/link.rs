//! Uplink scenario: user channels, the waveform path from delay-Doppler
//! grids to the received delay-Doppler grid, and the matching effective
//! channel.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{add_awgn, transmit_through, ChannelProfile, PathSet, TapSpan, RC_SPAN};
use crate::effective::{assemble_obnoma, build_mobile_matrix, build_stationary_blocks, ObnomaChannel};
use crate::error::{check_len, Result};
use crate::modem::{demodulate_frame, modulate_frame, DdGrid, TimeSignal};
use crate::params::{Group, ResourceMap, SystemConfig};

/// Channel models of both groups and the tap span that covers them.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSetup {
    pub config: SystemConfig,
    pub map: ResourceMap,
    pub stationary: ChannelProfile,
    pub mobile: ChannelProfile,
    pub span: TapSpan,
}

impl LinkSetup {
    /// Typical-urban profiles with the mobile Doppler set by `speed_kmh`.
    pub fn new(config: SystemConfig, speed_kmh: f64) -> Result<Self> {
        let max_doppler = config.max_doppler(speed_kmh);
        Self::with_profiles(
            config,
            ChannelProfile::typical_urban(0.0),
            ChannelProfile::typical_urban(max_doppler),
        )
    }

    pub fn with_profiles(config: SystemConfig, stationary: ChannelProfile, mobile: ChannelProfile) -> Result<Self> {
        config.validate()?;
        stationary.validate()?;
        mobile.validate()?;
        let ts = config.sample_interval();
        let a = stationary.tap_span(ts);
        let b = mobile.tap_span(ts);
        let span = TapSpan {
            lead: RC_SPAN,
            max_lag: a.max_lag.max(b.max_lag),
        };
        Ok(LinkSetup {
            map: ResourceMap::allocate(&config)?,
            config,
            stationary,
            mobile,
            span,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.m * self.config.n
    }
}

/// Path sets of every user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannels {
    pub stationary: Vec<PathSet>,
    pub mobile: Vec<PathSet>,
}

impl UserChannels {
    pub fn draw<R: Rng + ?Sized>(setup: &LinkSetup, rng: &mut R) -> Result<Self> {
        let stationary = (0..setup.config.u)
            .map(|u| setup.stationary.draw(Group::Stationary, u, rng))
            .collect::<Result<_>>()?;
        let mobile = (0..setup.config.v)
            .map(|v| setup.mobile.draw(Group::Mobile, v, rng))
            .collect::<Result<_>>()?;
        Ok(UserChannels { stationary, mobile })
    }

    /// Applies `f` to every path set (e.g. a CSI perturbation).
    pub fn map_paths(&self, mut f: impl FnMut(&PathSet) -> PathSet) -> Self {
        UserChannels {
            stationary: self.stationary.iter().map(&mut f).collect(),
            mobile: self.mobile.iter().map(&mut f).collect(),
        }
    }
}

/// Effective channel with the group powers folded into the columns, so the
/// detectors work with the unit-energy alphabet.
pub fn effective_channel(setup: &LinkSetup, channels: &UserChannels) -> Result<ObnomaChannel> {
    let cfg = &setup.config;
    let stationary = channels
        .stationary
        .iter()
        .map(|p| {
            let mut b = build_stationary_blocks(p, cfg, setup.span)?;
            b.scale(cfg.p_s.sqrt());
            Ok(b)
        })
        .collect::<Result<Vec<_>>>()?;
    let mobile = channels
        .mobile
        .iter()
        .map(|p| {
            let mut h = build_mobile_matrix(p, cfg, setup.span)?;
            h.scale(cfg.p_m.sqrt());
            Ok(h)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_obnoma(&stationary, &mobile, &setup.map)
}

/// Sends every user's unit-energy delay-Doppler grid through its channel at
/// its group power, sums at the receiver, adds noise of variance
/// `noise_var` per sample and returns the received delay-Doppler grid.
pub fn receive_waveform<R: Rng + ?Sized>(
    setup: &LinkSetup,
    channels: &UserChannels,
    grids_s: &[DdGrid],
    grids_m: &[DdGrid],
    noise_var: f64,
    rng: &mut R,
) -> Result<DdGrid> {
    let cfg = &setup.config;
    check_len(channels.stationary.len(), grids_s.len())?;
    check_len(channels.mobile.len(), grids_m.len())?;
    let cp = setup.span.cp_len();
    let mut rx = vec![Complex64::new(0.0, 0.0); cfg.frame_len() + cp];
    let users = channels
        .stationary
        .iter()
        .zip(grids_s)
        .map(|(p, g)| (p, g, cfg.p_s.sqrt()))
        .chain(channels.mobile.iter().zip(grids_m).map(|(p, g)| (p, g, cfg.p_m.sqrt())));
    for (paths, grid, amp) in users {
        let scaled = DdGrid::from_vec(cfg.m, cfg.n, grid.as_slice().iter().map(|z| z * amp).collect())?;
        let tx = modulate_frame(&scaled, cp)?;
        let ch = crate::channel::sample_channel_taps(paths, cfg, setup.span)?;
        let out = transmit_through(&tx, &ch, 0.0, rng)?;
        rx.iter_mut().zip(&out.samples).for_each(|(a, b)| *a += b);
    }
    add_awgn(&mut rx, noise_var, rng);
    demodulate_frame(&TimeSignal { samples: rx, cp_len: cp }, cfg.m, cfg.n)
}

/// `H_S x_S + H_M x_M` for column-ordered symbol vectors.
pub fn receive_matrix(ch: &ObnomaChannel, x_s: &[Complex64], x_m: &[Complex64]) -> Vec<Complex64> {
    let a = ch.h_s.matvec(x_s);
    let b = ch.h_m.matvec(x_m);
    a.iter().zip(&b).map(|(p, q)| p + q).collect()
}

/// Column-ordered symbol vector of one group from per-user grids.
pub fn column_symbols(ch: &ObnomaChannel, group: Group, grids: &[DdGrid]) -> Vec<Complex64> {
    if grids.is_empty() {
        return vec![Complex64::new(0.0, 0.0); ch.dim()];
    }
    ch.ledger(group)
        .iter()
        .enumerate()
        .map(|(c, e)| grids[e.user].as_slice()[c])
        .collect()
}
