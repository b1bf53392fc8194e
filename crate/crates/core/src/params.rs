//! System configuration, modulation alphabets and the delay-Doppler
//! resource allocation shared by stationary and mobile users.

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::modem::DdGrid;

/// Link-level parameters of one simulated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Subcarriers (delay bins).
    pub m: usize,
    /// Time slots (Doppler bins).
    pub n: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Rolloff of the root-raised-cosine filters.
    pub rolloff: f64,
    /// Alphabet size.
    pub q: usize,
    /// Stationary users.
    pub u: usize,
    /// Mobile users.
    pub v: usize,
    /// Mean stationary symbol energy (linear).
    pub p_s: f64,
    /// Mean mobile symbol energy (linear).
    pub p_m: f64,
    /// Noise variance per complex sample.
    pub noise_var: f64,
    pub code_rate: f64,
    pub seed: u64,
}

impl SystemConfig {
    /// Small configuration used by tests and CI sweeps.
    pub fn desk() -> Self {
        SystemConfig {
            m: 32,
            n: 8,
            delta_f: 15e3,
            carrier_freq: 4e9,
            rolloff: 0.4,
            q: 4,
            u: 2,
            v: 2,
            p_s: 1.0,
            p_m: 1.0,
            noise_var: 0.1,
            code_rate: 0.5,
            seed: 1,
        }
    }

    /// Full-size configuration (M=128, N=32, four users per group).
    pub fn paper() -> Self {
        SystemConfig {
            m: 128,
            n: 32,
            u: 4,
            v: 4,
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::paper()),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.m == 0 || self.n == 0 {
            return fail("m and n must be at least 1");
        }
        if !(self.delta_f > 0.0) {
            return fail("delta_f must be positive");
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return fail("rolloff must lie in [0, 1]");
        }
        if self.q != 4 && self.q != 16 {
            return fail("q must be 4 or 16");
        }
        if !(self.p_s > 0.0 && self.p_m > 0.0) {
            return fail("symbol energies must be positive");
        }
        if !(self.noise_var >= 0.0) {
            return fail("noise_var must be non-negative");
        }
        if !(self.code_rate > 0.0 && self.code_rate <= 1.0) {
            return fail("code_rate must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        self.m * self.n
    }

    /// Slot duration T = 1/Δf.
    pub fn slot(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// Sample interval T_s = 1/(MΔf).
    pub fn sample_interval(&self) -> f64 {
        1.0 / (self.m as f64 * self.delta_f)
    }

    /// Frame duration NT.
    pub fn frame_duration(&self) -> f64 {
        self.n as f64 * self.slot()
    }

    pub fn bandwidth(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.q.trailing_zeros() as usize
    }

    /// Energy per information bit for a given symbol energy.
    pub fn bit_energy(&self, symbol_energy: f64) -> f64 {
        symbol_energy / (self.bits_per_symbol() as f64 * self.code_rate)
    }

    /// Sets `p_m`, `p_s` and `noise_var` from E_M/N0 and E_S/E_M in dB,
    /// keeping the mobile symbol energy at one.
    pub fn with_snr(mut self, em_n0_db: f64, es_em_db: f64) -> Self {
        self.p_m = 1.0;
        self.p_s = db_to_lin(es_em_db);
        self.noise_var = self.bit_energy(self.p_m) / db_to_lin(em_n0_db);
        self
    }

    /// Maximum Doppler for a user speed in km/h.
    pub fn max_doppler(&self, speed_kmh: f64) -> f64 {
        const SPEED_OF_LIGHT: f64 = 299_792_458.0;
        speed_kmh / 3.6 * self.carrier_freq / SPEED_OF_LIGHT
    }
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Gray-labelled square QAM constellation with unit mean energy.
///
/// `points[label]` is the point carrying the bit word `label`; bit 0 of a
/// symbol is the most significant bit of its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    points: Vec<Complex64>,
    bits: usize,
}

impl Alphabet {
    pub fn new(q: usize) -> Result<Self> {
        let points = match q {
            4 => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                (0..4)
                    .map(|label| {
                        let re = if label & 0b10 == 0 { s } else { -s };
                        let im = if label & 0b01 == 0 { s } else { -s };
                        Complex64::new(re, im)
                    })
                    .collect()
            }
            16 => {
                // Per-axis Gray PAM: 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3.
                let level = |pair: usize| match pair {
                    0b00 => 3.0,
                    0b01 => 1.0,
                    0b11 => -1.0,
                    _ => -3.0,
                };
                let scale = 1.0 / 10f64.sqrt();
                (0..16)
                    .map(|label| {
                        Complex64::new(level(label >> 2) * scale, level(label & 0b11) * scale)
                    })
                    .collect()
            }
            _ => return Err(Error::Config(format!("unsupported alphabet size {q}"))),
        };
        Ok(Alphabet {
            points,
            bits: q.trailing_zeros() as usize,
        })
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bit `j` (0 = most significant) of the label of point `label`.
    #[inline]
    pub fn bit(&self, label: usize, j: usize) -> u8 {
        ((label >> (self.bits - 1 - j)) & 1) as u8
    }

    /// Maps a bit stream (length multiple of log2 Q) onto symbol labels.
    pub fn labels_from_bits(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if !bits.len().is_multiple_of(self.bits) {
            return Err(Error::Dimension {
                expected: bits.len().div_ceil(self.bits) * self.bits,
                actual: bits.len(),
            });
        }
        Ok(bits
            .chunks(self.bits)
            .map(|word| word.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
            .collect())
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self
            .labels_from_bits(bits)?
            .into_iter()
            .map(|l| self.points[l])
            .collect())
    }

    /// Label of the nearest constellation point.
    pub fn slice(&self, x: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (x - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// User mobility class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Stationary,
    Mobile,
}

/// Disjoint contiguous Doppler-bin sets for stationary users and delay-bin
/// sets for mobile users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceMap {
    pub doppler_sets: Vec<Range<usize>>,
    pub delay_sets: Vec<Range<usize>>,
    m: usize,
    n: usize,
}

impl ResourceMap {
    /// Equal contiguous split of the Doppler axis over `U` stationary users
    /// and of the delay axis over `V` mobile users.
    pub fn allocate(config: &SystemConfig) -> Result<Self> {
        let (m, n, u, v) = (config.m, config.n, config.u, config.v);
        if u > 0 && n % u != 0 {
            return Err(Error::Config(format!("{u} stationary users do not divide N={n}")));
        }
        if v > 0 && m % v != 0 {
            return Err(Error::Config(format!("{v} mobile users do not divide M={m}")));
        }
        let split = |len: usize, users: usize| -> Vec<Range<usize>> {
            if users == 0 {
                return Vec::new();
            }
            let w = len / users;
            (0..users).map(|i| i * w..(i + 1) * w).collect()
        };
        Ok(ResourceMap {
            doppler_sets: split(n, u),
            delay_sets: split(m, v),
            m,
            n,
        })
    }

    /// Builds a map from explicit sets, checking the partition property
    /// for every group that has at least one user.
    pub fn from_sets(
        m: usize,
        n: usize,
        doppler_sets: Vec<Range<usize>>,
        delay_sets: Vec<Range<usize>>,
    ) -> Result<Self> {
        check_partition(&doppler_sets, n, "Doppler")?;
        check_partition(&delay_sets, m, "delay")?;
        Ok(ResourceMap {
            doppler_sets,
            delay_sets,
            m,
            n,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn stationary_users(&self) -> usize {
        self.doppler_sets.len()
    }

    pub fn mobile_users(&self) -> usize {
        self.delay_sets.len()
    }

    /// Symbols carried by a user.
    pub fn symbols_per_user(&self, group: Group, user: usize) -> usize {
        match group {
            Group::Stationary => self.m * self.doppler_sets[user].len(),
            Group::Mobile => self.n * self.delay_sets[user].len(),
        }
    }

    /// Owner of a Doppler bin, with the user-local bin offset.
    pub fn doppler_owner(&self, k: usize) -> Option<(usize, usize)> {
        self.doppler_sets
            .iter()
            .position(|r| r.contains(&k))
            .map(|u| (u, k - self.doppler_sets[u].start))
    }

    /// Owner of a delay bin, with the user-local bin offset.
    pub fn delay_owner(&self, l: usize) -> Option<(usize, usize)> {
        self.delay_sets
            .iter()
            .position(|r| r.contains(&l))
            .map(|v| (v, l - self.delay_sets[v].start))
    }

    /// User and symbol index occupying grid position `(l, k)` for a group.
    pub fn symbol_at(&self, group: Group, l: usize, k: usize) -> Option<(usize, usize)> {
        match group {
            Group::Stationary => self
                .doppler_owner(k)
                .map(|(u, ku)| (u, ku * self.m + l)),
            Group::Mobile => self.delay_owner(l).map(|(v, lv)| (v, lv * self.n + k)),
        }
    }

    /// Grid position `(l, k)` of a user's symbol.
    pub fn position_of(&self, group: Group, user: usize, index: usize) -> (usize, usize) {
        match group {
            Group::Stationary => {
                let (ku, l) = (index / self.m, index % self.m);
                (l, self.doppler_sets[user].start + ku)
            }
            Group::Mobile => {
                let (lv, k) = (index / self.n, index % self.n);
                (self.delay_sets[user].start + lv, k)
            }
        }
    }

    /// Places one user's symbols on an otherwise empty grid.
    pub fn place_symbols(&self, group: Group, user: usize, symbols: &[Complex64]) -> Result<DdGrid> {
        check_len(self.symbols_per_user(group, user), symbols.len())?;
        let mut grid = DdGrid::zeros(self.m, self.n);
        for (i, &s) in symbols.iter().enumerate() {
            let (l, k) = self.position_of(group, user, i);
            grid[(l, k)] = s;
        }
        Ok(grid)
    }

    /// Inverse of [`ResourceMap::place_symbols`].
    pub fn extract_symbols(&self, group: Group, user: usize, grid: &DdGrid) -> Result<Vec<Complex64>> {
        check_len(self.m * self.n, grid.len())?;
        Ok((0..self.symbols_per_user(group, user))
            .map(|i| grid[self.position_of(group, user, i)])
            .collect())
    }
}

fn check_partition(sets: &[Range<usize>], len: usize, axis: &str) -> Result<()> {
    if sets.is_empty() {
        return Ok(());
    }
    let mut seen = vec![false; len];
    for r in sets {
        if r.end > len {
            return Err(Error::Config(format!("{axis} set {r:?} exceeds axis length {len}")));
        }
        for i in r.clone() {
            if seen[i] {
                return Err(Error::Config(format!("{axis} sets overlap at bin {i}")));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Config(format!("{axis} sets do not cover the axis")));
    }
    Ok(())
}
