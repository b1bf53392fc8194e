//! Delay-Doppler / time-frequency / time-domain transforms for OTFS with
//! rectangular pulses.
//!
//! All DFTs carry symmetric `1/sqrt(len)` scaling, so every transform here
//! is unitary.

use std::ops::{Index, IndexMut};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};

macro_rules! grid_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            rows: usize,
            cols: usize,
            data: Vec<Complex64>,
        }

        impl $name {
            pub fn zeros(rows: usize, cols: usize) -> Self {
                $name { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
            }

            /// Wraps column-stacked data (`data[col * rows + row]`).
            pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
                check_len(rows * cols, data.len())?;
                Ok($name { rows, cols, data })
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.rows, self.cols)
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn as_slice(&self) -> &[Complex64] {
                &self.data
            }

            pub fn into_vec(self) -> Vec<Complex64> {
                self.data
            }

            pub fn column(&self, c: usize) -> &[Complex64] {
                &self.data[c * self.rows..(c + 1) * self.rows]
            }

            pub fn frobenius_norm(&self) -> f64 {
                self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }
        }

        impl Index<(usize, usize)> for $name {
            type Output = Complex64;
            fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
                &self.data[c * self.rows + r]
            }
        }

        impl IndexMut<(usize, usize)> for $name {
            fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
                &mut self.data[c * self.rows + r]
            }
        }
    };
}

grid_type!(
    /// M x N delay-Doppler grid indexed `[(delay l, Doppler k)]`. The
    /// column-stacked storage is the vectorisation used by the effective
    /// channel matrices (`index = k * M + l`).
    DdGrid
);

grid_type!(
    /// M x N time-frequency grid indexed `[(subcarrier m, slot n)]`.
    TfGrid
);

/// Time-domain frame, optionally preceded by a cyclic prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub cp_len: usize,
}

impl TimeSignal {
    pub fn new(samples: Vec<Complex64>) -> Self {
        TimeSignal { samples, cp_len: 0 }
    }

    /// Samples after the cyclic prefix.
    pub fn body(&self) -> &[Complex64] {
        &self.samples[self.cp_len..]
    }
}

struct Dft {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Dft {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft {
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            scale: 1.0 / (len as f64).sqrt(),
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }
}

fn for_each_row(data: &mut [Complex64], rows: usize, cols: usize, f: impl Fn(&mut [Complex64])) {
    let mut row = vec![Complex64::new(0.0, 0.0); cols];
    for r in 0..rows {
        for c in 0..cols {
            row[c] = data[c * rows + r];
        }
        f(&mut row);
        for c in 0..cols {
            data[c * rows + r] = row[c];
        }
    }
}

/// Inverse symplectic finite Fourier transform `F_M X F_N^H`.
pub fn isfft(x: &DdGrid) -> TfGrid {
    let (m, n) = x.dims();
    let (dm, dn) = (Dft::new(m), Dft::new(n));
    let mut data = x.as_slice().to_vec();
    data.chunks_mut(m).for_each(|col| dm.forward(col));
    for_each_row(&mut data, m, n, |row| dn.inverse(row));
    TfGrid { rows: m, cols: n, data }
}

/// Symplectic finite Fourier transform `F_M^H Y F_N`.
pub fn sfft(y: &TfGrid) -> DdGrid {
    let (m, n) = y.dims();
    let (dm, dn) = (Dft::new(m), Dft::new(n));
    let mut data = y.as_slice().to_vec();
    data.chunks_mut(m).for_each(|col| dm.inverse(col));
    for_each_row(&mut data, m, n, |row| dn.forward(row));
    DdGrid { rows: m, cols: n, data }
}

/// Heisenberg transform with rectangular pulses: slot `n` becomes the
/// M-point inverse DFT of TF column `n`, occupying samples `nM..nM+M`.
pub fn heisenberg_rect(x: &TfGrid) -> TimeSignal {
    let (m, _) = x.dims();
    let dm = Dft::new(m);
    let mut samples = x.as_slice().to_vec();
    samples.chunks_mut(m).for_each(|blk| dm.inverse(blk));
    TimeSignal::new(samples)
}

/// Wigner transform with rectangular pulses (adjoint and inverse of
/// [`heisenberg_rect`]). Any cyclic prefix is skipped.
pub fn wigner_rect(r: &TimeSignal, m: usize, n: usize) -> Result<TfGrid> {
    let body = r.body();
    check_len(m * n, body.len())?;
    let dm = Dft::new(m);
    let mut data = body.to_vec();
    data.chunks_mut(m).for_each(|blk| dm.forward(blk));
    Ok(TfGrid { rows: m, cols: n, data })
}

/// Prepends the last `cp_len` samples.
pub fn add_cp(s: &TimeSignal, cp_len: usize) -> Result<TimeSignal> {
    let body = s.body();
    if cp_len > body.len() {
        return Err(Error::Config(format!(
            "cyclic prefix {cp_len} longer than frame {}",
            body.len()
        )));
    }
    let mut samples = Vec::with_capacity(body.len() + cp_len);
    samples.extend_from_slice(&body[body.len() - cp_len..]);
    samples.extend_from_slice(body);
    Ok(TimeSignal { samples, cp_len })
}

pub fn remove_cp(s: &TimeSignal) -> TimeSignal {
    TimeSignal::new(s.body().to_vec())
}

/// ISFFT, Heisenberg transform and cyclic prefix.
pub fn modulate_frame(x: &DdGrid, cp_len: usize) -> Result<TimeSignal> {
    add_cp(&heisenberg_rect(&isfft(x)), cp_len)
}

/// Cyclic-prefix removal, Wigner transform and SFFT.
pub fn demodulate_frame(r: &TimeSignal, m: usize, n: usize) -> Result<DdGrid> {
    Ok(sfft(&wigner_rect(r, m, n)?))
}
