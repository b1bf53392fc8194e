//! Quick invariant checks run by `obnoma selftest`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::mi::{estimate_mi, generate_apriori_llrs};
use crate::channel::complex_gaussian;
use crate::coding::{demap_llr, map_pmf, Interleaver, LdpcCode};
use crate::detect::{map_oracle, oamp_lmmse_detect, DetectorParams};
use crate::effective::{build_mobile_matrix, build_stationary_blocks, stationary_matrix_bruteforce, StationaryBlocks};
use crate::link::{column_symbols, effective_channel, receive_matrix, receive_waveform, LinkSetup, UserChannels};
use crate::modem::{demodulate_frame, isfft, modulate_frame, sfft, DdGrid};
use crate::params::{Alphabet, Group, SystemConfig};
use crate::pmf::SymbolPmfs;

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> SelfCheck {
    SelfCheck {
        name,
        passed: value.is_finite() && value <= limit,
        detail: format!("{value:.3e} (limit {limit:.0e})"),
    }
}

fn small() -> SystemConfig {
    SystemConfig {
        m: 8,
        n: 4,
        ..SystemConfig::desk()
    }
}

fn random_grid(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DdGrid {
    DdGrid::from_vec(m, n, (0..m * n).map(|_| complex_gaussian(rng)).collect()).expect("grid size")
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn transforms(rng: &mut ChaCha8Rng) -> SelfCheck {
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = random_grid(rng, 8, 4);
        worst = worst.max(max_diff(sfft(&isfft(&x)).as_slice(), x.as_slice()));
        let s = modulate_frame(&x, 3).expect("modulate");
        let back = demodulate_frame(&s, 8, 4).expect("demodulate");
        worst = worst.max(max_diff(back.as_slice(), x.as_slice()));
    }
    check("transform loopback", worst, 1e-12)
}

fn effective(rng: &mut ChaCha8Rng) -> crate::Result<SelfCheck> {
    let config = SystemConfig { u: 2, v: 2, ..small() };
    let setup = LinkSetup::new(config, 300.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let channels = UserChannels::draw(&setup, rng)?;
        let grids = |group: Group, count: usize, rng: &mut ChaCha8Rng| -> crate::Result<Vec<DdGrid>> {
            (0..count)
                .map(|u| {
                    let s: Vec<Complex64> = (0..setup.map.symbols_per_user(group, u)).map(|_| complex_gaussian(rng)).collect();
                    setup.map.place_symbols(group, u, &s)
                })
                .collect()
        };
        let gs = grids(Group::Stationary, 2, rng)?;
        let gm = grids(Group::Mobile, 2, rng)?;
        let y = receive_waveform(&setup, &channels, &gs, &gm, 0.0, rng)?;
        let ch = effective_channel(&setup, &channels)?;
        let y_mat = receive_matrix(&ch, &column_symbols(&ch, Group::Stationary, &gs), &column_symbols(&ch, Group::Mobile, &gm));
        worst = worst.max(rel_err(&y_mat, y.as_slice()));
    }
    Ok(check("effective channel vs waveform", worst, 1e-6))
}

fn block_diagonal(rng: &mut ChaCha8Rng) -> crate::Result<[SelfCheck; 2]> {
    let config = small();
    let setup = LinkSetup::new(SystemConfig { u: 1, v: 1, ..config.clone() }, 0.0)?;
    let (mut worst, mut worst_mobile): (f64, f64) = (0.0, 0.0);
    for _ in 0..5 {
        let paths = setup.stationary.draw(Group::Stationary, 0, rng)?;
        let brute = stationary_matrix_bruteforce(&paths, &config, setup.span)?;
        let blocks = build_stationary_blocks(&paths, &config, setup.span)?.to_sparse()?.to_dense();
        let mobile = build_mobile_matrix(&paths, &config, setup.span)?.to_dense();
        let scale = brute.norm().max(1.0);
        worst = worst.max((&blocks - &brute).norm() / scale);
        worst_mobile = worst_mobile.max((&mobile - &brute).norm() / scale);
    }
    Ok([
        check("block-diagonal stationary channel", worst, 1e-10),
        check("mobile builder at zero Doppler", worst_mobile, 1e-6),
    ])
}

fn detector_vs_map(rng: &mut ChaCha8Rng) -> crate::Result<SelfCheck> {
    let alphabet = Alphabet::new(4)?;
    let noise: f64 = 0.1;
    let mut tv = 0.0;
    let trials = 20;
    for _ in 0..trials {
        let h = DMatrix::from_fn(4, 4, |_, _| complex_gaussian(rng) * 0.5);
        let blocks = StationaryBlocks {
            blocks: vec![h.clone()],
            freq: vec![Vec::new()],
        };
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..4)).collect();
        let x: Vec<Complex64> = labels.iter().map(|&l| alphabet.point(l)).collect();
        let y: Vec<Complex64> = (0..4)
            .map(|r| (0..4).map(|c| h[(r, c)] * x[c]).sum::<Complex64>() + complex_gaussian(rng) * noise.sqrt())
            .collect();
        let sigma = DMatrix::from_diagonal_element(4, 4, Complex64::new(noise, 0.0));
        let priors = SymbolPmfs::uniform(4, 4);
        let exact = map_oracle(&y, &h, &priors, &sigma, &alphabet)?;
        let out = oamp_lmmse_detect(&y, &blocks, &[sigma], &priors, &alphabet, &DetectorParams::default())?;
        tv += out.posterior.mean_tv(&exact) / trials as f64;
    }
    Ok(check("OAMP-LMMSE vs exhaustive MAP (mean TV)", tv, 0.1))
}

fn coding(rng: &mut ChaCha8Rng) -> crate::Result<Vec<SelfCheck>> {
    let code = LdpcCode::regular(512, 3, 6, 7)?;
    let girth = code.parity().girth().unwrap_or(usize::MAX);
    let mut failures = 0;
    for _ in 0..10 {
        let mut llr = vec![4.0; 512];
        let a = rng.random_range(0..512);
        let b = (a + rng.random_range(1..512)) % 512;
        llr[a] = -4.0;
        llr[b] = -4.0;
        if code.decode(&llr, 100)?.bits.iter().any(|&x| x != 0) {
            failures += 1;
        }
    }
    let il = Interleaver::new(512, rng.random());
    let seq: Vec<usize> = (0..512).collect();
    let round = il.deinterleave(&il.interleave(&seq)?)? == seq;
    let alphabet = Alphabet::new(4)?;
    let llrs: Vec<f64> = (0..64).map(|_| rng.random_range(-8.0..8.0)).collect();
    let back = demap_llr(&map_pmf(&llrs, &alphabet)?, &alphabet)?;
    let demap = llrs.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(vec![
        SelfCheck {
            name: "PEG (3,6) girth at n=512",
            passed: girth >= 6,
            detail: format!("girth {girth}"),
        },
        SelfCheck {
            name: "BP corrects 2-bit flips",
            passed: failures == 0,
            detail: format!("{failures} failures in 10"),
        },
        SelfCheck {
            name: "interleaver round trip",
            passed: round,
            detail: String::new(),
        },
        check("symbol map/demap round trip", demap, 1e-9),
    ])
}

fn mi_closure(rng: &mut ChaCha8Rng) -> SelfCheck {
    let bits: Vec<u8> = (0..20_000).map(|_| rng.random_range(0..2u8)).collect();
    let worst = (1..10)
        .map(|i| {
            let target = i as f64 / 10.0;
            (estimate_mi(&generate_apriori_llrs(&bits, target, rng), &bits) - target).abs()
        })
        .fold(0.0, f64::max);
    check("MI generator/estimator closure", worst, 0.02)
}

/// Runs every check with a fixed seed.
pub fn run_selftest() -> crate::Result<Vec<SelfCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5E1F);
    let mut out = vec![transforms(&mut rng), effective(&mut rng)?];
    out.extend(block_diagonal(&mut rng)?);
    out.push(detector_vs_map(&mut rng)?);
    out.extend(coding(&mut rng)?);
    out.push(mi_closure(&mut rng));
    Ok(out)
}
