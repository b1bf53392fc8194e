use obnoma::analysis::sweep::{point_trials, SweepPoint};
use obnoma::exec::ExecMode;
use obnoma::params::{Group, SystemConfig};
use obnoma::sim::{LinkSimulator, TrialSeeds, DEFAULT_SPEED_KMH};
use obnoma::turbo::{run_turbo, MobileDetector, StationaryDetector, TurboConfig};

fn desk(em_n0_db: f64) -> LinkSimulator {
    LinkSimulator::new(SystemConfig::desk().with_snr(em_n0_db, 5.0), DEFAULT_SPEED_KMH).unwrap()
}

#[test]
fn perfect_priors_decode_every_user() {
    let sim = desk(10.0);
    let turbo = TurboConfig {
        perfect_prior: true,
        outer_iters: 1,
        ..TurboConfig::default()
    };
    for t in 0..3 {
        let frame = sim.draw_frame(0.0, TrialSeeds::derive(21, t)).unwrap();
        let out = run_turbo(&frame.input(), &sim.coding, &turbo, Some(&frame.truth)).unwrap();
        assert_eq!(out.decoded_s, frame.truth.info_s);
        assert_eq!(out.decoded_m, frame.truth.info_m);
    }
}

#[test]
fn single_group_frames_decode_at_high_snr() {
    for (u, v) in [(2, 0), (0, 2)] {
        let config = SystemConfig { u, v, ..SystemConfig::desk() }.with_snr(15.0, 0.0);
        let sim = LinkSimulator::new(config, DEFAULT_SPEED_KMH).unwrap();
        for t in 0..3 {
            let r = sim.run_trial(&TurboConfig::default(), 0.0, TrialSeeds::derive(22, t)).unwrap();
            if u > 0 {
                assert_eq!(r.final_ber(Group::Stationary), 0.0, "stationary trial {t}");
            }
            if v > 0 {
                assert_eq!(r.final_ber(Group::Mobile), 0.0, "mobile trial {t}");
            }
        }
    }
}

#[test]
fn trials_are_reproducible() {
    let sim = desk(2.0);
    let turbo = TurboConfig {
        outer_iters: 2,
        ..TurboConfig::default()
    };
    let seeds = TrialSeeds::derive(23, 4);
    let a = sim.run_trial(&turbo, 0.05, seeds).unwrap();
    let b = sim.run_trial(&turbo, 0.05, seeds).unwrap();
    assert_eq!(a, b);
    let other = sim.run_trial(&turbo, 0.05, TrialSeeds::derive(23, 5)).unwrap();
    assert_ne!(a.output.decoded_s, other.output.decoded_s);
}

#[test]
fn execution_modes_agree() {
    let turbo = TurboConfig {
        outer_iters: 2,
        ..TurboConfig::default()
    };
    let point = SweepPoint::new(3.0, 5.0);
    let base = SystemConfig::desk();
    let seq = point_trials(&base, &point, &turbo, 3, 24, ExecMode::Sequential).unwrap();
    let par = point_trials(&base, &point, &turbo, 3, 24, ExecMode::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn every_detector_pairing_runs() {
    let sim = desk(4.0);
    for s in [StationaryDetector::OampLmmse, StationaryDetector::ROampLmmse, StationaryDetector::Mp] {
        for m in [MobileDetector::GampEp, MobileDetector::RGampEp(2), MobileDetector::Mp] {
            let turbo = TurboConfig {
                stationary_detector: s,
                mobile_detector: m,
                outer_iters: 2,
                ..TurboConfig::default()
            };
            let r = sim.run_trial(&turbo, 0.0, TrialSeeds::derive(25, 0)).unwrap();
            assert_eq!(r.ber_s.len(), 2);
            assert_eq!(r.ber_m.len(), 2);
            assert!(r.ber_s.iter().chain(&r.ber_m).all(|b| (0.0..=1.0).contains(b)));
        }
    }
}

#[test]
fn genie_modes_need_the_truth() {
    let sim = desk(4.0);
    let frame = sim.draw_frame(0.0, TrialSeeds::derive(26, 0)).unwrap();
    for turbo in [
        TurboConfig {
            perfect_sic: true,
            ..TurboConfig::default()
        },
        TurboConfig {
            perfect_prior: true,
            ..TurboConfig::default()
        },
        TurboConfig {
            outer_iters: 0,
            ..TurboConfig::default()
        },
    ] {
        assert!(run_turbo(&frame.input(), &sim.coding, &turbo, None).is_err());
    }
}

#[test]
fn diagnostics_track_each_iteration() {
    let sim = desk(4.0);
    let turbo = TurboConfig {
        outer_iters: 3,
        ..TurboConfig::default()
    };
    let r = sim.run_trial(&turbo, 0.0, TrialSeeds::derive(27, 1)).unwrap();
    let iters = &r.output.diagnostics.iterations;
    assert_eq!(iters.len(), 3);
    for it in iters {
        let mi = it.mi_m.unwrap();
        for v in [mi.detector_in, mi.detector_out, mi.decoder_out] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(!it.alpha_s.is_empty() && !it.alpha_m.is_empty());
    }
    assert_eq!(iters[0].mi_s.unwrap().detector_in, 0.0);
}
