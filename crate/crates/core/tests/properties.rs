use num_complex::Complex64;
use obnoma::coding::{demap_llr, map_pmf, Interleaver, LdpcCode};
use obnoma::modem::{demodulate_frame, heisenberg_rect, isfft, modulate_frame, sfft, wigner_rect, DdGrid};
use obnoma::params::{Alphabet, Group, ResourceMap, SystemConfig};
use obnoma::sparse::SparseChannelMatrix;
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = DdGrid> {
    (1usize..9, 1usize..6).prop_flat_map(|(m, n)| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), m * n)
            .prop_map(move |v| DdGrid::from_vec(m, n, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
    })
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn sfft_inverts_isfft(x in grid_strategy()) {
        prop_assert!(max_diff(sfft(&isfft(&x)).as_slice(), x.as_slice()) < 1e-12);
    }

    #[test]
    fn isfft_preserves_energy(x in grid_strategy()) {
        let e = x.frobenius_norm();
        prop_assert!((isfft(&x).frobenius_norm() - e).abs() < 1e-12 * e.max(1.0));
    }

    #[test]
    fn wigner_inverts_heisenberg(x in grid_strategy()) {
        let tf = isfft(&x);
        let (m, n) = tf.dims();
        let back = wigner_rect(&heisenberg_rect(&tf), m, n).unwrap();
        prop_assert!(max_diff(back.as_slice(), tf.as_slice()) < 1e-12);
    }

    #[test]
    fn frame_loopback_with_prefix(x in grid_strategy(), cp in 0usize..4) {
        let (m, n) = x.dims();
        let cp = cp.min(m * n);
        let s = modulate_frame(&x, cp).unwrap();
        prop_assert_eq!(s.samples.len(), m * n + cp);
        let back = demodulate_frame(&s, m, n).unwrap();
        prop_assert!(max_diff(back.as_slice(), x.as_slice()) < 1e-12);
    }

    #[test]
    fn placement_round_trip(u in 1usize..5, v in 1usize..5, mexp in 2u32..5, nexp in 2u32..4) {
        let (m, n) = (1usize << mexp, 1usize << nexp);
        prop_assume!(n % u == 0 && m % v == 0);
        let cfg = SystemConfig { m, n, u, v, ..SystemConfig::desk() };
        let map = ResourceMap::allocate(&cfg).unwrap();
        let mut covered_s = vec![0; m * n];
        let mut covered_m = vec![0; m * n];
        for (group, users, covered) in [(Group::Stationary, u, &mut covered_s), (Group::Mobile, v, &mut covered_m)] {
            for user in 0..users {
                let len = map.symbols_per_user(group, user);
                let syms: Vec<Complex64> = (0..len).map(|i| Complex64::new(1.0 + i as f64, user as f64)).collect();
                let grid = map.place_symbols(group, user, &syms).unwrap();
                prop_assert_eq!(map.extract_symbols(group, user, &grid).unwrap(), syms);
                for (c, z) in covered.iter_mut().zip(grid.as_slice()) {
                    *c += usize::from(z.norm() > 0.0);
                }
            }
        }
        // Every grid position belongs to exactly one user of each group.
        prop_assert!(covered_s.iter().all(|&c| c == 1));
        prop_assert!(covered_m.iter().all(|&c| c == 1));
    }

    #[test]
    fn interleaver_round_trip(len in 1usize..600, seed in any::<u64>()) {
        let il = Interleaver::new(len, seed);
        let seq: Vec<usize> = (0..len).collect();
        let fwd = il.interleave(&seq).unwrap();
        let mut sorted = fwd.clone();
        sorted.sort_unstable();
        prop_assert_eq!(&sorted, &seq);
        prop_assert_eq!(il.deinterleave(&fwd).unwrap(), seq);
    }

    #[test]
    fn map_then_demap_recovers_llrs(llrs in prop::collection::vec(-20.0f64..20.0, 1..16).prop_map(|mut v| { if v.len() % 4 != 0 { v.truncate(v.len() / 4 * 4); } v }), big in any::<bool>()) {
        prop_assume!(!llrs.is_empty());
        let alphabet = Alphabet::new(if big { 16 } else { 4 }).unwrap();
        let r = alphabet.bits_per_symbol();
        prop_assume!(llrs.len() % r == 0);
        let back = demap_llr(&map_pmf(&llrs, &alphabet).unwrap(), &alphabet).unwrap();
        for (a, b) in llrs.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn labels_follow_bits(bits in prop::collection::vec(0u8..2, 8..64)) {
        let alphabet = Alphabet::new(4).unwrap();
        let bits = &bits[..bits.len() / 2 * 2];
        let labels = alphabet.labels_from_bits(bits).unwrap();
        for (s, &l) in labels.iter().enumerate() {
            for j in 0..2 {
                prop_assert_eq!(alphabet.bit(l, j), bits[2 * s + j]);
            }
            prop_assert_eq!(alphabet.slice(alphabet.point(l)), l);
        }
    }

    #[test]
    fn sparse_matvec_matches_dense(dim in 1usize..12, entries in prop::collection::vec((0usize..12, 0usize..12, -1.0f64..1.0, -1.0f64..1.0), 0..60), x in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12)) {
        let trip: Vec<(usize, usize, Complex64)> = entries.into_iter().filter(|e| e.0 < dim && e.1 < dim).map(|(r, c, a, b)| (r, c, Complex64::new(a, b))).collect();
        let h = SparseChannelMatrix::from_triplets(dim, &trip).unwrap();
        let xv: Vec<Complex64> = x[..dim].iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let dense = h.to_dense();
        let want = &dense * nalgebra::DVector::from_vec(xv.clone());
        let got = h.matvec(&xv);
        for (g, w) in got.iter().zip(want.iter()) {
            prop_assert!((g - w).norm() < 1e-12);
        }
        let back = SparseChannelMatrix::from_triplet_text(&h.to_triplet_text()).unwrap();
        prop_assert!((back.to_dense() - dense).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn encoded_words_satisfy_parity(seed in any::<u64>(), info_seed in any::<u64>()) {
        let code = LdpcCode::regular(96, 3, 6, seed).unwrap();
        let mut s = info_seed;
        let info: Vec<u8> = (0..code.k()).map(|_| { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 63) as u8 }).collect();
        let cw = code.encode(&info).unwrap();
        prop_assert!(code.parity().is_codeword(&cw));
        prop_assert_eq!(code.extract_info(&cw), info);
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 6.0 } else { -6.0 }).collect();
        let out = code.decode(&llr, 10).unwrap();
        prop_assert!(out.converged);
        prop_assert_eq!(out.bits, cw);
    }
}
