use afdm_scma::afdm::{daft_matrix, select_c1_exact, select_c2_exact, Afdm, AfdmParams};
use afdm_scma::channel::{effective_matrix_closed_form, effective_matrix_direct, ChannelPath, ChannelRealization};
use afdm_scma::coding::{Interleaver, LdpcCode};
use afdm_scma::detectors::{
    extrinsic_combine, gaussian_from_llr_generic, gaussian_from_llr_qpsk, lmmse_estimate, lmmse_estimate_direct,
    GaussianMessage, VarianceBounds,
};
use afdm_scma::linalg::CMatrix;
use afdm_scma::scma::{allocate, deallocate, Alphabet, AllocationScheme};
use afdm_scma::C64;
use num_rational::Ratio;
use proptest::prelude::*;

fn cvec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b)), len)
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modem_roundtrip((n, x) in (2usize..96).prop_flat_map(|n| (Just(n), cvec(n))), c1 in 0.0..1.0f64, c2 in 0.0..1.0f64) {
        let modem = Afdm::new(AfdmParams::new(n, c1, c2, 0).unwrap()).unwrap();
        let back = modem.demodulate(&modem.modulate(&x).unwrap()).unwrap();
        prop_assert!(max_diff(&back, &x) < 1e-10);
    }

    #[test]
    fn fast_transform_matches_matrix((n, x) in (2usize..48).prop_flat_map(|n| (Just(n), cvec(n))), c1 in 0.0..1.0f64, c2 in 0.0..1.0f64) {
        let params = AfdmParams::new(n, c1, c2, 0).unwrap();
        let a = daft_matrix(&params).unwrap();
        let fast = Afdm::new(params).unwrap().demodulate(&x).unwrap();
        prop_assert!(max_diff(&fast, &a.mul_vec(&x)) < 1e-10);
    }

    #[test]
    fn prefix_roundtrip((n, x) in (4usize..64).prop_flat_map(|n| (Just(n), cvec(n))), cpp in 0usize..4, c1 in 0.0..1.0f64) {
        let modem = Afdm::new(AfdmParams::new(n, c1, 0.1, cpp).unwrap()).unwrap();
        let with = modem.add_cpp(&x).unwrap();
        prop_assert_eq!(with.len(), n + cpp);
        prop_assert_eq!(modem.remove_cpp(&with).unwrap(), x);
    }

    #[test]
    fn closed_form_channel(n in 6usize..40, delays in prop::collection::btree_set(0usize..5, 1..4), dopplers in prop::collection::vec(-2.0..2.0f64, 4), c1 in 0.0..0.5f64) {
        let paths = delays
            .iter()
            .zip(&dopplers)
            .map(|(&l, &nu)| ChannelPath::new(C64::new(0.6, -0.3), l, nu))
            .collect();
        let ch = ChannelRealization::new(paths).unwrap();
        let params = AfdmParams::new(n, c1, 0.05, ch.max_delay()).unwrap();
        let diff = effective_matrix_closed_form(&ch, &params, n).max_abs_diff(&effective_matrix_direct(&ch, &params).unwrap());
        prop_assert!(diff < 1e-9);
    }

    #[test]
    fn allocation_roundtrip(groups in 1usize..16, k in 1usize..6, interleaved: bool) {
        let scheme = if interleaved { AllocationScheme::Interleaved } else { AllocationScheme::Localized };
        let x: Vec<f64> = (0..groups * k).map(|i| i as f64).collect();
        let placed = allocate(&x, scheme, k).unwrap();
        let mut sorted = placed.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(&sorted, &x);
        prop_assert_eq!(deallocate(&placed, scheme, k).unwrap(), x);
    }

    #[test]
    fn interleaver_roundtrip(len in 1usize..500, seed: u64) {
        let il = Interleaver::new(len, seed);
        let x: Vec<u32> = (0..len as u32).collect();
        let y = il.interleave(&x).unwrap();
        prop_assert_eq!(il.deinterleave(&y).unwrap(), x);
    }

    #[test]
    fn lmmse_forms_agree(seed in 0u64..1000, rows in 2usize..8, cols in 2usize..12) {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let g = CMatrix::from_fn(rows, cols, |_, _| C64::new(next(), next()));
        let r: Vec<C64> = (0..rows).map(|_| C64::new(next(), next())).collect();
        let prior = GaussianMessage {
            mean: (0..cols).map(|_| C64::new(next(), next())).collect(),
            var: (0..cols).map(|_| next() + 0.6).collect(),
        };
        let a = lmmse_estimate(&r, &g, &prior, 0.2).unwrap();
        let b = lmmse_estimate_direct(&r, &g, &prior, 0.2).unwrap();
        prop_assert!(max_diff(&a.mean, &b.mean) < 1e-9);
        for (x, y) in a.var.iter().zip(&b.var) {
            prop_assert!((x - y).abs() < 1e-9);
            prop_assert!(*x > 0.0 && *x <= 1.1 + 1e-12);
        }
    }

    #[test]
    fn extrinsic_is_positive_and_bounded(vp in 0.01..0.5f64, vq in 0.6..2.0f64, kappa in 0.05..1.0f64, vprev in 0.01..3.0f64) {
        let msg = |v: f64| GaussianMessage { mean: vec![C64::new(0.3, -0.1); 8], var: vec![v; 8] };
        let prev = msg(vprev);
        let out = extrinsic_combine(&msg(vp), &msg(vq), kappa, Some(&prev), VarianceBounds::default()).unwrap();
        prop_assert!(!out.clamped);
        let ve = 1.0 / (1.0 / vp - 1.0 / vq);
        for &v in &out.message.var {
            // harmonic mix of the fresh extrinsic and the previous message
            prop_assert!(v >= ve.min(vprev) - 1e-12 && v <= ve.max(vprev) + 1e-12);
        }
    }

    #[test]
    fn soft_symbols_agree(llrs in prop::collection::vec(-20.0..20.0f64, 2..40usize).prop_filter("even", |v| v.len() % 2 == 0)) {
        let a = gaussian_from_llr_qpsk(&llrs).unwrap();
        let b = gaussian_from_llr_generic(&llrs, &Alphabet::qpsk()).unwrap();
        prop_assert!(max_diff(&a.mean, &b.mean) < 1e-12);
        for (x, y) in a.var.iter().zip(&b.var) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn chirp_parameters(alpha in 0u64..4, k_nu in 0u64..3, gap in 1u64..4, n in 8u64..512) {
        let c1 = select_c1_exact(alpha, k_nu, gap, n).unwrap();
        prop_assert_eq!(c1 * Ratio::from_integer(2 * n * gap), Ratio::from_integer(2 * (alpha + k_nu) + 1));
        prop_assert_eq!(select_c2_exact(n) * Ratio::from_integer(4 * n * n), Ratio::from_integer(1));
    }
}

#[test]
fn ldpc_codewords_satisfy_parity() {
    let code = LdpcCode::default_code();
    assert_eq!(code.frame_bits(), 2048);
    let mut state = 7u64;
    for _ in 0..4 {
        let info: Vec<u8> = (0..code.info_bits())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 63) as u8
            })
            .collect();
        let cw = code.encode(&info).unwrap();
        assert!(code.parity_check().is_codeword(&cw));
        assert_eq!(code.extract_info(&cw), info);
        // noiseless LLRs decode in one iteration
        let llrs: Vec<f64> = cw.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
        let out = code.decode(&llrs, 1).unwrap();
        assert!(out.converged);
        assert_eq!(out.hard, cw);
    }
}
