use afdm_scma::afdm::AfdmParams;
use afdm_scma::channel::{effective_matrix_closed_form, ChannelRealization};
use afdm_scma::detectors::{
    argmax, llr_from_gaussian_generic, llr_from_gaussian_qpsk, mpa_detect, mpa_receive, Edge, GaussianMessage,
    SparseFactorGraph, DEFAULT_MPA_CAP,
};
use afdm_scma::scma::{AllocationScheme, Alphabet, Direction, ScmaSystem};
use afdm_scma::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

#[test]
fn mpa_is_exact_on_a_tree() {
    // path graph v0 - r0 - v1 - r1 - v2 with leaf rows on v0 and v2
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape: [&[usize]; 4] = [&[0, 1], &[1, 2], &[0], &[2]];
    for _ in 0..20 {
        let rows: Vec<Vec<Edge<f64>>> = shape
            .iter()
            .map(|vars| {
                vars.iter()
                    .map(|&var| Edge {
                        var,
                        contrib: (0..4).map(|_| c(&mut rng)).collect(),
                    })
                    .collect()
            })
            .collect();
        let graph = SparseFactorGraph::new(3, 4, rows, vec![0.3; 4]).unwrap();
        let y: Vec<C64> = (0..4).map(|_| c(&mut rng)).collect();
        let mpa = mpa_detect(&y, &graph, 6, DEFAULT_MPA_CAP).unwrap();
        let exact = graph.brute_force_marginals(&y, DEFAULT_MPA_CAP).unwrap();
        for (p, q) in mpa.iter().zip(&exact) {
            let tv: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-9, "tv {tv}");
        }
    }
}

#[test]
fn mpa_recovers_noiseless_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8;
    let groups = n / 4;
    let params = AfdmParams::new(n, 0.1, 0.01, 1).unwrap();
    // integer Doppler: the band truncated at k_nu = 0 is exact
    let channel = |g: C64| effective_matrix_closed_form(&ChannelRealization::single(g, 0, 0.0), &params, 0);
    for direction in [Direction::Uplink, Direction::Downlink] {
        let sys = ScmaSystem::<f64>::standard(4, direction).unwrap();
        // uplink users share one constellation and are told apart by their
        // own channels; downlink users share the channel
        let hs: Vec<_> = match direction {
            Direction::Uplink => (0..6).map(|_| channel(c(&mut rng) + 1.0)).collect(),
            Direction::Downlink => vec![channel(C64::new(0.8, 0.4))],
        };
        let idx: Vec<usize> = (0..groups * 6).map(|_| rng.random_range(0..4)).collect();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for j in 0..6 {
            let mut x = vec![C64::new(0.0, 0.0); n];
            for q in 0..groups {
                for (k, v) in sys.codebooks[j].codeword(idx[q * 6 + j]).iter().enumerate() {
                    x[AllocationScheme::Interleaved.subcarrier(q, k, 4, groups)] += v;
                }
            }
            for (a, b) in y.iter_mut().zip(hs[j.min(hs.len() - 1)].mul_vec(&x)) {
                *a += b;
            }
        }
        let refs: Vec<_> = hs.iter().collect();
        let det = mpa_receive(&y, &refs, &sys.codebooks, AllocationScheme::Interleaved, 1e-4, 10, DEFAULT_MPA_CAP).unwrap();
        let found: Vec<usize> = det.marginals.iter().map(|p| argmax(p)).collect();
        assert_eq!(found, idx, "{direction:?}");
    }
}

#[test]
fn qpsk_llr_matches_generic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let msg = GaussianMessage {
        mean: (0..500).map(|_| c(&mut rng) * 2.0).collect(),
        var: (0..500).map(|_| rng.random_range(0.05..4.0)).collect(),
    };
    let fast = llr_from_gaussian_qpsk(&msg);
    let slow = llr_from_gaussian_generic(&msg, &Alphabet::qpsk());
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-9);
    }
}

