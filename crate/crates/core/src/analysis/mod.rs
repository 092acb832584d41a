//! Analytical tools: pairwise error probabilities, the union bound on
//! uncoded BER, the complexity-reduction ratio and state evolution.

pub mod pep;
pub mod state_evolution;
pub mod union_bound;

use num_rational::Ratio;

pub use pep::{diversity_report, path_matrices, pep, pep_from_eigenvalues, phi_delta, DiversityReport, Pep, RANK_THRESHOLD};
pub use state_evolution::{state_evolution, NleTable, SeTrace};
pub use union_bound::{union_bound_ber, UnionBoundSystem};

/// Complexity-reduction ratio of dropping the message-passing stage,
/// `1 - N³ / (I_t N M^{d_f} d_f + N³)`, exactly.
pub fn crr_exact(n: u64, i_t: u64, m: u64, d_f: u32) -> Ratio<u128> {
    let n3 = u128::from(n).pow(3);
    let mpa = u128::from(i_t) * u128::from(n) * u128::from(m).pow(d_f) * u128::from(d_f);
    Ratio::from_integer(1) - Ratio::new(n3, mpa + n3)
}

pub fn crr(n: u64, i_t: u64, m: u64, d_f: u32) -> f64 {
    let r = crr_exact(n, i_t, m, d_f);
    *r.numer() as f64 / *r.denom() as f64
}

/// Least-squares slope of `log10 BER` against `Eb/N0 / 10 dB`, i.e. decades
/// of BER per 10 dB.
pub fn diversity_slope(ebn0_db: &[f64], ber: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ebn0_db
        .iter()
        .zip(ber)
        .filter(|(_, &b)| b > 0.0)
        .map(|(&x, &b)| (x / 10.0, -b.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crr_values() {
        assert_eq!(crr(64, 0, 4, 3), 0.0);
        assert!((crr(64, 6, 4, 3) - 0.2195).abs() < 5e-5);
        assert_eq!(crr_exact(64, 6, 4, 3), Ratio::new(9, 41));
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 20.0];
        let y = [1e-2, 1e-4];
        assert!((diversity_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert!(diversity_slope(&x[..1], &y[..1]).is_none());
    }
}
