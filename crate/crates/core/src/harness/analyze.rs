//! Analytical companions of a sweep: the union bound and the state-evolution
//! decoder table for a configuration.

use num_complex::Complex;

use super::config::{ExperimentConfig, Receiver};
use super::sweep::noise_variance;
use crate::analysis::{union_bound_ber, NleTable, UnionBoundSystem};
use crate::channel::{ChannelPath, ChannelRealization, DopplerModel};
use crate::error::{Error, Result};

/// Path structure of the configured profile with each gain set to the tap's
/// standard deviation. Random Doppler models have no fixed structure and
/// are refused.
pub fn bound_paths(config: &ExperimentConfig) -> Result<ChannelRealization<f64>> {
    let profile = config.profile()?;
    let doppler: Vec<f64> = match &profile.doppler {
        DopplerModel::Static => vec![0.0; profile.taps.len()],
        DopplerModel::Fixed(v) => v.clone(),
        _ => {
            return Err(Error::Config(
                "the union bound needs a static or fixed Doppler profile".into(),
            ))
        }
    };
    ChannelRealization::new(
        profile
            .taps
            .iter()
            .zip(doppler)
            .map(|(t, nu)| ChannelPath::new(Complex::new(t.power.sqrt(), 0.0), t.delay, nu))
            .collect(),
    )
}

/// Union bound on the uncoded BER over the configured `Eb/N0` grid.
pub fn union_bound_curve(config: &ExperimentConfig, cap: f64) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    if config.receiver == Receiver::Oamp {
        return Err(Error::Config("the union bound covers uncoded receivers only".into()));
    }
    let system = config.system()?;
    let params = config.afdm_params()?;
    let paths = [bound_paths(config)?];
    let n0s: Vec<f64> = config
        .ebn0_grid_db
        .iter()
        .map(|&x| noise_variance(config, &system, 1.0, x))
        .collect();
    let bound = union_bound_ber(
        &UnionBoundSystem {
            codebooks: &system.codebooks,
            scheme: config.allocation,
            params: &params,
            paths: &paths,
            direction: config.direction,
        },
        &n0s,
        cap,
    )?;
    Ok(config.ebn0_grid_db.iter().copied().zip(bound).collect())
}

/// Decoder transfer table for the configured code and alphabet over
/// `points` values of `τ` log-spaced in `[1e-3, 10]`.
pub fn nle_table(config: &ExperimentConfig, points: usize, frames: usize, seed: u64) -> Result<NleTable> {
    let code = config
        .code()?
        .ok_or_else(|| Error::Config("the decoder table needs a [code] section".into()))?;
    let system = config.system()?;
    let taus = NleTable::log_grid(1e-3, 10.0, points);
    let iterations = config.code.as_ref().map_or(8, |c| c.inner_iterations);
    NleTable::monte_carlo(&code, &system.alphabet, &taus, frames, iterations, seed)
}
