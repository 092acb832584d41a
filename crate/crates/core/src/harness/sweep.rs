//! Monte Carlo BER sweeps.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{EbConvention, ExperimentConfig, Receiver};
use crate::afdm::{Afdm, AfdmParams};
use crate::analysis::{state_evolution, NleTable, SeTrace};
use crate::channel::{add_noise, apply_channel, effective_matrix_closed_form, ChannelRealization, TapProfile};
use crate::coding::{Interleaver, LdpcCode};
use crate::detectors::{
    map_frame, mpa_receive, oamp_receive, two_stage_downlink, OampBlock, OampConfig, DEFAULT_MPA_CAP,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scma::{allocate, compose_channel, effective_signature, Direction, ScmaSystem};

/// Smallest noise variance a sweep point uses; keeps the receivers finite
/// at very high `Eb/N0`.
pub const N0_FLOOR: f64 = 1e-12;

/// Counters of one sweep point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frame_errors: u64,
    pub frames: u64,
}

impl BerPoint {
    fn new(ebn0_db: f64) -> Self {
        Self {
            ebn0_db,
            ..Self::default()
        }
    }

    fn add(&mut self, errors: u64, bits: u64) {
        self.bit_errors += errors;
        self.bits += bits;
        self.frame_errors += u64::from(errors > 0);
        self.frames += 1;
        self.ber = self.bit_errors as f64 / self.bits as f64;
    }
}

/// Per-iteration MSE statistics of the iterative receiver. Each frame
/// contributes one sample per iteration, the MSE averaged over its users.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MseStats {
    pub frames: u64,
    le_sum: Vec<f64>,
    le_sq: Vec<f64>,
    nle_sum: Vec<f64>,
    nle_sq: Vec<f64>,
    orth_max: Vec<f64>,
}

impl MseStats {
    fn add(&mut self, le: &[Vec<f64>], nle: &[Vec<f64>], orth: &[Vec<f64>]) {
        let iters = le.len();
        if self.le_sum.is_empty() {
            for v in [&mut self.le_sum, &mut self.le_sq, &mut self.nle_sum, &mut self.nle_sq, &mut self.orth_max] {
                *v = vec![0.0; iters];
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        for t in 0..iters {
            let (a, b) = (mean(&le[t]), mean(&nle[t]));
            self.le_sum[t] += a;
            self.le_sq[t] += a * a;
            self.nle_sum[t] += b;
            self.nle_sq[t] += b * b;
            self.orth_max[t] = orth[t].iter().copied().fold(self.orth_max[t], f64::max);
        }
        self.frames += 1;
    }

    pub fn iterations(&self) -> usize {
        self.le_sum.len()
    }

    fn mean_ci(sum: f64, sq: f64, n: u64) -> (f64, f64) {
        let n = n as f64;
        let mean = sum / n;
        let var = ((sq / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
        (mean, 1.96 * (var / n).sqrt())
    }

    /// Mean estimator-output MSE at iteration `t` (0-based) and the half
    /// width of its 95% confidence interval.
    pub fn le(&self, t: usize) -> (f64, f64) {
        Self::mean_ci(self.le_sum[t], self.le_sq[t], self.frames)
    }

    /// Mean decoder-output MSE and its 95% half width.
    pub fn nle(&self, t: usize) -> (f64, f64) {
        Self::mean_ci(self.nle_sum[t], self.nle_sq[t], self.frames)
    }

    /// Largest estimator input/output error correlation seen at `t`.
    pub fn orthogonality(&self, t: usize) -> f64 {
        self.orth_max[t]
    }
}

/// Outcome of [`run_sweep`]. `uncoded` and `mse` are filled for the
/// iterative receiver only (hard decisions of the first linear estimate,
/// before decoding).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub points: Vec<BerPoint>,
    pub uncoded: Vec<BerPoint>,
    pub mse: Vec<MseStats>,
}

/// Noise variance per DAFT-domain sample for `ebn0_db`.
///
/// Each user's codeword carries energy one per resource block and
/// `log₂M · R` information bits, so `Eb = 1/(log₂M · R)`; the overload
/// convention scales `Eb` by `J/K`, and `prefix_in_eb` by `(N + Ncpp)/N`.
pub fn noise_variance(config: &ExperimentConfig, system: &ScmaSystem<f64>, rate: f64, ebn0_db: f64) -> f64 {
    let bps = system.alphabet.bits_per_symbol() as f64;
    let mut eb = 1.0 / (bps * rate);
    if config.eb_convention == EbConvention::Overload {
        eb *= system.config.overload();
    }
    if config.prefix_in_eb {
        eb *= (config.afdm.n + config.afdm.n_cpp) as f64 / config.afdm.n as f64;
    }
    (eb / 10f64.powf(ebn0_db / 10.0)).max(N0_FLOOR)
}

/// Everything a trial needs, built once per sweep.
struct Setup {
    params: AfdmParams<f64>,
    modem: Afdm<f64>,
    system: ScmaSystem<f64>,
    z_sym: CMatrix<f64>,
    profile: TapProfile<f64>,
    fading: bool,
    code: Option<LdpcCode>,
    interleavers: Vec<Interleaver>,
    oamp: OampConfig<f64>,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let params = config.afdm_params()?;
        let system = config.system()?;
        let code = config.code()?;
        let j = system.config.j;
        let interleavers = match &code {
            Some(c) => {
                let bps = system.alphabet.bits_per_symbol();
                let groups = params.n / system.config.k;
                let stream = c.frame_bits() / bps;
                if c.frame_bits() % bps != 0 || stream % groups != 0 {
                    return Err(Error::Config(format!(
                        "a frame of {} bits does not fill whole modem symbols of {groups} groups",
                        c.frame_bits()
                    )));
                }
                (0..j).map(|u| Interleaver::for_user(c.frame_bits(), u, config.seed)).collect()
            }
            None => Vec::new(),
        };
        Ok(Self {
            modem: Afdm::new(params)?,
            z_sym: effective_signature(&system.signature, config.allocation, params.n)?,
            params,
            profile: config.profile()?,
            fading: config.fading(),
            system,
            code,
            interleavers,
            oamp: config.oamp_config(),
        })
    }

    fn channels<R: Rng>(&self, rng: &mut R, direction: Direction) -> Result<Vec<ChannelRealization<f64>>> {
        let count = match direction {
            Direction::Uplink => self.system.config.j,
            Direction::Downlink => 1,
        };
        (0..count)
            .map(|_| {
                if self.fading {
                    self.profile.sample(rng, &self.params)
                } else {
                    Ok(ChannelRealization::single(Complex::new(1.0, 0.0), 0, 0.0))
                }
            })
            .collect()
    }

    /// Passes the users' DAFT-domain signals through the time-domain chain
    /// and returns the DAFT-domain observation.
    fn transmit<R: Rng>(
        &self,
        signals: &[Vec<Complex<f64>>],
        channels: &[ChannelRealization<f64>],
        n0: f64,
        rng: &mut R,
    ) -> Result<Vec<Complex<f64>>> {
        let len = self.params.n + self.params.n_cpp;
        let mut rx = vec![Complex::new(0.0, 0.0); len];
        let mut send = |x: &[Complex<f64>], ch: &ChannelRealization<f64>, rng: &mut R| -> Result<()> {
            let s = self.modem.add_cpp(&self.modem.modulate(x)?)?;
            for (acc, v) in rx.iter_mut().zip(apply_channel(&s, ch, &self.params, 0.0, rng)?) {
                *acc += v;
            }
            Ok(())
        };
        if channels.len() == 1 {
            let mut sum = vec![Complex::new(0.0, 0.0); self.params.n];
            for x in signals {
                for (a, b) in sum.iter_mut().zip(x) {
                    *a += b;
                }
            }
            send(&sum, &channels[0], rng)?;
        } else {
            for (x, ch) in signals.iter().zip(channels) {
                send(x, ch, rng)?;
            }
        }
        add_noise(&mut rx, n0, rng);
        self.modem.demodulate(&self.modem.remove_cpp(&rx)?)
    }

    /// User `j`'s allocated signal for one modem symbol of codeword indices.
    fn user_signal(&self, j: usize, indices: &[usize], scheme: crate::scma::AllocationScheme) -> Result<Vec<Complex<f64>>> {
        let cb = &self.system.codebooks[j];
        let flat: Vec<Complex<f64>> = indices.iter().flat_map(|&i| cb.codeword(i)).collect();
        allocate(&flat, scheme, self.system.config.k)
    }
}

#[derive(Clone, Debug, Default)]
struct TrialOutcome {
    errors: u64,
    bits: u64,
    uncoded_errors: u64,
    uncoded_bits: u64,
    /// `[iteration][user]`
    le_mse: Vec<Vec<f64>>,
    nle_mse: Vec<Vec<f64>>,
    orthogonality: Vec<Vec<f64>>,
}

fn count_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

fn uncoded_trial(config: &ExperimentConfig, setup: &Setup, n0: f64, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let sys = &setup.system;
    let (j_users, k) = (sys.config.j, sys.config.k);
    let m = sys.alphabet.len();
    let bps = sys.alphabet.bits_per_symbol();
    let groups = setup.params.n / k;
    let channels = setup.channels(rng, config.direction)?;
    let indices: Vec<Vec<usize>> = (0..j_users).map(|_| (0..groups).map(|_| rng.random_range(0..m)).collect()).collect();
    let signals: Vec<Vec<Complex<f64>>> = (0..j_users)
        .map(|j| setup.user_signal(j, &indices[j], config.allocation))
        .collect::<Result<_>>()?;
    let y = setup.transmit(&signals, &channels, n0, rng)?;
    let h: Vec<CMatrix<f64>> = channels
        .iter()
        .map(|c| effective_matrix_closed_form(c, &setup.params, config.afdm.k_nu))
        .collect();
    let refs: Vec<&CMatrix<f64>> = h.iter().collect();
    let det = match config.receiver {
        Receiver::Mpa => mpa_receive(
            &y,
            &refs,
            &sys.codebooks,
            config.allocation,
            n0,
            config.mpa_iterations(),
            DEFAULT_MPA_CAP,
        )?,
        Receiver::TwoStage => two_stage_downlink(
            &y,
            &h[0],
            &sys.codebooks,
            config.allocation,
            n0,
            config.mpa_iterations(),
            DEFAULT_MPA_CAP,
        )?,
        Receiver::Oamp => unreachable!("coded receiver"),
    };
    let mut out = TrialOutcome::default();
    for (j, idx) in indices.iter().enumerate() {
        let truth: Vec<u8> = idx
            .iter()
            .flat_map(|&i| (0..bps).rev().map(move |b| ((i >> b) & 1) as u8))
            .collect();
        out.errors += count_errors(&truth, &det.bits[j]);
        out.bits += truth.len() as u64;
    }
    Ok(out)
}

fn coded_trial(config: &ExperimentConfig, setup: &Setup, n0: f64, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let sys = &setup.system;
    let code = setup.code.as_ref().expect("validated: oamp has a code");
    let (j_users, k) = (sys.config.j, sys.config.k);
    let groups = setup.params.n / k;
    let bps = sys.alphabet.bits_per_symbol();
    let stream = code.frame_bits() / bps;
    let n_blocks = stream / groups;

    let mut info = Vec::with_capacity(j_users);
    let mut codewords = Vec::with_capacity(j_users);
    let mut symbols = Vec::with_capacity(j_users);
    for j in 0..j_users {
        let bits: Vec<u8> = (0..code.info_bits()).map(|_| rng.random_range(0..2u8)).collect();
        let cw = code.encode(&bits)?;
        symbols.push(map_frame(&cw, &setup.interleavers[j], &sys.alphabet)?);
        info.push(bits);
        codewords.push(cw);
    }
    let truth: Vec<Vec<Complex<f64>>> = symbols
        .iter()
        .map(|s| s.iter().map(|&i| sys.alphabet.points()[i]).collect())
        .collect();

    let mut blocks = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let channels = setup.channels(rng, config.direction)?;
        let signals: Vec<Vec<Complex<f64>>> = (0..j_users)
            .map(|j| setup.user_signal(j, &symbols[j][b * groups..(b + 1) * groups], config.allocation))
            .collect::<Result<_>>()?;
        let r = setup.transmit(&signals, &channels, n0, rng)?;
        let h: Vec<CMatrix<f64>> = channels
            .iter()
            .map(|c| effective_matrix_closed_form(c, &setup.params, config.afdm.k_nu))
            .collect();
        let refs: Vec<&CMatrix<f64>> = h.iter().collect();
        let g = compose_channel(&setup.z_sym, &refs, j_users)?;
        blocks.push(OampBlock { r, g });
    }
    let res = oamp_receive(
        &blocks,
        j_users,
        &sys.alphabet,
        code,
        &setup.interleavers,
        &setup.oamp,
        n0,
        Some(&truth),
    )?;
    let mut out = TrialOutcome::default();
    for j in 0..j_users {
        out.errors += count_errors(&info[j], &res.info_bits[j]);
        out.bits += info[j].len() as u64;
        out.uncoded_errors += count_errors(&codewords[j], &res.uncoded_bits[j]);
        out.uncoded_bits += codewords[j].len() as u64;
    }
    out.le_mse = res.trace.iter().map(|t| t.le_mse.clone()).collect();
    out.nle_mse = res.trace.iter().map(|t| t.nle_mse.clone()).collect();
    out.orthogonality = res.trace.iter().map(|t| t.orthogonality.clone()).collect();
    Ok(out)
}

/// Point index reserved for the channel draws of [`se_prediction`].
const SE_STREAM: usize = 0xF_FFFF;

/// RNG of trial `trial` at sweep point `point`.
pub fn trial_rng(seed: u64, point: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 40) | trial);
    rng
}

/// Runs every point of the grid. Trials run in batches of `batch_trials` on
/// `threads` workers and are aggregated in trial order; a point stops after
/// the first batch that reaches `min_bit_errors` or `max_trials`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let setup = Setup::new(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let rate = setup.code.as_ref().map_or(1.0, LdpcCode::rate_f64);
    let coded = config.receiver == Receiver::Oamp;

    let mut result = SweepResult::default();
    for (p, &ebn0) in config.ebn0_grid_db.iter().enumerate() {
        let n0 = noise_variance(config, &setup.system, rate, ebn0);
        let mut point = BerPoint::new(ebn0);
        let mut uncoded = BerPoint::new(ebn0);
        let mut mse = MseStats::default();
        let mut next = 0u64;
        while next < config.max_trials && point.bit_errors < config.min_bit_errors {
            let end = (next + config.batch_trials).min(config.max_trials);
            let outcomes: Vec<TrialOutcome> = pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = trial_rng(config.seed, p, t);
                        if coded {
                            coded_trial(config, &setup, n0, &mut rng)
                        } else {
                            uncoded_trial(config, &setup, n0, &mut rng)
                        }
                    })
                    .collect::<Result<_>>()
            })?;
            for o in &outcomes {
                point.add(o.errors, o.bits);
                if coded {
                    uncoded.add(o.uncoded_errors, o.uncoded_bits);
                    mse.add(&o.le_mse, &o.nle_mse, &o.orthogonality);
                }
            }
            next = end;
        }
        result.points.push(point);
        if coded {
            result.uncoded.push(uncoded);
            result.mse.push(mse);
        }
    }
    Ok(result)
}

/// State-evolution predictions for the iterative receiver at `ebn0_db`,
/// one per channel draw of a whole frame.
pub fn se_traces(config: &ExperimentConfig, table: &NleTable, ebn0_db: f64, frames: usize, seed: u64) -> Result<Vec<SeTrace>> {
    let setup = Setup::new(config)?;
    let code = setup
        .code
        .as_ref()
        .ok_or_else(|| Error::Config("state evolution needs a [code] section".into()))?;
    let j_users = setup.system.config.j;
    let n0 = noise_variance(config, &setup.system, code.rate_f64(), ebn0_db);
    let groups = setup.params.n / setup.system.config.k;
    let n_blocks = code.frame_bits() / setup.system.alphabet.bits_per_symbol() / groups;
    (0..frames.max(1))
        .into_par_iter()
        .map(|f| -> Result<SeTrace> {
            let mut rng = trial_rng(seed, SE_STREAM, f as u64);
            let mut gs = Vec::with_capacity(n_blocks);
            for _ in 0..n_blocks {
                let channels = setup.channels(&mut rng, config.direction)?;
                let h: Vec<CMatrix<f64>> = channels
                    .iter()
                    .map(|c| effective_matrix_closed_form(c, &setup.params, config.afdm.k_nu))
                    .collect();
                let refs: Vec<&CMatrix<f64>> = h.iter().collect();
                gs.push(compose_channel(&setup.z_sym, &refs, j_users)?);
            }
            state_evolution(&gs, j_users, n0, table, setup.oamp.outer_iterations, setup.oamp.damping)
        })
        .collect()
}

/// Average of [`se_traces`].
pub fn se_prediction(config: &ExperimentConfig, table: &NleTable, ebn0_db: f64, frames: usize, seed: u64) -> Result<SeTrace> {
    SeTrace::mean(&se_traces(config, table, ebn0_db, frames, seed)?)
        .ok_or_else(|| Error::InvalidParams("no traces".into()))
}
