//! Experiment description, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::afdm::{select_c1, select_c2, AfdmParams};
use crate::channel::{DopplerModel, EvaProfile, Tap, TapProfile};
use crate::coding::LdpcCode;
use crate::detectors::{OampConfig, VarianceBounds};
use crate::error::{Error, Result};
use crate::scma::{AllocationScheme, Direction, PowerNormalization, ScmaConfig, ScmaSystem, SignatureMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Afdm,
    /// The same chain with `c1 = c2 = 0`.
    Ofdm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    Mpa,
    TwoStage,
    Oamp,
}

/// How `Eb/N0` maps to the noise variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EbConvention {
    /// `Eb` is one user's codeword energy per information bit.
    #[default]
    PerUser,
    /// As `PerUser`, scaled by the overload `J/K`.
    Overload,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfdmConfig {
    pub n: usize,
    pub n_cpp: usize,
    /// Chosen from the channel profile when absent.
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
    /// Doppler guard of the band structure and CSI truncation width.
    #[serde(default = "default_k_nu")]
    pub k_nu: usize,
}

fn default_k_nu() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmaSettings {
    #[serde(default = "default_m")]
    pub m: usize,
    /// Signature matrix file (see `scma::read_matrix`); the reference
    /// signature for the direction otherwise.
    #[serde(default)]
    pub signature: Option<PathBuf>,
    #[serde(default)]
    pub normalization: Option<PowerNormalization>,
}

fn default_m() -> usize {
    4
}

impl Default for ScmaSettings {
    fn default() -> Self {
        Self {
            m: default_m(),
            signature: None,
            normalization: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DopplerSettings {
    #[default]
    Static,
    Integer {
        alpha_max: u64,
    },
    Jakes {
        nu_max: f64,
    },
    Fixed {
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSettings {
    /// Unit gain, no delay, no Doppler: only noise.
    Identity,
    /// Equal-power Rayleigh taps.
    Uniform {
        delays: Vec<usize>,
        #[serde(default)]
        doppler: DopplerSettings,
    },
    /// Extended Vehicular A at the modem's sample rate.
    Eva {
        #[serde(default = "default_speed")]
        speed_kmh: f64,
        #[serde(default = "default_carrier")]
        carrier_ghz: f64,
        #[serde(default = "default_spacing")]
        subcarrier_khz: f64,
    },
}

fn default_speed() -> f64 {
    300.0
}
fn default_carrier() -> f64 {
    4.0
}
fn default_spacing() -> f64 {
    15.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSettings {
    /// Parity-check matrix in alist format; the shipped code when absent.
    #[serde(default)]
    pub alist: Option<PathBuf>,
    #[serde(default = "default_outer")]
    pub outer_iterations: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_inner")]
    pub inner_iterations: usize,
}

fn default_outer() -> usize {
    10
}
fn default_damping() -> f64 {
    0.25
}
fn default_inner() -> usize {
    8
}

impl Default for CodeSettings {
    fn default() -> Self {
        Self {
            alist: None,
            outer_iterations: default_outer(),
            damping: default_damping(),
            inner_iterations: default_inner(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub direction: Direction,
    pub waveform: Waveform,
    pub receiver: Receiver,
    #[serde(default = "default_allocation")]
    pub allocation: AllocationScheme,
    pub afdm: AfdmConfig,
    #[serde(default)]
    pub scma: ScmaSettings,
    pub channel: ChannelSettings,
    #[serde(default)]
    pub code: Option<CodeSettings>,
    /// Message-passing iterations; 10 for `mpa`, 5 for `two_stage` if unset.
    #[serde(default)]
    pub mpa_iterations: Option<usize>,
    pub ebn0_grid_db: Vec<f64>,
    #[serde(default = "default_min_errors")]
    pub min_bit_errors: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
    /// Trials simulated between stopping checks. Results depend on it, not
    /// on the number of threads.
    #[serde(default = "default_batch")]
    pub batch_trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub eb_convention: EbConvention,
    /// Count the prefix energy in `Eb` (scales it by `(N + Ncpp)/N`).
    #[serde(default)]
    pub prefix_in_eb: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_allocation() -> AllocationScheme {
    AllocationScheme::Interleaved
}
fn default_min_errors() -> u64 {
    200
}
fn default_max_trials() -> u64 {
    1_000_000
}
fn default_batch() -> u64 {
    16
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        // relative asset paths are taken relative to the config file
        if let Some(dir) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            };
            if let Some(p) = cfg.scma.signature.as_mut() {
                fix(p);
            }
            if let Some(p) = cfg.code.as_mut().and_then(|c| c.alist.as_mut()) {
                fix(p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.ebn0_grid_db.is_empty() {
            return bad("ebn0_grid_db is empty".into());
        }
        if self.ebn0_grid_db.iter().any(|x| !x.is_finite()) {
            return bad("ebn0_grid_db has a non-finite entry".into());
        }
        if self.max_trials == 0 || self.batch_trials == 0 {
            return bad("max_trials and batch_trials must be positive".into());
        }
        if self.waveform == Waveform::Ofdm
            && (self.afdm.c1.is_some_and(|c| c != 0.0) || self.afdm.c2.is_some_and(|c| c != 0.0))
        {
            return bad("the ofdm waveform has c1 = c2 = 0; remove the chirp rates".into());
        }
        match (self.receiver, &self.code) {
            (Receiver::Oamp, None) => return bad("receiver oamp needs a [code] section".into()),
            (Receiver::Mpa | Receiver::TwoStage, Some(_)) => {
                return bad("only the oamp receiver decodes; drop [code] or switch receivers".into())
            }
            _ => {}
        }
        if self.receiver == Receiver::TwoStage && self.direction != Direction::Downlink {
            return bad("the two-stage detector needs a single shared channel (downlink)".into());
        }
        if let Some(c) = &self.code {
            if !(c.damping > 0.0 && c.damping <= 1.0) {
                return bad(format!("damping {} must lie in (0, 1]", c.damping));
            }
            if c.outer_iterations == 0 || c.inner_iterations == 0 {
                return bad("iteration counts must be positive".into());
            }
        }
        if self.mpa_iterations == Some(0) {
            return bad("mpa_iterations must be positive".into());
        }
        if let ChannelSettings::Uniform { delays, doppler } = &self.channel {
            if delays.is_empty() {
                return bad("uniform channel needs at least one delay".into());
            }
            if let DopplerSettings::Fixed { values } = doppler {
                if values.len() != delays.len() {
                    return bad("one fixed Doppler value per delay is needed".into());
                }
            }
        }
        let k = ScmaConfig::standard(self.scma.m).k;
        if self.afdm.n == 0 || self.afdm.n % k != 0 {
            return bad(format!("n = {} must be a positive multiple of K = {k}", self.afdm.n));
        }
        self.afdm_params()?;
        let profile = self.profile()?;
        if let Some(t) = profile.taps.iter().find(|t| t.delay > self.afdm.n_cpp) {
            return bad(format!("delay {} exceeds the prefix of {}", t.delay, self.afdm.n_cpp));
        }
        Ok(())
    }

    pub fn mpa_iterations(&self) -> usize {
        self.mpa_iterations.unwrap_or(match self.receiver {
            Receiver::TwoStage => 5,
            _ => 10,
        })
    }

    /// Tap profile at the modem sample rate.
    pub fn profile(&self) -> Result<TapProfile<f64>> {
        Ok(match &self.channel {
            ChannelSettings::Identity => TapProfile {
                taps: vec![Tap { delay: 0, power: 1.0 }],
                doppler: DopplerModel::Static,
            },
            ChannelSettings::Uniform { delays, doppler } => TapProfile::uniform(
                delays,
                match doppler {
                    DopplerSettings::Static => DopplerModel::Static,
                    DopplerSettings::Integer { alpha_max } => DopplerModel::Integer { alpha_max: *alpha_max },
                    DopplerSettings::Jakes { nu_max } => DopplerModel::Jakes { nu_max: *nu_max },
                    DopplerSettings::Fixed { values } => DopplerModel::Fixed(values.clone()),
                },
            ),
            ChannelSettings::Eva {
                speed_kmh,
                carrier_ghz,
                subcarrier_khz,
            } => EvaProfile {
                speed_kmh: *speed_kmh,
                carrier_hz: carrier_ghz * 1e9,
                subcarrier_spacing_hz: subcarrier_khz * 1e3,
                ..EvaProfile::default()
            }
            .to_profile(self.afdm.n),
        })
    }

    /// Whether path gains are random (false only for the identity channel).
    pub fn fading(&self) -> bool {
        !matches!(self.channel, ChannelSettings::Identity)
    }

    /// Largest integer Doppler index the profile can produce.
    pub fn alpha_max(&self) -> Result<u64> {
        let p = self.profile()?;
        Ok(match &p.doppler {
            DopplerModel::Static => 0,
            DopplerModel::Integer { alpha_max } => *alpha_max,
            DopplerModel::Jakes { nu_max } => (nu_max - 0.5).ceil().max(0.0) as u64,
            DopplerModel::Fixed(v) => v.iter().map(|x| x.round().abs() as u64).max().unwrap_or(0),
        })
    }

    /// Modem parameters with chirp rates resolved.
    pub fn afdm_params(&self) -> Result<AfdmParams<f64>> {
        let a = &self.afdm;
        if self.waveform == Waveform::Ofdm {
            return AfdmParams::ofdm(a.n, a.n_cpp);
        }
        let c1 = match a.c1 {
            Some(c) => c,
            None => {
                let profile = self.profile()?;
                let mut delays: Vec<usize> = profile.taps.iter().map(|t| t.delay).collect();
                delays.sort_unstable();
                delays.dedup();
                let gap = delays.windows(2).map(|w| w[1] - w[0]).min().unwrap_or(1);
                select_c1(self.alpha_max()?, a.k_nu as u64, gap as u64, a.n as u64)?
            }
        };
        let c2 = a.c2.unwrap_or_else(|| select_c2(a.n));
        AfdmParams::new(a.n, c1, c2, a.n_cpp)
    }

    pub fn system(&self) -> Result<ScmaSystem<f64>> {
        let m = self.scma.m;
        let cfg = ScmaConfig::standard(m);
        let alphabet = crate::scma::Alphabet::for_order(m)?;
        let sig = match &self.scma.signature {
            Some(path) => {
                let file = std::fs::File::open(path)?;
                SignatureMatrix::new(crate::scma::read_matrix(std::io::BufReader::new(file))?, &cfg)?
            }
            None => match self.direction {
                Direction::Uplink => SignatureMatrix::uplink(&cfg),
                Direction::Downlink => SignatureMatrix::downlink_reference(&cfg)?,
            },
        };
        let norm = self
            .scma
            .normalization
            .unwrap_or_else(|| PowerNormalization::default_for(self.direction));
        ScmaSystem::new(cfg, alphabet, &sig, self.direction, norm)
    }

    pub fn code(&self) -> Result<Option<LdpcCode>> {
        match &self.code {
            None => Ok(None),
            Some(c) => Ok(Some(match &c.alist {
                Some(p) => LdpcCode::from_alist(&std::fs::read_to_string(p)?)?,
                None => LdpcCode::default_code(),
            })),
        }
    }

    pub fn oamp_config(&self) -> OampConfig<f64> {
        let c = self.code.clone().unwrap_or_default();
        OampConfig {
            outer_iterations: c.outer_iterations,
            damping: c.damping,
            inner_decoder_iterations: c.inner_iterations,
            bounds: VarianceBounds::default(),
        }
    }
}
