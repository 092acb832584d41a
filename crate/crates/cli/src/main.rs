use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use afdm_scma::harness::{
    nle_table, run_sweep, se_prediction, union_bound_curve, write_csv, write_mse_trace, write_series,
    ExperimentConfig, Receiver,
};
use afdm_scma::scma::{
    med, optimize_signature, read_matrix, write_matrix, Alphabet, OptimizerOptions, ScmaConfig, SignatureMatrix,
    DEFAULT_MED_CAP,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "afdm-scma", version, about = "AFDM-SCMA link-level experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the BER sweep of a configuration and writes it as CSV.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Iterative receiver only: BER of the first linear estimate.
        #[arg(long)]
        uncoded_out: Option<PathBuf>,
        /// Iterative receiver only: per-iteration MSE statistics.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Analytical curves for a configuration.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Signature matrices and their minimum Euclidean distance.
    Codebook {
        #[command(subcommand)]
        what: CodebookCmd,
    },
}

#[derive(Subcommand)]
enum Analysis {
    /// Union bound on the uncoded BER over the configured grid.
    Bound {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Largest number of joint hypotheses to enumerate.
        #[arg(long, default_value_t = 1e7)]
        cap: f64,
    },
    /// State-evolution MSE prediction for the iterative receiver.
    Se {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ebn0_db: f64,
        /// Channel draws averaged over.
        #[arg(long, default_value_t = 20)]
        frames: usize,
        /// Frames per decoder-table point.
        #[arg(long, default_value_t = 20)]
        table_frames: usize,
        #[arg(long, default_value_t = 40)]
        table_points: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Uplink,
    Downlink,
}

#[derive(Subcommand)]
enum CodebookCmd {
    /// Writes the reference signature matrix.
    Build {
        #[arg(long, value_enum, default_value_t = Which::Downlink)]
        direction: Which,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Searches for a downlink signature with a larger MED.
    Optimize {
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 400)]
        budget: usize,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the MED of a signature matrix file.
    Med {
        signature: PathBuf,
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            common,
            uncoded_out,
            trace_out,
        } => {
            let cfg = load(&config, &common)?;
            if cfg.receiver != Receiver::Oamp && (uncoded_out.is_some() || trace_out.is_some()) {
                bail!("--uncoded-out and --trace-out need the oamp receiver");
            }
            let res = run_sweep(&cfg)?;
            write_csv(&res.points, output(common.out.as_deref())?)?;
            if let Some(p) = uncoded_out {
                write_csv(&res.uncoded, output(Some(&p))?)?;
            }
            if let Some(p) = trace_out {
                write_mse_trace(&cfg.ebn0_grid_db, &res.mse, output(Some(&p))?)?;
            }
        }
        Command::Analyze { what } => match what {
            Analysis::Bound { config, common, cap } => {
                let cfg = load(&config, &common)?;
                let curve = union_bound_curve(&cfg, cap)?;
                write_series("ebn0_db", "ber_bound", &curve, output(common.out.as_deref())?)?;
            }
            Analysis::Se {
                config,
                common,
                ebn0_db,
                frames,
                table_frames,
                table_points,
            } => {
                let cfg = load(&config, &common)?;
                if let Some(t) = cfg.threads {
                    rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
                }
                let table = nle_table(&cfg, table_points, table_frames, cfg.seed)?;
                let se = se_prediction(&cfg, &table, ebn0_db, frames, cfg.seed)?;
                if se.clamped {
                    eprintln!("warning: state evolution left the tabulated decoder range");
                }
                let mut w = output(common.out.as_deref())?;
                writeln!(w, "iteration,tau,eta")?;
                for (t, (tau, eta)) in se.tau.iter().zip(&se.eta).enumerate() {
                    writeln!(
                        w,
                        "{},{},{}",
                        t + 1,
                        afdm_scma::harness::format_sig(*tau, 6),
                        afdm_scma::harness::format_sig(*eta, 6)
                    )?;
                }
            }
        },
        Command::Codebook { what } => match what {
            CodebookCmd::Build { direction, m, out } => {
                let cfg = ScmaConfig::standard(m);
                let sig = match direction {
                    Which::Uplink => SignatureMatrix::<f64>::uplink(&cfg),
                    Which::Downlink => SignatureMatrix::downlink_reference(&cfg)?,
                };
                write_matrix(&sig.z, output(out.as_deref())?)?;
            }
            CodebookCmd::Optimize {
                m,
                budget,
                restarts,
                seed,
                out,
            } => {
                let cfg = ScmaConfig::standard(m);
                let alphabet = Alphabet::<f64>::for_order(m)?;
                let sig = optimize_signature(&cfg, &alphabet, OptimizerOptions { budget, restarts, seed })?;
                eprintln!("med = {:.9}", med(&sig, &alphabet, DEFAULT_MED_CAP)?);
                write_matrix(&sig.z, output(out.as_deref())?)?;
            }
            CodebookCmd::Med { signature, m } => {
                let file = File::open(&signature).with_context(|| format!("opening {}", signature.display()))?;
                let z = read_matrix::<f64, _>(io::BufReader::new(file))?;
                let sig = SignatureMatrix::new(z, &ScmaConfig::standard(m))?;
                println!("{:.12}", med(&sig, &Alphabet::for_order(m)?, DEFAULT_MED_CAP)?);
            }
        },
    }
    Ok(())
}
