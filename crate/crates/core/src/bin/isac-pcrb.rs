use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use isac_pcrb::beamopt::optimize;
use isac_pcrb::config::{load_config, ExperimentConfig, Scenario};
use isac_pcrb::linalg::{fro, hermitian_eig_desc};
use isac_pcrb::matfile::read_matrix;
use isac_pcrb::mcsim::{run_trials, Transmit};
use isac_pcrb::sweep::{emit_csv, emit_human, run_sweep, Scheme};
use isac_pcrb::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;
const EXIT_STRICT: u8 = 4;

/// Periodic PCRB and ISAC beamforming experiments.
#[derive(Parser)]
#[command(name = "isac-pcrb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the rate target for every enabled scheme.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV table here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of proposed,b1,b2,b3.
        #[arg(long)]
        schemes: Option<String>,
        /// Overrides `mc.seed` (used by the randomized baseline).
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with status 4 if a sweep invariant is violated.
        #[arg(long)]
        strict: bool,
        /// Format written to stdout.
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Monte-Carlo MAP estimation with the proposed beams at one rate target.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with status 4 if MCE < 0.95·PCRB or MCE > MSE.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate the PCRB of a transmit covariance read from a matrix file.
    Pcrb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        covariance: PathBuf,
    },
}

enum Failure {
    Config(Error),
    Solver(Error),
    Strict(Vec<String>),
    Other(Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

fn config(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    load_config(path).map_err(Failure::Config)
}

fn sweep(
    path: &PathBuf,
    out: Option<PathBuf>,
    schemes: Option<String>,
    seed: Option<u64>,
    strict: bool,
    format: Format,
) -> Result<(), Failure> {
    let mut cfg = config(path)?;
    if let Some(s) = seed {
        cfg.mc.seed = s;
    }
    let schemes = match schemes {
        Some(list) => Scheme::parse_list(&list).map_err(Failure::Config)?,
        None => Scheme::enabled(&cfg),
    };
    let table = run_sweep(&cfg, &schemes).map_err(Failure::Config)?;
    if let Some(p) = out {
        let mut f = BufWriter::new(File::create(p)?);
        emit_csv(&table, &mut f)?;
        f.flush()?;
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match format {
        Format::Human => emit_human(&table, &mut lock)?,
        Format::Csv => emit_csv(&table, &mut lock)?,
    }
    if table.all_failed() {
        return Err(Failure::Solver(Error::Domain("every sweep point failed".into())));
    }
    if strict {
        let v = table.invariant_violations(cfg.tolerances.tight);
        if !v.is_empty() {
            return Err(Failure::Strict(v));
        }
    }
    Ok(())
}

fn validate(path: &PathBuf, rate: f64, trials: Option<usize>, seed: Option<u64>, strict: bool) -> Result<(), Failure> {
    let cfg = config(path)?;
    let sc = Scenario::from_config(&cfg).map_err(Failure::Config)?;
    let inst = sc.instance(rate).map_err(Failure::Config)?;
    let beams = optimize(&inst, &sc.tolerances).map_err(Failure::Solver)?;
    let trials = trials.unwrap_or(cfg.mc.trials);
    let stats = run_trials(&sc, &Transmit::from(&beams), trials, seed.unwrap_or(cfg.mc.seed), cfg.mc.grid_size).map_err(Failure::Other)?;
    println!("rate target      {rate:.6} bps/Hz (achieved {:.6}, case {})", beams.rate, beams.case);
    println!("trials           {}", stats.trials);
    println!("pcrb             {:.6e}", stats.pcrb_ref);
    println!("mce              {:.6e} ± {:.2e}", stats.mce, stats.mce_std_err);
    println!("mse              {:.6e}", stats.mse);
    println!("mce / pcrb       {:.4}", stats.mce / stats.pcrb_ref);
    if !stats.bound_consistent() {
        println!("note: mce falls below the bound by more than 3 standard errors");
    }
    if strict {
        let mut v = Vec::new();
        if stats.mce < 0.95 * stats.pcrb_ref {
            v.push(format!("mce {:.6e} below 0.95·pcrb {:.6e}", stats.mce, stats.pcrb_ref));
        }
        if stats.mce > stats.mse + 1e-12 {
            v.push(format!("mce {:.6e} above mse {:.6e}", stats.mce, stats.mse));
        }
        if !v.is_empty() {
            return Err(Failure::Strict(v));
        }
    }
    Ok(())
}

fn pcrb(path: &PathBuf, covariance: &PathBuf) -> Result<(), Failure> {
    let cfg = config(path)?;
    let sc = Scenario::from_config(&cfg).map_err(Failure::Config)?;
    let r = read_matrix(covariance).map_err(Failure::Config)?;
    let n = sc.matrices.n_tx();
    if r.nrows() != n || r.ncols() != n {
        return Err(Failure::Config(Error::MatrixFile { line: 0, msg: format!("expected {n}×{n}, got {}×{}", r.nrows(), r.ncols()) }));
    }
    let scale = fro(&r).max(f64::MIN_POSITIVE);
    if fro(&(&r - r.adjoint())) > 1e-9 * scale {
        return Err(Failure::Config(Error::MatrixFile { line: 0, msg: "covariance is not Hermitian".into() }));
    }
    let (eig, _) = hermitian_eig_desc(&r);
    if eig[n - 1] < -1e-9 * eig[0].abs() {
        return Err(Failure::Config(Error::MatrixFile {
            line: 0,
            msg: format!("covariance is not positive semidefinite (λ_min = {:.3e})", eig[n - 1]),
        }));
    }
    let g = sc.matrices.sensing_gain(&r).map_err(Failure::Other)?;
    let bound = sc.matrices.pcrb_periodic(&sc.link, &r).map_err(Failure::Other)?;
    let power = r.trace().re;
    println!("pcrb             {bound:.11e}");
    println!("sensing_gain     {g:.11e}");
    println!("prior_fisher     {:.11e}", sc.matrices.prior_fisher);
    println!("power_w          {power:.11e} (budget {:.11e})", sc.power);
    if power > sc.power * (1.0 + 1e-8) {
        eprintln!("warning: covariance exceeds the power budget");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, out, schemes, seed, strict, format } => sweep(&config, out, schemes, seed, strict, format),
        Command::Validate { config, rate, trials, seed, strict } => validate(&config, rate, trials, seed, strict),
        Command::Pcrb { config, covariance } => pcrb(&config, &covariance),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ALL_FAILED)
        }
        Err(Failure::Strict(v)) => {
            for m in v {
                eprintln!("invariant violated: {m}");
            }
            ExitCode::from(EXIT_STRICT)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
