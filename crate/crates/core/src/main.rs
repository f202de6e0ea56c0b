use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use mfvb::gmm::{cavi_fit, parse_observations, FitOptions, GmmInit, GmmPrior, GmmStateJson};
use mfvb::harness::{
    fit_rate_slope_with, read_config, read_rows, run_sweep, verify_suite, write_report, Metric, SlopeOptions,
    SweepOptions, ValueKind,
};
use mfvb::lda::{cavi_fit_lda, read_corpus, sparse_dirichlet_prior, LdaFitOptions, LdaInit, LdaStateJson};
use mfvb::theory::{prior_mass_estimate, KlNeighborhoodSpec};
use mfvb::Error;

#[derive(Parser)]
#[command(name = "mfvb", version, about = "Variational Bayes fits, risk sweeps and property checks")]
struct Cli {
    /// Worker threads (defaults to MFVB_THREADS, then the number of cores).
    #[arg(long, global = true, env = "MFVB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Gaussian-mixture risk sweep and write CSV rows.
    GmmSweep(SweepArgs),
    /// Run an LDA risk sweep and write CSV rows.
    LdaSweep(SweepArgs),
    /// Fit the log-log slope of median risk against n from a sweep CSV.
    Slope {
        csv: PathBuf,
        #[arg(long)]
        metric: String,
        /// Fit the point-estimate column instead of the risk column.
        #[arg(long)]
        point: bool,
        /// Keep rows flagged as not converged or failed.
        #[arg(long)]
        include_flagged: bool,
        /// Append the report as a JSON line to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property and oracle batteries.
    Verify {
        #[arg(long, default_value_t = 2026)]
        seed: u64,
        /// Append the report as a JSON line to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one mixture to an observation file and write the state as JSON.
    GmmFit {
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 100.0)]
        prior_variance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit LDA to a corpus file (1-based word ids, one document per line).
    LdaFit {
        corpus: PathBuf,
        #[arg(long)]
        k: usize,
        /// Sparsity exponent c of the priors 1/V^c and 1/K^c.
        #[arg(long, default_value_t = 2.0)]
        sparsity: f64,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate prior mass of KL neighborhoods from a JSON request.
    PriorMass { spec: PathBuf },
}

#[derive(clap::Args)]
struct SweepArgs {
    config: PathBuf,
    /// CSV destination (overrides the config's output_path).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorMassRequest {
    alpha: f64,
    variance: f64,
    #[serde(default)]
    center: Option<Vec<f64>>,
    neighborhood: KlNeighborhoodSpec,
    m: usize,
    seed: u64,
}

enum Failure {
    Suite(String),
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn config_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn emit(json: String, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, json + "\n").map_err(|e| Failure::Run(format!("{}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GmmSweep(args) | Command::LdaSweep(args) => {
            let config = read_config(&args.config).map_err(|e| config_err(&args.config, e))?;
            let out = args.out.or_else(|| config.output_path.as_ref().map(PathBuf::from));
            if out.is_none() {
                return Err(Failure::Config("no output path: pass --out or set output_path".into()));
            }
            let outcome = run_sweep(&config, &SweepOptions { threads: None, output: out.clone() })?;
            let flagged = outcome.rows.iter().filter(|r| r.flag.is_set()).count();
            let floors: usize = outcome.fits.iter().map(|f| f.floor_hits).sum();
            println!("wrote {} rows ({flagged} flagged) to {}", outcome.rows.len(), out.unwrap().display());
            if floors > 0 {
                println!("{floors} Dirichlet parameters hit the positivity floor");
            }
            Ok(())
        }
        Command::Slope { csv, metric, point, include_flagged, out } => {
            let metric: Metric = metric.parse().map_err(|e| config_err(&csv, e))?;
            let rows = read_rows(&csv)?;
            let value = if point { ValueKind::Point } else { ValueKind::Risk };
            let report = fit_rate_slope_with(&rows, metric, SlopeOptions { value, include_flagged })?;
            println!("{}", pretty(&report));
            if let Some(p) = out {
                write_report(&p, &report)?;
            }
            Ok(())
        }
        Command::Verify { seed, out } => {
            let report = verify_suite(seed);
            for s in &report.suites {
                println!("{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
            }
            if let Some(p) = out {
                write_report(&p, &report)?;
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Suite(format!("failing suites: {}", report.failing().join(", "))))
            }
        }
        Command::GmmFit { data, k, restarts, seed, alpha, prior_variance, out } => {
            let text = fs::read_to_string(&data).map_err(|e| config_err(&data, e))?;
            let data = parse_observations(&text).map_err(|e| config_err(&data, e))?;
            let prior = GmmPrior::symmetric(k, alpha, vec![0.0; data.d()], prior_variance)?;
            let state = cavi_fit(&data, &prior, GmmInit::Seeded { seed, restarts }, FitOptions::default())?;
            emit(pretty(&GmmStateJson::from_state(&state)), out.as_deref())
        }
        Command::LdaFit { corpus, k, sparsity, restarts, seed, out } => {
            let (corpus, _) = read_corpus(&corpus).map_err(|e| config_err(&corpus, e))?;
            let (eta_beta, eta_gamma) = sparse_dirichlet_prior(corpus.vocab_size, k, sparsity)?;
            let opts = LdaFitOptions { restarts, ..LdaFitOptions::new(k, eta_beta, eta_gamma) };
            let state = cavi_fit_lda(&corpus, opts, LdaInit::Seeded(seed))?;
            emit(pretty(&LdaStateJson::from_state(&state)), out.as_deref())
        }
        Command::PriorMass { spec } => {
            let text = fs::read_to_string(&spec).map_err(|e| config_err(&spec, e))?;
            let req: PriorMassRequest = serde_json::from_str(&text).map_err(|e| config_err(&spec, e))?;
            let k = req.neighborhood.center_weights.len();
            let d = req.neighborhood.center_atoms.first().map_or(0, Vec::len);
            let prior = GmmPrior::symmetric(k, req.alpha, req.center.unwrap_or_else(|| vec![0.0; d]), req.variance)
                .map_err(|e| config_err(&spec, e))?;
            let mass = prior_mass_estimate(&prior, &req.neighborhood, req.m, req.seed)?;
            println!("{}", pretty(&mass));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Suite(msg)) | Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
