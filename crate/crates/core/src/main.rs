use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cgtrack::compressors::{verify_assumption, CompressorConfig};
use cgtrack::harness::{self, output, ExperimentConfig};
use cgtrack::Error;

#[derive(Parser)]
#[command(name = "cgtrack", version, about = "Compressed gradient tracking experiments")]
struct Cli {
    /// Root seed; overrides CGT_SEED and the config's seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every cell of an experiment config.
    Run {
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir, then ./out/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot script.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Print the parameter-region constants for each cell as JSON.
    Bounds { config: PathBuf },
    /// Empirically check a compressor's error assumption.
    VerifyCompressor {
        /// A compressor kind name, or a TOML file with a compressor table.
        spec: String,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Run the built-in 20-agent, 50-dimensional logistic scenario.
    ReplicateSection5 {
        #[arg(long, default_value = "out/section5")]
        out: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        gnuplot: bool,
    },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn root_seed(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("CGT_SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Failure::Config(format!("CGT_SEED `{v}` is not an integer"))),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let cfg = ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(match seed {
        Some(s) => cfg.with_root_seed(s),
        None => cfg,
    })
}

fn execute(cfg: &ExperimentConfig, out: PathBuf, gnuplot: bool) -> Result<(), Failure> {
    let result = harness::run_experiment(cfg)?;
    let written = output::write_outputs(&result, &out, gnuplot)?;
    for r in &result.report.rows {
        let pct = r.percent.map_or_else(|| "-".to_string(), |p| format!("{p:.2}%"));
        let bits = r.bits.map_or_else(|| "unreached".to_string(), |b| b.to_string());
        println!("{:<36} {:>12} {:>9}  {}", r.label, bits, pct, r.status);
    }
    println!("wrote {} files to {}", written.len(), out.display());
    let failed: Vec<&str> = result.report.rows.iter().filter(|r| r.status != "completed").map(|r| r.label.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(format!("cells did not complete: {}", failed.join(", "))))
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let seed = root_seed(cli.seed)?;
    match cli.cmd {
        Cmd::Run { config, out, gnuplot } => {
            let cfg = load(&config, seed)?;
            let out = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(&cfg.scenario));
            execute(&cfg, out, gnuplot)
        }
        Cmd::Bounds { config } => {
            let cfg = load(&config, seed)?;
            let report = harness::bounds_report(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            Ok(())
        }
        Cmd::VerifyCompressor { spec, d, trials } => {
            let comp_cfg = if spec.ends_with(".toml") {
                let text = std::fs::read_to_string(&spec).map_err(|e| Failure::Config(format!("{spec}: {e}")))?;
                toml::from_str::<CompressorConfig>(&text).map_err(|e| Failure::Config(e.to_string()))?
            } else {
                CompressorConfig::named(&spec)
            };
            let comp = comp_cfg.resolve(d).map_err(|e| Failure::Config(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
            let report = verify_assumption(&comp, trials, d, &mut rng).map_err(|e| Failure::Config(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Run(format!("{} violated its assumption {} times", report.label, report.violations)))
            }
        }
        Cmd::ReplicateSection5 { out, iters, gnuplot } => {
            let mut cfg = harness::section5_config();
            if let Some(s) = seed {
                cfg = cfg.with_root_seed(s);
            }
            if let Some(it) = iters {
                cfg.iters = it;
            }
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            execute(&cfg, out, gnuplot)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
