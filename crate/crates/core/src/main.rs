use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tnss_core::harness::{cmd_report, cmd_run, generate_synthetic, save_bundle_with_manifest, split_bundle, BundleManifest, RunConfig};
use tnss_core::TNStructure;

#[derive(Parser)]
#[command(name = "tnss", version, about = "Tensor network structure search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a search described by a JSON config. Trailing `--key value` pairs
    /// override config fields; nested fields use dots (`--fit.max_iters 800`).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Summarize a finished run directory.
    Report { dir: PathBuf },
    /// Write a synthetic bundle drawn from a planted structure.
    GenSynthetic {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        /// Upper-triangular rank vector.
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of additive Gaussian noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a bundle in sample order into `<out>/train` and `<out>/test`.
    Split {
        bundle: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        frac: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            bail!("expected `--key value`, found `{arg}`");
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_owned(), v.to_owned())),
            None => {
                let value = it.next().with_context(|| format!("override `--{key}` has no value"))?;
                out.push((key.to_owned(), value.clone()));
            }
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let overrides = parse_overrides(&overrides)?;
            let config = RunConfig::load(&config, &overrides)
                .with_context(|| format!("loading {}", config.display()))?;
            let summary = cmd_run(&config)?;
            let r = &summary.report;
            println!(
                "best {:?} train objective {:.4}{} after {} evaluations (best at {})",
                r.ranks,
                r.train.objective,
                r.test.as_ref().map(|t| format!(", test {:.4}", t.objective)).unwrap_or_default(),
                r.evals_used,
                r.evals_to_best
            );
            println!("wrote {}", summary.out_dir.display());
        }
        Command::Report { dir } => print!("{}", cmd_report(&dir)?),
        Command::GenSynthetic {
            shape,
            ranks,
            samples,
            seed,
            noise,
            out,
        } => {
            let planted = TNStructure::new(shape.len(), ranks)?;
            let dataset = generate_synthetic(&shape, &planted, samples, noise, seed)?;
            let manifest = BundleManifest {
                planted_ranks: Some(planted.ranks().to_vec()),
                ..BundleManifest::for_dataset(&dataset)
            };
            save_bundle_with_manifest(&dataset, &manifest, &out)?;
            println!("wrote {samples} samples of shape {shape:?} to {}", out.display());
        }
        Command::Split { bundle, frac, out } => {
            let (train, test) = split_bundle(&bundle, frac, &out)?;
            println!("train {train} / test {test} samples under {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
