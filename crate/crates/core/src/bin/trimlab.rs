use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use trimlab::dynsys::SystemId;
use trimlab::harness::config::parse_checkpoint_range;
use trimlab::harness::{parse_config_str, run_experiment, ExperimentKind, Overrides};
use trimlab::observables::{Aperture, Profile};
use trimlab::trimming::TrimSpec;

/// Simulate trimmed Birkhoff sums and check them against their limit laws.
///
/// Exit status is 0 iff every acceptance rule of the experiment passes.
/// Set TRIMLAB_WORKERS to choose the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "trimlab", version)]
struct Cli {
    /// slln-light, slln-inter, slln-inter-d, weak-law, dlt-light, dlt-inter,
    /// poisson-returns, ppp-limit or near-equivalence
    experiment: ExperimentKind,
    /// TOML config; without it the experiment's defaults are used
    #[arg(long)]
    config: Option<PathBuf>,
    /// iid, doubling, catmap or gauss
    #[arg(long)]
    system: Option<SystemId>,
    /// Singularity order β
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated coordinates of the singular site
    #[arg(long, value_delimiter = ',')]
    site: Option<Vec<f64>>,
    /// radial, oscillatory or digit
    #[arg(long)]
    profile: Option<Profile>,
    /// full or half
    #[arg(long)]
    aperture: Option<Aperture>,
    /// light:K, inter:pow:G or inter:polylog:P
    #[arg(long)]
    trim: Option<TrimSpec>,
    /// Comma-separated list or a range like 1e4:1e7:x10
    #[arg(long)]
    checkpoints: Option<String>,
    /// Number of independent orbits
    #[arg(long)]
    replicas: Option<usize>,
    /// Master seed; equal seeds give byte-identical output
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn checkpoints(s: &str) -> trimlab::Result<Vec<u64>> {
    if s.contains(':') {
        return parse_checkpoint_range(s);
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| *v >= 1.0)
                .map(|v| v.round() as u64)
                .ok_or_else(|| trimlab::Error::InvalidArgument(format!("bad checkpoint `{t}`")))
        })
        .collect()
}

fn run(cli: Cli) -> trimlab::Result<bool> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| trimlab::Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| trimlab::Error::config("", e.message().to_string()))?;
    let overrides = Overrides {
        system: cli.system,
        beta: cli.beta,
        site: cli.site,
        profile: cli.profile,
        aperture: cli.aperture,
        trim: cli.trim,
        checkpoints: cli.checkpoints.as_deref().map(checkpoints).transpose()?,
        replicas: cli.replicas,
        seed: cli.seed,
        output_dir: cli.out,
    };
    let config = match table.get("experiment") {
        Some(given) => {
            if given.as_str() != Some(cli.experiment.name()) {
                return Err(trimlab::Error::config(
                    "experiment",
                    format!("config is for {given}, command line asks for `{}`", cli.experiment),
                ));
            }
            parse_config_str(&text, &overrides)?
        }
        None => {
            let text = format!("experiment = \"{}\"\n{text}", cli.experiment);
            parse_config_str(&text, &overrides).map_err(|e| match e {
                // report lines of the file as given
                trimlab::Error::Config { line, field, message } => trimlab::Error::Config {
                    line: line.map(|l| l.saturating_sub(1)),
                    field,
                    message,
                },
                other => other,
            })?
        }
    };
    let outcome = run_experiment(&config)?;
    for r in &outcome.rules {
        println!(
            "{} {}: {:.6} (threshold {:.6})",
            if r.report.pass { "PASS" } else { "FAIL" },
            r.rule,
            r.report.statistic,
            r.report.threshold
        );
    }
    println!("outputs in {}", config.output_dir.display());
    Ok(outcome.all_passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
