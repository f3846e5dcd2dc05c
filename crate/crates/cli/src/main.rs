//! `poismix`: sample, tabulate and classify Poisson mixtures, fit GPD tails to
//! count data and run the simulation studies.
//!
//! Exit status is 0 on success, 1 for usage or configuration errors and 2
//! for runtime or numerical failures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use poismix_core::evt::{self, DEFAULT_BOOTSTRAP};
use poismix_core::experiments::config::DEFAULT_SEED;
use poismix_core::mixture::write_table_csv;
use poismix_core::rng::substream;
use poismix_core::{
    DevianceResult, Error, ExperimentConfig, ExperimentTag, Family, GofResult, GpdFit, MixingSpec, MixtureModel,
    OutputFormat, TailClass,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "poismix",
    version,
    about = "Poisson mixture tails, fits and simulation studies"
)]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Experiment configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Draw counts from a Poisson mixture.
    Sample {
        #[command(flatten)]
        mixing: MixingArgs,
        #[arg(long, default_value_t = 100)]
        size: usize,
    },
    /// Tabulate pmf, survival and the k = 1 tail ratio.
    Pmf {
        #[command(flatten)]
        mixing: MixingArgs,
        #[arg(long, default_value_t = 50)]
        max_n: u64,
    },
    /// Print the tail class of the mixing law and the tail-ratio limit.
    Classify {
        #[command(flatten)]
        mixing: MixingArgs,
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
    /// Peaks-over-threshold analysis of a count file.
    PotFit {
        /// One count per line, or a single-column CSV with header `count`.
        input: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        quantile: f64,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
    },
    /// Run a simulation study: table1, table2, beta_sweep or maxima.
    Experiment { tag: String },
}

#[derive(Args)]
struct MixingArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse::<Family>().map_err(|e| e.to_string())
}

impl MixingArgs {
    fn spec(&self) -> Result<MixingSpec, Failure> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Failure::usage(format!("--family {} needs --{name}", self.family)))
        };
        let spec = match self.family {
            Family::Frechet => MixingSpec::frechet(need(self.alpha, "alpha")?, need(self.beta, "beta")?),
            Family::Lognormal => MixingSpec::lognormal(need(self.mu, "mu")?, need(self.sigma, "sigma")?),
            Family::Gamma => MixingSpec::gamma(need(self.alpha, "alpha")?, need(self.beta, "beta")?),
            Family::Uniform => MixingSpec::uniform(need(self.x0, "x0")?),
            Family::ScaledBeta => MixingSpec::scaled_beta(
                need(self.x0, "x0")?,
                need(self.alpha, "alpha")?,
                need(self.beta, "beta")?,
            ),
        };
        spec.map_err(Failure::usage)
    }
}

/// An error with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }

    fn runtime(e: impl ToString) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Self::usage(e),
            _ => Self::runtime(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::runtime(e)
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(Failure::runtime)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct SampleOutput<'a> {
    spec: &'a MixingSpec,
    seed: u64,
    counts: &'a [u64],
}

#[derive(Serialize)]
struct ClassifyOutput {
    tail_class: TailClass,
    label: String,
    k: u32,
    tail_ratio_limit: f64,
}

#[derive(Serialize)]
struct PotFitOutput {
    quantile: f64,
    threshold: f64,
    source_size: usize,
    n_excesses: usize,
    gpd: GpdFit,
    exponential: GpdFit,
    anderson_darling: GofResult,
    deviance: DevianceResult,
}

fn read_counts(path: &Path) -> Result<Vec<u64>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut counts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.trim().trim_matches('"');
        if field.is_empty() || (counts.is_empty() && i == 0 && field == "count") {
            continue;
        }
        let value = field.parse::<u64>().map_err(|_| {
            Failure::usage(format!(
                "{}:{}: expected a non-negative integer, got '{field}'",
                path.display(),
                i + 1
            ))
        })?;
        counts.push(value);
    }
    Ok(counts)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Sample { mixing, size } => {
            let spec = mixing.spec()?;
            if *size == 0 {
                return Err(Failure::usage("--size must be at least 1"));
            }
            let counts = MixtureModel::new(spec)?.sample(*size, &mut substream(seed, "cli/sample", 0, 0));
            let mut out = sink(&cli.out)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    writeln!(out, "count")?;
                    for c in &counts {
                        writeln!(out, "{c}")?;
                    }
                }
                Format::Json => write_json(
                    &SampleOutput {
                        spec: &spec,
                        seed,
                        counts: &counts,
                    },
                    &mut out,
                )?,
            }
            out.flush()?;
        }
        Command::Pmf { mixing, max_n } => {
            let model = MixtureModel::new(mixing.spec()?)?;
            let rows = model.table(*max_n)?;
            let mut out = sink(&cli.out)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_table_csv(&rows, &mut out)?,
                Format::Json => write_json(&rows, &mut out)?,
            }
            out.flush()?;
        }
        Command::Classify { mixing, k } => {
            if *k == 0 {
                return Err(Failure::usage("--k must be at least 1"));
            }
            let model = MixtureModel::new(mixing.spec()?)?;
            let tail = *model.tail();
            let limit = model.tail_ratio_limit(*k);
            let mut out = sink(&cli.out)?;
            match cli.format {
                None => {
                    writeln!(out, "{tail}")?;
                    writeln!(out, "tail-ratio limit (k={k}): {limit}")?;
                }
                Some(Format::Json) => write_json(
                    &ClassifyOutput {
                        tail_class: tail,
                        label: tail.to_string(),
                        k: *k,
                        tail_ratio_limit: limit,
                    },
                    &mut out,
                )?,
                Some(Format::Csv) => {
                    writeln!(out, "tail_class,k,tail_ratio_limit")?;
                    writeln!(out, "\"{tail}\",{k},{limit}")?;
                }
            }
            out.flush()?;
        }
        Command::PotFit {
            input,
            quantile,
            bootstrap,
        } => {
            if !(*quantile > 0.0 && *quantile < 1.0) {
                return Err(Failure::usage("--quantile must lie in (0, 1)"));
            }
            if *bootstrap < evt::MIN_BOOTSTRAP {
                return Err(Failure::usage(format!(
                    "--bootstrap must be at least {}",
                    evt::MIN_BOOTSTRAP
                )));
            }
            let counts = read_counts(input)?;
            let excess = evt::extract_excesses(&counts, *quantile)?;
            let gpd = evt::fit_gpd_mle(&excess.excesses)?;
            let exponential = evt::fit_exponential(&excess.excesses)?;
            let result = PotFitOutput {
                quantile: *quantile,
                threshold: excess.threshold,
                source_size: excess.source_size,
                n_excesses: excess.excesses.len(),
                anderson_darling: evt::ad_test_gpd(&excess.excesses, *bootstrap, seed)?,
                deviance: evt::deviance_test(&gpd, &exponential)?,
                gpd,
                exponential,
            };
            let mut out = sink(&cli.out)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(&result, &mut out)?,
                Format::Csv => {
                    writeln!(
                        out,
                        "quantile,threshold,n_excesses,gamma,sigma,log_likelihood,ad_statistic,ad_p_value,deviance,deviance_p_value"
                    )?;
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{}",
                        result.quantile,
                        result.threshold,
                        result.n_excesses,
                        result.gpd.gamma,
                        result.gpd.sigma,
                        result.gpd.log_likelihood,
                        result.anderson_darling.statistic,
                        result.anderson_darling.p_value,
                        result.deviance.d,
                        result.deviance.p_value
                    )?;
                }
            }
            out.flush()?;
        }
        Command::Experiment { tag } => {
            let tag: ExperimentTag = tag.parse()?;
            let mut config = match &cli.config {
                Some(path) => ExperimentConfig::from_path(tag, path).map_err(|e| match e {
                    Error::Io(m) => Failure::usage(m),
                    other => Failure::from(other),
                })?,
                None => ExperimentConfig::defaults(tag),
            };
            if let Some(s) = cli.seed {
                config.base_seed = s;
            }
            if let Some(path) = &cli.out {
                config.output = Some(path.clone());
            }
            let report = poismix_core::experiments::run(&config)?;
            let format = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            let mut out = sink(&config.output)?;
            report.write(format, &mut out)?;
            out.flush()?;
            eprintln!("{tag}: finished in {:.1} s", report.elapsed.as_secs_f64());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message.lines().next().unwrap_or_default());
            ExitCode::from(f.code)
        }
    }
}
