//! `sdcm`: measure confidentiality/utility of anonymized microdata,
//! anonymize CSV files, run parameter sweeps and generate test data.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdc_metrics::{
    evaluate, load_csv, run_sweep, simulate_correlated, sweep::emit_report, DatasetSource, Error,
    EvaluateOptions, Mapping, Method, ReportFormat, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "sdcm",
    version,
    about = "Confidentiality and utility metrics for anonymized microdata"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the metric report for an (original, anonymized) CSV pair
    Measure(MeasureArgs),
    /// Anonymize a CSV file with one method
    Anonymize(AnonymizeArgs),
    /// Run a parameter sweep from a config file and/or flags
    Sweep(SweepArgs),
    /// Generate a correlated Gaussian dataset as CSV
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MappingArg {
    Paired,
    Absent,
}

impl From<MappingArg> for Mapping {
    fn from(value: MappingArg) -> Self {
        match value {
            MappingArg::Paired => Mapping::Paired,
            MappingArg::Absent => Mapping::Absent,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct MeasureArgs {
    /// Original dataset (CSV with header)
    original: PathBuf,
    /// Anonymized dataset (CSV with header)
    anonymized: PathBuf,
    /// Compute CM3 (defaults to on when --mapping absent)
    #[arg(long, overrides_with = "no_cm3")]
    cm3: bool,
    /// Skip CM3
    #[arg(long = "no-cm3")]
    no_cm3: bool,
    /// Whether rows pair original with anonymized records
    #[arg(long, value_enum, default_value = "paired")]
    mapping: MappingArg,
    /// Seed for record-count alignment sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnonymizeArgs {
    /// Input dataset (CSV with header)
    input: PathBuf,
    /// mdav | laplace | additive | multiplicative | ipso | record-swap | column-shuffle
    #[arg(long)]
    method: String,
    /// Method parameter: k, epsilon, alpha, beta, or ipso output size (0 = input size)
    #[arg(long, default_value_t = 0.0)]
    param: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the anonymized CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Key-value config file; flags below override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated parameter values
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Original dataset CSV (alternative to --simulate-*)
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    simulate_n: Option<usize>,
    #[arg(long)]
    simulate_m: Option<usize>,
    #[arg(long)]
    simulate_rho: Option<f64>,
    /// Comma-separated attribute subset
    #[arg(long)]
    columns: Option<String>,
    #[arg(long, overrides_with = "no_cm3")]
    cm3: bool,
    #[arg(long = "no-cm3")]
    no_cm3: bool,
    #[arg(long, value_enum)]
    mapping: Option<MappingArg>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of records
    #[arg(long, short = 'n')]
    records: usize,
    /// Number of attributes
    #[arg(long, short = 'm')]
    attributes: usize,
    /// Constant pairwise correlation
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

fn write_output(output: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Error> {
    match output {
        Some(path) => std::fs::write(path, bytes).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn run_measure(args: MeasureArgs) -> Result<(), Error> {
    let x = load_csv(&args.original)?;
    let y = load_csv(&args.anonymized)?;
    let mapping: Mapping = args.mapping.into();
    let compute_cm3 = if args.cm3 {
        true
    } else if args.no_cm3 {
        false
    } else {
        mapping == Mapping::Absent
    };
    let report = evaluate(
        &x,
        &y,
        &EvaluateOptions {
            compute_cm3,
            mapping,
            seed: args.seed,
        },
    )?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_output(&args.output, json.as_bytes())
}

fn run_anonymize(args: AnonymizeArgs) -> Result<(), Error> {
    let method = Method::from_name_param(&args.method, args.param)?;
    let input = load_csv(&args.input)?;
    let output = method.apply(&input, args.seed)?;
    let mut buf = Vec::new();
    output.write_csv(&mut buf).map_err(|source| Error::Io {
        path: PathBuf::from("<buffer>"),
        source,
    })?;
    write_output(&args.output, &buf)
}

fn parse_list<T: std::str::FromStr>(value: &str, what: &str) -> Result<Vec<T>, Error> {
    value
        .split(',')
        .map(|v| v.trim().parse())
        .collect::<Result<Vec<T>, _>>()
        .map_err(|_| Error::Config(format!("cannot parse {what} list {value:?}")))
}

fn build_sweep_config(args: &SweepArgs) -> Result<SweepConfig, Error> {
    let mut method = None;
    let mut grid = None;
    let mut replicates = 1;
    let mut seed = 0;
    let mut dataset = None;
    let mut columns = None;
    let mut compute_cm3 = None;
    let mut mapping = None;

    if let Some(path) = &args.config {
        let cfg = SweepConfig::from_path(path)?;
        method = Some(cfg.method);
        grid = Some(cfg.grid);
        replicates = cfg.replicates;
        seed = cfg.seed;
        dataset = Some(cfg.dataset);
        columns = cfg.columns;
        compute_cm3 = cfg.compute_cm3;
        mapping = cfg.mapping;
    }

    if let Some(m) = &args.method {
        method = Some(m.clone());
    }
    if let Some(g) = &args.grid {
        grid = Some(parse_list(g, "grid")?);
    }
    if let Some(r) = args.replicates {
        replicates = r;
    }
    if let Some(s) = args.seed {
        seed = s;
    }
    match (&args.dataset, args.simulate_n, args.simulate_m, args.simulate_rho) {
        (Some(path), None, None, None) => dataset = Some(DatasetSource::Path(path.clone())),
        (None, Some(n), Some(m), Some(rho)) => {
            dataset = Some(DatasetSource::Simulate { n, m, rho })
        }
        (None, None, None, None) => {}
        _ => {
            return Err(Error::Config(
                "give either --dataset or all of --simulate-n/--simulate-m/--simulate-rho".into(),
            ))
        }
    }
    if let Some(c) = &args.columns {
        columns = Some(parse_list(c, "columns")?);
    }
    if args.cm3 {
        compute_cm3 = Some(true);
    } else if args.no_cm3 {
        compute_cm3 = Some(false);
    }
    if let Some(m) = args.mapping {
        mapping = Some(m.into());
    }

    let cfg = SweepConfig {
        method: method.ok_or_else(|| Error::Config("no method given".into()))?,
        grid: grid.ok_or_else(|| Error::Config("no parameter grid given".into()))?,
        replicates,
        seed,
        dataset: dataset.ok_or_else(|| Error::Config("no dataset or generator given".into()))?,
        columns,
        compute_cm3,
        mapping,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run_sweep_command(args: SweepArgs) -> Result<(), Error> {
    let cfg = build_sweep_config(&args)?;
    let result = run_sweep(&cfg)?;
    let mut buf = Vec::new();
    emit_report(&result, args.format.into(), &mut buf).map_err(|source| Error::Io {
        path: PathBuf::from("<buffer>"),
        source,
    })?;
    write_output(&args.output, &buf)
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let dataset = simulate_correlated(args.records, args.attributes, args.rho, args.seed)?;
    let mut buf = Vec::new();
    dataset.write_csv(&mut buf).map_err(|source| Error::Io {
        path: PathBuf::from("<buffer>"),
        source,
    })?;
    write_output(&args.output, &buf)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Measure(args) => run_measure(args),
        Command::Anonymize(args) => run_anonymize(args),
        Command::Sweep(args) => run_sweep_command(args),
        Command::Simulate(args) => run_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
