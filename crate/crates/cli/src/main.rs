use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use fss_core::ingest::{parse_corpus, IngestError, InputFiles};
use fss_core::pipeline::{rerender, run_to_dir, PipelineError, REPORT_DIR};
use fss_core::reporting::{Format, RenderError};
use fss_core::synth::{generate, SynthError, SynthParams};
use fss_core::{Config, ConfigError, InputPaths};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fss",
    version,
    about = "Field strength indicators from rosters, publications and citations"
)]
struct Cli {
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the input tables and print the validation report.
    Validate(InputArgs),
    /// Run the full pipeline and write a run directory.
    Run {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "all", value_delimiter = ',')]
        format: Vec<FormatArg>,
    },
    /// Generate a synthetic corpus and a matching config.
    Synth(SynthArgs),
    /// Re-render report tables from a previous run directory.
    Report {
        /// Run directory written by `fss run`.
        #[arg(long)]
        run: PathBuf,
        /// Where to write the tables; defaults to the run's report directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all", value_delimiter = ',')]
        format: Vec<FormatArg>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Configuration file (TOML). Input paths inside it are relative to it.
    #[arg(long, conflicts_with = "data")]
    config: Option<PathBuf>,
    /// Directory holding the four input tables under their default names;
    /// analysis and cost settings take their defaults.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for the CSV tables and `config.toml`.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with generator parameters; flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    n_udas: Option<usize>,
    #[arg(long, alias = "n-fields")]
    n_fields_per_uda: Option<usize>,
    /// Professors per field, either `N` or `MIN-MAX`.
    #[arg(long)]
    professors: Option<String>,
    #[arg(long)]
    hca_fraction: Option<f64>,
    /// Give every article this citation count.
    #[arg(long)]
    constant_citations: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Markdown,
    All,
}

fn formats(args: &[FormatArg]) -> Vec<Format> {
    let mut out: Vec<Format> = args
        .iter()
        .flat_map(|f| match f {
            FormatArg::Csv => vec![Format::Csv],
            FormatArg::Json => vec![Format::Json],
            FormatArg::Markdown => vec![Format::Markdown],
            FormatArg::All => Format::ALL.to_vec(),
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = if matches!(e, ConfigError::Io { .. }) {
            EXIT_IO
        } else {
            EXIT_CONFIG
        };
        Failure::new(code, e.to_string())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Invalid(issues) => {
                let mut msg = format!("{} validation error(s)", issues.len());
                for issue in &issues {
                    msg.push_str(&format!("\n  {issue}"));
                }
                Failure::new(EXIT_VALIDATION, msg)
            }
            io @ IngestError::Io { .. } => Failure::new(EXIT_IO, io.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let stage = e.stage();
        match e {
            PipelineError::Config(c) => c.into(),
            PipelineError::Ingest(i) => {
                let f = Failure::from(i);
                Failure::new(f.code, format!("stage {stage}: {}", f.message))
            }
            PipelineError::Io { .. }
            | PipelineError::Cache { .. }
            | PipelineError::Render(RenderError::Io { .. }) => Failure::new(EXIT_IO, e.to_string()),
            other => Failure::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidParams(_) => Failure::new(EXIT_CONFIG, e.to_string()),
            SynthError::Io { .. } => Failure::new(EXIT_IO, e.to_string()),
        }
    }
}

fn load_config(args: &InputArgs) -> Result<Config, Failure> {
    match (&args.config, &args.data) {
        (Some(path), _) => Ok(Config::load(path)?),
        (None, Some(dir)) => Ok(Config {
            inputs: InputPaths::in_dir(dir),
            ..Config::default()
        }),
        (None, None) => Err(Failure::new(
            EXIT_CONFIG,
            "either --config or --data is required",
        )),
    }
}

fn validate(args: &InputArgs) -> Result<(), Failure> {
    let config = load_config(args)?;
    let files = InputFiles::read(&config.inputs)?;
    let corpus = parse_corpus(files.texts(), &config.analysis)?;
    let r = &corpus.report;
    println!("0 errors");
    for (name, c) in [
        ("researchers", &r.researchers),
        ("publications", &r.publications),
        ("authorships", &r.authorships),
    ] {
        println!(
            "{name}: {} parsed, {} kept, {} dropped",
            c.parsed, c.kept, c.dropped
        );
    }
    let warnings = r.warnings();
    println!("{} warning(s)", warnings.len());
    for w in warnings {
        println!("  warning: {w}");
    }
    Ok(())
}

fn run(args: &InputArgs, out: &Path, format: &[FormatArg]) -> Result<(), Failure> {
    let config = load_config(args)?;
    let (_, manifest) = run_to_dir(&config, out, &formats(format))?;
    for w in &manifest.warnings {
        warn!("{w}");
    }
    let counts = &manifest.counts;
    println!(
        "{} researchers, {} publications, {} fields, {} disciplines",
        counts.researchers, counts.publications, counts.fields, counts.disciplines
    );
    for p in &config.analysis.hca_percentiles {
        let label = p.label();
        println!(
            "top {p}: {} highly cited articles, {} top scientists",
            counts.hca.get(&label).copied().unwrap_or(0),
            counts.top_scientists.get(&label).copied().unwrap_or(0)
        );
    }
    println!(
        "{} warning(s); results in {}",
        manifest.warnings.len(),
        out.display()
    );
    info!("config hash {}", manifest.config_hash);
    Ok(())
}

fn parse_range(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::new(EXIT_CONFIG, format!("invalid professor range `{s}`"));
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    match s.split_once('-') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let mut params = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_IO, format!("cannot read {}: {e}", path.display()))
            })?;
            toml::from_str::<SynthParams>(&text).map_err(|e| {
                Failure::new(EXIT_CONFIG, format!("cannot parse {}: {e}", path.display()))
            })?
        }
        None => SynthParams::default(),
    };
    params.seed = args.seed;
    if let Some(n) = args.n_udas {
        params.n_udas = n;
    }
    if let Some(n) = args.n_fields_per_uda {
        params.n_fields_per_uda = n;
    }
    if let Some(r) = &args.professors {
        params.professors_per_field = parse_range(r)?;
    }
    if let Some(f) = args.hca_fraction {
        params.hca_fraction = f;
    }
    if args.constant_citations.is_some() {
        params.constant_citations = args.constant_citations;
    }
    let corpus = generate(&params)?;
    corpus.write_to(&args.out)?;
    let config_path = args.out.join("config.toml");
    std::fs::write(&config_path, Config::default().to_toml_string()).map_err(|e| {
        Failure::new(
            EXIT_IO,
            format!("cannot write {}: {e}", config_path.display()),
        )
    })?;
    println!(
        "wrote synthetic corpus (seed {}) to {}",
        params.seed,
        args.out.display()
    );
    Ok(())
}

fn report(run: &Path, out: Option<&Path>, format: &[FormatArg]) -> Result<(), Failure> {
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run.join(REPORT_DIR));
    let manifest = rerender(run, &formats(format), &dir)?;
    println!(
        "rendered {} file(s) to {}",
        manifest.entries.len(),
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::Validate(args) => validate(args),
        Command::Run { input, out, format } => run(input, out, format),
        Command::Synth(args) => synth(args),
        Command::Report { run, out, format } => report(run, out.as_deref(), format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
