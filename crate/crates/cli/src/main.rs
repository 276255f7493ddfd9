use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pma_core::moment::DEFAULT_RANK_TOL;
use pma_core::{
    analyze, default_dims, export_axes, export_eigenvalues, export_report, export_scores,
    load_frame, report, Delimiter, Design, FitOptions, Format, PmaError, Strategy, StrategyParams,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  output files could not be written
  2  invalid flags or configuration
  3  input could not be read or parsed
  4  numerical failure (decomposition error or zero-rank moment)";

/// Simplex principal moment analysis.
#[derive(Debug, Parser)]
#[command(name = "pma", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write eigenvalues, axes, scores and report files.
    #[command(after_help = EXIT_CODES)]
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyName {
    Points,
    Groupby,
    Knn,
    Chain,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DelimiterArg {
    Auto,
    Tab,
    Comma,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Data matrix: variables in rows, samples in columns.
    #[arg(long)]
    data: PathBuf,
    /// Sample annotations: one row per sample.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// How samples are combined into simplexes.
    #[arg(long, value_enum)]
    strategy: StrategyName,
    /// Annotation column for `groupby`.
    #[arg(long)]
    group_column: Option<String>,
    /// Neighbor count for `knn`.
    #[arg(long)]
    k: Option<usize>,
    /// Numeric annotation column ordering samples for `chain`.
    #[arg(long)]
    order_column: Option<String>,
    /// Annotation column splitting `chain` into separate series.
    #[arg(long)]
    series_column: Option<String>,
    /// Weight each simplex by its volume.
    #[arg(long)]
    volume_weights: bool,
    /// Subtract the measure mean before decomposing.
    #[arg(long)]
    center: bool,
    /// Projection dimension; defaults to min(3, rank).
    #[arg(long)]
    dims: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Output file format.
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    /// Input field delimiter.
    #[arg(long, value_enum, default_value_t = DelimiterArg::Auto)]
    delimiter: DelimiterArg,
    /// Relative eigenvalue cutoff for the retained rank.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<PmaError> for Failure {
    fn from(err: PmaError) -> Self {
        let code = match err {
            PmaError::Parse { .. } | PmaError::DuplicateId { .. } | PmaError::EmptyInput(_) => 3,
            PmaError::Decomposition(_) | PmaError::RankZero => 4,
            _ => 2,
        };
        Failure::new(code, err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("error: invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    let Command::Fit(args) = cli.command;
    match fit(&args) {
        Ok(table) => {
            print!("{table}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            let message = failure.message.replace('\n', " ");
            eprintln!("error: {message}");
            ExitCode::from(failure.code)
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(3, format!("cannot read {}: {e}", path.display())))
}

fn design(args: &FitArgs) -> Result<Design, Failure> {
    let name = match args.strategy {
        StrategyName::Points => "points",
        StrategyName::Groupby => "groupby",
        StrategyName::Knn => "knn",
        StrategyName::Chain => "chain",
    };
    let params = StrategyParams {
        group_column: args.group_column.clone(),
        k: args.k,
        order_column: args.order_column.clone(),
        series_column: args.series_column.clone(),
        simplexes: None,
    };
    Ok(Design {
        strategy: Strategy::from_parts(name, &params)?,
        volume_weights: args.volume_weights,
    })
}

fn fit(args: &FitArgs) -> Result<String, Failure> {
    let design = design(args)?;
    if !(args.rank_tol.is_finite() && args.rank_tol >= 0.0) {
        return Err(Failure::new(2, "--rank-tol must be a finite non-negative number"));
    }
    let data = read_input(&args.data)?;
    let metadata = args.metadata.as_deref().map(read_input).transpose()?;
    let delimiter = match args.delimiter {
        DelimiterArg::Auto => Delimiter::Auto,
        DelimiterArg::Tab => Delimiter::Tab,
        DelimiterArg::Comma => Delimiter::Comma,
    };
    let frame = load_frame(&data, metadata.as_deref(), delimiter)
        .map_err(|e| Failure::new(3, e.to_string()))?;

    let options = FitOptions {
        center: args.center,
        rank_tol: args.rank_tol,
        ..FitOptions::default()
    };
    let analysis = analyze(&frame, &design, options)?;
    let dims = args.dims.unwrap_or_else(|| default_dims(&analysis.model));
    let view = report(&analysis.model, &analysis.set, &frame, dims)?;

    let format = match args.format {
        FormatArg::Tsv => Format::Tsv,
        FormatArg::Json => Format::Json,
    };
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::new(1, format!("cannot create {}: {e}", args.out.display())))?;
    let files = [
        ("eigenvalues", export_eigenvalues(&view, format)),
        ("axes", export_axes(&view, format)),
        ("scores", export_scores(&view, format)),
        ("report", export_report(&view, format)),
    ];
    for (stem, body) in files {
        let path = args.out.join(format!("{stem}.{}", format.extension()));
        fs::write(&path, body)
            .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))?;
    }
    for warning in &analysis.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(export_eigenvalues(&view, Format::Tsv) + "\n")
}
