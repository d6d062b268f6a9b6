use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ohpm_core::fit::DEFAULT_SEED;
use ohpm_core::oracle::DEFAULT_STEP;

mod case;
mod commands;
mod error;
mod output;

/// Optimal homotopy perturbation solver for MHD Jeffery–Hamel flow with heat transfer.
#[derive(Parser, Debug)]
#[command(name = "jhcli", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Oracle, fit (or printed parameters) and comparison reports for one case.
    RunCase(RunCaseArgs),
    /// Fit the auxiliary parameters of one case.
    Fit(FitArgs),
    /// Shooting reference solution on the full grid.
    Oracle(OracleArgs),
    /// Regenerate the published comparison tables and the findings report.
    ReproduceTables(ReproduceArgs),
    /// Fit and compare a grid of (α, H) cases in parallel.
    Sweep(SweepArgs),
    /// Write the 101-point plot data (η, OHPM, numeric) for one case.
    ExportPlotData(RunCaseArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CaseArgs {
    /// Bundled case id (5.1 … 5.8) or an id inside --case-file.
    #[arg(long)]
    pub case: Option<String>,
    /// JSON case file (one object or an array).
    #[arg(long)]
    pub case_file: Option<PathBuf>,
    /// Half-angle α; accepts `pi/24` style expressions.
    #[arg(long, value_parser = case::parse_angle)]
    pub alpha: Option<f64>,
    /// Reynolds number.
    #[arg(long)]
    pub re: Option<f64>,
    /// Hartmann number.
    #[arg(long)]
    pub hartmann: Option<f64>,
    /// Prandtl number.
    #[arg(long)]
    pub pr: Option<f64>,
    /// Dissipation coefficient β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Thermal forcing convention.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Paper,
    ScaleConsistent,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormArg {
    Printed,
    Consistent,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemArg {
    Velocity,
    Thermal,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct RunCaseArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Use the published auxiliary parameters instead of fitting.
    #[arg(long, conflicts_with = "fit")]
    pub paper_params: bool,
    /// Fit the auxiliary parameters (the default).
    #[arg(long)]
    pub fit: bool,
    /// Velocity auxiliary-function set.
    #[arg(long, value_enum, default_value_t = FormArg::Printed)]
    pub form: FormArg,
    /// RK4 step of the reference solution.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub h: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory; files go to `<out>/<case id>/`.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, value_enum, default_value_t = ProblemArg::Both)]
    pub problem: ProblemArg,
    #[arg(long, value_enum, default_value_t = FormArg::Printed)]
    pub form: FormArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// RK4 step of the reference used for the grid error.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = ProblemArg::Both)]
    pub problem: ProblemArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output directory; prints a summary to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ReproduceArgs {
    /// Table numbers, e.g. `1-16`, `2`, `1,3,5-7`; an empty string selects none.
    #[arg(long, default_value = "1-16")]
    pub tables: String,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub h: f64,
    #[arg(long, default_value = "out/tables")]
    pub out: PathBuf,
    /// Format of the summary file.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Comma-separated α values (`pi/24,pi/36`).
    #[arg(long, value_delimiter = ',', value_parser = case::parse_angle, required = true)]
    pub alpha: Vec<f64>,
    /// Comma-separated Hartmann numbers.
    #[arg(long, value_delimiter = ',', required = true)]
    pub hartmann: Vec<f64>,
    #[arg(long, default_value_t = 50.0)]
    pub re: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pr: f64,
    #[arg(long, default_value_t = 3.492161428e-13)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::ScaleConsistent)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = FormArg::Printed)]
    pub form: FormArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub h: f64,
    /// Number of uniform η samples per case.
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
    #[arg(long, default_value = "out/sweep")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunCase(args) => commands::run_case(&args),
        Command::Fit(args) => commands::fit(&args),
        Command::Oracle(args) => commands::oracle(&args),
        Command::ReproduceTables(args) => commands::reproduce_tables(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::ExportPlotData(args) => commands::export_plot_data(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
