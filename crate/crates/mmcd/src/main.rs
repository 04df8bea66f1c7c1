use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mmcd::io::commands::{self, ExplainLevel, FitOptions};
use mmcd::io::fit_json::ParamsChoice;
use mmcd::mmcd::Subsampling;

/// Robust estimation, outlier detection and explanation for matrix-variate
/// data.
#[derive(Parser)]
#[command(name = "mmcd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_subsampling(s: &str) -> Result<Subsampling, String> {
    match s {
        "auto" => Ok(Subsampling::default()),
        "off" => Ok(Subsampling::Off),
        other => Err(format!("expected 'auto' or 'off', got '{other}'")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the raw and reweighted estimators; writes a JSON fit document.
    Fit {
        /// MXT file, or headerless CSV with --rows/--cols (each CSV row is
        /// one column-stacked observation).
        input: PathBuf,
        /// Row dimension of CSV input.
        #[arg(long)]
        rows: Option<usize>,
        /// Column dimension of CSV input.
        #[arg(long)]
        cols: Option<usize>,
        /// Subset size; defaults to the breakdown-maximizing value.
        #[arg(long = "h")]
        h: Option<usize>,
        /// Number of elemental starting subsets.
        #[arg(long = "m")]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// 'auto' or 'off'.
        #[arg(long, value_parser = parse_subsampling)]
        subsampling: Option<Subsampling>,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score observations against a fit; writes index,mmd2,cutoff,flag CSV.
    Detect {
        input: PathBuf,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        /// Fit document produced by `fit`.
        #[arg(long)]
        fit: PathBuf,
        /// Chi-square quantile of the cutoff.
        #[arg(long, default_value_t = 0.975)]
        quantile: f64,
        /// Which fitted parameters to score against: 'reweighted' or 'raw'.
        #[arg(long, default_value = "reweighted")]
        params: ParamsChoice,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decompose one observation's squared distance into contributions.
    Explain {
        input: PathBuf,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        fit: PathBuf,
        /// 'cell', 'row' or 'col'.
        #[arg(long)]
        level: ExplainLevel,
        /// Observation index (0-based).
        #[arg(long)]
        index: usize,
        #[arg(long, default_value = "reweighted")]
        params: ParamsChoice,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a scenario file; writes one CSV row per (replication, estimator).
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn configure_threads() {
    if let Ok(value) = std::env::var("MMCD_THREADS") {
        if let Ok(threads) = value.trim().parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit {
            input,
            rows,
            cols,
            h,
            m,
            seed,
            subsampling,
            output,
        } => commands::cmd_fit(&FitOptions {
            input,
            rows,
            cols,
            h,
            m,
            seed,
            subsampling,
            output,
        }),
        Command::Detect {
            input,
            rows,
            cols,
            fit,
            quantile,
            params,
            output,
        } => commands::cmd_detect(&input, rows, cols, &fit, quantile, params, output.as_deref()),
        Command::Explain {
            input,
            rows,
            cols,
            fit,
            level,
            index,
            params,
            output,
        } => commands::cmd_explain(
            &input,
            rows,
            cols,
            &fit,
            level,
            index,
            params,
            output.as_deref(),
        ),
        Command::Simulate { scenario, output } => {
            commands::cmd_simulate(&scenario, output.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
