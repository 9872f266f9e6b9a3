use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uqpipe::data::{save_feature_table, synth_blobs, ClassVocabulary};
use uqpipe::metrics::{merge_reports, render_csv, render_markdown, write_report};
use uqpipe::runner::{
    load_grid_configs, run_experiment, run_grid, ExperimentConfig, GridOutcome, RunError,
    OUTPUT_ROOT_ENV,
};

#[derive(Parser)]
#[command(
    name = "uqpipe",
    version,
    about = "Uncertainty-aware classification of fused embedding tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run { config: PathBuf },
    /// Run every *.json config in a directory and merge the reports.
    Grid { dir: PathBuf },
    /// Write a synthetic Gaussian-blob feature table.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        n_per_class: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long, default_value_t = 8.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated class names (default: the seven HAM10000 classes).
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
    },
    /// Merge report CSVs into one table sorted by UAcc.
    ReportMerge {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write the merged table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_root() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn print_grid(outcome: &GridOutcome, csv: &Path, md: &Path) -> ExitCode {
    if let Err(e) = write_report(&outcome.rows, csv, md) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let records: Vec<Vec<String>> = outcome.rows.iter().map(|r| r.to_record()).collect();
    print!("{}", render_markdown(&records));
    for f in &outcome.failures {
        eprintln!("failed: {}: {}", f.name, f.error);
    }
    let code = outcome
        .failures
        .iter()
        .map(|f| f.error.exit_code())
        .max()
        .unwrap_or(0);
    ExitCode::from(code as u8)
}

fn run(path: &Path) -> ExitCode {
    let mut config = match ExperimentConfig::from_file(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(root) = output_root() {
        config.reroot_output(&root);
    }
    let expanded = config.expand_seeds();
    if expanded.len() == 1 {
        return match run_experiment(&expanded[0]) {
            Ok(o) => {
                print!("{}", render_markdown(&[o.row().to_record()]));
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        };
    }
    let outcome = run_grid(
        expanded
            .into_iter()
            .map(|c| (c.experiment_name(), Ok(c)))
            .collect(),
    );
    if let Err(e) = std::fs::create_dir_all(&config.output_dir) {
        eprintln!("error: {}: {e}", config.output_dir.display());
        return ExitCode::from(2);
    }
    print_grid(
        &outcome,
        &config.output_dir.join("grid_report.csv"),
        &config.output_dir.join("grid_report.md"),
    )
}

fn grid(dir: &Path) -> ExitCode {
    let root = output_root();
    let configs = match load_grid_configs(dir, root.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if configs.is_empty() {
        eprintln!("error: no *.json configs in {}", dir.display());
        return ExitCode::from(1);
    }
    let outcome = run_grid(configs);
    let out_dir = root.unwrap_or_else(|| dir.to_path_buf());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }
    print_grid(
        &outcome,
        &out_dir.join("grid_report.csv"),
        &out_dir.join("grid_report.md"),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => run(&config),
        Command::Grid { dir } => grid(&dir),
        Command::Synth {
            out,
            n_per_class,
            dim,
            spread,
            separation,
            seed,
            classes,
        } => {
            let vocab = match classes {
                Some(names) => ClassVocabulary::new(names),
                None => Ok(ClassVocabulary::ham10000()),
            };
            let result = vocab
                .and_then(|v| synth_blobs(n_per_class, dim, &v, spread, separation, seed))
                .map_err(RunError::config)
                .and_then(|t| {
                    save_feature_table(&t, &out).map_err(|e| RunError::runtime("write", e))
                });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Command::ReportMerge { reports, out } => {
            let rows = match merge_reports(&reports) {
                Ok(r) => r,
                Err(e) => return fail(&RunError::runtime("report-merge", e)),
            };
            if let Some(out) = out {
                if let Err(e) = std::fs::write(&out, render_csv(&rows)) {
                    eprintln!("error: {}: {e}", out.display());
                    return ExitCode::from(2);
                }
            }
            print!("{}", render_markdown(&rows));
            ExitCode::SUCCESS
        }
    }
}
