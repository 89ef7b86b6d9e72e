//! Pipeline front end. Each subcommand maps onto one library entry
//! point; see `--help` per subcommand for flags.

use clap::{Args, Parser, Subcommand};
use specemo::audio::SynthSpec;
use specemo::cli::{
    cmd_cross, cmd_eval, cmd_extract, cmd_report, cmd_synth, cmd_train, CliError,
    ExperimentConfig, RunArtifacts,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "specemo", version, about = "Speech emotion recognition on spectrogram images")]
struct Cli {
    /// worker threads for parallel sections (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one spectrogram image per clip plus an index CSV
    Extract(RunArgs),
    /// Train a model on a 70/30 split; report validation metrics
    Train(RunArgs),
    /// Cross-validated evaluation per the config's fold plan
    Eval(RunArgs),
    /// Train on the primary corpus, test on the second one
    Cross(RunArgs),
    /// Render tables, heatmap, and attention maps for a finished run
    Report(ReportArgs),
    /// Generate a synthetic labeled corpus of tone-coded clips
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// experiment config JSON
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// override the config's output_dir
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// override every seed in the config
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// run directory containing report.json and config.json
    run_dir: PathBuf,
    /// clips to include in the attention-map gallery
    #[arg(long, value_name = "N", default_value_t = 6)]
    samples: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// directory to write clips/ and manifest.csv into
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, value_name = "N", default_value_t = 4)]
    classes: usize,
    #[arg(long, value_name = "N", default_value_t = 5)]
    speakers: usize,
    /// clips per (class, speaker) pair
    #[arg(long, value_name = "N", default_value_t = 2)]
    clips: usize,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// give neutral clips the five speaking styles
    #[arg(long)]
    styled_neutral: bool,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    config.apply_overrides(args.out.as_deref(), args.seed);
    Ok(config)
}

fn print_run(artifacts: &RunArtifacts) {
    println!("{}", artifacts.table);
    println!("run: {}", artifacts.run_dir.display());
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Extract(args) => {
            let config = load_config(&args)?;
            let summary = cmd_extract(&config)?;
            println!(
                "{} image(s), {} from cache, {} failed",
                summary.images,
                summary.cached,
                summary.failed.len()
            );
            println!("run: {}", summary.run_dir.display());
            if summary.failed.is_empty() {
                Ok(0)
            } else {
                for (path, err) in &summary.failed {
                    eprintln!("failed {path}: {err}");
                }
                Ok(2)
            }
        }
        Command::Train(args) => {
            print_run(&cmd_train(&load_config(&args)?)?);
            Ok(0)
        }
        Command::Eval(args) => {
            print_run(&cmd_eval(&load_config(&args)?)?);
            Ok(0)
        }
        Command::Cross(args) => {
            print_run(&cmd_cross(&load_config(&args)?)?);
            Ok(0)
        }
        Command::Report(args) => {
            for path in cmd_report(&args.run_dir, args.samples)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Synth(args) => {
            let spec = SynthSpec {
                classes: args.classes,
                speakers: args.speakers,
                clips: args.clips,
                seed: args.seed,
                neutral_styles: args.styled_neutral,
            };
            let manifest = cmd_synth(&args.out, &spec)?;
            println!(
                "{} clip(s) under {}",
                manifest.samples.len(),
                args.out.display()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/version output with exit 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("could not size the thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
