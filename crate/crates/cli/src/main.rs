//! `gendesign` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure. Every command
//! ends by printing one summary line: the command name followed by
//! space-separated `key=value` fields.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use commands::{Ctx, GanKind, UsageError};
use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "gendesign", version, about = "Synthetic shape/facade datasets, CNN and AC-GAN training, daylight evaluation")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print loss curves as text on stderr after training.
    #[arg(long, global = true)]
    ascii_plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GanArg {
    Shapes,
    Facade,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the labelled shape dataset (PGM + manifest.csv).
    SynthShapes {
        #[arg(long)]
        per_class: Option<usize>,
        /// Also write this many freehand test shapes to <out>/freehand.
        #[arg(long, default_value_t = 0)]
        freehand: usize,
    },
    /// Train the CNN shape classifier.
    TrainCnn {
        /// Dataset directory; synthesized from the seed when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Train an AC-GAN on shapes or facades.
    TrainAcgan {
        #[arg(long, value_enum)]
        experiment: Option<GanArg>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Square canvas for the shape GAN.
        #[arg(long)]
        image_size: Option<usize>,
    },
    /// Sample images from a trained generator.
    Generate {
        #[arg(long)]
        generator: PathBuf,
        /// Shape name or letter A-E (an index also works).
        #[arg(long)]
        label: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Write the nested facade dataset with surrogate sDA labels.
    SynthFacade {
        /// Comma-separated facade seeds.
        #[arg(long, value_delimiter = ',')]
        facade_seeds: Option<Vec<u64>>,
    },
    /// sDA of one facade pattern (.txt grid or 32x72 PGM).
    SimulateSda {
        #[arg(long)]
        pattern: PathBuf,
    },
    /// Evaluate a classifier, a shape generator or a facade generator.
    Evaluate {
        #[arg(long)]
        cnn: Option<PathBuf>,
        #[arg(long)]
        generator: Option<PathBuf>,
        /// Classifier checkpoint used to score a shape generator.
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run every stage from dataset synthesis to the facade report.
    Pipeline,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| UsageError(format!("{e:#}")))?,
        None => ExperimentConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.out, cli.out);
    let mut ctx = Ctx { cfg, ascii_plot: cli.ascii_plot };
    let c = &mut ctx.cfg;
    let summary = match cli.command {
        Command::SynthShapes { per_class, freehand } => {
            set(&mut c.shapes.per_class, per_class);
            commands::synth_shapes(&ctx, freehand)?
        }
        Command::TrainCnn { data, per_class, epochs, batch_size } => {
            c.data = data.or(c.data.take());
            set(&mut c.shapes.per_class, per_class);
            set(&mut c.cnn.epochs, epochs);
            set(&mut c.cnn.batch_size, batch_size);
            commands::train_cnn(&ctx)?
        }
        Command::TrainAcgan { experiment, data, per_class, steps, batch_size, image_size } => {
            let kind = match experiment {
                Some(GanArg::Shapes) => GanKind::Shapes,
                Some(GanArg::Facade) => GanKind::Facade,
                None => GanKind::from_config(c)?,
            };
            c.data = data.or(c.data.take());
            set(&mut c.shapes.per_class, per_class);
            match kind {
                GanKind::Shapes => {
                    set(&mut c.shape_gan.steps, steps);
                    set(&mut c.shape_gan.batch_size, batch_size);
                    set(&mut c.shape_gan.image_size, image_size);
                }
                GanKind::Facade => {
                    set(&mut c.facade_gan.steps, steps);
                    set(&mut c.facade_gan.batch_size, batch_size);
                }
            }
            commands::train_gan(&ctx, kind)?
        }
        Command::Generate { generator, label, n } => {
            set(&mut c.report.n, n);
            let n = c.report.n;
            commands::generate_cmd(&ctx, &generator, &label, n)?
        }
        Command::SynthFacade { facade_seeds } => {
            set(&mut c.facade.seeds, facade_seeds);
            commands::synth_facade(&ctx)?
        }
        Command::SimulateSda { pattern } => commands::simulate_sda(&pattern)?,
        Command::Evaluate { cnn, generator, oracle, data, n } => {
            c.data = data.or(c.data.take());
            set(&mut c.report.n, n);
            commands::evaluate_cmd(&ctx, cnn.as_deref(), generator.as_deref(), oracle.as_deref())?
        }
        Command::Pipeline => commands::pipeline(&ctx)?,
    };
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
