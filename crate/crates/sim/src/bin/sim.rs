use std::io;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use mdshape_sim::codec::{self, ShapeCommand};
use mdshape_sim::sweep::CSV_HEADER;
use mdshape_sim::{plot, run_sweep, Experiment, ExperimentConfig, Preset};

#[derive(Debug, Parser)]
#[command(name = "sim", version, about = "Multi-dimensional intra-DM shaping over a DSCM fiber link")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (scheme, power, seed) point of the configuration.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// quick or paper
        #[arg(long)]
        preset: Option<Preset>,
        /// Output directory; overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent points (capped by SIM_THREADS).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run one point and print its records as CSV.
    Point {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        /// Defaults to mapping.scheme.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        power_dbm: f64,
        /// Defaults to the first of sweep.seeds.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Redraw the figures of an existing sweep CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// Defaults to the directory of the CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ESS codec on files.
    Shape {
        #[command(subcommand)]
        command: ShapeCommand,
    },
}

fn load_config(path: Option<&Path>, preset: Option<Preset>) -> anyhow::Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_toml(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(preset) = preset {
        config.apply_preset(preset);
    }
    config.validate()?;
    Ok(config)
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Sweep {
            config,
            preset,
            out,
            jobs,
        } => {
            let mut config = load_config(config.as_deref(), preset)?;
            if let Some(out) = out {
                config.output.dir = out;
            }
            let out_dir = config.output.dir.clone();
            let experiment = Experiment::new(config)?;
            let summary = run_sweep(&experiment, &out_dir, jobs)?;
            println!(
                "{} points computed, {} already present; results in {}",
                summary.computed,
                summary.skipped,
                summary.csv_path.display()
            );
            for p in summary.plots {
                println!("wrote {}", p.display());
            }
        }
        Command::Point {
            config,
            preset,
            scheme,
            power_dbm,
            seed,
        } => {
            let config = load_config(config.as_deref(), preset)?;
            let scheme = scheme.unwrap_or_else(|| config.mapping.scheme.clone());
            let seed = seed.unwrap_or(config.sweep.seeds[0]);
            let experiment = Experiment::new(config)?;
            let outcome = experiment.run_point(&scheme, power_dbm, seed)?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(io::stdout());
            w.write_record(CSV_HEADER)?;
            for r in &outcome.records {
                w.serialize(r)?;
            }
            w.flush()?;
            eprintln!(
                "{} information bits, {} bit errors, {} undecodable blocks",
                outcome.info_bits, outcome.bit_errors, outcome.undecodable_blocks
            );
        }
        Command::Plot { csv, out } => {
            let out_dir = out.unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
            for p in plot::plot_csv(&csv, &out_dir)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Shape { command } => {
            let blocks = codec::run(&command)?;
            eprintln!("{blocks} blocks");
        }
    }
    Ok(())
}
