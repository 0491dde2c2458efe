use clap::Parser;
use mdshape_sim::codec::{self, ShapeCommand};

/// Enumerative sphere shaping codec: bit files to amplitude files and back.
#[derive(Debug, Parser)]
#[command(name = "shape", version)]
struct Cli {
    #[command(subcommand)]
    command: ShapeCommand,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let blocks = codec::run(&Cli::parse().command)?;
    eprintln!("{blocks} blocks");
    Ok(())
}
