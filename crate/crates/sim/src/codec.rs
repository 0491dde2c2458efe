//! File front end of the ESS codec. Bit files hold `0`/`1` characters (other
//! whitespace ignored); amplitude files hold one integer per line.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use mdshape_core::ess::{bits_from_index, index_from_bits, AmplitudeBlock, ShapingConfig, Trellis};

use crate::error::SimError;

#[derive(Debug, Clone, Args)]
pub struct CodecArgs {
    /// Amplitudes per block.
    #[arg(long, default_value_t = 360)]
    pub n: usize,
    /// Information bits per block.
    #[arg(long, default_value_t = 623)]
    pub k: usize,
    /// Comma separated odd amplitude levels.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
    pub alphabet: Vec<u32>,
    /// Energy bound; the smallest admissible one by default.
    #[arg(long)]
    pub e_max: Option<u64>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Subcommand)]
pub enum ShapeCommand {
    /// Bits to shaped amplitudes.
    Encode(CodecArgs),
    /// Shaped amplitudes back to bits.
    Decode(CodecArgs),
}

impl CodecArgs {
    fn trellis(&self) -> Result<Trellis, SimError> {
        let config = match self.e_max {
            Some(e) => ShapingConfig::new(self.n, self.k, self.alphabet.clone(), e)?,
            None => ShapingConfig::with_min_energy(self.n, self.k, self.alphabet.clone())?,
        };
        Ok(Trellis::build(config)?)
    }
}

fn codec_error(path: &Path, message: impl Into<String>) -> SimError {
    SimError::Codec {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Runs one codec command and returns the number of blocks processed.
pub fn run(command: &ShapeCommand) -> Result<usize, SimError> {
    match command {
        ShapeCommand::Encode(args) => encode_file(args),
        ShapeCommand::Decode(args) => decode_file(args),
    }
}

pub fn encode_file(args: &CodecArgs) -> Result<usize, SimError> {
    let text = fs::read_to_string(&args.input).map_err(SimError::io(&args.input))?;
    let mut bits = Vec::with_capacity(text.len());
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        match c {
            '0' => bits.push(0),
            '1' => bits.push(1),
            other => return Err(codec_error(&args.input, format!("unexpected character {other:?} in bit file"))),
        }
    }
    if bits.is_empty() || bits.len() % args.k != 0 {
        return Err(codec_error(
            &args.input,
            format!("{} bits are not a positive multiple of k = {}", bits.len(), args.k),
        ));
    }
    let trellis = args.trellis()?;
    let mut out = String::with_capacity(bits.len() * 2);
    for chunk in bits.chunks(args.k) {
        for a in trellis.encode(&index_from_bits(chunk))?.amplitudes {
            out.push_str(&a.to_string());
            out.push('\n');
        }
    }
    fs::write(&args.output, out).map_err(SimError::io(&args.output))?;
    Ok(bits.len() / args.k)
}

pub fn decode_file(args: &CodecArgs) -> Result<usize, SimError> {
    let text = fs::read_to_string(&args.input).map_err(SimError::io(&args.input))?;
    let amplitudes = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<u32>()
                .map_err(|e| codec_error(&args.input, format!("amplitude {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<u32>, _>>()?;
    if amplitudes.is_empty() || amplitudes.len() % args.n != 0 {
        return Err(codec_error(
            &args.input,
            format!("{} amplitudes are not a positive multiple of n = {}", amplitudes.len(), args.n),
        ));
    }
    let trellis = args.trellis()?;
    let mut out = String::with_capacity(amplitudes.len() / args.n * (args.k + 1));
    for chunk in amplitudes.chunks(args.n) {
        let index = trellis.decode(&AmplitudeBlock::new(chunk.to_vec()))?;
        out.extend(bits_from_index(&index, args.k).into_iter().map(|b| if b == 1 { '1' } else { '0' }));
        out.push('\n');
    }
    fs::write(&args.output, out).map_err(SimError::io(&args.output))?;
    Ok(amplitudes.len() / args.n)
}
