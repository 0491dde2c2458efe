//! Intra-DM symbol mapping.
//!
//! A [`MappingScheme`] decides where each shaped amplitude lands in the
//! dual-polarization, multi-subcarrier symbol grid. Schemes are registered by
//! name in a [`SchemeRegistry`] and picked at runtime (`mapping.scheme`).
//! Mapping and demapping are shared: a scheme only supplies the placement of
//! amplitude `offset` of block `block`, and that placement must be a bijection
//! onto the frame's real dimensions.

mod schemes;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::ess::AmplitudeBlock;

pub use schemes::{MultiDim16D, Pairing2D, SuperSymbol4D};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("frame size mismatch: {0}")]
    Size(String),
    #[error("scheme/dimension mismatch: {0}")]
    Scheme(String),
    #[error("unknown mapping scheme {name:?} (known: {known})")]
    UnknownScheme { name: String, known: String },
    #[error("frame dump failed: {0}")]
    Dump(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    X,
    Y,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::X, Polarization::Y];

    pub fn index(self) -> usize {
        match self {
            Polarization::X => 0,
            Polarization::Y => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::X => "X",
            Polarization::Y => "Y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    I,
    Q,
}

/// One real dimension of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimension {
    /// Zero-based subcarrier index.
    pub subcarrier: usize,
    pub pol: Polarization,
    /// Zero-based time slot.
    pub slot: usize,
    pub quadrature: Quadrature,
}

/// Dual-polarization frame shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameDims {
    pub subcarriers: usize,
    pub slots: usize,
}

impl FrameDims {
    pub fn new(subcarriers: usize, slots: usize) -> Self {
        Self { subcarriers, slots }
    }

    /// Real dimensions (amplitudes) in the frame.
    pub fn amplitudes(&self) -> usize {
        4 * self.subcarriers * self.slots
    }

    /// Complex symbols in the frame.
    pub fn symbols(&self) -> usize {
        2 * self.subcarriers * self.slots
    }
}

/// Placement rule of one intra-DM mapping scheme.
pub trait MappingScheme: Send + Sync + fmt::Debug {
    /// Registry key, e.g. `"16d"`.
    fn name(&self) -> &'static str;

    /// Human readable name for plots and logs.
    fn label(&self) -> &'static str;

    /// Scheme specific constraints on the frame shape.
    fn check_dims(&self, dims: &FrameDims, block_len: usize) -> Result<(), MapError>;

    /// Where amplitude `offset` of block `block` goes.
    fn place(&self, dims: &FrameDims, block_len: usize, block: usize, offset: usize) -> Dimension;
}

/// Name-keyed collection of mapping schemes.
#[derive(Debug, Clone)]
pub struct SchemeRegistry {
    schemes: BTreeMap<&'static str, Arc<dyn MappingScheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self {
            schemes: BTreeMap::new(),
        }
    }

    /// Registry holding `2d`, `4d` and `16d`.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(Pairing2D));
        reg.register(Arc::new(SuperSymbol4D));
        reg.register(Arc::new(MultiDim16D));
        reg
    }

    /// Adds a scheme, returning any scheme previously registered under the same name.
    pub fn register(&mut self, scheme: Arc<dyn MappingScheme>) -> Option<Arc<dyn MappingScheme>> {
        self.schemes.insert(scheme.name(), scheme)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn MappingScheme>, MapError> {
        self.schemes
            .get(name.to_ascii_lowercase().as_str())
            .cloned()
            .ok_or_else(|| MapError::UnknownScheme {
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.schemes.keys().copied().collect()
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Grid of complex symbols indexed by (subcarrier, polarization, slot).
///
/// Every component is `±scale × a` with `a` in the alphabet, where `scale`
/// belongs to the (subcarrier, polarization) stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    dims: FrameDims,
    scales: Vec<f64>,
    symbols: Vec<Complex64>,
}

impl SymbolFrame {
    pub fn zeros(dims: FrameDims, scale: f64) -> Self {
        Self {
            dims,
            scales: vec![scale; 2 * dims.subcarriers],
            symbols: vec![Complex64::new(0.0, 0.0); dims.symbols()],
        }
    }

    /// Frame from per-stream symbol vectors and scales, both ordered
    /// (SC1 X, SC1 Y, SC2 X, ...).
    pub fn from_streams(dims: FrameDims, scales: &[f64], streams: &[Vec<Complex64>]) -> Result<Self, MapError> {
        let n_streams = 2 * dims.subcarriers;
        if streams.len() != n_streams || scales.len() != n_streams || streams.iter().any(|s| s.len() != dims.slots) {
            return Err(MapError::Size(format!(
                "expected {n_streams} streams of {} slots and {n_streams} scales",
                dims.slots
            )));
        }
        Ok(Self {
            dims,
            scales: scales.to_vec(),
            symbols: streams.concat(),
        })
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    /// Amplitude unit of one stream.
    pub fn scale(&self, subcarrier: usize, pol: Polarization) -> f64 {
        self.scales[subcarrier * 2 + pol.index()]
    }

    /// Per-stream scales in stream order.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Rescales every (subcarrier, polarization) stream to unit mean power,
    /// using the stream's own empirical second moment.
    pub fn normalize_streams(&mut self) {
        let slots = self.dims.slots;
        for (stream, scale) in self.symbols.chunks_mut(slots).zip(&mut self.scales) {
            let power = stream.iter().map(|s| s.norm_sqr()).sum::<f64>() / slots as f64;
            if power > 0.0 {
                let g = power.sqrt().recip();
                stream.iter_mut().for_each(|s| *s *= g);
                *scale *= g;
            }
        }
    }

    fn offset(&self, subcarrier: usize, pol: Polarization) -> usize {
        (subcarrier * 2 + pol.index()) * self.dims.slots
    }

    pub fn get(&self, subcarrier: usize, pol: Polarization, slot: usize) -> Complex64 {
        self.symbols[self.offset(subcarrier, pol) + slot]
    }

    pub fn stream(&self, subcarrier: usize, pol: Polarization) -> &[Complex64] {
        let start = self.offset(subcarrier, pol);
        &self.symbols[start..start + self.dims.slots]
    }

    fn component_mut(&mut self, d: Dimension) -> &mut f64 {
        let idx = self.offset(d.subcarrier, d.pol) + d.slot;
        let sym = &mut self.symbols[idx];
        match d.quadrature {
            Quadrature::I => &mut sym.re,
            Quadrature::Q => &mut sym.im,
        }
    }

    fn component(&self, d: Dimension) -> f64 {
        let sym = self.get(d.subcarrier, d.pol, d.slot);
        match d.quadrature {
            Quadrature::I => sym.re,
            Quadrature::Q => sym.im,
        }
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    /// Mean `|s|²` over all symbols of the frame.
    pub fn mean_power(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.symbols.len() as f64
    }

    /// Debug dump: `subcarrier,pol,slot,I,Q` with one-based subcarrier and slot.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MapError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["subcarrier", "pol", "slot", "I", "Q"])?;
        for sc in 0..self.dims.subcarriers {
            for pol in Polarization::BOTH {
                for (slot, s) in self.stream(sc, pol).iter().enumerate() {
                    w.write_record([
                        (sc + 1).to_string(),
                        pol.to_string(),
                        (slot + 1).to_string(),
                        s.re.to_string(),
                        s.im.to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Seeded uniform sign bits, one per amplitude. Bit 0 is `+`, bit 1 is `-`.
#[derive(Debug, Clone)]
pub struct SignSource {
    rng: ChaCha20Rng,
}

impl SignSource {
    pub fn new(rng: ChaCha20Rng) -> Self {
        Self { rng }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(ChaCha20Rng::seed_from_u64(seed))
    }

    pub fn next_bit(&mut self) -> u8 {
        self.rng.random_range(0..2)
    }

    pub fn take(&mut self, count: usize) -> Vec<u8> {
        (0..count).map(|_| self.next_bit()).collect()
    }
}

fn check_frame<'a>(
    scheme: &dyn MappingScheme,
    dims: &FrameDims,
    blocks: impl ExactSizeIterator<Item = &'a AmplitudeBlock>,
    block_len: usize,
) -> Result<usize, MapError> {
    if dims.subcarriers == 0 || dims.slots == 0 {
        return Err(MapError::Size("frame must have at least one subcarrier and slot".into()));
    }
    if block_len == 0 {
        return Err(MapError::Size("blocklength must be at least 1".into()));
    }
    let m = blocks.len();
    if m * block_len != dims.amplitudes() {
        return Err(MapError::Size(format!(
            "{m} blocks of {block_len} amplitudes do not fill {} dimensions",
            dims.amplitudes()
        )));
    }
    scheme.check_dims(dims, block_len)?;
    Ok(m)
}

/// Lays out shaped amplitudes and signs on the symbol grid.
///
/// `signs` holds one bit per amplitude in stream order (block by block).
/// Components are `±scale × a`.
pub fn map_frame(
    scheme: &dyn MappingScheme,
    blocks: &[AmplitudeBlock],
    signs: &[u8],
    dims: FrameDims,
    scale: f64,
) -> Result<SymbolFrame, MapError> {
    let block_len = blocks.first().map_or(0, AmplitudeBlock::len);
    if blocks.iter().any(|b| b.len() != block_len) {
        return Err(MapError::Size("blocks differ in length".into()));
    }
    check_frame(scheme, &dims, blocks.iter(), block_len)?;
    if signs.len() != dims.amplitudes() {
        return Err(MapError::Size(format!(
            "{} sign bits for {} amplitudes",
            signs.len(),
            dims.amplitudes()
        )));
    }
    let mut frame = SymbolFrame::zeros(dims, scale);
    let mut sign_iter = signs.iter();
    for (b, block) in blocks.iter().enumerate() {
        for (j, &a) in block.amplitudes.iter().enumerate() {
            let sign = if *sign_iter.next().expect("length checked") == 0 {
                1.0
            } else {
                -1.0
            };
            *frame.component_mut(scheme.place(&dims, block_len, b, j)) = sign * scale * f64::from(a);
        }
    }
    Ok(frame)
}

/// Inverse of [`map_frame`]. Each component is decided to the nearest
/// alphabet level (ties to the smaller amplitude) before it is read back.
pub fn demap_frame(
    frame: &SymbolFrame,
    scheme: &dyn MappingScheme,
    alphabet: &[u32],
    block_len: usize,
) -> Result<(Vec<AmplitudeBlock>, Vec<u8>), MapError> {
    let dims = frame.dims();
    if block_len == 0 || dims.amplitudes() % block_len != 0 {
        return Err(MapError::Size(format!(
            "{} dimensions are not a whole number of {block_len}-amplitude blocks",
            dims.amplitudes()
        )));
    }
    let m = dims.amplitudes() / block_len;
    scheme.check_dims(&dims, block_len)?;
    let mut blocks = Vec::with_capacity(m);
    let mut signs = Vec::with_capacity(dims.amplitudes());
    for b in 0..m {
        let mut amps = Vec::with_capacity(block_len);
        for j in 0..block_len {
            let d = scheme.place(&dims, block_len, b, j);
            let c = frame.component(d);
            amps.push(nearest_level(c.abs() / frame.scale(d.subcarrier, d.pol), alphabet));
            signs.push(u8::from(c < 0.0));
        }
        blocks.push(AmplitudeBlock::new(amps));
    }
    Ok((blocks, signs))
}

/// Nearest level to a nonnegative normalized magnitude; ties go to the smaller level.
pub fn nearest_level(magnitude: f64, alphabet: &[u32]) -> u32 {
    let mut best = alphabet[0];
    let mut best_dist = (magnitude - f64::from(best)).abs();
    for &a in &alphabet[1..] {
        let d = (magnitude - f64::from(a)).abs();
        if d < best_dist {
            best = a;
            best_dist = d;
        }
    }
    best
}

fn decide_component(x: f64, scale: f64, alphabet: &[u32]) -> f64 {
    let level = f64::from(nearest_level(x.abs() / scale, alphabet));
    if x < 0.0 {
        -level * scale
    } else {
        level * scale
    }
}

/// Per-quadrature hard decision onto `±alphabet × scale`.
pub fn decide_symbols(received: &SymbolFrame, scale: f64, alphabet: &[u32]) -> SymbolFrame {
    assert!(scale > 0.0, "scale must be positive");
    let symbols = received
        .symbols
        .iter()
        .map(|s| {
            Complex64::new(
                decide_component(s.re, scale, alphabet),
                decide_component(s.im, scale, alphabet),
            )
        })
        .collect();
    SymbolFrame {
        dims: received.dims,
        scales: vec![scale; received.scales.len()],
        symbols,
    }
}

/// Scale giving unit mean power per complex symbol: `1 / sqrt(2 E[a²])`.
pub fn frame_normalization(distribution: &[f64], alphabet: &[u32]) -> f64 {
    let second_moment: f64 = distribution
        .iter()
        .zip(alphabet)
        .map(|(p, &a)| p * f64::from(a) * f64::from(a))
        .sum();
    1.0 / (2.0 * second_moment).sqrt()
}

/// Amplitude histogram of a set of blocks, normalized, in alphabet order.
pub fn empirical_distribution(blocks: &[AmplitudeBlock], alphabet: &[u32]) -> Vec<f64> {
    let mut counts = vec![0u64; alphabet.len()];
    for a in blocks.iter().flat_map(|b| &b.amplitudes) {
        if let Some(i) = alphabet.iter().position(|x| x == a) {
            counts[i] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}
