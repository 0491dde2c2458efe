use std::io;
use std::path::PathBuf;

use mdshape_core::dsp::DspError;
use mdshape_core::ess::EssError;
use mdshape_core::fiber::FiberError;
use mdshape_core::mapper::MapError;
use mdshape_core::metrics::MetricsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("shaping: {0}")]
    Shaping(#[from] EssError),
    #[error("mapping: {0}")]
    Mapping(#[from] MapError),
    #[error("front-end: {0}")]
    Dsp(#[from] DspError),
    #[error("link: {0}")]
    Fiber(#[from] FiberError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("nothing to sweep: {0}")]
    NothingToSweep(String),
    #[error("bit streams differ in length: {0} vs {1}")]
    BitLength(usize, usize),
    #[error("point {scheme} @ {power_dbm} dBm, seed {seed}: {source}")]
    Point {
        scheme: String,
        power_dbm: f64,
        seed: u64,
        source: Box<SimError>,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Results { path: PathBuf, message: String },
    #[error("plot: {0}")]
    Plot(String),
    #[error("{path}: {message}")]
    Codec { path: PathBuf, message: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> SimError {
        let path = path.into();
        move |source| SimError::Io { path, source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> SimError {
        let path = path.into();
        move |source| SimError::Csv { path, source }
    }
}
