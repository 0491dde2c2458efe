//! Short-blocklength enumerative sphere shaping with 2D, 4D and 16D intra-DM
//! symbol mapping for dual-polarization digital subcarrier multiplexing, plus
//! the signal chain needed to measure it: RRC subcarrier multiplexing,
//! Manakov split-step propagation with EDFA noise, full-band CD compensation
//! and GSNR / information-rate metrics.

pub mod dsp;
pub mod ess;
pub mod fiber;
pub mod mapper;
pub mod metrics;
pub mod rng;
pub mod units;

pub use num_bigint::BigUint;
pub use num_complex::Complex64;
