//! Enumerative sphere shaping.
//!
//! An ESS codebook is the set of length-`n` sequences over an alphabet of odd
//! positive amplitudes whose energy `Σ a²` does not exceed `e_max`. The first
//! `2^k` of those sequences, in lexicographic order, are indexed by `k`-bit
//! integers. Counts are exact big integers, and encode and decode are
//! bit-exact inverses at any blocklength.
//!
//! Odd squares are all `1 mod 8`, so after `i` amplitudes the accumulated
//! energy is always `i + 8ℓ` for some level `ℓ`. The trellis stores counts by
//! level.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::metrics::entropy_bits;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EssError {
    #[error("invalid alphabet {0:?}: entries must be odd, positive and strictly ascending")]
    InvalidAlphabet(Vec<u32>),
    #[error("invalid shaping configuration: {0}")]
    InvalidConfig(String),
    #[error("unsatisfiable: 2^{k} indices requested but only {alphabet_size}^{n} sequences exist")]
    Unsatisfiable {
        n: usize,
        k: usize,
        alphabet_size: usize,
    },
    #[error("index does not fit in {k} bits")]
    IndexOutOfRange { k: usize },
    #[error("expected {expected} amplitudes, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("amplitude {value} at position {position} is not in the alphabet")]
    InvalidAmplitude { position: usize, value: u32 },
    #[error("sequence energy {energy} exceeds the bound {e_max}")]
    EnergyExceeded { energy: u64, e_max: u64 },
    #[error("non-canonical codeword: sphere sequence ranks beyond the 2^{k} used indices")]
    NonCanonical { k: usize },
}

/// Parameters of one shaping codebook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapingConfig {
    n: usize,
    k: usize,
    alphabet: Vec<u32>,
    e_max: u64,
}

impl ShapingConfig {
    /// Validates all invariants, including that the sphere holds `2^k` sequences.
    pub fn new(n: usize, k: usize, alphabet: Vec<u32>, e_max: u64) -> Result<Self, EssError> {
        validate_alphabet(&alphabet)?;
        if n == 0 {
            return Err(EssError::InvalidConfig("blocklength n must be at least 1".into()));
        }
        if k == 0 {
            return Err(EssError::InvalidConfig("k must be at least 1".into()));
        }
        let min_sq = sq(alphabet[0]);
        if e_max < n as u64 * min_sq {
            return Err(EssError::InvalidConfig(format!(
                "e_max {e_max} is below the minimum sequence energy {}",
                n as u64 * min_sq
            )));
        }
        if sequence_count(n, &alphabet, e_max) < pow2(k) {
            return Err(EssError::InvalidConfig(format!(
                "sphere with e_max {e_max} holds fewer than 2^{k} sequences"
            )));
        }
        Ok(Self { n, k, alphabet, e_max })
    }

    /// Configuration with the smallest energy bound that supports `k` bits.
    pub fn with_min_energy(n: usize, k: usize, alphabet: Vec<u32>) -> Result<Self, EssError> {
        let e_max = min_emax(n, &alphabet, k)?;
        Self::new(n, k, alphabet, e_max)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alphabet(&self) -> &[u32] {
        &self.alphabet
    }

    pub fn e_max(&self) -> u64 {
        self.e_max
    }

    /// Shaping rate in bits per amplitude.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

impl fmt::Display for ShapingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ESS(n={}, k={}, alphabet={:?}, e_max={}, rate={:.4})",
            self.n,
            self.k,
            self.alphabet,
            self.e_max,
            self.rate()
        )
    }
}

/// One block of shaped amplitudes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmplitudeBlock {
    pub amplitudes: Vec<u32>,
}

impl AmplitudeBlock {
    pub fn new(amplitudes: Vec<u32>) -> Self {
        Self { amplitudes }
    }

    pub fn energy(&self) -> u64 {
        self.amplitudes.iter().map(|&a| sq(a)).sum()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

pub fn validate_alphabet(alphabet: &[u32]) -> Result<(), EssError> {
    let ascending = alphabet.windows(2).all(|w| w[0] < w[1]);
    if alphabet.is_empty() || !ascending || alphabet.iter().any(|&a| a % 2 == 0) {
        return Err(EssError::InvalidAlphabet(alphabet.to_vec()));
    }
    Ok(())
}

fn sq(a: u32) -> u64 {
    u64::from(a) * u64::from(a)
}

fn pow2(k: usize) -> BigUint {
    BigUint::one() << k
}

/// Level step contributed by amplitude `a`: `(a² - 1) / 8`.
fn level_step(a: u32) -> usize {
    ((sq(a) - 1) / 8) as usize
}

/// Number of sequences of length `n` with energy exactly `n + 8ℓ`, for
/// `ℓ = 0..=max_level`.
fn exact_energy_counts(n: usize, alphabet: &[u32], max_level: usize) -> Vec<BigUint> {
    let steps: Vec<usize> = alphabet.iter().map(|&a| level_step(a)).collect();
    let mut counts = vec![BigUint::zero(); max_level + 1];
    counts[0] = BigUint::one();
    // Level 0 after zero amplitudes; each amplitude adds its own step.
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); max_level + 1];
        for (level, count) in counts.iter().enumerate() {
            if count.is_zero() {
                continue;
            }
            for &s in &steps {
                if let Some(slot) = next.get_mut(level + s) {
                    *slot += count;
                }
            }
        }
        counts = next;
    }
    counts
}

/// Number of length-`n` sequences over `alphabet` with energy at most `e_max`.
///
/// `alphabet` is assumed valid (see [`validate_alphabet`]).
pub fn sequence_count(n: usize, alphabet: &[u32], e_max: u64) -> BigUint {
    if alphabet.is_empty() || e_max < n as u64 * sq(alphabet[0]) || e_max < n as u64 {
        return BigUint::zero();
    }
    let max_level = ((e_max - n as u64) / 8) as usize;
    exact_energy_counts(n, alphabet, max_level).into_iter().sum()
}

/// Smallest energy bound whose sphere holds at least `2^k` sequences.
pub fn min_emax(n: usize, alphabet: &[u32], k: usize) -> Result<u64, EssError> {
    validate_alphabet(alphabet)?;
    if k == 0 || n == 0 {
        return Err(EssError::InvalidConfig("n and k must be at least 1".into()));
    }
    let target = pow2(k);
    if BigUint::from(alphabet.len()).pow(n as u32) < target {
        return Err(EssError::Unsatisfiable {
            n,
            k,
            alphabet_size: alphabet.len(),
        });
    }
    let max_level = n * level_step(*alphabet.last().expect("validated non-empty"));
    let counts = exact_energy_counts(n, alphabet, max_level);
    let mut total = BigUint::zero();
    for (level, count) in counts.iter().enumerate() {
        total += count;
        if total >= target {
            return Ok(n as u64 + 8 * level as u64);
        }
    }
    unreachable!("full alphabet^n count already checked against 2^k")
}

/// Bounded-energy counting trellis for one [`ShapingConfig`].
///
/// `counts[i][ℓ]` is the number of ways to complete a sequence from position
/// `i` with accumulated energy `i + 8ℓ` while staying within `e_max`.
#[derive(Debug, Clone)]
pub struct Trellis {
    config: ShapingConfig,
    counts: Vec<Vec<BigUint>>,
    steps: Vec<usize>,
}

impl Trellis {
    pub fn build(config: ShapingConfig) -> Result<Self, EssError> {
        // `ShapingConfig` is only constructible through validating constructors.
        let n = config.n;
        let steps: Vec<usize> = config.alphabet.iter().map(|&a| level_step(a)).collect();
        let levels_at = |i: usize| -> usize {
            if config.e_max < i as u64 {
                0
            } else {
                ((config.e_max - i as u64) / 8) as usize + 1
            }
        };

        let mut counts: Vec<Vec<BigUint>> = Vec::with_capacity(n + 1);
        counts.resize_with(n + 1, Vec::new);
        counts[n] = vec![BigUint::one(); levels_at(n)];
        for i in (0..n).rev() {
            let next = &counts[i + 1];
            let row: Vec<BigUint> = (0..levels_at(i))
                .map(|level| {
                    steps
                        .iter()
                        .filter_map(|&s| next.get(level + s))
                        .fold(BigUint::zero(), |acc, c| acc + c)
                })
                .collect();
            counts[i] = row;
        }
        Ok(Self {
            config,
            counts,
            steps,
        })
    }

    pub fn config(&self) -> &ShapingConfig {
        &self.config
    }

    /// Total number of sequences in the sphere (`T[0][0]`).
    pub fn sequence_count(&self) -> &BigUint {
        &self.counts[0][0]
    }

    /// Count table entry; zero outside the stored range.
    pub fn count(&self, position: usize, level: usize) -> BigUint {
        self.counts
            .get(position)
            .and_then(|row| row.get(level))
            .cloned()
            .unwrap_or_default()
    }

    fn completions(&self, position: usize, level: usize) -> Option<&BigUint> {
        self.counts[position].get(level)
    }

    /// Returns the `index`-th sphere sequence in lexicographic order.
    pub fn encode(&self, index: &BigUint) -> Result<AmplitudeBlock, EssError> {
        let k = self.config.k;
        if index.bits() as usize > k {
            return Err(EssError::IndexOutOfRange { k });
        }
        let mut rest = index.clone();
        let mut level = 0usize;
        let mut amplitudes = Vec::with_capacity(self.config.n);
        for position in 0..self.config.n {
            let mut chosen = None;
            for (&a, &step) in self.config.alphabet.iter().zip(&self.steps) {
                let Some(c) = self.completions(position + 1, level + step) else {
                    break;
                };
                if &rest < c {
                    chosen = Some((a, step));
                    break;
                }
                rest -= c;
            }
            let (a, step) = chosen.expect("index below 2^k always lies inside the sphere");
            amplitudes.push(a);
            level += step;
        }
        Ok(AmplitudeBlock { amplitudes })
    }

    /// Lexicographic rank of a sphere sequence.
    pub fn decode(&self, block: &AmplitudeBlock) -> Result<BigUint, EssError> {
        let n = self.config.n;
        if block.len() != n {
            return Err(EssError::LengthMismatch {
                expected: n,
                got: block.len(),
            });
        }
        let energy = block.energy();
        if energy > self.config.e_max {
            return Err(EssError::EnergyExceeded {
                energy,
                e_max: self.config.e_max,
            });
        }
        let mut rank = BigUint::zero();
        let mut level = 0usize;
        for (position, &a) in block.amplitudes.iter().enumerate() {
            let letter = self
                .config
                .alphabet
                .iter()
                .position(|&x| x == a)
                .ok_or(EssError::InvalidAmplitude { position, value: a })?;
            for &step in &self.steps[..letter] {
                if let Some(c) = self.completions(position + 1, level + step) {
                    rank += c;
                }
            }
            level += self.steps[letter];
        }
        if rank.bits() as usize > self.config.k {
            return Err(EssError::NonCanonical { k: self.config.k });
        }
        Ok(rank)
    }

    /// Empirical amplitude distribution over `sample_count` uniformly random
    /// encoded indices. Entries follow alphabet order.
    pub fn amplitude_distribution(&self, sample_count: usize, seed: u64) -> Vec<f64> {
        assert!(sample_count >= 1, "sample_count must be at least 1");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; self.config.alphabet.len()];
        let mut bits = vec![0u8; self.config.k];
        for _ in 0..sample_count {
            bits.iter_mut().for_each(|b| *b = rng.random_range(0..2));
            let block = self
                .encode(&index_from_bits(&bits))
                .expect("k random bits are always in range");
            for a in block.amplitudes {
                let letter = self.config.alphabet.iter().position(|&x| x == a).unwrap();
                counts[letter] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Signed rate loss `H(distribution) - k/n` in bits per amplitude.
    pub fn rate_loss(&self, distribution: &[f64]) -> f64 {
        entropy_bits(distribution) - self.config.rate()
    }
}

/// Packs MSB-first bits (each 0 or 1) into an index.
pub fn index_from_bits(bits: &[u8]) -> BigUint {
    if bits.is_empty() {
        return BigUint::zero();
    }
    BigUint::from_radix_be(bits, 2).expect("bits must be 0 or 1")
}

/// Unpacks an index into exactly `k` MSB-first bits.
pub fn bits_from_index(index: &BigUint, k: usize) -> Vec<u8> {
    let digits = if index.is_zero() {
        Vec::new()
    } else {
        index.to_radix_be(2)
    };
    assert!(digits.len() <= k, "index wider than {k} bits");
    let mut bits = vec![0u8; k - digits.len()];
    bits.extend(digits);
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All sequences with energy ≤ e_max, in lexicographic order.
    fn brute_force(n: usize, alphabet: &[u32], e_max: u64) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let total = alphabet.len().pow(n as u32);
        for mut code in 0..total {
            let mut seq = vec![0u32; n];
            for slot in seq.iter_mut().rev() {
                *slot = alphabet[code % alphabet.len()];
                code /= alphabet.len();
            }
            if seq.iter().map(|&a| sq(a)).sum::<u64>() <= e_max {
                out.push(seq);
            }
        }
        out
    }

    fn small_alphabets() -> Vec<Vec<u32>> {
        let full = [1u32, 3, 5, 7];
        (1u32..16)
            .map(|mask| {
                full.iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &a)| a)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn count_examples() {
        assert_eq!(sequence_count(2, &[1, 3], 10), BigUint::from(3u32));
        assert_eq!(sequence_count(3, &[1], 3), BigUint::from(1u32));
        assert_eq!(sequence_count(1, &[1, 3, 5, 7], 49), BigUint::from(4u32));
        assert_eq!(sequence_count(3, &[3, 5], 26), BigUint::zero());
    }

    #[test]
    fn min_emax_examples() {
        assert_eq!(min_emax(2, &[1, 3], 1), Ok(10));
        assert_eq!(min_emax(1, &[1, 3, 5, 7], 2), Ok(49));
        assert!(matches!(
            min_emax(2, &[1, 3], 3),
            Err(EssError::Unsatisfiable { .. })
        ));
    }

    #[test]
    fn trellis_toy() {
        let t = Trellis::build(ShapingConfig::new(2, 1, vec![1, 3], 10).unwrap()).unwrap();
        assert_eq!(t.sequence_count(), &BigUint::from(3u32));
        // terminal row: one completion per admissible final energy (2 and 10)
        assert_eq!(t.count(2, 0), BigUint::one());
        assert_eq!(t.count(2, 1), BigUint::one());
        assert_eq!(t.count(2, 2), BigUint::zero());
        // after a leading 1 (energy 1, level 0): both 1 and 3 fit
        assert_eq!(t.count(1, 0), BigUint::from(2u32));
        // after a leading 3 (energy 9, level 1): only 1 fits
        assert_eq!(t.count(1, 1), BigUint::one());
    }

    #[test]
    fn single_letter_sphere_counts_one() {
        // n=1, {1}, e_max=1 holds a single sequence, too few for even k=1.
        assert_eq!(sequence_count(1, &[1], 1), BigUint::one());
        assert!(ShapingConfig::new(1, 1, vec![1], 1).is_err());
    }

    #[test]
    fn encode_decode_examples() {
        let t = Trellis::build(ShapingConfig::new(2, 1, vec![1, 3], 10).unwrap()).unwrap();
        assert_eq!(t.encode(&BigUint::from(0u32)).unwrap().amplitudes, vec![1, 1]);
        assert_eq!(t.encode(&BigUint::from(1u32)).unwrap().amplitudes, vec![1, 3]);
        assert!(matches!(
            t.encode(&BigUint::from(2u32)),
            Err(EssError::IndexOutOfRange { k: 1 })
        ));
        assert_eq!(t.decode(&AmplitudeBlock::new(vec![1, 3])).unwrap(), BigUint::one());
        assert_eq!(t.decode(&AmplitudeBlock::new(vec![1, 1])).unwrap(), BigUint::zero());
        assert_eq!(
            t.decode(&AmplitudeBlock::new(vec![3, 1])),
            Err(EssError::NonCanonical { k: 1 })
        );
        assert!(matches!(
            t.decode(&AmplitudeBlock::new(vec![3, 3])),
            Err(EssError::EnergyExceeded { energy: 18, e_max: 10 })
        ));
        assert!(matches!(
            t.decode(&AmplitudeBlock::new(vec![1, 5])),
            Err(EssError::EnergyExceeded { .. })
        ));
        assert!(matches!(
            t.decode(&AmplitudeBlock::new(vec![1, 2])),
            Err(EssError::InvalidAmplitude { position: 1, value: 2 })
        ));
        assert!(matches!(
            t.decode(&AmplitudeBlock::new(vec![1])),
            Err(EssError::LengthMismatch { .. })
        ));

        let t = Trellis::build(ShapingConfig::new(1, 2, vec![1, 3, 5, 7], 49).unwrap()).unwrap();
        assert_eq!(t.encode(&BigUint::from(3u32)).unwrap().amplitudes, vec![7]);
    }

    #[test]
    fn brute_force_equivalence_small_configs() {
        for alphabet in small_alphabets() {
            for n in 1..=6usize {
                let max_e = n as u64 * sq(*alphabet.last().unwrap());
                let min_e = n as u64 * sq(alphabet[0]);
                let mut e_max = n as u64;
                while e_max <= max_e {
                    let all = brute_force(n, &alphabet, e_max);
                    assert_eq!(
                        sequence_count(n, &alphabet, e_max),
                        BigUint::from(all.len()),
                        "n={n} alphabet={alphabet:?} e_max={e_max}"
                    );
                    if e_max >= min_e && all.len() >= 2 {
                        let k = all.len().ilog2() as usize;
                        let cfg = ShapingConfig::new(n, k, alphabet.clone(), e_max).unwrap();
                        let t = Trellis::build(cfg).unwrap();
                        assert_eq!(t.sequence_count(), &BigUint::from(all.len()));
                        for (rank, seq) in all.iter().enumerate() {
                            let block = AmplitudeBlock::new(seq.clone());
                            if rank < 1 << k {
                                let enc = t.encode(&BigUint::from(rank)).unwrap();
                                assert_eq!(&enc.amplitudes, seq);
                                assert_eq!(t.decode(&block).unwrap(), BigUint::from(rank));
                            } else {
                                assert_eq!(t.decode(&block), Err(EssError::NonCanonical { k }));
                            }
                        }
                    }
                    e_max += 8;
                }
            }
        }
    }

    #[test]
    fn min_emax_matches_brute_force() {
        for alphabet in small_alphabets() {
            for n in 1..=5usize {
                let total = alphabet.len().pow(n as u32);
                for k in 1..=total.ilog2() as usize {
                    let e = min_emax(n, &alphabet, k).unwrap();
                    assert!(brute_force(n, &alphabet, e).len() >= 1 << k);
                    if e >= 8 {
                        assert!(brute_force(n, &alphabet, e - 8).len() < 1 << k);
                    }
                }
            }
        }
    }

    #[test]
    fn count_saturates_at_full_alphabet() {
        let a = [1u32, 3, 5, 7];
        assert_eq!(sequence_count(5, &a, 5 * 49), BigUint::from(4u32).pow(5));
        assert_eq!(sequence_count(5, &a, 10_000), BigUint::from(4u32).pow(5));
    }

    #[test]
    fn toy_distribution_and_rate_loss() {
        let t = Trellis::build(ShapingConfig::new(2, 1, vec![1, 3], 10).unwrap()).unwrap();
        let d = t.amplitude_distribution(20_000, 7);
        assert!((d[0] - 0.75).abs() < 0.01 && (d[1] - 0.25).abs() < 0.01, "{d:?}");
        // exact distribution: (1,1) and (1,3)
        let rl = t.rate_loss(&[0.75, 0.25]);
        assert!((rl - 0.311_278).abs() < 1e-6, "{rl}");

        let t = Trellis::build(ShapingConfig::new(1, 2, vec![1, 3, 5, 7], 49).unwrap()).unwrap();
        let d = t.amplitude_distribution(4_000, 1);
        assert!(d.iter().all(|p| (p - 0.25).abs() < 0.03));
        assert_eq!(t.rate_loss(&[0.25; 4]), 0.0);
    }

    #[test]
    fn bit_packing() {
        let bits = [1u8, 0, 1, 1];
        let idx = index_from_bits(&bits);
        assert_eq!(idx, BigUint::from(11u32));
        assert_eq!(bits_from_index(&idx, 6), vec![0, 0, 1, 0, 1, 1]);
        assert_eq!(bits_from_index(&BigUint::zero(), 3), vec![0, 0, 0]);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ShapingConfig::new(2, 1, vec![3, 1], 10).is_err());
        assert!(ShapingConfig::new(2, 1, vec![1, 2], 10).is_err());
        assert!(ShapingConfig::new(0, 1, vec![1, 3], 10).is_err());
        assert!(ShapingConfig::new(2, 0, vec![1, 3], 10).is_err());
        assert!(ShapingConfig::new(2, 2, vec![1, 3], 10).is_err());
        assert!(ShapingConfig::new(2, 1, vec![3, 5], 10).is_err());
    }
}
