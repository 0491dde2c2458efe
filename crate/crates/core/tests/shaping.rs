use mdshape_core::ess::{bits_from_index, index_from_bits, min_emax, sequence_count, ShapingConfig, Trellis};
use mdshape_core::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const ALPHABET: [u32; 4] = [1, 3, 5, 7];

fn operating_point() -> Trellis {
    Trellis::build(ShapingConfig::with_min_energy(360, 623, ALPHABET.to_vec()).unwrap()).unwrap()
}

fn random_index(rng: &mut ChaCha20Rng, k: usize) -> BigUint {
    let bits: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
    index_from_bits(&bits)
}

#[test]
fn long_block_round_trip() {
    let trellis = operating_point();
    let limit = BigUint::one() << 623usize;
    assert!(*trellis.sequence_count() >= limit);
    let e_max = trellis.config().e_max();
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let index = random_index(&mut rng, 623);
        let block = trellis.encode(&index).unwrap();
        assert_eq!(block.len(), 360);
        assert!(block.energy() <= e_max);
        assert_eq!(trellis.decode(&block).unwrap(), index);
    }
}

#[test]
fn long_block_extremes_and_order() {
    let trellis = operating_point();
    let first = trellis.encode(&BigUint::from(0u32)).unwrap();
    assert!(first.amplitudes.iter().all(|&a| a == 1));
    let last_index = (BigUint::one() << 623usize) - 1u32;
    let last = trellis.encode(&last_index).unwrap();
    assert_eq!(trellis.decode(&last).unwrap(), last_index);
    assert!(trellis.encode(&(BigUint::one() << 623usize)).is_err());

    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..200 {
        let a = random_index(&mut rng, 623);
        let b = random_index(&mut rng, 623);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (trellis.encode(&lo).unwrap(), trellis.encode(&hi).unwrap());
        assert_eq!(lo.cmp(&hi), x.amplitudes.cmp(&y.amplitudes));
    }
}

#[test]
fn shorter_blocks_lose_more_rate() {
    let long = operating_point();
    let short = Trellis::build(ShapingConfig::with_min_energy(36, 62, ALPHABET.to_vec()).unwrap()).unwrap();
    let loss_long = long.rate_loss(&long.amplitude_distribution(1_000_000 / 360, 7));
    let loss_short = short.rate_loss(&short.amplitude_distribution(1_000_000 / 36, 7));
    assert!(loss_long > 0.0 && loss_long < loss_short, "n=360: {loss_long}, n=36: {loss_short}");
}

#[test]
fn low_energy_levels_are_more_likely() {
    let dist = operating_point().amplitude_distribution(2_000, 3);
    assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for pair in dist.windows(2) {
        assert!(pair[0] > pair[1], "{dist:?}");
    }
}

#[test]
fn count_is_monotone_and_saturates() {
    for n in 1..=5 {
        let full = 4u64.pow(n as u32);
        let mut prev = BigUint::from(0u32);
        for e_max in n as u64..=(49 * n as u64 + 8) {
            let c = sequence_count(n, &ALPHABET, e_max);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(prev, BigUint::from(full));
    }
}

#[test]
fn min_emax_is_tight_at_operating_point() {
    let e = min_emax(360, &ALPHABET, 623).unwrap();
    let need = BigUint::one() << 623usize;
    assert!(sequence_count(360, &ALPHABET, e) >= need);
    assert!(sequence_count(360, &ALPHABET, e - 8) < need);
}

#[test]
fn bit_packing_round_trip() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let bits: Vec<u8> = (0..623).map(|_| rng.random_range(0..2)).collect();
    assert_eq!(bits_from_index(&index_from_bits(&bits), 623), bits);
}
