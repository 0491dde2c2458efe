use mdshape_core::ess::AmplitudeBlock;
use mdshape_core::mapper::{demap_frame, map_frame, FrameDims, SchemeRegistry};
use proptest::prelude::*;

const ALPHABET: [u32; 4] = [1, 3, 5, 7];
const BLOCK_LEN: usize = 24;

/// Random frame content: four subcarriers, a slot count every scheme accepts.
fn frame_input() -> impl Strategy<Value = (usize, Vec<u32>, Vec<u8>)> {
    (1usize..=4).prop_flat_map(|units| {
        // 24-amplitude blocks; 12 slots carry 192 amplitudes = 8 blocks
        let slots = 12 * units;
        let amps = FrameDims::new(4, slots).amplitudes();
        (
            Just(slots),
            prop::collection::vec(prop::sample::select(ALPHABET.to_vec()), amps),
            prop::collection::vec(0u8..2, amps),
        )
    })
}

fn blocks_of(amps: &[u32]) -> Vec<AmplitudeBlock> {
    amps.chunks(BLOCK_LEN).map(|c| AmplitudeBlock::new(c.to_vec())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn demap_inverts_map((slots, amps, signs) in frame_input()) {
        let registry = SchemeRegistry::builtin();
        let blocks = blocks_of(&amps);
        for name in ["2d", "4d", "16d"] {
            let scheme = registry.get(name).unwrap();
            let dims = FrameDims::new(4, slots);
            let frame = map_frame(scheme.as_ref(), &blocks, &signs, dims, 0.15).unwrap();
            let (back, back_signs) = demap_frame(&frame, scheme.as_ref(), &ALPHABET, BLOCK_LEN).unwrap();
            prop_assert_eq!(&back, &blocks);
            prop_assert_eq!(&back_signs, &signs);

            let mut histogram = [0usize; 8];
            for s in frame.symbols() {
                for c in [s.re, s.im] {
                    histogram[(c.abs() / 0.15).round() as usize] += 1;
                }
            }
            for a in ALPHABET {
                prop_assert_eq!(histogram[a as usize], amps.iter().filter(|&&x| x == a).count());
            }
        }
    }

    #[test]
    fn toggling_a_sign_flips_one_component(
        (slots, amps, signs) in frame_input(),
        pick in any::<prop::sample::Index>(),
    ) {
        let registry = SchemeRegistry::builtin();
        let blocks = blocks_of(&amps);
        let i = pick.index(signs.len());
        let mut toggled = signs.clone();
        toggled[i] ^= 1;
        for name in registry.names() {
            let scheme = registry.get(name).unwrap();
            let dims = FrameDims::new(4, slots);
            let a = map_frame(scheme.as_ref(), &blocks, &signs, dims, 1.0).unwrap();
            let b = map_frame(scheme.as_ref(), &blocks, &toggled, dims, 1.0).unwrap();
            let mut changed = 0;
            for (x, y) in a.symbols().iter().zip(b.symbols()) {
                for (p, q) in [(x.re, y.re), (x.im, y.im)] {
                    if p != q {
                        prop_assert_eq!(p, -q);
                        changed += 1;
                    }
                }
            }
            prop_assert_eq!(changed, 1);
        }
    }
}
