//! Seed derivation for independent reproducible streams.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a domain tag and an index.
pub(crate) fn derive(base: u64, tag: u64, index: u64) -> u64 {
    let a = splitmix(base.wrapping_add(GOLDEN));
    let b = splitmix(a ^ tag.wrapping_mul(GOLDEN));
    splitmix(b ^ index.wrapping_add(GOLDEN.rotate_left(17)))
}
