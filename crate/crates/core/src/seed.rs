//! Deterministic seed derivation.
//!
//! All randomness in the toolkit flows from user-supplied `u64` seeds through
//! the mixers below into ChaCha8 streams. The mixing algorithm is part of the
//! output contract (datasets must be reproducible byte-for-byte across
//! versions), so it is pinned here rather than borrowed from `std`'s
//! unstable-by-design hashers.

/// SplitMix64 step (Steele, Lea & Flood). One full avalanche per call.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a salt value.
///
/// Not commutative: `mix(mix(s, a), b) != mix(mix(s, b), a)`, which is what
/// lets nested loops (object, force, repetition) carve out independent
/// streams.
#[inline]
pub fn mix(base: u64, salt: u64) -> u64 {
    splitmix64(base ^ splitmix64(salt))
}
