//! Counter-based seed derivation.
//!
//! Parallel phases derive one child seed per (tag, counter) pair from the
//! master seed, so scheduling order can never change which random stream a
//! unit of work sees.

/// SplitMix64 finalizer; full-avalanche mixing of a 64-bit word.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(master, tag, counter)`.
pub fn derive(master: u64, tag: u64, counter: u64) -> u64 {
    mix(mix(mix(master) ^ tag) ^ counter)
}

/// Derive a child seed with a sub-counter, e.g. per-trial retry attempts.
pub fn derive2(master: u64, tag: u64, counter: u64, sub: u64) -> u64 {
    mix(derive(master, tag, counter) ^ mix(sub))
}
