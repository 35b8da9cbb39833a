//! Deterministic pseudo-random numbers.
//!
//! All sampling in this crate flows through [`SplitMix64`], a 64-bit-state
//! generator defined entirely by the constants below. The point of pinning
//! the generator (instead of pulling in a RNG crate) is that every sampled
//! repair-time vector is reproducible bit-for-bit from its seed on any
//! platform, which keeps experiment sweeps and their CSV outputs stable.

/// SplitMix64 generator (Steele, Lea, Flood; the `java.util.SplittableRandom`
/// finalizer). State advances by the golden-ratio increment; output is the
/// variant-13 mix of the new state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_A: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_B: u64 = 0x94D0_49BB_1331_11EB;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream for a sub-task (trial index, window
    /// index, ...) without consuming numbers from the parent stream.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut r = Self::new(seed ^ stream.wrapping_mul(GAMMA));
        r.next_u64(); // decorrelate nearby stream ids
        r
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` via rejection-free modulo reduction on
    /// the high bits; fine for the small bounds used here.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }
}
