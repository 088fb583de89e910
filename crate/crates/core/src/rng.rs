//! SplitMix64 generator.
//!
//! The generator is fixed so that games generated from a seed are bitwise
//! reproducible across implementations:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! return z ^ (z >> 31)
//! ```
//!
//! All arithmetic is wrapping on `u64`. Uniform doubles use the top 53 bits
//! and are offset by half an ulp, so they lie strictly inside `(0, 1)`.
//! Independent streams for repeated runs are obtained by seeding with
//! `base_seed + run_index` (see [`stream_seed`]).

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
        z ^ (z >> 31)
    }

    /// Uniform draw in the open interval `(0, 1)`.
    pub fn next_open01(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    /// Beta(1/2, 1/2) (arcsine) draw via the inverse CDF `sin^2(pi U / 2)`.
    pub fn next_arcsine(&mut self) -> f64 {
        let s = (std::f64::consts::FRAC_PI_2 * self.next_open01()).sin();
        s * s
    }
}

/// Seed of the `run_index`-th independent stream derived from `base_seed`.
pub fn stream_seed(base_seed: u64, run_index: u64) -> u64 {
    base_seed.wrapping_add(run_index)
}
