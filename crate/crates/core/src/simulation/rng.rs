//! Counter-based random streams.
//!
//! A stream is keyed by `(base_seed, scene_index, tag)`; its `k`-th output
//! is `mix64(key + (k + 1) * GOLDEN)`, i.e. SplitMix64 started at `key`.
//! Streams are independent of evaluation order, so scenes can be generated
//! in any order or in parallel.
//!
//! Derived draws are fixed as well:
//! * uniform `[0, 1)`: top 53 bits of one output times `2^-53`;
//! * standard normal: Box–Muller cosine branch on two uniforms
//!   `u1 = 1 - U`, `u2 = U'`; the sine branch is discarded.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose tags for scene streams.
pub mod tags {
    pub const SPHERES: u64 = 1;
    pub const RIG: u64 = 2;
    pub const NOISE: u64 = 3;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(base_seed: u64, scene_index: u64, tag: u64) -> Self {
        let key = mix64(mix64(mix64(base_seed) ^ scene_index.wrapping_mul(GOLDEN)) ^ tag);
        Self { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
