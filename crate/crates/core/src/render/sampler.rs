//! Counter-based sampler: every random number is a pure function of
//! `(seed, pixel, sample index, dimension)`, so tiles can be rendered in any
//! order, on any thread or process, and still agree bit for bit.

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of the five sampler coordinates.
#[inline]
pub fn sample_hash(seed: u64, x: u32, y: u32, sample: u64, dim: u32) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ ((x as u64) << 32 | y as u64));
    h = mix64(h ^ sample);
    mix64(h ^ (dim as u64).wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Uniform double in `[0, 1)` from the top 53 bits.
#[inline]
pub fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random stream for one pixel sample. Dimensions are handed out in
/// call order, so identical control flow gives identical numbers.
#[derive(Clone, Debug)]
pub struct PixelSampler {
    seed: u64,
    x: u32,
    y: u32,
    sample: u64,
    dim: u32,
}

impl PixelSampler {
    pub fn new(seed: u64, x: u32, y: u32, sample: u64) -> Self {
        Self { seed, x, y, sample, dim: 0 }
    }

    #[inline]
    pub fn next(&mut self) -> f64 {
        let v = to_unit(sample_hash(self.seed, self.x, self.y, self.sample, self.dim));
        self.dim += 1;
        v
    }

    #[inline]
    pub fn next2(&mut self) -> [f64; 2] {
        [self.next(), self.next()]
    }

    /// Jumps to a fixed dimension so later bounces do not depend on how
    /// many numbers earlier ones consumed.
    #[inline]
    pub fn seek(&mut self, dim: u32) {
        self.dim = dim;
    }

    pub fn dimension(&self) -> u32 {
        self.dim
    }
}
