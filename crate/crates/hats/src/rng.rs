//! Portable counter-based random source.
//!
//! Streams must be reproducible bit-for-bit across implementations, so the
//! generator is pinned rather than left to a library default: the n-th
//! draw for seed `s` is `splitmix64(s + (n+1) * 0x9E3779B97F4A7C15)`, with
//! the finalizer constants 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and
//! shift distances 30/27/31 (Steele, Lea & Flood's SplitMix64). The same
//! constants are documented in the README.

#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

pub const GOLDEN_GAMMA: u64 = 0x9e3779b97f4a7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derives an independent child seed, used to give each sample its
    /// own stream.
    pub fn derive(seed: u64, salt: u64) -> u64 {
        splitmix64(seed ^ splitmix64(salt.wrapping_mul(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        splitmix64(self.state)
    }

    /// Uniform in `[0, 1)`, 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        // Modulo bias is negligible at 64 bits for the bounds used here.
        self.next_u64() % bound
    }

    /// Uniform in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }

    /// Exact Poisson draw via Knuth's product method, chunked so the
    /// running product stays inside f64 range for large means.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        assert!(mean >= 0.0);
        let mut remaining = mean;
        let mut count = 0u64;
        while remaining > 0.0 {
            let chunk = remaining.min(500.0);
            remaining -= chunk;
            let limit = (-chunk).exp();
            let mut product = 1.0;
            loop {
                product *= self.next_f64();
                if product <= limit {
                    break;
                }
                count += 1;
            }
        }
        count
    }
}
