//! Scalar activations, a minimal dense matrix, and a seeded random source.
//!
//! Everything here is deliberately small: the rest of the crate needs
//! 64-bit reals, one activation function, a row-major matrix to hold
//! weight groups, and a random stream that reproduces bit-for-bit from
//! a seed on any platform.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Logistic sigmoid, computed in the branch form that never overflows:
/// for z >= 0 use `1 / (1 + e^-z)`, otherwise `e^z / (1 + e^z)`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the sigmoid expressed through its output: `o * (1 - o)`.
///
/// Takes the already-activated value, so backward passes never need to
/// keep or recompute the pre-activation.
pub fn sigmoid_prime_from_output(o: f64) -> f64 {
    o * (1.0 - o)
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a row-major element vector.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::from_vec",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Seeded deterministic random source.
///
/// xoshiro256++ with SplitMix64 seed expansion, implemented here rather
/// than taken from a platform RNG so that a given seed yields the same
/// stream on every machine. Both algorithms are published, fully
/// specified, and tiny.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    state: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        RandomSource { seed, state }
    }

    /// The seed this source was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Next raw 64-bit value (xoshiro256++ step).
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Draws `n` values uniformly from `[-half_range, +half_range]`,
/// advancing `rng` deterministically. `n = 0` yields an empty vector.
pub fn uniform_init(rng: &mut RandomSource, n: usize, half_range: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-half_range, half_range)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_symmetry_point() {
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn sigmoid_hand_value() {
        // 1 / (1 + e^-1.8)
        assert!((sigmoid(1.8) - 0.8581489350995123).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_saturates_gracefully() {
        assert_eq!(sigmoid(1e4), 1.0);
        assert_eq!(sigmoid(-1e4), 0.0);
        assert!(sigmoid(-745.0) >= 0.0);
    }

    #[test]
    fn sigmoid_prime_symmetry_point() {
        assert_eq!(sigmoid_prime_from_output(0.5), 0.25);
    }

    #[test]
    fn sigmoid_prime_saturation_limits() {
        assert!(sigmoid_prime_from_output(1e-12) < 1e-11);
        assert!(sigmoid_prime_from_output(1.0 - 1e-12) < 1e-11);
    }

    #[test]
    fn sigmoid_prime_hand_value() {
        // 0.85815 * (1 - 0.85815), via the frozen sigmoid(1.8) output
        let o = sigmoid(1.8);
        assert!((sigmoid_prime_from_output(o) - 0.12172934028708533).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_prime_matches_central_difference() {
        let eps = 1e-6;
        let mut z = -10.0;
        while z <= 10.0 {
            let numeric = (sigmoid(z + eps) - sigmoid(z - eps)) / (2.0 * eps);
            let analytic = sigmoid_prime_from_output(sigmoid(z));
            assert!(
                (numeric - analytic).abs() < 1e-8,
                "z={z}: numeric={numeric}, analytic={analytic}"
            );
            z += 0.25;
        }
    }

    #[test]
    fn matrix_roundtrip_and_indexing() {
        let mut m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m[(0, 2)], 3.0);
        assert_eq!(m[(1, 0)], 4.0);
        m[(1, 1)] = -1.0;
        assert_eq!(m.as_slice()[4], -1.0);
    }

    #[test]
    fn matrix_from_vec_rejects_bad_length() {
        assert!(Matrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn uniform_init_deterministic() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        assert_eq!(uniform_init(&mut a, 3, 0.5), uniform_init(&mut b, 3, 0.5));
    }

    #[test]
    fn uniform_init_range_bound() {
        let mut rng = RandomSource::new(9);
        for v in uniform_init(&mut rng, 1000, 0.5) {
            assert!((-0.5..=0.5).contains(&v));
        }
    }

    #[test]
    fn uniform_init_sample_mean_near_zero() {
        let mut rng = RandomSource::new(1);
        let xs = uniform_init(&mut rng, 10_000, 0.5);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.02, "mean was {mean}");
    }

    #[test]
    fn uniform_init_zero_length() {
        let mut rng = RandomSource::new(3);
        assert!(uniform_init(&mut rng, 0, 0.5).is_empty());
    }

    proptest! {
        #[test]
        fn sigmoid_monotone(z1 in -50.0_f64..50.0, dz in 1e-6_f64..10.0) {
            prop_assert!(sigmoid(z1) < sigmoid(z1 + dz));
        }

        #[test]
        fn sigmoid_symmetry_identity(z in -100.0_f64..100.0) {
            prop_assert!((sigmoid(z) - (1.0 - sigmoid(-z))).abs() < 1e-15);
        }

        #[test]
        fn equal_seeds_equal_streams(seed in any::<u64>(), len in 1usize..200) {
            let mut a = RandomSource::new(seed);
            let mut b = RandomSource::new(seed);
            for _ in 0..len {
                prop_assert_eq!(a.next_u64(), b.next_u64());
            }
        }
    }
}
