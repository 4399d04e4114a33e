use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;
use crate::tensor::dense::DenseMatrix;

/// Seeded random stream backed by ChaCha20. The generator is splittable:
/// [`RngStream::substream`] derives independent child streams from a parent,
/// so the consumers of randomness (weight init, reparameterization noise,
/// prior draws, edge splits, k-means restarts) never perturb each other's
/// sequences when one of them draws more or less.
///
/// Identical seeds produce identical sequences across runs and platforms;
/// all floating-point sampling goes through `f64` before any narrowing.
#[derive(Clone, Debug)]
pub struct RngStream {
    key: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(key: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(key);
        rng.set_stream(stream);
        RngStream { key, stream, rng }
    }

    /// The seed this stream (or its root ancestor) was created with.
    pub fn seed(&self) -> u64 {
        self.key
    }

    /// Derives an independent child stream. Children of a root share its
    /// ChaCha key on distinct stream counters; deeper nesting folds the
    /// parent's stream id into a fresh key, so ids are independent at every
    /// level. Drawing from the parent never affects any child.
    pub fn substream(&self, id: u64) -> Self {
        if self.stream == 0 {
            Self::with_stream(self.key, id.wrapping_add(1))
        } else {
            let folded = splitmix64(self.key ^ self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            Self::with_stream(folded, id.wrapping_add(1))
        }
    }

    /// Uniform draw from [0, 1) with 53 random bits.
    pub fn uniform_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard normal draw.
    pub fn normal_f64(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Unbiased uniform index in [0, bound) via rejection sampling.
    pub fn index(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "index bound must be positive");
        let b = bound as u64;
        // Largest value accepted so that the accepted range is an exact
        // multiple of `b`; rejection keeps the draw unbiased.
        let zone = u64::MAX - ((u64::MAX % b) + 1) % b;
        loop {
            let r = self.rng.next_u64();
            if r <= zone {
                return (r % b) as usize;
            }
        }
    }

    /// In-place Fisher–Yates shuffle. Owned here (rather than delegated)
    /// so the permutation for a given seed is stable across dependency
    /// upgrades.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// First `m` elements of a random permutation of 0..n (sampling without
    /// replacement via partial Fisher–Yates).
    pub fn sample_indices(&mut self, n: usize, m: usize) -> Vec<usize> {
        assert!(m <= n, "cannot sample {m} of {n} without replacement");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool
    }

    pub fn uniform_matrix<S: Scalar>(
        &mut self,
        rows: usize,
        cols: usize,
        lo: f64,
        hi: f64,
    ) -> DenseMatrix<S> {
        DenseMatrix::from_fn(rows, cols, |_, _| {
            S::from_f64_lossy(lo + (hi - lo) * self.uniform_f64())
        })
    }

    pub fn normal_matrix<S: Scalar>(&mut self, rows: usize, cols: usize) -> DenseMatrix<S> {
        DenseMatrix::from_fn(rows, cols, |_, _| S::from_f64_lossy(self.normal_f64()))
    }
}

/// Matrix of i.i.d. standard normal draws (prior samples, ε noise).
pub fn sample_standard_normal<S: Scalar>(
    rng: &mut RngStream,
    rows: usize,
    cols: usize,
) -> DenseMatrix<S> {
    rng.normal_matrix(rows, cols)
}
