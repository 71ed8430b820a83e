use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ChaCha8 stream whose state is determined by a 64-bit seed and a stream id.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

/// Stream id used for concrete-system noise.
pub const CONCRETE_STREAM: u64 = 0;
/// Stream id used for abstract-system noise.
pub const ABSTRACT_STREAM: u64 = 1;
/// Stream id used for auxiliary sampling such as random state pairs.
pub const AUX_STREAM: u64 = 2;

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { rng }
    }

    /// Stream for one trial, keyed by `seed ⊕ trial`.
    pub fn for_trial(seed: u64, trial: u64, stream: u64) -> Self {
        Self::with_stream(seed ^ trial, stream)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self, dim: usize) -> Vec<f64> {
        standard_normal(self, dim)
    }
}

/// `dim` independent standard normals by the Box–Muller transform; both
/// outputs of each transform are used.
pub fn standard_normal(rng: &mut RngStream, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim + 1);
    while out.len() < dim {
        let u1 = 1.0 - rng.uniform();
        let u2 = rng.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = std::f64::consts::TAU * u2;
        out.push(r * t.cos());
        out.push(r * t.sin());
    }
    out.truncate(dim);
    out
}
