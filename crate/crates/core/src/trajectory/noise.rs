use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Identifier of the pseudorandom construction, recorded in run manifests.
pub const NOISE_ALGORITHM: &str = "chacha20(seed_from_u64(master_seed), stream=trajectory_index); normal=rand_distr::StandardNormal(ziggurat)";

/// Per-trajectory random source.
///
/// A ChaCha20 generator keyed by the master seed, with the trajectory index as
/// its stream selector. Streams are counter based, so a trajectory's draws do
/// not depend on which worker runs it or in what order.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn algorithm_tag(&self) -> &'static str {
        NOISE_ALGORITHM
    }

    /// `sites` i.i.d. Gaussian increments with mean 0 and variance `gamma * dt`.
    pub fn wiener_increments(&mut self, sites: usize, gamma: f64, dt: f64) -> Vec<f64> {
        let sd = (gamma * dt).sqrt();
        (0..sites)
            .map(|_| {
                let z: f64 = self.rng.sample(StandardNormal);
                sd * z
            })
            .collect()
    }

    /// Uniform draw in `(0, 1]`.
    pub fn uniform_open_closed(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}
