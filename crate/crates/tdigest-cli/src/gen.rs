//! Seeded sample generators for the benchmark commands.
//!
//! All randomness flows through ChaCha8 seeded per trial with
//! `splitmix64(seed + trial)`, and uniform deviates are built explicitly
//! from the top 53 bits of each output word, so every experiment is
//! bit-reproducible from its `--seed`.

use rand_core::{RngCore, SeedableRng};

pub type TrialRng = rand_chacha::ChaCha8Rng;

/// One round of splitmix64, used to spread trial indices into seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    TrialRng::seed_from_u64(splitmix64(seed.wrapping_add(trial)))
}

/// Uniform deviate in [0, 1) from a 53-bit mantissa.
pub fn uniform(rng: &mut TrialRng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform deviate in (0, 1], safe to feed into a logarithm.
fn uniform_open(rng: &mut TrialRng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Uniform(0, 1).
    Uniform,
    /// Standard exponential, −ln u.
    Exponential,
    /// The sequence 0, 1, 2, …, n−1 (seed-independent, worst case for
    /// clustering inserts).
    Ascending,
    /// The constant 1.0.
    Constant,
    /// Duplicate-heavy mixture: a fair coin picks one of the ten integers
    /// 0..10 or a uniform value in [0, 10).
    Mixture,
}

impl Generator {
    pub fn generate(self, n: usize, rng: &mut TrialRng) -> Vec<f64> {
        match self {
            Generator::Uniform => (0..n).map(|_| uniform(rng)).collect(),
            Generator::Exponential => (0..n).map(|_| -uniform_open(rng).ln()).collect(),
            Generator::Ascending => (0..n).map(|i| i as f64).collect(),
            Generator::Constant => vec![1.0; n],
            Generator::Mixture => (0..n)
                .map(|_| {
                    if rng.next_u64().is_multiple_of(2) {
                        (rng.next_u64() % 10) as f64
                    } else {
                        uniform(rng) * 10.0
                    }
                })
                .collect(),
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Generator::Uniform),
            "exponential" => Ok(Generator::Exponential),
            "ascending" => Ok(Generator::Ascending),
            "constant" => Ok(Generator::Constant),
            "mixture" => Ok(Generator::Mixture),
            other => Err(format!(
                "unknown generator {other:?}, expected uniform, exponential, ascending, constant or mixture"
            )),
        }
    }
}
