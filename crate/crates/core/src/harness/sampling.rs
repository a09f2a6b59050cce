use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::targets::TargetFunction;
use crate::dynamic::{Coefficients, DynamicDataset};
use crate::neighbor::PointSet;
use crate::static_sbp::StaticDataset;

/// SplitMix64 finalizer; decorrelates derived seeds.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for stream `stream` of `seed`. Streams of one seed never
/// overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// `t` uniform locations with `Bernoulli(f(x))` outcomes.
pub fn sample_static<R: Rng>(f: &TargetFunction, t: usize, rng: &mut R) -> StaticDataset {
    let dim = f.dim();
    let mut points = PointSet::new(dim).expect("target dimension is positive");
    let mut outcomes = Vec::with_capacity(t);
    for _ in 0..t {
        let x = uniform_point(rng, dim);
        let p = f.eval(&x);
        outcomes.push(rng.random::<f64>() < p);
        points.push(&x).expect("uniform draws lie in the unit cube");
    }
    StaticDataset::from_parts(points, outcomes)
}

/// Distribution of the contextual lift `B_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftSampler {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
}

impl LiftSampler {
    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            LiftSampler::Constant(b) => b,
            LiftSampler::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// A sampled contextual dataset plus how often the noise law was clamped.
#[derive(Debug, Clone)]
pub struct DynamicSample {
    pub data: DynamicDataset,
    /// Draws whose noise half-width was cut below `σ√3` to keep `B + ε`
    /// inside `[0, 1]`.
    pub clamped: usize,
}

/// `t` uniform locations with outcomes `Bernoulli((1 − B̃)f(x) + B̃)`,
/// `B̃ = B + ε`. Records carry the noiseless `(1 − B, B)`.
///
/// `ε ~ Uniform(−a, a)` with `a = min(σ√3, B, 1 − B)`.
pub fn sample_dynamic<R: Rng>(
    f: &TargetFunction,
    t: usize,
    lift: LiftSampler,
    noise_sd: f64,
    rng: &mut R,
) -> DynamicSample {
    let dim = f.dim();
    let mut points = PointSet::new(dim).expect("target dimension is positive");
    let mut outcomes = Vec::with_capacity(t);
    let mut coefs = Vec::with_capacity(t);
    let mut clamped = 0;
    let half_width = noise_sd * 3f64.sqrt();
    for _ in 0..t {
        let x = uniform_point(rng, dim);
        let b = lift.draw(rng).clamp(0.0, 1.0);
        let noisy_b = if noise_sd > 0.0 {
            let a = half_width.min(b).min(1.0 - b);
            if a < half_width {
                clamped += 1;
            }
            b + a * (2.0 * rng.random::<f64>() - 1.0)
        } else {
            b
        };
        let p = (1.0 - noisy_b) * f.eval(&x) + noisy_b;
        outcomes.push(rng.random::<f64>() < p);
        coefs.push(Coefficients::lift(b).expect("lift clamped to [0, 1]"));
        points.push(&x).expect("uniform draws lie in the unit cube");
    }
    DynamicSample {
        data: DynamicDataset::from_parts(points, outcomes, coefs),
        clamped,
    }
}
