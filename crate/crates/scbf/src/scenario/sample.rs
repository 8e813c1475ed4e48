//! Uniform sampling of reachable balls and the batch bookkeeping that ties
//! samples to their signed-distance evaluations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ScenarioError;
use crate::robot::{JointConfig, ReachableBall};
use crate::sdfield::{overall_sdf_batch, Scene, SdfError, SdfSample};
use crate::robot::RobotModel;

/// Draws `n_samples` i.i.d. points uniformly from the ball: a standard
/// Gaussian direction (normalized) scaled by `radius · U^(1/n)`, which is
/// exactly uniform in any dimension. Fixed seed → identical output.
pub fn sample_ball(
    ball: &ReachableBall,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<JointConfig>, ScenarioError> {
    if n_samples == 0 {
        return Err(ScenarioError::InvalidArgument(
            "n_samples must be at least 1".into(),
        ));
    }
    let n = ball.center.len();
    if n == 0 {
        return Err(ScenarioError::InvalidArgument(
            "ball center must have at least one coordinate".into(),
        ));
    }
    if !(ball.radius >= 0.0 && ball.radius.is_finite()) {
        return Err(ScenarioError::InvalidArgument(format!(
            "ball radius must be finite and nonnegative, got {}",
            ball.radius
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        while norm < 1e-300 {
            // Astronomically unlikely; redraw rather than divide by zero.
            dir = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        let u: f64 = rng.gen::<f64>();
        let scale = ball.radius * u.powf(1.0 / n as f64) / norm;
        let q = ball
            .center
            .q
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + scale * d)
            .collect();
        out.push(JointConfig::new(q));
    }
    Ok(out)
}

/// A drawn scenario set and its signed-distance evaluations, index-aligned.
#[derive(Debug, Clone)]
pub struct ScenarioBatch {
    pub samples: Vec<JointConfig>,
    pub sdf: Vec<SdfSample>,
    pub rng_seed: u64,
}

impl ScenarioBatch {
    /// Samples the ball and evaluates the overall SDF at every sample (the
    /// per-control-step data-collection pass), in parallel but with
    /// schedule-independent output.
    pub fn draw(
        model: &RobotModel,
        scene: &Scene,
        ball: &ReachableBall,
        n_samples: usize,
        seed: u64,
        t: f64,
    ) -> Result<Self, ScenarioBatchError> {
        let samples = sample_ball(ball, n_samples, seed)?;
        let sdf = overall_sdf_batch(model, &samples, scene, t)?;
        Ok(ScenarioBatch {
            samples,
            sdf,
            rng_seed: seed,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioBatchError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sdf(#[from] SdfError),
}
