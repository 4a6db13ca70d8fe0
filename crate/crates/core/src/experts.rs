//! No-regret subroutines.
//!
//! [`Rwm`] is randomized weighted majority with the anytime rate
//! `eta_t = sqrt(8 ln N / t)` over rewards normalized to `[0, 1]`. [`Fpl`]
//! is follow-the-perturbed-leader over the independent sets of a matroid.
//! [`EstimatedFeedback`] feeds an expert estimates of its rewards instead of
//! the rewards themselves.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matroid::{max_weight_independent_set, Matroid};
use crate::oracle::TOLERANCE;
use crate::rng::SimRng;

/// Full-information expert over a finite action set `0..num_actions()`.
pub trait Expert {
    fn num_actions(&self) -> usize;

    fn select(&mut self) -> usize;

    /// Reward of every action for the round just played.
    fn update(&mut self, rewards: &[f64]) -> Result<()>;
}

fn check_len(expected: usize, rewards: &[f64]) -> Result<()> {
    if rewards.len() != expected {
        return Err(Error::invalid(format!(
            "reward vector has {} entries, expected {expected}",
            rewards.len()
        )));
    }
    Ok(())
}

/// Randomized weighted majority (Hedge).
#[derive(Debug, Clone)]
pub struct Rwm {
    low: f64,
    high: f64,
    // cumulative normalized reward per action
    cumulative: Vec<f64>,
    rounds: u64,
    rng: SimRng,
}

impl Rwm {
    /// Rewards in `[0, bound]`.
    pub fn new(num_actions: usize, bound: f64, rng: SimRng) -> Result<Self> {
        Self::with_range(num_actions, 0.0, bound, rng)
    }

    /// Rewards (or reward estimates) in `[low, high]`.
    pub fn with_range(num_actions: usize, low: f64, high: f64, rng: SimRng) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::invalid("expert needs at least one action"));
        }
        if !(low.is_finite() && high.is_finite() && high > low) {
            return Err(Error::invalid(format!(
                "reward range [{low}, {high}] is empty"
            )));
        }
        Ok(Self {
            low,
            high,
            cumulative: vec![0.0; num_actions],
            rounds: 0,
            rng,
        })
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Learning rate used for the next selection.
    pub fn learning_rate(&self) -> f64 {
        let n = self.cumulative.len() as f64;
        (8.0 * n.ln() / (self.rounds + 1) as f64).sqrt()
    }

    /// Selection distribution for the next round.
    pub fn probabilities(&self) -> Vec<f64> {
        let eta = self.learning_rate();
        let top = self
            .cumulative
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = self
            .cumulative
            .iter()
            .map(|&r| (eta * (r - top)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

impl Expert for Rwm {
    fn num_actions(&self) -> usize {
        self.cumulative.len()
    }

    fn select(&mut self) -> usize {
        let probs = self.probabilities();
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    fn update(&mut self, rewards: &[f64]) -> Result<()> {
        check_len(self.cumulative.len(), rewards)?;
        let span = self.high - self.low;
        let slack = TOLERANCE * span.max(1.0);
        if let Some(r) = rewards
            .iter()
            .find(|&&r| !(r >= self.low - slack && r <= self.high + slack))
        {
            return Err(Error::invalid(format!(
                "reward {r} outside [{}, {}]",
                self.low, self.high
            )));
        }
        for (c, &r) in self.cumulative.iter_mut().zip(rewards) {
            *c += (r - self.low) / span;
        }
        self.rounds += 1;
        Ok(())
    }
}

/// Deterministic follow-the-leader: the action with the largest cumulative
/// reward, lowest index on ties. Has no regret guarantee; useful as a
/// reproducible stand-in.
#[derive(Debug, Clone)]
pub struct FollowTheLeader {
    cumulative: Vec<f64>,
}

impl FollowTheLeader {
    pub fn new(num_actions: usize) -> Self {
        Self {
            cumulative: vec![0.0; num_actions],
        }
    }
}

impl Expert for FollowTheLeader {
    fn num_actions(&self) -> usize {
        self.cumulative.len()
    }

    fn select(&mut self) -> usize {
        let mut best = 0;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > self.cumulative[best] + TOLERANCE {
                best = i;
            }
        }
        best
    }

    fn update(&mut self, rewards: &[f64]) -> Result<()> {
        check_len(self.cumulative.len(), rewards)?;
        for (c, r) in self.cumulative.iter_mut().zip(rewards) {
            *c += r;
        }
        Ok(())
    }
}

/// Produces reward estimates with `E[estimate] = scale * reward + drift`.
pub trait FeedbackEstimator {
    fn estimate(&mut self, rewards: &[f64]) -> Vec<f64>;

    /// The multiplicative factor `gamma` of the estimates.
    fn scale(&self) -> f64;
}

/// `gamma * (reward + U[-noise, noise])`, independently per action.
#[derive(Debug, Clone)]
pub struct NoisyScaledEstimator {
    gamma: f64,
    noise: f64,
    rng: SimRng,
}

impl NoisyScaledEstimator {
    pub fn new(gamma: f64, noise: f64, rng: SimRng) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::invalid(
                "estimator needs gamma > 0 and finite noise >= 0",
            ));
        }
        Ok(Self { gamma, noise, rng })
    }
}

impl FeedbackEstimator for NoisyScaledEstimator {
    fn estimate(&mut self, rewards: &[f64]) -> Vec<f64> {
        rewards
            .iter()
            .map(|&r| {
                let e = if self.noise > 0.0 {
                    self.rng.gen_range(-self.noise..=self.noise)
                } else {
                    0.0
                };
                self.gamma * (r + e)
            })
            .collect()
    }

    fn scale(&self) -> f64 {
        self.gamma
    }
}

/// Runs `inner` on estimates of the rewards it is given.
///
/// With unbiased estimates (`gamma = 1`) the expected regret against the
/// true rewards is that of `inner`; with scale `gamma` it is inflated by at
/// most `1 / gamma`.
#[derive(Debug, Clone)]
pub struct EstimatedFeedback<E, S> {
    inner: E,
    estimator: S,
}

impl<E: Expert, S: FeedbackEstimator> EstimatedFeedback<E, S> {
    pub fn new(inner: E, estimator: S) -> Self {
        Self { inner, estimator }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn scale(&self) -> f64 {
        self.estimator.scale()
    }
}

impl<E: Expert, S: FeedbackEstimator> Expert for EstimatedFeedback<E, S> {
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    fn select(&mut self) -> usize {
        self.inner.select()
    }

    fn update(&mut self, rewards: &[f64]) -> Result<()> {
        let estimates = self.estimator.estimate(rewards);
        self.inner.update(&estimates)
    }
}

/// Follow-the-perturbed-leader over the independent sets of a matroid with
/// linear rewards.
#[derive(Clone)]
pub struct Fpl {
    matroid: Arc<dyn Matroid>,
    cumulative: Vec<f64>,
    scale: f64,
    rng: SimRng,
}

impl std::fmt::Debug for Fpl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fpl")
            .field("cumulative", &self.cumulative)
            .field("scale", &self.scale)
            .finish()
    }
}

impl Fpl {
    /// Perturbations are i.i.d. uniform on `[0, scale]`.
    pub fn new(matroid: Arc<dyn Matroid>, scale: f64, rng: SimRng) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "perturbation scale {scale} must be finite and >= 0"
            )));
        }
        let n = matroid.ground_size();
        Ok(Self {
            matroid,
            cumulative: vec![0.0; n],
            scale,
            rng,
        })
    }

    /// `sqrt(n * g * horizon)` for per-coordinate rewards bounded by `g`.
    pub fn default_scale(n: usize, value_bound: f64, horizon: u64) -> f64 {
        (n as f64 * value_bound * horizon as f64).sqrt()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Max-weight independent set under cumulative weights plus a fresh
    /// perturbation.
    pub fn select(&mut self) -> Vec<usize> {
        let weights: Vec<f64> = self
            .cumulative
            .iter()
            .map(|&w| w + self.rng.gen::<f64>() * self.scale)
            .collect();
        max_weight_independent_set(self.matroid.as_ref(), &weights)
            .expect("weight vector matches the matroid ground set")
    }

    pub fn update(&mut self, feedback: &[f64]) -> Result<()> {
        check_len(self.cumulative.len(), feedback)?;
        if feedback.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("feedback weights must be finite"));
        }
        for (c, w) in self.cumulative.iter_mut().zip(feedback) {
            *c += w;
        }
        Ok(())
    }
}
