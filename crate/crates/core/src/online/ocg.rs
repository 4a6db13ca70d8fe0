//! Online continuous greedy over a matroid: `1/δ` follow-the-perturbed-leader
//! stages, each learning the direction of one continuous-greedy step.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::experts::Fpl;
use crate::matroid::{rank, round_to_independent, FractionalPoint, Matroid};
use crate::online::multilinear::sample_marginal_estimate;
use crate::oracle::ValueOracle;
use crate::rng::{indexed_rng, stream_rng, streams};

/// Refuse offline runs longer than this many rounds.
pub const OFFLINE_ROUND_CAP: u64 = 10_000_000;

/// What was played in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct OcgPlay {
    pub set: Vec<usize>,
    pub point: FractionalPoint,
}

pub struct Ocg {
    matroid: Arc<dyn Matroid>,
    stages: Vec<Fpl>,
    rounds: u64,
    pending: Option<Vec<Vec<usize>>>,
}

impl std::fmt::Debug for Ocg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ocg")
            .field("stages", &self.stages.len())
            .field("rounds", &self.rounds)
            .finish()
    }
}

impl Ocg {
    /// `stages = 1/δ` experts with the default perturbation scale for
    /// per-coordinate rewards bounded by `value_bound` over `horizon` rounds.
    pub fn new(
        matroid: Arc<dyn Matroid>,
        stages: usize,
        value_bound: f64,
        horizon: u64,
        seed: u64,
    ) -> Result<Self> {
        let scale = Fpl::default_scale(matroid.ground_size(), value_bound, horizon);
        Self::with_scale(matroid, stages, scale, seed)
    }

    pub fn with_scale(
        matroid: Arc<dyn Matroid>,
        stages: usize,
        scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if stages == 0 {
            return Err(Error::invalid("need at least one stage (delta = 1/stages)"));
        }
        let experts = (0..stages)
            .map(|s| {
                Fpl::new(
                    matroid.clone(),
                    scale,
                    indexed_rng(seed, streams::EXPERTS, s as u64),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            matroid,
            stages: experts,
            rounds: 0,
            pending: None,
        })
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.stages.len() as f64
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn matroid(&self) -> &Arc<dyn Matroid> {
        &self.matroid
    }

    /// Each stage picks its independent set; returns `y = sum δ chi(I)`.
    pub fn select(&mut self) -> Result<FractionalPoint> {
        if self.pending.is_some() {
            return Err(Error::Protocol("step called again before feedback".into()));
        }
        let sets: Vec<Vec<usize>> = self.stages.iter_mut().map(Fpl::select).collect();
        let delta = self.delta();
        let point = FractionalPoint::new(
            self.matroid.as_ref(),
            sets.iter().map(|s| (s.clone(), delta)).collect(),
        )?;
        self.pending = Some(sets);
        Ok(point)
    }

    /// [`Ocg::select`] followed by swap rounding of the point.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<OcgPlay> {
        let point = self.select()?;
        let set = round_to_independent(self.matroid.as_ref(), &point, rng)?;
        Ok(OcgPlay { set, point })
    }

    /// Feeds stage `τ` one estimate of `ΔF_t(y(τ))`, with `y(τ)` the sum
    /// over earlier stages of `δ chi(I)`.
    pub fn feedback<O, R>(&mut self, oracle: &O, rng: &mut R) -> Result<()>
    where
        O: ValueOracle + ?Sized,
        R: Rng + ?Sized,
    {
        let sets = self
            .pending
            .take()
            .ok_or_else(|| Error::Protocol("feedback without a pending step".into()))?;
        let n = self.matroid.ground_size();
        if oracle.ground_size() != n {
            return Err(Error::invalid("oracle and matroid ground sizes differ"));
        }
        let delta = self.delta();
        let mut y = vec![0.0; n];
        for (stage, set) in self.stages.iter_mut().zip(&sets) {
            let omega = sample_marginal_estimate(oracle, &y, rng)?;
            stage.update(&omega.to_dense(n))?;
            for &v in set {
                y[v] = (y[v] + delta).min(1.0);
            }
        }
        self.rounds += 1;
        Ok(())
    }
}

/// How many rounds the offline solver runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OcgHorizon {
    Rounds(u64),
    /// `T = ceil(4 d^2 n g / (eps^2 OPT^2))` from a lower bound on OPT.
    OptLowerBound(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcgOfflineOutcome {
    pub set: Vec<usize>,
    pub rounds: u64,
    pub stages: usize,
    /// Round whose fractional point was rounded (zero based).
    pub chosen_round: u64,
}

/// Offline use of the online algorithm: `f_t = f` for `T` rounds with
/// `δ = ε / 2d`, then rounds the fractional point of a uniformly random round.
pub fn ocg_offline_solve<O: ValueOracle + ?Sized>(
    oracle: &O,
    matroid: Arc<dyn Matroid>,
    epsilon: f64,
    horizon: OcgHorizon,
    seed: u64,
) -> Result<OcgOfflineOutcome> {
    let limit = 1.0 - (-1.0f64).exp();
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(Error::invalid(format!(
            "epsilon {epsilon} outside (0, 1 - 1/e)"
        )));
    }
    let n = matroid.ground_size();
    let d = rank(matroid.as_ref());
    let g = oracle.value_bound();
    let rounds = match horizon {
        OcgHorizon::Rounds(t) => t,
        OcgHorizon::OptLowerBound(opt) => {
            if !(opt > 0.0 && opt.is_finite()) {
                return Err(Error::invalid("OPT lower bound must be positive"));
            }
            let t = (4.0 * (d * d * n) as f64 * g / (epsilon * epsilon * opt * opt)).ceil();
            if t > OFFLINE_ROUND_CAP as f64 {
                return Err(Error::CapExceeded {
                    what: "offline rounds",
                    needed: t as u128,
                    cap: OFFLINE_ROUND_CAP as u128,
                });
            }
            t as u64
        }
    };
    if rounds == 0 {
        return Err(Error::invalid("offline solver needs at least one round"));
    }
    let stages = ((2 * d.max(1)) as f64 / epsilon).ceil() as usize;
    let mut ocg = Ocg::new(matroid.clone(), stages, g, rounds, seed)?;
    let mut pick = stream_rng(seed, streams::ROUNDING);
    let mut estimator = stream_rng(seed, streams::ESTIMATOR);
    let chosen_round = pick.gen_range(0..rounds);
    let mut chosen = None;
    for t in 0..rounds {
        let point = ocg.select()?;
        if t == chosen_round {
            chosen = Some(point);
        }
        ocg.feedback(oracle, &mut estimator)?;
    }
    let point = chosen.expect("chosen round lies in 0..rounds");
    let set = round_to_independent(matroid.as_ref(), &point, &mut pick)?;
    Ok(OcgOfflineOutcome {
        set,
        rounds,
        stages,
        chosen_round,
    })
}
