//! Experiment drivers shared by the command line and the test suites.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ground::{Assignment, GroundSet, ItemId};
use crate::harness::ad_model::AdModel;
use crate::harness::blog::BlogStream;
use crate::harness::regret::{independent_sets, RegretAccount};
use crate::harness::trace::RewardTrace;
use crate::matroid::Matroid;
use crate::offline::locally_greedy_in_order;
use crate::online::{FeedbackMode, Ocg, TgOnline};
use crate::oracle::{brute_force_opt, OracleFlags, ValueOracle};
use crate::rng::{stream_rng, streams};

/// Largest matroid ground set whose independent sets are enumerated for
/// regret accounting.
pub const INDEPENDENT_SET_CAP: usize = 20;

/// A sequence of objectives `f_1, f_2, ...` over one ground set.
pub trait Environment: Send + Sync {
    fn ground(&self) -> &GroundSet;

    /// `f_t` for zero-based round `t`.
    fn oracle(&self, t: u64) -> Arc<dyn ValueOracle>;

    /// True when every round uses the same function.
    fn is_stationary(&self) -> bool;

    /// Upper bound on `f_t(S)` over rounds and feasible `S`.
    fn reward_bound(&self) -> f64;
}

/// `f_t = f` for every round.
#[derive(Clone)]
pub struct Stationary {
    ground: GroundSet,
    oracle: Arc<dyn ValueOracle>,
    bound: f64,
}

impl Stationary {
    /// The reward bound is `f(∅) + sum_k max_{x ∈ P_k} (f({x}) - f(∅))`,
    /// valid for monotone submodular `f`.
    pub fn new(ground: GroundSet, oracle: Arc<dyn ValueOracle>) -> Result<Self> {
        if oracle.ground_size() != ground.num_items() {
            return Err(Error::invalid("oracle and ground set sizes differ"));
        }
        let empty = oracle.eval(&[]);
        let bound = empty
            + ground
                .partitions()
                .iter()
                .map(|p| {
                    p.iter()
                        .map(|&x| oracle.eval(&[x]) - empty)
                        .fold(0.0, f64::max)
                })
                .sum::<f64>();
        Ok(Self {
            ground,
            oracle,
            bound,
        })
    }

    pub fn oracle_ref(&self) -> &Arc<dyn ValueOracle> {
        &self.oracle
    }
}

impl Environment for Stationary {
    fn ground(&self) -> &GroundSet {
        &self.ground
    }

    fn oracle(&self, _t: u64) -> Arc<dyn ValueOracle> {
        self.oracle.clone()
    }

    fn is_stationary(&self) -> bool {
        true
    }

    fn reward_bound(&self) -> f64 {
        self.bound
    }
}

impl Environment for BlogStream {
    fn ground(&self) -> &GroundSet {
        BlogStream::ground(self)
    }

    fn oracle(&self, t: u64) -> Arc<dyn ValueOracle> {
        Arc::new(self.day(t))
    }

    fn is_stationary(&self) -> bool {
        false
    }

    fn reward_bound(&self) -> f64 {
        BlogStream::reward_bound(self)
    }
}

/// `sum_{t < rounds} f_t` as one oracle.
struct Aggregate<'a> {
    parts: Vec<Arc<dyn ValueOracle>>,
    n: usize,
    _env: std::marker::PhantomData<&'a ()>,
}

impl ValueOracle for Aggregate<'_> {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        self.parts.iter().map(|f| f.eval(set)).sum()
    }

    fn flags(&self) -> OracleFlags {
        OracleFlags::MONOTONE_SUBMODULAR
    }

    fn value_bound(&self) -> f64 {
        self.parts.iter().map(|f| f.value_bound()).sum()
    }
}

fn aggregate(env: &dyn Environment, rounds: u64) -> Aggregate<'_> {
    Aggregate {
        parts: (0..rounds).map(|t| env.oracle(t)).collect(),
        n: env.ground().num_items(),
        _env: std::marker::PhantomData,
    }
}

/// Regret bookkeeping for assignments: exact when the optimum (stationary)
/// or every feasible assignment (otherwise) fits under `cap`, else against
/// the locally greedy assignment.
fn assignment_account(env: &dyn Environment, rounds: u64, cap: u128) -> Result<RegretAccount> {
    let ground = env.ground();
    if env.is_stationary() {
        let f = env.oracle(0);
        return Ok(match brute_force_opt(&f, ground, cap) {
            Ok((_, opt)) => RegretAccount::stationary(opt, true),
            Err(Error::CapExceeded { .. }) => {
                let s = locally_greedy_in_order(ground, &f)?;
                RegretAccount::stationary(f.eval(s.items()), false)
            }
            Err(e) => return Err(e),
        });
    }
    match RegretAccount::feasible(ground, cap) {
        Ok(acc) => Ok(acc),
        Err(Error::CapExceeded { .. }) => {
            let s = locally_greedy_in_order(ground, &aggregate(env, rounds))?;
            Ok(RegretAccount::fixed_set(s.into_vec()))
        }
        Err(e) => Err(e),
    }
}

/// Online colored-table greedy on `env` for `rounds` rounds.
pub fn run_tg_online(
    env: &dyn Environment,
    colors: usize,
    rounds: u64,
    mode: FeedbackMode,
    seed: u64,
    cap: u128,
) -> Result<RewardTrace> {
    let ground = env.ground().clone();
    let mut tg = match mode {
        FeedbackMode::Full => {
            let bound = (0..rounds.max(1))
                .map(|t| env.oracle(t).value_bound())
                .fold(0.0, f64::max);
            TgOnline::full(ground, colors, bound, seed)?
        }
        FeedbackMode::Bandit { explore } => {
            TgOnline::bandit(ground, colors, env.reward_bound(), explore, seed)?
        }
    };
    let mut account = assignment_account(env, rounds, cap)?;
    let mut rng = stream_rng(seed, streams::COLORS);
    let mut trace = RewardTrace::new(seed, account.exact());
    for t in 0..rounds {
        let f = env.oracle(t);
        let play = tg.step(&mut rng)?;
        let reward = match mode {
            FeedbackMode::Full => tg.feedback_full(&f)?,
            FeedbackMode::Bandit { .. } => {
                let r = f.eval(play.assignment.items());
                tg.feedback_bandit(r)?;
                r
            }
        };
        let regret = account.record(&f, reward);
        trace.push(play.assignment, reward, regret, play.explored);
    }
    Ok(trace)
}

/// Greedy by marginal gain under the matroid constraint.
pub fn matroid_greedy<O: ValueOracle + ?Sized, M: Matroid + ?Sized>(
    oracle: &O,
    m: &M,
) -> Vec<usize> {
    let n = m.ground_size();
    let mut s: Vec<usize> = Vec::new();
    loop {
        let base = oracle.eval(&s);
        let mut best: Option<(usize, f64)> = None;
        for v in (0..n).filter(|v| !s.contains(v)) {
            let mut t = s.clone();
            t.push(v);
            if !m.is_independent(&t) {
                continue;
            }
            let gain = oracle.eval(&t) - base;
            if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((v, gain));
            }
        }
        match best {
            Some((v, _)) => s.push(v),
            None => break,
        }
    }
    s.sort_unstable();
    s
}

fn matroid_account(env: &dyn Environment, m: &dyn Matroid, rounds: u64) -> Result<RegretAccount> {
    match independent_sets(m, INDEPENDENT_SET_CAP) {
        Ok(sets) if env.is_stationary() => {
            let f = env.oracle(0);
            let opt = sets.iter().map(|s| f.eval(s)).fold(0.0, f64::max);
            Ok(RegretAccount::stationary(opt, true))
        }
        Ok(sets) => Ok(RegretAccount::enumerated(sets)),
        Err(Error::CapExceeded { .. }) => {
            if env.is_stationary() {
                let f = env.oracle(0);
                Ok(RegretAccount::stationary(
                    f.eval(&matroid_greedy(&f, m)),
                    false,
                ))
            } else {
                Ok(RegretAccount::fixed_set(matroid_greedy(
                    &aggregate(env, rounds),
                    m,
                )))
            }
        }
        Err(e) => Err(e),
    }
}

/// Online continuous greedy on `env` over matroid `m` with `stages = 1/δ`.
pub fn run_ocg(
    env: &dyn Environment,
    m: Arc<dyn Matroid>,
    stages: usize,
    rounds: u64,
    seed: u64,
) -> Result<RewardTrace> {
    if m.ground_size() != env.ground().num_items() {
        return Err(Error::invalid("matroid and ground set sizes differ"));
    }
    let bound = (0..rounds.max(1))
        .map(|t| env.oracle(t).value_bound())
        .fold(0.0, f64::max);
    let mut ocg = Ocg::new(m.clone(), stages, bound, rounds, seed)?;
    let mut account = matroid_account(env, m.as_ref(), rounds)?;
    let mut rounding = stream_rng(seed, streams::ROUNDING);
    let mut estimator = stream_rng(seed, streams::ESTIMATOR);
    let mut trace = RewardTrace::new(seed, account.exact());
    for t in 0..rounds {
        let f = env.oracle(t);
        let play = ocg.step(&mut rounding)?;
        let reward = f.eval(&play.set);
        ocg.feedback(&f, &mut estimator)?;
        let regret = account.record(&f, reward);
        trace.push(Assignment::from(play.set), reward, regret, false);
    }
    Ok(trace)
}

/// Policies compared in the ad simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdPolicy {
    /// Bandit colored-table greedy.
    TgOnline { colors: usize, explore: f64 },
    /// A uniformly random ad at every position, every round.
    Random,
    /// The best fixed assignment, every round.
    Fixed,
}

/// Simulates `rounds` users. The reward column is the realized click; the
/// regret column uses expected click probabilities against the optimum.
pub fn run_ad_sim(
    model: &AdModel,
    policy: AdPolicy,
    rounds: u64,
    seed: u64,
) -> Result<RewardTrace> {
    let ground = model.ground();
    let (best, opt) = model.optimum();
    let mut users = stream_rng(seed, streams::ENVIRONMENT);
    let mut trace = RewardTrace::new(seed, true);
    let mut account = RegretAccount::stationary(opt, true);
    let zero = crate::objectives::Modular::new(Vec::new())?;
    let mut tg = match policy {
        AdPolicy::TgOnline { colors, explore } => {
            Some(TgOnline::bandit(ground, colors, 1.0, explore, seed)?)
        }
        _ => None,
    };
    let mut policy_rng = stream_rng(seed, streams::COLORS);
    for _ in 0..rounds {
        let (s, explored) = match policy {
            AdPolicy::TgOnline { .. } => {
                let play = tg.as_mut().expect("built above").step(&mut policy_rng)?;
                (play.assignment, play.explored)
            }
            AdPolicy::Random => (
                (0..model.num_positions())
                    .map(|k| model.item(k, policy_rng.gen_range(0..model.num_ads())))
                    .collect(),
                false,
            ),
            AdPolicy::Fixed => (best.clone(), false),
        };
        let outcome = model.round(&s, &mut users)?;
        let reward = f64::from(outcome.clicks);
        if let Some(tg) = tg.as_mut() {
            tg.feedback_bandit(reward)?;
        }
        let regret = account.record(&zero, model.expected_reward(&s)?);
        trace.push(s, reward, regret, explored);
    }
    Ok(trace)
}
