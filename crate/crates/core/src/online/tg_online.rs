//! Online colored-table greedy: one expert per table cell, played through a
//! fresh random color vector each round.

use rand::Rng;

use crate::error::{Error, Result};
use crate::experts::{Expert, Rwm};
use crate::ground::{Assignment, GroundSet, ItemId};
use crate::offline::{sample_colors, ColorVector, ColoredItem};
use crate::oracle::ValueOracle;
use crate::rng::{indexed_rng, streams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackMode {
    /// Oracle access to `f_t` after every round.
    Full,
    /// Only the reward of the played set; explore with probability
    /// `explore`.
    Bandit { explore: f64 },
}

/// Exploration rate `min(1, (|V| C K / T)^(1/3))`.
pub fn default_explore(horizon: u64, num_items: usize, colors: usize, num_positions: usize) -> f64 {
    let t = horizon.max(1) as f64;
    ((num_items * colors * num_positions) as f64 / t)
        .cbrt()
        .min(1.0)
}

/// What was played in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct TgPlay {
    pub assignment: Assignment,
    pub colors: ColorVector,
    pub explored: bool,
}

#[derive(Debug, Clone)]
struct Pending {
    // chosen item per cell, `c * K + k`
    choices: Vec<Option<ItemId>>,
    colors: ColorVector,
    played: Assignment,
    // cell and action index explored this round
    explored: Option<(usize, usize)>,
}

/// State of the online colored-table greedy.
///
/// Cell `(k, c)` owns an expert over the items of partition `k`; cells of
/// empty partitions have no expert and stay empty.
#[derive(Debug, Clone)]
pub struct TgOnline<E = Rwm> {
    ground: GroundSet,
    colors: usize,
    mode: FeedbackMode,
    experts: Vec<Option<E>>,
    rounds: u64,
    pending: Option<Pending>,
}

impl TgOnline<Rwm> {
    /// Full information with randomized weighted majority experts; marginal
    /// rewards lie in `[0, value_bound]`.
    pub fn full(ground: GroundSet, colors: usize, value_bound: f64, seed: u64) -> Result<Self> {
        Self::with_experts(ground, colors, FeedbackMode::Full, |cell, actions| {
            Rwm::new(
                actions,
                value_bound,
                indexed_rng(seed, streams::EXPERTS, cell as u64),
            )
        })
    }

    /// Bandit feedback with randomized weighted majority experts fed
    /// importance-weighted estimates. `reward_bound` bounds the observed
    /// reward of any feasible set.
    pub fn bandit(
        ground: GroundSet,
        colors: usize,
        reward_bound: f64,
        explore: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&explore) {
            return Err(Error::invalid(format!(
                "exploration rate {explore} outside [0, 1]"
            )));
        }
        let cells = live_cells(&ground) * colors;
        let sizes: Vec<usize> = ground.partitions().iter().map(Vec::len).collect();
        let k = ground.num_positions();
        Self::with_experts(
            ground,
            colors,
            FeedbackMode::Bandit { explore },
            |cell, actions| {
                let width = sizes[cell % k];
                let high = if explore > 0.0 {
                    reward_bound * (cells * width) as f64 / explore
                } else {
                    reward_bound
                };
                Rwm::new(
                    actions,
                    high,
                    indexed_rng(seed, streams::EXPERTS, cell as u64),
                )
            },
        )
    }
}

fn live_cells(ground: &GroundSet) -> usize {
    ground.partitions().iter().filter(|p| !p.is_empty()).count()
}

impl<E: Expert> TgOnline<E> {
    /// `make(cell, num_actions)` builds the expert of cell `c * K + k`.
    pub fn with_experts<F>(
        ground: GroundSet,
        colors: usize,
        mode: FeedbackMode,
        mut make: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<E>,
    {
        if colors == 0 {
            return Err(Error::invalid("palette must have at least one color"));
        }
        if let FeedbackMode::Bandit { explore } = mode {
            if !(0.0..=1.0).contains(&explore) {
                return Err(Error::invalid(format!(
                    "exploration rate {explore} outside [0, 1]"
                )));
            }
        }
        let k = ground.num_positions();
        let mut experts = Vec::with_capacity(k * colors);
        for cell in 0..k * colors {
            let width = ground.partition(cell % k).len();
            experts.push(if width == 0 {
                None
            } else {
                Some(make(cell, width)?)
            });
        }
        Ok(Self {
            ground,
            colors,
            mode,
            experts,
            rounds: 0,
            pending: None,
        })
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    /// Completed rounds.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Expert of cell `(k, c)`, if partition `k` is nonempty.
    pub fn expert(&self, k: usize, c: usize) -> Option<&E> {
        self.experts
            .get(c * self.ground.num_positions() + k)?
            .as_ref()
    }

    /// Colored items of all cells before `(k, c)`: every cell of a lower
    /// color, then cells `(k', c)` with `k' < k`.
    fn prefix(&self, choices: &[Option<ItemId>], k: usize, c: usize) -> Vec<ColoredItem> {
        let kk = self.ground.num_positions();
        (0..c * kk + k)
            .filter_map(|cell| choices[cell].map(|item| ColoredItem::new(item, cell / kk)))
            .collect()
    }

    fn entries(&self, choices: &[Option<ItemId>]) -> Vec<ColoredItem> {
        let kk = self.ground.num_positions();
        choices
            .iter()
            .enumerate()
            .filter_map(|(cell, x)| x.map(|item| ColoredItem::new(item, cell / kk)))
            .collect()
    }

    /// Chooses every cell, draws the colors and, in bandit mode, possibly an
    /// exploration cell.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<TgPlay> {
        if self.pending.is_some() {
            return Err(Error::Protocol("step called again before feedback".into()));
        }
        let k = self.ground.num_positions();
        let mut choices = Vec::with_capacity(self.experts.len());
        for (cell, e) in self.experts.iter_mut().enumerate() {
            choices.push(
                e.as_mut()
                    .map(|e| self.ground.partition(cell % k)[e.select()]),
            );
        }
        let colors = ColorVector::random(rng, k, self.colors);
        let mut explored = None;
        if let FeedbackMode::Bandit { explore } = self.mode {
            if rng.gen::<f64>() < explore {
                let live: Vec<usize> = (0..self.experts.len())
                    .filter(|&c| self.experts[c].is_some())
                    .collect();
                if !live.is_empty() {
                    let cell = live[rng.gen_range(0..live.len())];
                    let action = rng.gen_range(0..self.ground.partition(cell % k).len());
                    explored = Some((cell, action));
                }
            }
        }
        let played = match explored {
            Some((cell, action)) => {
                let mut s = self.prefix(&choices, cell % k, cell / k);
                s.push(ColoredItem::new(
                    self.ground.partition(cell % k)[action],
                    cell / k,
                ));
                sample_colors(&self.ground, &s, &colors)?
            }
            None => sample_colors(&self.ground, &self.entries(&choices), &colors)?,
        };
        self.pending = Some(Pending {
            choices,
            colors: colors.clone(),
            played: played.clone(),
            explored,
        });
        Ok(TgPlay {
            assignment: played,
            colors,
            explored: explored.is_some(),
        })
    }

    fn take_pending(&mut self, want_full: bool) -> Result<Pending> {
        let full = matches!(self.mode, FeedbackMode::Full);
        if full != want_full {
            return Err(Error::Protocol(format!(
                "{} feedback given to a {} learner",
                if want_full {
                    "full-information"
                } else {
                    "bandit"
                },
                if full { "full-information" } else { "bandit" }
            )));
        }
        self.pending
            .take()
            .ok_or_else(|| Error::Protocol("feedback without a pending step".into()))
    }

    /// Feeds every cell `(k, c)` the reward `F̄(G⁻ + x) - F̄(G⁻)` of each of
    /// its items, where `F̄(S) = f(sample(S, c))` under this round's colors.
    /// Returns `f(G_t)`.
    pub fn feedback_full<O: ValueOracle + ?Sized>(&mut self, oracle: &O) -> Result<f64> {
        let p = self.take_pending(true)?;
        let kk = self.ground.num_positions();
        for cell in 0..self.experts.len() {
            if self.experts[cell].is_none() {
                continue;
            }
            let (k, c) = (cell % kk, cell / kk);
            let items = self.ground.partition(k);
            let rewards = if p.colors.0[k] == c {
                let base_set =
                    sample_colors(&self.ground, &self.prefix(&p.choices, k, c), &p.colors)?;
                let base = oracle.eval(base_set.items());
                items
                    .iter()
                    .map(|&x| (oracle.eval(base_set.with(x).items()) - base).max(0.0))
                    .collect()
            } else {
                // x is dropped by the color draw; every action scores zero
                vec![0.0; items.len()]
            };
            self.experts[cell]
                .as_mut()
                .expect("live cell")
                .update(&rewards)?;
        }
        self.rounds += 1;
        Ok(oracle.eval(p.played.items()))
    }

    /// Feeds the explored cell `reward * cells * |P_k| / explore` on the
    /// explored item and zero elsewhere; every other expert gets zeros.
    pub fn feedback_bandit(&mut self, reward: f64) -> Result<()> {
        let p = self.take_pending(false)?;
        if !(reward.is_finite() && reward >= 0.0) {
            return Err(Error::invalid(format!(
                "observed reward {reward} must be finite and >= 0"
            )));
        }
        let explore = match self.mode {
            FeedbackMode::Bandit { explore } => explore,
            FeedbackMode::Full => unreachable!("checked by take_pending"),
        };
        let kk = self.ground.num_positions();
        let live = live_cells(&self.ground) * self.colors;
        for cell in 0..self.experts.len() {
            let Some(e) = self.experts[cell].as_mut() else {
                continue;
            };
            let width = self.ground.partition(cell % kk).len();
            let mut rewards = vec![0.0; width];
            if let Some((ec, action)) = p.explored {
                if ec == cell {
                    rewards[action] = reward * (live * width) as f64 / explore;
                }
            }
            e.update(&rewards)?;
        }
        self.rounds += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::FollowTheLeader;
    use crate::objectives::WeightedCoverage;
    use crate::offline::locally_greedy_in_order;
    use crate::oracle::{FnOracle, OracleFlags};
    use crate::rng::indexed_rng;

    #[test]
    fn protocol_misuse_is_rejected() {
        let g = GroundSet::grid(2, 2);
        let f =
            WeightedCoverage::new(vec![1.0; 4], vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let mut tg = TgOnline::full(g.clone(), 2, 1.0, 1).unwrap();
        let mut rng = indexed_rng(1, "tg", 0);
        assert!(matches!(tg.feedback_full(&f), Err(Error::Protocol(_))));
        tg.step(&mut rng).unwrap();
        assert!(matches!(tg.step(&mut rng), Err(Error::Protocol(_))));
        assert!(matches!(tg.feedback_bandit(1.0), Err(Error::Protocol(_))));
        tg.feedback_full(&f).unwrap();
        assert!(matches!(tg.feedback_full(&f), Err(Error::Protocol(_))));
        let mut b = TgOnline::bandit(g, 2, 4.0, 0.5, 1).unwrap();
        b.step(&mut rng).unwrap();
        assert!(matches!(b.feedback_full(&f), Err(Error::Protocol(_))));
    }

    #[test]
    fn played_sets_are_feasible() {
        let mut rng = indexed_rng(2, "tg", 0);
        let g = GroundSet::grid(3, 3);
        let f = WeightedCoverage::random(&mut rng, 9, 10, 0.3);
        let bound = f.value_bound();
        let mut tg = TgOnline::full(g.clone(), 3, bound, 2).unwrap();
        let mut b =
            TgOnline::bandit(g.clone(), 3, f.eval(&(0..9).collect::<Vec<_>>()), 0.3, 2).unwrap();
        for _ in 0..200 {
            let p = tg.step(&mut rng).unwrap();
            assert!(g.is_feasible(&p.assignment).unwrap());
            tg.feedback_full(&f).unwrap();
            let p = b.step(&mut rng).unwrap();
            assert!(g.is_feasible(&p.assignment).unwrap());
            b.feedback_bandit(f.eval(p.assignment.items())).unwrap();
        }
    }

    #[test]
    fn single_cell_matches_plain_rwm() {
        let g = GroundSet::grid(1, 3);
        let vals = [0.2, 0.5, 0.3];
        let f = FnOracle::new(
            3,
            OracleFlags::MONOTONE_SUBMODULAR,
            0.5,
            move |s: &[ItemId]| s.iter().map(|&v| vals[v]).fold(0.0, f64::max),
        );
        let mut tg = TgOnline::full(g, 1, 0.5, 9).unwrap();
        let mut rwm = Rwm::new(3, 0.5, indexed_rng(9, streams::EXPERTS, 0)).unwrap();
        let mut rng = indexed_rng(3, "tg", 0);
        for _ in 0..300 {
            let p = tg.step(&mut rng).unwrap();
            assert_eq!(p.assignment.items(), &[rwm.select()]);
            tg.feedback_full(&f).unwrap();
            rwm.update(&vals).unwrap();
        }
        assert_eq!(
            tg.expert(0, 0).unwrap().probabilities(),
            rwm.probabilities()
        );
    }

    #[test]
    fn zero_exploration_never_moves_experts() {
        let g = GroundSet::grid(2, 3);
        let mut tg = TgOnline::bandit(g, 2, 1.0, 0.0, 4).unwrap();
        let mut rng = indexed_rng(4, "tg", 0);
        for _ in 0..100 {
            let p = tg.step(&mut rng).unwrap();
            assert!(!p.explored);
            tg.feedback_bandit(0.7).unwrap();
        }
        for c in 0..2 {
            for k in 0..2 {
                assert_eq!(tg.expert(k, c).unwrap().probabilities(), vec![1.0 / 3.0; 3]);
            }
        }
    }

    /// Keeps per-action sums and sums of squares of the fed rewards.
    struct Recorder {
        sums: Vec<f64>,
        squares: Vec<f64>,
    }

    impl Expert for Recorder {
        fn num_actions(&self) -> usize {
            self.sums.len()
        }
        fn select(&mut self) -> usize {
            0
        }
        fn update(&mut self, rewards: &[f64]) -> Result<()> {
            for (i, r) in rewards.iter().enumerate() {
                self.sums[i] += r;
                self.squares[i] += r * r;
            }
            Ok(())
        }
    }

    #[test]
    fn full_exploration_estimates_are_unbiased() {
        let g = GroundSet::grid(1, 3);
        let vals = [0.2, 0.5, 0.9];
        let mut tg = TgOnline::with_experts(g, 1, FeedbackMode::Bandit { explore: 1.0 }, |_, n| {
            Ok(Recorder {
                sums: vec![0.0; n],
                squares: vec![0.0; n],
            })
        })
        .unwrap();
        let mut rng = indexed_rng(5, "tg", 0);
        let rounds = 100_000;
        for _ in 0..rounds {
            let p = tg.step(&mut rng).unwrap();
            assert!(p.explored);
            let r: f64 = p.assignment.items().iter().map(|&v| vals[v]).sum();
            tg.feedback_bandit(r).unwrap();
        }
        let rec = tg.expert(0, 0).unwrap();
        for x in 0..3 {
            let mean = rec.sums[x] / rounds as f64;
            let var = rec.squares[x] / rounds as f64 - mean * mean;
            let se = (var / rounds as f64).sqrt();
            assert!(
                (mean - vals[x]).abs() <= 3.0 * se,
                "item {x}: {mean} vs {}",
                vals[x]
            );
        }
    }

    #[test]
    fn follow_the_leader_replays_locally_greedy() {
        // strict gaps so that follow-the-leader settles on the greedy path
        let mut rng = indexed_rng(6, "tg", 0);
        for seed in 0..20 {
            let mut irng = indexed_rng(seed, "tg-replay", 0);
            let g = GroundSet::grid(3, 3);
            let f = WeightedCoverage::random(&mut irng, 9, 12, 0.35);
            let greedy = locally_greedy_in_order(&g, &f).unwrap();
            let mut tg = TgOnline::with_experts(g.clone(), 1, FeedbackMode::Full, |_, n| {
                Ok(FollowTheLeader::new(n))
            })
            .unwrap();
            let mut last = None;
            for _ in 0..60 {
                let p = tg.step(&mut rng).unwrap();
                last = Some(p.assignment);
                tg.feedback_full(&f).unwrap();
            }
            let played = last.unwrap();
            assert_eq!(
                f.eval(played.items()),
                f.eval(greedy.items()),
                "seed {seed}"
            );
        }
    }
}
