//! `(1 - 1/e)`-regret: `(1 - 1/e) max_S sum_t f_t(S) - sum_t f_t(S_t)`.

use crate::error::{Error, Result};
use crate::ground::{Assignment, GroundSet, ItemId};
use crate::matroid::Matroid;
use crate::offline::locally_greedy_in_order;
use crate::oracle::{OracleFlags, ValueOracle};

/// `1 - 1/e`.
pub fn one_minus_inv_e() -> f64 {
    1.0 - (-1.0f64).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub regret: f64,
    /// `max_S sum_t f_t(S)` (or the proxy's total).
    pub best_static: f64,
    pub best_set: Assignment,
    pub algorithm_total: f64,
    /// False when the comparator is a greedy proxy instead of the exact
    /// optimum.
    pub exact: bool,
}

/// `sum_t f_t` as one oracle.
struct SumOracle<'a, O> {
    stream: &'a [O],
}

impl<O: ValueOracle> ValueOracle for SumOracle<'_, O> {
    fn ground_size(&self) -> usize {
        self.stream.first().map_or(0, ValueOracle::ground_size)
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        self.stream.iter().map(|f| f.eval(set)).sum()
    }

    fn flags(&self) -> OracleFlags {
        OracleFlags::MONOTONE_SUBMODULAR
    }

    fn value_bound(&self) -> f64 {
        self.stream.iter().map(ValueOracle::value_bound).sum()
    }
}

/// Regret of the played sequence against the best fixed feasible
/// assignment. Above `cap` feasible assignments the comparator is the
/// locally greedy assignment for `sum_t f_t` and the report is flagged
/// inexact.
pub fn regret_1m1e<O: ValueOracle>(
    played: &[Assignment],
    stream: &[O],
    ground: &GroundSet,
    cap: u128,
) -> Result<RegretReport> {
    if played.len() != stream.len() {
        return Err(Error::invalid(
            "one played assignment per function is required",
        ));
    }
    let algorithm_total: f64 = played
        .iter()
        .zip(stream)
        .map(|(s, f)| f.eval(s.items()))
        .sum();
    let sum = SumOracle { stream };
    let (best_set, best_static, exact) = if ground.feasible_count() <= cap {
        let mut best = (Assignment::empty(), f64::NEG_INFINITY);
        for s in ground.feasible_assignments() {
            let v = sum.eval(s.items());
            if v > best.1 {
                best = (s, v);
            }
        }
        (best.0, best.1, true)
    } else {
        let s = locally_greedy_in_order(ground, &sum)?;
        let v = sum.eval(s.items());
        (s, v, false)
    };
    Ok(RegretReport {
        regret: one_minus_inv_e() * best_static - algorithm_total,
        best_static,
        best_set,
        algorithm_total,
        exact,
    })
}

/// Every independent set of a small matroid, in increasing bitmask order.
pub fn independent_sets<M: Matroid + ?Sized>(m: &M, cap: usize) -> Result<Vec<Vec<usize>>> {
    let n = m.ground_size();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "independent-set enumeration ground size",
            needed: n as u128,
            cap: cap as u128,
        });
    }
    Ok((0u64..1 << n)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|s| m.is_independent(s))
        .collect())
}

/// Running regret for per-round reporting.
#[derive(Debug, Clone)]
pub struct RegretAccount {
    comparator: Comparator,
    algorithm_total: f64,
    rounds: u64,
}

#[derive(Debug, Clone)]
enum Comparator {
    /// Candidate sets with running totals.
    Enumerated {
        sets: Vec<Vec<ItemId>>,
        totals: Vec<f64>,
    },
    /// Known per-round value of the comparator.
    PerRound { value: f64, exact: bool },
    /// A fixed comparator set re-evaluated each round.
    FixedSet { set: Vec<ItemId>, total: f64 },
}

impl RegretAccount {
    /// Best of the given candidate sets in hindsight.
    pub fn enumerated(sets: Vec<Vec<ItemId>>) -> Self {
        let totals = vec![0.0; sets.len()];
        Self::with(Comparator::Enumerated { sets, totals })
    }

    /// Every feasible assignment of `ground`, if at most `cap`.
    pub fn feasible(ground: &GroundSet, cap: u128) -> Result<Self> {
        let count = ground.feasible_count();
        if count > cap {
            return Err(Error::CapExceeded {
                what: "feasible assignments",
                needed: count,
                cap,
            });
        }
        Ok(Self::enumerated(
            ground
                .feasible_assignments()
                .map(Assignment::into_vec)
                .collect(),
        ))
    }

    /// A stationary stream whose comparator earns `value` every round.
    pub fn stationary(value: f64, exact: bool) -> Self {
        Self::with(Comparator::PerRound { value, exact })
    }

    /// A fixed proxy comparator set; always flagged inexact.
    pub fn fixed_set(set: Vec<ItemId>) -> Self {
        Self::with(Comparator::FixedSet { set, total: 0.0 })
    }

    fn with(comparator: Comparator) -> Self {
        Self {
            comparator,
            algorithm_total: 0.0,
            rounds: 0,
        }
    }

    /// Records one round: `oracle` is `f_t` (unused for stationary
    /// comparators) and `value` is `f_t(S_t)`. Returns the running regret.
    pub fn record<O: ValueOracle + ?Sized>(&mut self, oracle: &O, value: f64) -> f64 {
        match &mut self.comparator {
            Comparator::Enumerated { sets, totals } => {
                for (s, t) in sets.iter().zip(totals.iter_mut()) {
                    *t += oracle.eval(s);
                }
            }
            Comparator::PerRound { .. } => {}
            Comparator::FixedSet { set, total } => *total += oracle.eval(set),
        }
        self.algorithm_total += value;
        self.rounds += 1;
        self.regret()
    }

    pub fn best_static(&self) -> f64 {
        match &self.comparator {
            Comparator::Enumerated { totals, .. } => totals.iter().copied().fold(0.0, f64::max),
            Comparator::PerRound { value, .. } => value * self.rounds as f64,
            Comparator::FixedSet { total, .. } => *total,
        }
    }

    pub fn algorithm_total(&self) -> f64 {
        self.algorithm_total
    }

    pub fn regret(&self) -> f64 {
        one_minus_inv_e() * self.best_static() - self.algorithm_total
    }

    pub fn exact(&self) -> bool {
        match &self.comparator {
            Comparator::Enumerated { .. } => true,
            Comparator::PerRound { exact, .. } => *exact,
            Comparator::FixedSet { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Modular, WeightedCoverage};
    use crate::oracle::brute_force_opt;
    use crate::rng::indexed_rng;

    #[test]
    fn single_round_at_optimum() {
        let mut rng = indexed_rng(1, "regret", 0);
        let g = GroundSet::grid(2, 3);
        let f = WeightedCoverage::random(&mut rng, 6, 8, 0.4);
        let (s, opt) = brute_force_opt(&f, &g, 1_000_000).unwrap();
        let r = regret_1m1e(&[s], &[f], &g, 1_000_000).unwrap();
        assert!(r.exact);
        assert!((r.regret + opt / std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn all_zero_functions() {
        let g = GroundSet::grid(2, 2);
        let f = Modular::new(vec![0.0; 4]).unwrap();
        let played = vec![Assignment::from(vec![0, 2]); 3];
        let r = regret_1m1e(&played, &[f.clone(), f.clone(), f], &g, 1_000_000).unwrap();
        assert_eq!(r.regret, 0.0);
    }

    #[test]
    fn three_round_stream_by_hand() {
        // P_1 = {0, 1}, P_2 = {2}
        let g = GroundSet::new(vec![vec![0, 1], vec![2]]).unwrap();
        let fs = vec![
            Modular::new(vec![1.0, 0.0, 0.5]).unwrap(),
            Modular::new(vec![0.0, 2.0, 0.5]).unwrap(),
            Modular::new(vec![0.0, 2.0, 0.0]).unwrap(),
        ];
        let played = vec![
            Assignment::from(vec![0]),
            Assignment::from(vec![0, 2]),
            Assignment::from(vec![1]),
        ];
        // best fixed: {1, 2} with 0.5 + 2.5 + 2 = 5; played: 1 + 0.5 + 2
        let r = regret_1m1e(&played, &fs, &g, 100).unwrap();
        assert_eq!(r.best_set, Assignment::from(vec![1, 2]));
        assert!((r.best_static - 5.0).abs() < 1e-12);
        assert!((r.regret - (one_minus_inv_e() * 5.0 - 3.5)).abs() < 1e-12);
        let proxy = regret_1m1e(&played, &fs, &g, 1).unwrap();
        assert!(!proxy.exact);
    }

    #[test]
    fn running_account_matches_batch() {
        let mut rng = indexed_rng(2, "regret", 0);
        let g = GroundSet::grid(2, 2);
        let fs: Vec<WeightedCoverage> = (0..5)
            .map(|_| WeightedCoverage::random(&mut rng, 4, 6, 0.5))
            .collect();
        let played: Vec<Assignment> = (0..5)
            .map(|t| Assignment::from(vec![t % 2, 2 + (t / 2) % 2]))
            .collect();
        let mut acc = RegretAccount::feasible(&g, 100).unwrap();
        let mut last = 0.0;
        for (f, s) in fs.iter().zip(&played) {
            last = acc.record(f, f.eval(s.items()));
        }
        let batch = regret_1m1e(&played, &fs, &g, 100).unwrap();
        assert!((last - batch.regret).abs() < 1e-12);
    }

    #[test]
    fn stationary_replay_of_optimum() {
        let mut acc = RegretAccount::stationary(2.0, true);
        let f = Modular::new(vec![2.0]).unwrap();
        for _ in 0..10 {
            acc.record(&f, 2.0);
        }
        assert!((acc.regret() + 20.0 / std::f64::consts::E).abs() < 1e-12);
    }
}
