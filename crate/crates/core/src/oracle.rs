//! Value oracles and the exhaustive checks used to validate them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ground::{Assignment, GroundSet, ItemId};

/// Absolute tolerance for every bound and property comparison.
pub const TOLERANCE: f64 = 1e-9;

/// Default cap on the ground-set size for [`check_monotone_submodular`].
pub const DEFAULT_CHECK_CAP: usize = 14;

/// Default cap on the number of feasible assignments for [`brute_force_opt`].
pub const DEFAULT_OPT_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleFlags {
    pub monotone: bool,
    pub submodular: bool,
}

impl OracleFlags {
    pub const MONOTONE_SUBMODULAR: Self = Self {
        monotone: true,
        submodular: true,
    };
    pub const NONE: Self = Self {
        monotone: false,
        submodular: false,
    };
}

/// Black-box set function `f: 2^V -> R>=0`.
///
/// `eval` receives distinct item ids in any order and must be a pure
/// function of that set. `value_bound` is an upper bound on any single-item
/// marginal `f(S + v) - f(S)`.
pub trait ValueOracle: Send + Sync {
    fn ground_size(&self) -> usize;

    fn eval(&self, set: &[ItemId]) -> f64;

    fn flags(&self) -> OracleFlags;

    fn value_bound(&self) -> f64;
}

impl<T: ValueOracle + ?Sized> ValueOracle for Arc<T> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn eval(&self, set: &[ItemId]) -> f64 {
        (**self).eval(set)
    }
    fn flags(&self) -> OracleFlags {
        (**self).flags()
    }
    fn value_bound(&self) -> f64 {
        (**self).value_bound()
    }
}

impl<T: ValueOracle + ?Sized> ValueOracle for &T {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn eval(&self, set: &[ItemId]) -> f64 {
        (**self).eval(set)
    }
    fn flags(&self) -> OracleFlags {
        (**self).flags()
    }
    fn value_bound(&self) -> f64 {
        (**self).value_bound()
    }
}

impl<T: ValueOracle + ?Sized> ValueOracle for Box<T> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn eval(&self, set: &[ItemId]) -> f64 {
        (**self).eval(set)
    }
    fn flags(&self) -> OracleFlags {
        (**self).flags()
    }
    fn value_bound(&self) -> f64 {
        (**self).value_bound()
    }
}

/// Wraps a closure over sorted id slices. Flags and bound are whatever the
/// caller declares.
pub struct FnOracle<F> {
    n: usize,
    f: F,
    flags: OracleFlags,
    bound: f64,
}

impl<F> FnOracle<F>
where
    F: Fn(&[ItemId]) -> f64 + Send + Sync,
{
    pub fn new(n: usize, flags: OracleFlags, bound: f64, f: F) -> Self {
        Self { n, f, flags, bound }
    }
}

impl<F> ValueOracle for FnOracle<F>
where
    F: Fn(&[ItemId]) -> f64 + Send + Sync,
{
    fn ground_size(&self) -> usize {
        self.n
    }
    fn eval(&self, set: &[ItemId]) -> f64 {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        (self.f)(&sorted)
    }
    fn flags(&self) -> OracleFlags {
        self.flags
    }
    fn value_bound(&self) -> f64 {
        self.bound
    }
}

pub(crate) fn mask_to_ids(mask: u64, n: usize) -> Vec<ItemId> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Evaluates `oracle` on every subset of an `n`-element ground set, indexed
/// by bitmask.
pub fn value_table<O: ValueOracle + ?Sized>(oracle: &O, n: usize) -> Vec<f64> {
    (0..1u64 << n)
        .map(|mask| oracle.eval(&mask_to_ids(mask, n)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `f(smaller) > f(larger)` although `smaller ⊂ larger`.
    NonMonotone {
        smaller: Vec<ItemId>,
        larger: Vec<ItemId>,
        gap: f64,
    },
    /// The gain of `item` on `base` is smaller than its gain on `superset`.
    NonSubmodular {
        base: Vec<ItemId>,
        superset: Vec<ItemId>,
        item: ItemId,
        gap: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularityReport {
    pub monotone: bool,
    pub submodular: bool,
    /// First violation found, submodularity violations preferred.
    pub witness: Option<Witness>,
}

/// Exhaustively checks monotonicity and diminishing returns.
///
/// Uses the local forms `f(A + s) >= f(A)` and
/// `f(A + s) - f(A) >= f(A + t + s) - f(A + t)`, which are equivalent to the
/// chain forms over all `A ⊆ A'`.
pub fn check_monotone_submodular<O: ValueOracle + ?Sized>(
    oracle: &O,
    ground: &GroundSet,
    cap: usize,
) -> Result<SubmodularityReport> {
    let n = ground.num_items();
    if n != oracle.ground_size() {
        return Err(Error::invalid(format!(
            "oracle ground size {} differs from ground set size {n}",
            oracle.ground_size()
        )));
    }
    if n > cap || n >= 63 {
        return Err(Error::CapExceeded {
            what: "submodularity check ground size",
            needed: n as u128,
            cap: cap as u128,
        });
    }
    let table = value_table(oracle, n);
    let mut mono_witness = None;
    let mut sub_witness = None;
    for a in 0..1u64 << n {
        for s in 0..n {
            if a >> s & 1 == 1 {
                continue;
            }
            let with_s = a | 1 << s;
            let gain = table[with_s as usize] - table[a as usize];
            if mono_witness.is_none() && gain < -TOLERANCE {
                mono_witness = Some(Witness::NonMonotone {
                    smaller: mask_to_ids(a, n),
                    larger: mask_to_ids(with_s, n),
                    gap: -gain,
                });
            }
            if sub_witness.is_some() {
                continue;
            }
            for t in 0..n {
                if t == s || a >> t & 1 == 1 {
                    continue;
                }
                let a_t = a | 1 << t;
                let gain_t = table[(a_t | 1 << s) as usize] - table[a_t as usize];
                if gain_t - gain > TOLERANCE {
                    sub_witness = Some(Witness::NonSubmodular {
                        base: mask_to_ids(a, n),
                        superset: mask_to_ids(a_t, n),
                        item: s,
                        gap: gain_t - gain,
                    });
                    break;
                }
            }
        }
        if mono_witness.is_some() && sub_witness.is_some() {
            break;
        }
    }
    Ok(SubmodularityReport {
        monotone: mono_witness.is_none(),
        submodular: sub_witness.is_none(),
        witness: sub_witness.or(mono_witness),
    })
}

/// Exact maximizer of `f` over feasible assignments.
///
/// Ties within [`TOLERANCE`] go to the lexicographically smallest sorted id
/// list.
pub fn brute_force_opt<O: ValueOracle + ?Sized>(
    oracle: &O,
    ground: &GroundSet,
    cap: u128,
) -> Result<(Assignment, f64)> {
    let needed = ground.feasible_count();
    if needed > cap {
        return Err(Error::CapExceeded {
            what: "feasible assignment count",
            needed,
            cap,
        });
    }
    let mut best: Option<(Assignment, f64)> = None;
    for s in ground.feasible_assignments() {
        let v = oracle.eval(s.items());
        best = match best {
            None => Some((s, v)),
            Some((bs, bv)) => {
                if v > bv + TOLERANCE || (v >= bv - TOLERANCE && s < bs) {
                    Some((s, v))
                } else {
                    Some((bs, bv))
                }
            }
        };
    }
    Ok(best.expect("the empty assignment is always feasible"))
}
