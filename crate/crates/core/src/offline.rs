//! Offline solvers: the locally greedy algorithm and the colored-table
//! greedy that optimizes the color-averaged objective.
//!
//! Colors are zero based here (`0..C`); partitions are processed in index
//! order within each color and colors in ascending order.

use log::warn;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ground::{Assignment, GroundSet, ItemId};
use crate::oracle::{ValueOracle, TOLERANCE};

/// Default cap on `C^K` for exact color averaging.
pub const DEFAULT_EXACT_CAP: u128 = 1_000_000;

/// Default number of color vectors in sampled mode.
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColoredItem {
    pub item: ItemId,
    pub color: usize,
}

impl ColoredItem {
    pub fn new(item: ItemId, color: usize) -> Self {
        Self { item, color }
    }
}

/// One color per partition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorVector(pub Vec<usize>);

impl ColorVector {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, num_positions: usize, colors: usize) -> Self {
        Self(
            (0..num_positions)
                .map(|_| rng.gen_range(0..colors))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// The `index`-th vector in mixed-radix order over `C^K` vectors.
    fn nth(mut index: u128, num_positions: usize, colors: usize) -> Self {
        let mut v = Vec::with_capacity(num_positions);
        for _ in 0..num_positions {
            v.push((index % colors as u128) as usize);
            index /= colors as u128;
        }
        Self(v)
    }
}

/// The `K x C` table built by [`tabular_greedy`]; cell `(k, c)` holds an
/// item of partition `k` once filled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredTable {
    num_positions: usize,
    colors: usize,
    cells: Vec<Option<ItemId>>,
}

impl ColoredTable {
    pub fn new(num_positions: usize, colors: usize) -> Self {
        Self {
            num_positions,
            colors,
            cells: vec![None; num_positions * colors],
        }
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn num_positions(&self) -> usize {
        self.num_positions
    }

    pub fn get(&self, k: usize, c: usize) -> Option<ItemId> {
        self.cells[c * self.num_positions + k]
    }

    /// Fills cell `(k, c)`; the item must belong to partition `k`.
    pub fn set(&mut self, ground: &GroundSet, k: usize, c: usize, item: ItemId) -> Result<()> {
        if k >= self.num_positions || c >= self.colors {
            return Err(Error::invalid(format!("cell ({k}, {c}) outside table")));
        }
        if ground.partition_of(item)? != k {
            return Err(Error::invalid(format!(
                "item {item} is not in partition {k}"
            )));
        }
        self.cells[c * self.num_positions + k] = Some(item);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn entries(&self) -> Vec<ColoredItem> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, cell)| cell.map(|item| ColoredItem::new(item, i / self.num_positions)))
            .collect()
    }

    /// Row `c`: the items of color `c`, one per partition.
    pub fn row(&self, c: usize) -> Vec<Option<ItemId>> {
        (0..self.num_positions).map(|k| self.get(k, c)).collect()
    }

    /// Table with row `c` moved to row `perm[c]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut out = Self::new(self.num_positions, self.colors);
        for c in 0..self.colors {
            for k in 0..self.num_positions {
                out.cells[perm[c] * self.num_positions + k] = self.get(k, c);
            }
        }
        out
    }
}

/// Items whose color matches the color drawn for their partition.
pub fn sample_colors(
    ground: &GroundSet,
    s: &[ColoredItem],
    colors: &ColorVector,
) -> Result<Assignment> {
    if colors.0.len() != ground.num_positions() {
        return Err(Error::invalid("color vector length must equal K"));
    }
    let mut out = Vec::new();
    for x in s {
        if colors.0[ground.partition_of(x.item)?] == x.color {
            out.push(x.item);
        }
    }
    Ok(out.into_iter().collect())
}

/// How the color average is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Enumerate all `C^K` color vectors, refusing above `cap`.
    Exact { cap: u128 },
    /// Average over `samples` uniformly drawn color vectors.
    Sampled { samples: usize },
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Exact {
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

fn color_vector_count(num_positions: usize, colors: usize) -> u128 {
    (0..num_positions).fold(1u128, |acc, _| acc.saturating_mul(colors as u128))
}

/// `F(S)`: expected value of `f(sample(S, c))` over uniformly random `c`.
pub fn color_averaged_value<O, R>(
    oracle: &O,
    ground: &GroundSet,
    s: &[ColoredItem],
    colors: usize,
    estimator: Estimator,
    rng: &mut R,
) -> Result<f64>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    if colors == 0 {
        return Err(Error::invalid("palette must have at least one color"));
    }
    if let Some(x) = s.iter().find(|x| x.color >= colors) {
        return Err(Error::invalid(format!(
            "color {} outside palette of {colors}",
            x.color
        )));
    }
    let k = ground.num_positions();
    match estimator {
        Estimator::Exact { cap } => {
            let count = color_vector_count(k, colors);
            if count > cap {
                return Err(Error::CapExceeded {
                    what: "color vector count",
                    needed: count,
                    cap,
                });
            }
            let mut values = Vec::with_capacity(count as usize);
            for i in 0..count {
                let cv = ColorVector::nth(i, k, colors);
                values.push(oracle.eval(sample_colors(ground, s, &cv)?.items()));
            }
            // order-independent sum: relabeling colors permutes the terms
            values.sort_by(f64::total_cmp);
            Ok(values.iter().sum::<f64>() / count as f64)
        }
        Estimator::Sampled { samples } => {
            if samples == 0 {
                return Err(Error::invalid("sampled mode needs at least one sample"));
            }
            let mut total = 0.0;
            for _ in 0..samples {
                let cv = ColorVector::random(rng, k, colors);
                total += oracle.eval(sample_colors(ground, s, &cv)?.items());
            }
            Ok(total / samples as f64)
        }
    }
}

/// `1 - (1 - 1/C)^C - binom(K, 2) / C`.
pub fn beta(num_positions: usize, colors: usize) -> f64 {
    let c = colors as f64;
    let k = num_positions as f64;
    1.0 - (1.0 - 1.0 / c).powf(c) - k * (k - 1.0) / 2.0 / c
}

/// Additive slack allowed in each greedy argmax.
///
/// With slack `e`, the selection is the lowest-valued candidate among those
/// within `e` of the best one, so the result is as bad as the slack allows.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxErrorInjector {
    errors: Vec<f64>,
}

impl ArgmaxErrorInjector {
    /// One error per partition, for [`locally_greedy`].
    pub fn per_position(errors: Vec<f64>) -> Result<Self> {
        Self::checked(errors)
    }

    /// One error per cell, indexed `c * K + k`, for [`tabular_greedy`].
    pub fn per_cell(num_positions: usize, colors: usize, errors: Vec<f64>) -> Result<Self> {
        if errors.len() != num_positions * colors {
            return Err(Error::invalid(
                "per-cell error schedule must have K*C entries",
            ));
        }
        Self::checked(errors)
    }

    fn checked(errors: Vec<f64>) -> Result<Self> {
        if errors.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::invalid(
                "injected errors must be finite and non-negative",
            ));
        }
        Ok(Self { errors })
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn total(&self) -> f64 {
        self.errors.iter().sum()
    }

    fn get(&self, index: usize) -> Result<f64> {
        self.errors
            .get(index)
            .copied()
            .ok_or_else(|| Error::invalid(format!("no injected error for step {index}")))
    }
}

/// Picks among `(id, value)` candidates: the best value with lowest id when
/// `slack` is zero, otherwise the worst candidate still within `slack`.
fn select_candidate(candidates: &[(ItemId, f64)], slack: f64) -> Option<ItemId> {
    let best = candidates
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let band = best - slack.max(TOLERANCE);
    let floor = candidates
        .iter()
        .filter(|&&(_, v)| v >= band)
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    candidates
        .iter()
        .filter(|&&(_, v)| v >= band && v <= floor + TOLERANCE)
        .map(|&(id, _)| id)
        .min()
}

/// Position-by-position greedy in the given order. Empty partitions leave
/// their slot empty.
pub fn locally_greedy<O: ValueOracle + ?Sized>(
    ground: &GroundSet,
    oracle: &O,
    order: &[usize],
    injector: Option<&ArgmaxErrorInjector>,
) -> Result<Assignment> {
    let k = ground.num_positions();
    let mut seen = vec![false; k];
    if order.len() != k
        || order
            .iter()
            .any(|&p| p >= k || std::mem::replace(&mut seen[p], true))
    {
        return Err(Error::invalid(
            "order must be a permutation of the positions",
        ));
    }
    let mut current = Assignment::empty();
    for &p in order {
        let candidates: Vec<(ItemId, f64)> = ground
            .partition(p)
            .iter()
            .map(|&x| (x, oracle.eval(current.with(x).items())))
            .collect();
        let slack = match injector {
            Some(inj) => inj.get(p)?,
            None => 0.0,
        };
        if let Some(x) = select_candidate(&candidates, slack) {
            current.insert(x);
        }
    }
    Ok(current)
}

/// [`locally_greedy`] in position order `0..K`.
pub fn locally_greedy_in_order<O: ValueOracle + ?Sized>(
    ground: &GroundSet,
    oracle: &O,
) -> Result<Assignment> {
    let order: Vec<usize> = (0..ground.num_positions()).collect();
    locally_greedy(ground, oracle, &order, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularOutcome {
    pub table: ColoredTable,
    pub colors: ColorVector,
    pub assignment: Assignment,
    /// Estimator actually used (differs from the request after a fallback).
    pub estimator: Estimator,
}

/// Color-averaged value of a partially built table when cell `(k, c)` is
/// filled with each candidate, plus the value without it.
///
/// Only color vectors with `c_k = c` see the candidate, so each candidate
/// costs `C^(K-1)` evaluations in exact mode.
fn cell_candidate_values<O, R>(
    oracle: &O,
    ground: &GroundSet,
    entries: &[ColoredItem],
    k: usize,
    c: usize,
    colors: usize,
    estimator: Estimator,
    rng: &mut R,
) -> Result<Vec<(ItemId, f64)>>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    let positions = ground.num_positions();
    let vectors: Vec<ColorVector> = match estimator {
        Estimator::Exact { .. } => (0..color_vector_count(positions, colors))
            .map(|i| ColorVector::nth(i, positions, colors))
            .collect(),
        Estimator::Sampled { samples } => (0..samples)
            .map(|_| ColorVector::random(rng, positions, colors))
            .collect(),
    };
    let total = vectors.len() as f64;
    let mut untouched = 0.0;
    let mut hit_bases = Vec::new();
    for cv in &vectors {
        let base = sample_colors(ground, entries, cv)?;
        if cv.0[k] == c {
            hit_bases.push(base);
        } else {
            untouched += oracle.eval(base.items());
        }
    }
    ground
        .partition(k)
        .iter()
        .map(|&x| {
            let hit: f64 = hit_bases
                .iter()
                .map(|b| oracle.eval(b.with(x).items()))
                .sum();
            Ok((x, (untouched + hit) / total))
        })
        .collect()
}

/// Builds the colored table greedily (colors outer, partitions inner), then
/// samples one color per partition and returns the resulting assignment.
///
/// With `C = 1` and the exact estimator this is exactly
/// [`locally_greedy_in_order`], including tie-breaking.
pub fn tabular_greedy<O, R>(
    ground: &GroundSet,
    oracle: &O,
    colors: usize,
    estimator: Estimator,
    injector: Option<&ArgmaxErrorInjector>,
    rng: &mut R,
) -> Result<TabularOutcome>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    if colors == 0 {
        return Err(Error::invalid("palette must have at least one color"));
    }
    let k_total = ground.num_positions();
    let estimator = match estimator {
        Estimator::Exact { cap } if color_vector_count(k_total, colors) > cap => {
            warn!(
                "C^K = {}^{} exceeds exact cap {cap}; falling back to {DEFAULT_SAMPLES} sampled color vectors",
                colors, k_total
            );
            Estimator::Sampled {
                samples: DEFAULT_SAMPLES,
            }
        }
        Estimator::Sampled { samples: 0 } => {
            return Err(Error::invalid("sampled mode needs at least one sample"));
        }
        e => e,
    };
    let mut table = ColoredTable::new(k_total, colors);
    let mut entries = Vec::with_capacity(k_total * colors);
    for c in 0..colors {
        for k in 0..k_total {
            let candidates =
                cell_candidate_values(oracle, ground, &entries, k, c, colors, estimator, rng)?;
            let slack = match injector {
                Some(inj) => inj.get(c * k_total + k)?,
                None => 0.0,
            };
            if let Some(x) = select_candidate(&candidates, slack) {
                table.set(ground, k, c, x)?;
                entries.push(ColoredItem::new(x, c));
            }
        }
    }
    let cv = ColorVector::random(rng, k_total, colors);
    let assignment = sample_colors(ground, &entries, &cv)?;
    Ok(TabularOutcome {
        table,
        colors: cv,
        assignment,
        estimator,
    })
}
