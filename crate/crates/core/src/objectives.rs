//! Built-in monotone submodular objective families.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ground::{Assignment, GroundSet, ItemId};
use crate::oracle::{OracleFlags, ValueOracle};

fn check_weights(what: &str, w: &[f64]) -> Result<()> {
    match w.iter().position(|x| !x.is_finite() || *x < 0.0) {
        Some(i) => Err(Error::invalid(format!(
            "{what}[{i}] = {} must be finite and non-negative",
            w[i]
        ))),
        None => Ok(()),
    }
}

/// `f(S) = sum of weights of universe elements covered by S`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCoverage {
    weights: Vec<f64>,
    covers: Vec<Vec<usize>>,
}

impl WeightedCoverage {
    /// `weights[e]` is the weight of universe element `e`, `covers[v]` the
    /// elements covered by item `v`.
    pub fn new(weights: Vec<f64>, covers: Vec<Vec<usize>>) -> Result<Self> {
        check_weights("coverage weight", &weights)?;
        for (v, c) in covers.iter().enumerate() {
            if let Some(&e) = c.iter().find(|&&e| e >= weights.len()) {
                return Err(Error::invalid(format!(
                    "item {v} covers element {e} outside universe of {}",
                    weights.len()
                )));
            }
        }
        Ok(Self { weights, covers })
    }

    /// Random instance: each item covers each element independently with
    /// probability `density`; element weights uniform on `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        items: usize,
        universe: usize,
        density: f64,
    ) -> Self {
        let weights = (0..universe).map(|_| rng.gen::<f64>()).collect();
        let covers = (0..items)
            .map(|_| (0..universe).filter(|_| rng.gen_bool(density)).collect())
            .collect();
        Self { weights, covers }
    }

    pub fn universe_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covers(&self) -> &[Vec<usize>] {
        &self.covers
    }
}

impl ValueOracle for WeightedCoverage {
    fn ground_size(&self) -> usize {
        self.covers.len()
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        let mut seen = vec![false; self.weights.len()];
        let mut total = 0.0;
        for &v in set {
            for &e in &self.covers[v] {
                if !seen[e] {
                    seen[e] = true;
                    total += self.weights[e];
                }
            }
        }
        total
    }

    fn flags(&self) -> OracleFlags {
        OracleFlags::MONOTONE_SUBMODULAR
    }

    fn value_bound(&self) -> f64 {
        self.covers
            .iter()
            .map(|c| c.iter().map(|&e| self.weights[e]).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Additive objective: each item carries its own value. With items standing
/// for (ad, position) pairs this is the separable click-through model.
#[derive(Debug, Clone, PartialEq)]
pub struct Modular {
    values: Vec<f64>,
}

pub type SeparablePositional = Modular;

impl Modular {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_weights("item value", &values)?;
        Ok(Self { values })
    }

    /// Separable click-through-rate table: value of ad `a` at position `k`
    /// is `alpha[a] * beta[k] * bid[a]`; item id `k * ads + a`.
    pub fn separable(alpha: &[f64], beta: &[f64], bid: &[f64]) -> Result<Self> {
        if alpha.len() != bid.len() {
            return Err(Error::invalid("alpha and bid lengths differ"));
        }
        let values = beta
            .iter()
            .flat_map(|&b| alpha.iter().zip(bid).map(move |(&a, &p)| a * b * p))
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl ValueOracle for Modular {
    fn ground_size(&self) -> usize {
        self.values.len()
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        set.iter().map(|&v| self.values[v]).sum()
    }

    fn flags(&self) -> OracleFlags {
        OracleFlags::MONOTONE_SUBMODULAR
    }

    fn value_bound(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Non-decreasing concave curve applied to intersection counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve {
    /// `x`
    Linear,
    /// `min(x, 1)`
    Saturating,
    /// `min(x, cap)`
    Capped(f64),
    /// `sqrt(x)`
    Sqrt,
    /// `ln(1 + x)`
    Log1p,
}

impl Curve {
    pub fn apply(self, x: usize) -> f64 {
        let x = x as f64;
        match self {
            Curve::Linear => x,
            Curve::Saturating => x.min(1.0),
            Curve::Capped(c) => x.min(c),
            Curve::Sqrt => x.sqrt(),
            Curve::Log1p => x.ln_1p(),
        }
    }
}

/// One user (or user type): the items it cares about, i.e. `A_u x I_u`
/// expressed as item ids, and its frequency weight.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestGroup {
    pub items: Vec<ItemId>,
    pub weight: f64,
}

impl InterestGroup {
    pub fn new(items: Vec<ItemId>, weight: f64) -> Self {
        Self { items, weight }
    }
}

/// `f(S) = sum_u w_u * curve(|S ∩ (A_u x I_u)|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveOverIntersection {
    n: usize,
    groups: Vec<InterestGroup>,
    // item -> indices of groups containing it
    membership: Vec<Vec<usize>>,
    curve: Curve,
}

impl ConcaveOverIntersection {
    pub fn new(n: usize, groups: Vec<InterestGroup>, curve: Curve) -> Result<Self> {
        if let Curve::Capped(c) = curve {
            if !(c >= 0.0) {
                return Err(Error::invalid("curve cap must be non-negative"));
            }
        }
        let mut membership = vec![Vec::new(); n];
        for (u, g) in groups.iter().enumerate() {
            if !(g.weight.is_finite() && g.weight >= 0.0) {
                return Err(Error::invalid(format!("group {u} has invalid weight")));
            }
            let mut items = g.items.clone();
            items.sort_unstable();
            items.dedup();
            for v in items {
                membership.get_mut(v).ok_or(Error::UnknownItem(v))?.push(u);
            }
        }
        Ok(Self {
            n,
            groups,
            membership,
            curve,
        })
    }

    pub fn groups(&self) -> &[InterestGroup] {
        &self.groups
    }

    pub fn curve(&self) -> Curve {
        self.curve
    }
}

impl ValueOracle for ConcaveOverIntersection {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        let mut counts = vec![0usize; self.groups.len()];
        for &v in set {
            for &u in &self.membership[v] {
                counts[u] += 1;
            }
        }
        counts
            .iter()
            .zip(&self.groups)
            .map(|(&c, g)| g.weight * self.curve.apply(c))
            .sum()
    }

    fn flags(&self) -> OracleFlags {
        OracleFlags::MONOTONE_SUBMODULAR
    }

    fn value_bound(&self) -> f64 {
        let first_step = self.curve.apply(1) - self.curve.apply(0);
        self.membership
            .iter()
            .map(|us| us.iter().map(|&u| self.groups[u].weight).sum::<f64>() * first_step)
            .fold(0.0, f64::max)
    }
}

/// Position-discounted value of a ranking:
/// `f(S) = sum_k gamma^k (g(S^[k]) - g(S^[k-1]))`, where `S^[k]` holds the
/// inner-ground elements placed at positions `1..=k`.
///
/// Items of the outer ground set map to (inner element, position). Any set
/// of items is accepted; items sharing a position all count toward that
/// position's prefix.
#[derive(Clone)]
pub struct DiscountedPositional {
    inner: Arc<dyn ValueOracle>,
    gamma: f64,
    num_positions: usize,
    element_of: Vec<usize>,
    position_of: Vec<usize>,
    bound: f64,
}

impl std::fmt::Debug for DiscountedPositional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscountedPositional")
            .field("gamma", &self.gamma)
            .field("num_positions", &self.num_positions)
            .field("element_of", &self.element_of)
            .finish()
    }
}

impl DiscountedPositional {
    /// `element_of[v]` is the inner element carried by item `v`; its position
    /// is the item's partition in `ground`.
    pub fn new(
        inner: Arc<dyn ValueOracle>,
        gamma: f64,
        ground: &GroundSet,
        element_of: Vec<usize>,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid(format!(
                "discount {gamma} must lie in (0, 1)"
            )));
        }
        if element_of.len() != ground.num_items() {
            return Err(Error::invalid("element_of must cover every item"));
        }
        if let Some(&e) = element_of.iter().find(|&&e| e >= inner.ground_size()) {
            return Err(Error::invalid(format!("inner element {e} out of range")));
        }
        let position_of = (0..ground.num_items())
            .map(|v| ground.partition_of(v))
            .collect::<Result<Vec<_>>>()?;
        let empty = inner.eval(&[]);
        let bound = gamma
            * (0..inner.ground_size())
                .map(|e| inner.eval(&[e]) - empty)
                .fold(0.0, f64::max);
        Ok(Self {
            inner,
            gamma,
            num_positions: ground.num_positions(),
            element_of,
            position_of,
            bound,
        })
    }

    /// Every inner element is a candidate at every position; item
    /// `k * m + e` puts element `e` at position `k + 1`.
    pub fn ranking(
        inner: Arc<dyn ValueOracle>,
        num_positions: usize,
        gamma: f64,
    ) -> Result<(Self, GroundSet)> {
        let m = inner.ground_size();
        let ground = GroundSet::grid(num_positions, m);
        let element_of = (0..num_positions * m).map(|v| v % m).collect();
        let f = Self::new(inner, gamma, &ground, element_of)?;
        Ok((f, ground))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn inner(&self) -> &Arc<dyn ValueOracle> {
        &self.inner
    }

    pub fn element_of(&self, v: ItemId) -> usize {
        self.element_of[v]
    }
}

impl ValueOracle for DiscountedPositional {
    fn ground_size(&self) -> usize {
        self.element_of.len()
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        let mut by_position = vec![Vec::new(); self.num_positions];
        for &v in set {
            by_position[self.position_of[v]].push(self.element_of[v]);
        }
        let mut prefix: Vec<usize> = Vec::with_capacity(set.len());
        let mut prev = self.inner.eval(&[]);
        let mut discount = 1.0;
        let mut total = 0.0;
        for elems in &by_position {
            discount *= self.gamma;
            if elems.is_empty() {
                continue;
            }
            for &e in elems {
                if !prefix.contains(&e) {
                    prefix.push(e);
                }
            }
            let cur = self.inner.eval(&prefix);
            total += discount * (cur - prev);
            prev = cur;
        }
        total
    }

    fn flags(&self) -> OracleFlags {
        let inner = self.inner.flags();
        OracleFlags {
            monotone: inner.monotone,
            submodular: inner.monotone && inner.submodular,
        }
    }

    fn value_bound(&self) -> f64 {
        self.bound
    }
}

/// Discounted value of a feasible ranking `s`; rejects infeasible input.
pub fn discounted_positional_value(
    inner: &dyn ValueOracle,
    gamma: f64,
    ground: &GroundSet,
    element_of: &[usize],
    s: &Assignment,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!(
            "discount {gamma} must lie in (0, 1)"
        )));
    }
    if !ground.is_feasible(s)? {
        return Err(Error::invalid(format!("assignment {s} is not feasible")));
    }
    let mut slots: Vec<Option<usize>> = vec![None; ground.num_positions()];
    for &v in s.items() {
        slots[ground.partition_of(v)?] = Some(*element_of.get(v).ok_or(Error::UnknownItem(v))?);
    }
    let mut prefix = Vec::new();
    let mut prev = inner.eval(&prefix);
    let mut total = 0.0;
    for (k, slot) in slots.iter().enumerate() {
        if let Some(e) = slot {
            if !prefix.contains(e) {
                prefix.push(*e);
            }
        }
        let cur = inner.eval(&prefix);
        total += gamma.powi(k as i32 + 1) * (cur - prev);
        prev = cur;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{check_monotone_submodular, FnOracle};
    use crate::rng::indexed_rng;

    fn cardinality(m: usize) -> Arc<dyn ValueOracle> {
        Arc::new(FnOracle::new(
            m,
            OracleFlags::MONOTONE_SUBMODULAR,
            1.0,
            |s: &[ItemId]| s.len() as f64,
        ))
    }

    #[test]
    fn discounted_cardinality_two_slots() {
        let (f, ground) = DiscountedPositional::ranking(cardinality(2), 2, 0.8).unwrap();
        // blog 0 at position 1 (item 0), blog 1 at position 2 (item 3)
        let s: Assignment = vec![0, 3].into();
        let direct =
            discounted_positional_value(&*cardinality(2), 0.8, &ground, &[0, 1, 0, 1], &s).unwrap();
        assert!((direct - 1.44).abs() < 1e-12);
        assert!((f.eval(s.items()) - 1.44).abs() < 1e-12);
    }

    #[test]
    fn discounted_empty_is_zero() {
        let (f, ground) = DiscountedPositional::ranking(cardinality(2), 3, 0.8).unwrap();
        assert_eq!(f.eval(&[]), 0.0);
        let v = discounted_positional_value(
            &*cardinality(2),
            0.8,
            &ground,
            &[0, 1, 0, 1, 0, 1],
            &Assignment::empty(),
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn duplicate_blog_counts_once() {
        let cov: Arc<dyn ValueOracle> = Arc::new(
            WeightedCoverage::new(vec![1.0, 2.0, 4.0], vec![vec![0, 1], vec![2]]).unwrap(),
        );
        let (f, ground) = DiscountedPositional::ranking(cov.clone(), 2, 0.8).unwrap();
        // blog 0 in both slots: items 0 and 2
        let s: Assignment = vec![0, 2].into();
        // brute-force evaluation of the formula: prefix sets {0}, {0}
        let g0 = cov.eval(&[0]);
        let expected = 0.8 * (g0 - cov.eval(&[])) + 0.64 * (g0 - g0);
        assert!((f.eval(s.items()) - expected).abs() < 1e-12);
        assert!((expected - 2.4).abs() < 1e-12);
        let direct = discounted_positional_value(&*cov, 0.8, &ground, &[0, 1, 0, 1], &s).unwrap();
        assert!((direct - expected).abs() < 1e-12);
    }

    #[test]
    fn discounted_rejects_infeasible_and_bad_gamma() {
        let (_, ground) = DiscountedPositional::ranking(cardinality(2), 2, 0.8).unwrap();
        let s: Assignment = vec![0, 1].into();
        assert!(
            discounted_positional_value(&*cardinality(2), 0.8, &ground, &[0, 1, 0, 1], &s).is_err()
        );
        assert!(DiscountedPositional::ranking(cardinality(2), 2, 1.0).is_err());
    }

    #[test]
    fn discounted_two_positions_two_blogs_is_monotone_submodular() {
        let cov: Arc<dyn ValueOracle> = Arc::new(
            WeightedCoverage::new(vec![1.0, 1.0, 1.0], vec![vec![0, 1], vec![1, 2]]).unwrap(),
        );
        let (f, ground) = DiscountedPositional::ranking(cov, 2, 0.8).unwrap();
        let r = check_monotone_submodular(&f, &ground, 14).unwrap();
        assert!(r.monotone && r.submodular, "{r:?}");
    }

    #[test]
    fn builtin_families_pass_exhaustive_check() {
        for seed in 0..120u64 {
            let mut rng = indexed_rng(seed, "families", 0);
            let n = rng.gen_range(2..=10);
            let ground = GroundSet::grid(n, 1);
            let cov = WeightedCoverage::random(&mut rng, n, 6, 0.4);
            let modular = Modular::new((0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let groups = (0..4)
                .map(|_| {
                    InterestGroup::new(
                        (0..n).filter(|_| rng.gen_bool(0.5)).collect(),
                        rng.gen::<f64>(),
                    )
                })
                .collect();
            let curve = [
                Curve::Linear,
                Curve::Saturating,
                Curve::Capped(2.0),
                Curve::Sqrt,
                Curve::Log1p,
            ][seed as usize % 5];
            let conc = ConcaveOverIntersection::new(n, groups, curve).unwrap();
            for (name, f) in [
                ("coverage", &cov as &dyn ValueOracle),
                ("modular", &modular),
                ("concave", &conc),
            ] {
                let r = check_monotone_submodular(f, &ground, 14).unwrap();
                assert!(r.monotone && r.submodular, "{name} seed {seed}: {r:?}");
            }
            // discounted over a small random coverage of blogs
            let blogs = rng.gen_range(1..=3);
            let positions = (10 / blogs).clamp(1, 3);
            let inner: Arc<dyn ValueOracle> =
                Arc::new(WeightedCoverage::random(&mut rng, blogs, 5, 0.5));
            let (d, dg) = DiscountedPositional::ranking(inner, positions, 0.8).unwrap();
            let r = check_monotone_submodular(&d, &dg, 14).unwrap();
            assert!(r.monotone && r.submodular, "discounted seed {seed}: {r:?}");
        }
    }

    #[test]
    fn value_bounds_dominate_singleton_gains() {
        let mut rng = indexed_rng(3, "bounds", 0);
        let cov = WeightedCoverage::random(&mut rng, 8, 10, 0.3);
        for v in 0..8 {
            assert!(cov.eval(&[v]) <= cov.value_bound() + 1e-12);
        }
        let conc = ConcaveOverIntersection::new(
            3,
            vec![
                InterestGroup::new(vec![0, 1], 0.3),
                InterestGroup::new(vec![1, 2], 0.5),
            ],
            Curve::Sqrt,
        )
        .unwrap();
        assert!((conc.value_bound() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn separable_table_layout() {
        let m = Modular::separable(&[0.5, 0.2], &[1.0, 0.5], &[2.0, 1.0]).unwrap();
        assert_eq!(m.values(), &[1.0, 0.2, 0.5, 0.1]);
        assert!(Modular::new(vec![-1.0]).is_err());
    }
}
