//! Matroids given by independence oracles, matroid-polytope points stored as
//! explicit convex combinations, and swap rounding back to independent sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ground::GroundSet;
use crate::oracle::TOLERANCE;

/// Independence oracle over elements `0..ground_size()`.
///
/// Sets are passed as slices of distinct element ids in any order.
pub trait Matroid: Send + Sync {
    fn ground_size(&self) -> usize;

    fn is_independent(&self, set: &[usize]) -> bool;
}

impl<M: Matroid + ?Sized> Matroid for &M {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn is_independent(&self, set: &[usize]) -> bool {
        (**self).is_independent(set)
    }
}

impl<M: Matroid + ?Sized> Matroid for Box<M> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn is_independent(&self, set: &[usize]) -> bool {
        (**self).is_independent(set)
    }
}

impl<M: Matroid + ?Sized> Matroid for Arc<M> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn is_independent(&self, set: &[usize]) -> bool {
        (**self).is_independent(set)
    }
}

/// At most `caps[k]` elements from block `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMatroid {
    block_of: Vec<usize>,
    caps: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(block_of: Vec<usize>, caps: Vec<usize>) -> Result<Self> {
        if let Some(&b) = block_of.iter().find(|&&b| b >= caps.len()) {
            return Err(Error::invalid(format!("block {b} has no capacity")));
        }
        Ok(Self { block_of, caps })
    }

    /// The assignment constraint: one item per position.
    pub fn from_ground(ground: &GroundSet) -> Self {
        Self {
            block_of: ground.items().map(|it| it.partition).collect(),
            caps: vec![1; ground.num_positions()],
        }
    }
}

impl Matroid for PartitionMatroid {
    fn ground_size(&self) -> usize {
        self.block_of.len()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        let mut used = vec![0usize; self.caps.len()];
        for &v in set {
            let Some(&b) = self.block_of.get(v) else {
                return false;
            };
            used[b] += 1;
            if used[b] > self.caps[b] {
                return false;
            }
        }
        true
    }
}

/// All sets of size at most `rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformMatroid {
    n: usize,
    rank: usize,
}

impl UniformMatroid {
    pub fn new(n: usize, rank: usize) -> Self {
        Self { n, rank }
    }

    /// Every subset is independent.
    pub fn free(n: usize) -> Self {
        Self { n, rank: n }
    }
}

impl Matroid for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        set.len() <= self.rank && set.iter().all(|&v| v < self.n)
    }
}

/// Independent sets are the subsets of the listed maximal sets. Intended for
/// small hand-written matroids; validate with [`check_matroid_axioms`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitMatroid {
    n: usize,
    maximal: Vec<Vec<bool>>,
}

impl ExplicitMatroid {
    pub fn new(n: usize, maximal_sets: &[Vec<usize>]) -> Result<Self> {
        let mut maximal = Vec::with_capacity(maximal_sets.len());
        for s in maximal_sets {
            let mut mask = vec![false; n];
            for &v in s {
                *mask
                    .get_mut(v)
                    .ok_or_else(|| Error::invalid(format!("element {v} >= n={n}")))? = true;
            }
            maximal.push(mask);
        }
        Ok(Self { n, maximal })
    }
}

impl Matroid for ExplicitMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        if set.is_empty() {
            return true;
        }
        if set.iter().any(|&v| v >= self.n) {
            return false;
        }
        self.maximal.iter().any(|m| set.iter().all(|&v| m[v]))
    }
}

/// `M'` on `n + rank(M)` elements: the truncation to `rank(M)` of `M` plus
/// free dummy elements `n..n + rank`. Every independent set of `M` extends to
/// a basis of `M'` by adding dummies only.
struct PaddedMatroid<'a, M: ?Sized> {
    inner: &'a M,
    rank: usize,
}

impl<M: Matroid + ?Sized> PaddedMatroid<'_, M> {
    fn is_independent(&self, set: &[usize]) -> bool {
        if set.len() > self.rank {
            return false;
        }
        let n = self.inner.ground_size();
        let real: Vec<usize> = set.iter().copied().filter(|&v| v < n).collect();
        self.inner.is_independent(&real)
    }
}

/// Size of a maximum independent set, found by the unweighted greedy in id
/// order.
pub fn rank<M: Matroid + ?Sized>(m: &M) -> usize {
    let mut s = Vec::new();
    for v in 0..m.ground_size() {
        s.push(v);
        if !m.is_independent(&s) {
            s.pop();
        }
    }
    s.len()
}

/// Matroid greedy: elements by decreasing weight (ties by lower id),
/// non-positive weights skipped. The returned set is sorted.
pub fn max_weight_independent_set<M: Matroid + ?Sized>(
    m: &M,
    weights: &[f64],
) -> Result<Vec<usize>> {
    if weights.len() != m.ground_size() {
        return Err(Error::invalid(format!(
            "weight vector has length {}, matroid has {} elements",
            weights.len(),
            m.ground_size()
        )));
    }
    let mut order: Vec<usize> = (0..weights.len()).filter(|&v| weights[v] > 0.0).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut s = Vec::new();
    for v in order {
        s.push(v);
        if !m.is_independent(&s) {
            s.pop();
        }
    }
    s.sort_unstable();
    Ok(s)
}

/// Some `x ∈ b \ a` (lowest id first) with `a + x` independent.
pub fn exchange_element<M: Matroid + ?Sized>(m: &M, a: &[usize], b: &[usize]) -> Result<usize> {
    if a.len() >= b.len() {
        return Err(Error::invalid("exchange needs |a| < |b|"));
    }
    let mut candidates: Vec<usize> = b.iter().copied().filter(|x| !a.contains(x)).collect();
    candidates.sort_unstable();
    let mut trial = a.to_vec();
    for x in candidates {
        trial.push(x);
        if m.is_independent(&trial) {
            return Ok(x);
        }
        trial.pop();
    }
    Err(Error::OracleIntegrity(format!(
        "no element of {b:?} extends independent set {a:?}"
    )))
}

/// Exhaustive check of the three matroid axioms for small ground sets.
pub fn check_matroid_axioms<M: Matroid + ?Sized>(m: &M, cap: usize) -> Result<()> {
    let n = m.ground_size();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "matroid axiom check ground size",
            needed: n as u128,
            cap: cap as u128,
        });
    }
    if !m.is_independent(&[]) {
        return Err(Error::OracleIntegrity("empty set is dependent".into()));
    }
    let ids = |mask: u32| -> Vec<usize> { (0..n).filter(|&i| mask >> i & 1 == 1).collect() };
    let indep: Vec<bool> = (0..1u32 << n)
        .map(|mask| m.is_independent(&ids(mask)))
        .collect();
    for mask in 0..1u32 << n {
        if !indep[mask as usize] {
            continue;
        }
        for v in 0..n {
            if mask >> v & 1 == 1 && !indep[(mask & !(1 << v)) as usize] {
                return Err(Error::OracleIntegrity(format!(
                    "{:?} independent but {:?} is not",
                    ids(mask),
                    ids(mask & !(1 << v))
                )));
            }
        }
    }
    for a in 0..1u32 << n {
        if !indep[a as usize] {
            continue;
        }
        for b in 0..1u32 << n {
            if !indep[b as usize] || b.count_ones() <= a.count_ones() {
                continue;
            }
            let ok =
                (0..n).any(|x| b >> x & 1 == 1 && a >> x & 1 == 0 && indep[(a | 1 << x) as usize]);
            if !ok {
                return Err(Error::OracleIntegrity(format!(
                    "exchange fails for A={:?}, B={:?}",
                    ids(a),
                    ids(b)
                )));
            }
        }
    }
    Ok(())
}

/// A point of the matroid polytope kept as `sum_i weight_i * chi(set_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPoint {
    n: usize,
    combo: Vec<(Vec<usize>, f64)>,
}

impl FractionalPoint {
    /// Validates independence of every set, positive weights, and total
    /// weight at most one.
    pub fn new<M: Matroid + ?Sized>(m: &M, combo: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let mut total = 0.0;
        let mut clean = Vec::with_capacity(combo.len());
        for (mut s, w) in combo {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(format!(
                    "combination weight {w} must be positive"
                )));
            }
            s.sort_unstable();
            s.dedup();
            if !m.is_independent(&s) {
                return Err(Error::invalid(format!("{s:?} is not independent")));
            }
            total += w;
            clean.push((s, w));
        }
        if total > 1.0 + TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {total} > 1")));
        }
        Ok(Self {
            n: m.ground_size(),
            combo: clean,
        })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn combo(&self) -> &[(Vec<usize>, f64)] {
        &self.combo
    }

    pub fn total_weight(&self) -> f64 {
        self.combo.iter().map(|(_, w)| w).sum()
    }

    /// Dense view `y = sum_i weight_i * chi(set_i)`.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (s, w) in &self.combo {
            for &v in s {
                y[v] += w;
            }
        }
        for c in &mut y {
            *c = c.clamp(0.0, 1.0);
        }
        y
    }

    /// Adds the empty set with the missing weight so the total is one.
    pub fn padded(mut self) -> Self {
        let missing = 1.0 - self.total_weight();
        if missing > TOLERANCE {
            self.combo.push((Vec::new(), missing));
        }
        self
    }
}

#[derive(Debug)]
struct HeapEntry {
    weight: f64,
    slot: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // reversed: BinaryHeap pops the least weight, then the lowest slot
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight
            .total_cmp(&self.weight)
            .then(other.slot.cmp(&self.slot))
    }
}

/// Finds `b ∈ B \ A` with both `A - a + b` and `B - b + a` independent.
fn symmetric_exchange<M: Matroid + ?Sized>(
    m: &PaddedMatroid<'_, M>,
    a_set: &[usize],
    b_set: &[usize],
    a: usize,
) -> Result<usize> {
    let mut a_minus: Vec<usize> = a_set.iter().copied().filter(|&x| x != a).collect();
    let mut candidates: Vec<usize> = b_set
        .iter()
        .copied()
        .filter(|x| !a_set.contains(x))
        .collect();
    candidates.sort_unstable();
    for b in candidates {
        a_minus.push(b);
        let forward = m.is_independent(&a_minus);
        a_minus.pop();
        if !forward {
            continue;
        }
        let mut b_swapped: Vec<usize> = b_set.iter().copied().filter(|&x| x != b).collect();
        b_swapped.push(a);
        if m.is_independent(&b_swapped) {
            return Ok(b);
        }
    }
    Err(Error::OracleIntegrity(format!(
        "no symmetric exchange for {a} between {a_set:?} and {b_set:?}"
    )))
}

/// Merges `(A, w_a)` and `(B, w_b)`, two bases of the padded matroid, into
/// one basis by swap steps.
fn merge_bases<M: Matroid + ?Sized, R: Rng + ?Sized>(
    m: &PaddedMatroid<'_, M>,
    mut a_set: Vec<usize>,
    w_a: f64,
    mut b_set: Vec<usize>,
    w_b: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let keep_a = w_a / (w_a + w_b);
    loop {
        let Some(a) = a_set.iter().copied().filter(|x| !b_set.contains(x)).min() else {
            break;
        };
        let b = symmetric_exchange(m, &a_set, &b_set, a)?;
        if rng.gen_bool(keep_a.clamp(0.0, 1.0)) {
            // B adopts a
            b_set.retain(|&x| x != b);
            b_set.push(a);
        } else {
            // A adopts b
            a_set.retain(|&x| x != a);
            a_set.push(b);
        }
    }
    Ok(a_set)
}

/// Swap rounding over the stored convex combination.
///
/// Every set is completed to a basis of the rank-truncated matroid with
/// dummy elements, then the two lightest sets are merged repeatedly until one
/// remains. Each merge keeps the weighted membership of every element in
/// expectation, and the result depends only on the point and the random
/// draws, never on an objective. Returns a sorted independent set of real
/// elements.
pub fn round_to_independent<M: Matroid + ?Sized, R: Rng + ?Sized>(
    m: &M,
    y: &FractionalPoint,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let total = y.total_weight();
    if (total - 1.0).abs() > TOLERANCE {
        return Err(Error::invalid(format!(
            "combination weights sum to {total}, expected 1"
        )));
    }
    if y.ground_size() != m.ground_size() {
        return Err(Error::invalid("point and matroid ground sizes differ"));
    }
    let n = m.ground_size();
    let d = rank(m);
    let padded = PaddedMatroid { inner: m, rank: d };

    let mut slots: Vec<Option<(Vec<usize>, f64)>> = y
        .combo()
        .iter()
        .map(|(s, w)| {
            let mut basis = s.clone();
            basis.extend(n..n + (d - s.len()));
            Some((basis, *w))
        })
        .collect();
    let mut heap: BinaryHeap<HeapEntry> = slots
        .iter()
        .enumerate()
        .map(|(slot, e)| HeapEntry {
            weight: e.as_ref().map(|(_, w)| *w).unwrap_or(0.0),
            slot,
        })
        .collect();

    while heap.len() > 1 {
        let first = heap.pop().expect("heap has two entries");
        let second = heap.pop().expect("heap has two entries");
        let (a_set, w_a) = slots[first.slot].take().expect("live slot");
        let (b_set, w_b) = slots[second.slot].take().expect("live slot");
        let merged = merge_bases(&padded, a_set, w_a, b_set, w_b, rng)?;
        slots[first.slot] = Some((merged, w_a + w_b));
        heap.push(HeapEntry {
            weight: w_a + w_b,
            slot: first.slot,
        });
    }
    let last = heap
        .pop()
        .ok_or_else(|| Error::invalid("empty combination"))?;
    let (basis, _) = slots[last.slot].take().expect("live slot");
    let mut out: Vec<usize> = basis.into_iter().filter(|&v| v < n).collect();
    out.sort_unstable();
    debug_assert!(m.is_independent(&out), "rounding produced a dependent set");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::indexed_rng;

    fn all_independent<M: Matroid>(m: &M) -> Vec<Vec<usize>> {
        let n = m.ground_size();
        (0..1u32 << n)
            .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|s| m.is_independent(s))
            .collect()
    }

    #[test]
    fn ranks_of_basic_matroids() {
        let g = GroundSet::new(vec![vec![0, 1], vec![2], vec![3, 4, 5]]).unwrap();
        assert_eq!(rank(&PartitionMatroid::from_ground(&g)), 3);
        assert_eq!(rank(&UniformMatroid::new(5, 2)), 2);
        assert_eq!(rank(&UniformMatroid::free(4)), 4);
    }

    #[test]
    fn partition_rank_counts_nonempty_blocks() {
        let m = PartitionMatroid::new(vec![0, 0, 2, 2], vec![1, 1, 1]).unwrap();
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn mwis_picks_heavier_in_block() {
        let g = GroundSet::new(vec![vec![0, 1]]).unwrap();
        let m = PartitionMatroid::from_ground(&g);
        assert_eq!(
            max_weight_independent_set(&m, &[2.0, 5.0]).unwrap(),
            vec![1]
        );
    }

    #[test]
    fn mwis_skips_nonpositive() {
        let m = UniformMatroid::free(3);
        assert!(max_weight_independent_set(&m, &[0.0, 0.0, -1.0])
            .unwrap()
            .is_empty());
        assert!(max_weight_independent_set(&m, &[1.0]).is_err());
    }

    fn random_small_matroid(rng: &mut crate::rng::SimRng) -> Box<dyn Matroid> {
        let n = rng.gen_range(1..=8);
        match rng.gen_range(0..3) {
            0 => Box::new(UniformMatroid::new(n, rng.gen_range(0..=n))),
            1 => {
                let blocks = rng.gen_range(1..=n);
                let block_of = (0..n).map(|_| rng.gen_range(0..blocks)).collect();
                let caps = (0..blocks).map(|_| rng.gen_range(0..=2)).collect();
                Box::new(PartitionMatroid::new(block_of, caps).unwrap())
            }
            _ => Box::new(UniformMatroid::free(n)),
        }
    }

    #[test]
    fn mwis_matches_exhaustive_optimum() {
        let mut rng = indexed_rng(11, "mwis", 0);
        for _ in 0..40 {
            let m = random_small_matroid(&mut rng);
            let all = all_independent(&m);
            for _ in 0..25 {
                let w: Vec<f64> = (0..m.ground_size())
                    .map(|_| rng.gen_range(-0.5..1.0))
                    .collect();
                let got = max_weight_independent_set(&m, &w).unwrap();
                assert!(m.is_independent(&got));
                let value = |s: &[usize]| s.iter().map(|&v| w[v]).sum::<f64>();
                let best = all.iter().map(|s| value(s)).fold(f64::MIN, f64::max);
                assert!((value(&got) - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exchange_examples() {
        let u = UniformMatroid::new(4, 2);
        assert_eq!(exchange_element(&u, &[1], &[2, 3]).unwrap(), 2);
        let g = GroundSet::new(vec![vec![0, 1]]).unwrap();
        let p = PartitionMatroid::from_ground(&g);
        assert_eq!(exchange_element(&p, &[], &[1]).unwrap(), 1);
        assert!(exchange_element(&p, &[0], &[1]).is_err());
    }

    #[test]
    fn exchange_on_random_matroids_extends() {
        let mut rng = indexed_rng(5, "exchange", 0);
        for _ in 0..60 {
            let m = random_small_matroid(&mut rng);
            let all = all_independent(&m);
            for a in &all {
                for b in all.iter().filter(|b| b.len() > a.len()).take(6) {
                    let x = exchange_element(&m, a, b).unwrap();
                    assert!(b.contains(&x) && !a.contains(&x));
                    let mut ax = a.clone();
                    ax.push(x);
                    assert!(m.is_independent(&ax));
                }
            }
        }
    }

    #[test]
    fn broken_oracle_is_reported() {
        // two maximal sets of different sizes violate exchange
        let m = ExplicitMatroid::new(3, &[vec![0], vec![1, 2]]).unwrap();
        assert!(matches!(
            check_matroid_axioms(&m, 12),
            Err(Error::OracleIntegrity(_))
        ));
        assert!(matches!(
            exchange_element(&m, &[0], &[1, 2]),
            Err(Error::OracleIntegrity(_))
        ));
        let ok = ExplicitMatroid::new(3, &[vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap();
        assert!(check_matroid_axioms(&ok, 12).is_ok());
        assert!(check_matroid_axioms(&UniformMatroid::new(5, 3), 12).is_ok());
    }

    #[test]
    fn integral_point_rounds_to_itself() {
        let m = UniformMatroid::free(3);
        let y = FractionalPoint::new(&m, vec![(vec![0, 1], 1.0)]).unwrap();
        let mut rng = indexed_rng(0, "round", 0);
        for _ in 0..20 {
            assert_eq!(round_to_independent(&m, &y, &mut rng).unwrap(), vec![0, 1]);
        }
    }

    #[test]
    fn rounding_requires_unit_weight() {
        let m = UniformMatroid::free(2);
        let y = FractionalPoint::new(&m, vec![(vec![0], 0.5)]).unwrap();
        let mut rng = indexed_rng(0, "round", 0);
        assert!(round_to_independent(&m, &y, &mut rng).is_err());
        let padded = y.padded();
        let s = round_to_independent(&m, &padded, &mut rng).unwrap();
        assert!(s.is_empty() || s == vec![0]);
        assert!(FractionalPoint::new(&m, vec![(vec![0], 0.7), (vec![1], 0.7)]).is_err());
    }

    #[test]
    fn rank_one_split_is_fair() {
        let m = UniformMatroid::new(2, 1);
        let y = FractionalPoint::new(&m, vec![(vec![0], 0.5), (vec![1], 0.5)]).unwrap();
        let mut rng = indexed_rng(1, "round", 0);
        let trials = 10_000;
        let mut zeros = 0;
        for _ in 0..trials {
            let s = round_to_independent(&m, &y, &mut rng).unwrap();
            assert_eq!(s.len(), 1);
            if s[0] == 0 {
                zeros += 1;
            }
        }
        let p = zeros as f64 / trials as f64;
        let se = (0.25f64 / trials as f64).sqrt();
        assert!((p - 0.5).abs() <= 3.0 * se, "p = {p}");
    }

    #[test]
    fn coordinates_are_weighted_sums() {
        let m = UniformMatroid::new(3, 2);
        let y = FractionalPoint::new(&m, vec![(vec![0, 1], 0.25), (vec![1, 2], 0.5)]).unwrap();
        assert_eq!(y.coordinates(), vec![0.25, 0.75, 0.5]);
        assert!((y.total_weight() - 0.75).abs() < 1e-15);
    }
}
