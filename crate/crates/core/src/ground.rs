//! Ground sets partitioned into positions, and assignments over them.

use std::fmt;

use crate::error::{Error, Result};

/// Dense item identifier in `0..n`.
pub type ItemId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item {
    pub id: ItemId,
    pub partition: usize,
}

/// Items split into `K` disjoint partitions, one per position.
///
/// Partition `k` (zero based) corresponds to position `k + 1`. Item ids are
/// dense and each partition's id list is kept sorted so that "lowest id
/// first" iteration is the natural order everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    partitions: Vec<Vec<ItemId>>,
    partition_of: Vec<usize>,
}

impl GroundSet {
    pub fn new(partitions: Vec<Vec<ItemId>>) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::invalid("ground set needs at least one partition"));
        }
        let n: usize = partitions.iter().map(Vec::len).sum();
        let mut partition_of = vec![usize::MAX; n];
        for (k, part) in partitions.iter().enumerate() {
            for &id in part {
                if id >= n {
                    return Err(Error::invalid(format!(
                        "item id {id} is not dense in 0..{n}"
                    )));
                }
                if partition_of[id] != usize::MAX {
                    return Err(Error::invalid(format!(
                        "item {id} appears in more than one partition"
                    )));
                }
                partition_of[id] = k;
            }
        }
        let mut partitions = partitions;
        for p in &mut partitions {
            p.sort_unstable();
        }
        Ok(Self {
            partitions,
            partition_of,
        })
    }

    /// Builds the ground set from a per-item partition index.
    pub fn from_partition_of(num_positions: usize, partition_of: &[usize]) -> Result<Self> {
        let mut partitions = vec![Vec::new(); num_positions];
        for (id, &k) in partition_of.iter().enumerate() {
            let part = partitions.get_mut(k).ok_or_else(|| {
                Error::invalid(format!("item {id} has partition {k} >= K={num_positions}"))
            })?;
            part.push(id);
        }
        Self::new(partitions)
    }

    /// `num_positions` partitions of `per_position` items each; item
    /// `k * per_position + j` is the `j`-th candidate for position `k`.
    pub fn grid(num_positions: usize, per_position: usize) -> Self {
        let partitions = (0..num_positions)
            .map(|k| (k * per_position..(k + 1) * per_position).collect())
            .collect();
        Self::new(partitions).expect("grid ground set is well formed")
    }

    pub fn num_positions(&self) -> usize {
        self.partitions.len()
    }

    pub fn num_items(&self) -> usize {
        self.partition_of.len()
    }

    pub fn partition(&self, k: usize) -> &[ItemId] {
        &self.partitions[k]
    }

    pub fn partitions(&self) -> &[Vec<ItemId>] {
        &self.partitions
    }

    pub fn partition_of(&self, id: ItemId) -> Result<usize> {
        self.partition_of
            .get(id)
            .copied()
            .ok_or(Error::UnknownItem(id))
    }

    pub fn item(&self, id: ItemId) -> Result<Item> {
        Ok(Item {
            id,
            partition: self.partition_of(id)?,
        })
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.partition_of
            .iter()
            .enumerate()
            .map(|(id, &partition)| Item { id, partition })
    }

    /// True iff `s` holds at most one item from every partition.
    pub fn is_feasible(&self, s: &Assignment) -> Result<bool> {
        let mut used = vec![false; self.num_positions()];
        for &id in s.items() {
            let k = self.partition_of(id)?;
            if used[k] {
                return Ok(false);
            }
            used[k] = true;
        }
        Ok(true)
    }

    /// Number of feasible assignments, `prod_k (|P_k| + 1)`, saturating.
    pub fn feasible_count(&self) -> u128 {
        self.partitions
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128 + 1))
    }

    /// Iterates every feasible assignment (empty slots included) in odometer
    /// order over the partitions.
    pub fn feasible_assignments(&self) -> FeasibleAssignments<'_> {
        FeasibleAssignments {
            ground: self,
            digits: vec![0; self.num_positions()],
            done: false,
        }
    }
}

/// A set of item ids. Stored sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    items: Vec<ItemId>,
}

impl Assignment {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, id: ItemId) -> bool {
        self.items.binary_search(&id).is_ok()
    }

    pub fn insert(&mut self, id: ItemId) -> bool {
        match self.items.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.items.insert(pos, id);
                true
            }
        }
    }

    pub fn with(&self, id: ItemId) -> Self {
        let mut out = self.clone();
        out.insert(id);
        out
    }

    pub fn into_vec(self) -> Vec<ItemId> {
        self.items
    }
}

impl FromIterator<ItemId> for Assignment {
    fn from_iter<I: IntoIterator<Item = ItemId>>(iter: I) -> Self {
        let mut items: Vec<ItemId> = iter.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Self { items }
    }
}

impl From<Vec<ItemId>> for Assignment {
    fn from(v: Vec<ItemId>) -> Self {
        v.into_iter().collect()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

pub struct FeasibleAssignments<'a> {
    ground: &'a GroundSet,
    // digit 0 is the empty slot, digit j > 0 picks partition[k][j - 1]
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for FeasibleAssignments<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let out: Assignment = self
            .digits
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d > 0)
            .map(|(k, &d)| self.ground.partitions[k][d - 1])
            .collect();
        let mut k = 0;
        loop {
            if k == self.digits.len() {
                self.done = true;
                break;
            }
            self.digits[k] += 1;
            if self.digits[k] <= self.ground.partitions[k].len() {
                break;
            }
            self.digits[k] = 0;
            k += 1;
        }
        Some(out)
    }
}
