//! Markov click model for ads shown at ranked positions.
//!
//! A user of a random type scans positions in order. At each position the
//! user clicks the ad shown there with probability `p_click(user, ad)` and
//! leaves; otherwise leaves without clicking with probability
//! `p_abandon(user, position)`; otherwise moves on. The reward is the number
//! of clicks, so zero or one.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ground::{Assignment, GroundSet, ItemId};
use crate::oracle::{OracleFlags, ValueOracle};

#[derive(Debug, Clone, PartialEq)]
pub struct AdModel {
    num_positions: usize,
    ad_types: Vec<usize>,
    user_mix: Vec<f64>,
    // [user type][ad type]
    p_click: Vec<Vec<f64>>,
    // [user type][position]
    p_abandon: Vec<Vec<f64>>,
}

/// Result of one simulated user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdOutcome {
    pub clicks: u32,
    pub clicked_position: Option<usize>,
}

fn check_prob(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{what} {p} outside [0, 1]")));
    }
    Ok(())
}

impl AdModel {
    pub fn new(
        num_positions: usize,
        ad_types: Vec<usize>,
        user_mix: Vec<f64>,
        p_click: Vec<Vec<f64>>,
        p_abandon: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if num_positions == 0 {
            return Err(Error::invalid("ad model needs at least one position"));
        }
        let users = user_mix.len();
        if users == 0 || p_click.len() != users || p_abandon.len() != users {
            return Err(Error::invalid(
                "user mix, click and abandon tables disagree on user types",
            ));
        }
        for &m in &user_mix {
            check_prob("user type frequency", m)?;
        }
        let total: f64 = user_mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "user type frequencies sum to {total}"
            )));
        }
        let kinds = p_click[0].len();
        if p_click.iter().any(|row| row.len() != kinds) {
            return Err(Error::invalid("click table rows differ in length"));
        }
        if let Some(&t) = ad_types.iter().find(|&&t| t >= kinds) {
            return Err(Error::invalid(format!(
                "ad type {t} has no click probabilities"
            )));
        }
        for row in &p_click {
            for &p in row {
                check_prob("click probability", p)?;
            }
        }
        for row in &p_abandon {
            if row.len() != num_positions {
                return Err(Error::invalid("abandon table needs one entry per position"));
            }
            for &p in row {
                check_prob("abandon probability", p)?;
            }
        }
        Ok(Self {
            num_positions,
            ad_types,
            user_mix,
            p_click,
            p_abandon,
        })
    }

    /// Two equally frequent user types; the first half of the ads has type
    /// 0 and the rest type 1; click probability 0.5 when user and ad types
    /// agree and 0.2 otherwise; type 0 users never abandon, type 1 users
    /// abandon with probability 0.5 at every position.
    pub fn standard(num_positions: usize, num_ads: usize) -> Result<Self> {
        let ad_types = (0..num_ads)
            .map(|a| usize::from(a >= num_ads / 2))
            .collect();
        Self::new(
            num_positions,
            ad_types,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.2], vec![0.2, 0.5]],
            vec![vec![0.0; num_positions], vec![0.5; num_positions]],
        )
    }

    pub fn num_positions(&self) -> usize {
        self.num_positions
    }

    pub fn num_ads(&self) -> usize {
        self.ad_types.len()
    }

    pub fn ad_type(&self, ad: usize) -> usize {
        self.ad_types[ad]
    }

    /// Items `k * A + a` put ad `a` at position `k`.
    pub fn ground(&self) -> GroundSet {
        GroundSet::grid(self.num_positions, self.num_ads())
    }

    pub fn item(&self, position: usize, ad: usize) -> ItemId {
        position * self.num_ads() + ad
    }

    fn position_of(&self, v: ItemId) -> usize {
        v / self.num_ads()
    }

    fn ad_of(&self, v: ItemId) -> usize {
        v % self.num_ads()
    }

    /// Click probability per position for one user type; several ads at one
    /// position click independently.
    fn click_profile(&self, user: usize, set: &[ItemId]) -> Vec<f64> {
        let mut miss = vec![1.0; self.num_positions];
        for &v in set {
            let p = self.p_click[user][self.ad_types[self.ad_of(v)]];
            miss[self.position_of(v)] *= 1.0 - p;
        }
        miss.into_iter().map(|m| 1.0 - m).collect()
    }

    fn check_items(&self, set: &[ItemId]) -> Result<()> {
        let n = self.num_positions * self.num_ads();
        match set.iter().find(|&&v| v >= n) {
            Some(&v) => Err(Error::UnknownItem(v)),
            None => Ok(()),
        }
    }

    /// Simulates one user.
    pub fn round<R: Rng + ?Sized>(&self, s: &Assignment, rng: &mut R) -> Result<AdOutcome> {
        self.check_items(s.items())?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut user = self.user_mix.len() - 1;
        for (i, m) in self.user_mix.iter().enumerate() {
            acc += m;
            if u < acc {
                user = i;
                break;
            }
        }
        let profile = self.click_profile(user, s.items());
        for (k, &p) in profile.iter().enumerate() {
            if rng.gen::<f64>() < p {
                return Ok(AdOutcome {
                    clicks: 1,
                    clicked_position: Some(k),
                });
            }
            if rng.gen::<f64>() < self.p_abandon[user][k] {
                break;
            }
        }
        Ok(AdOutcome {
            clicks: 0,
            clicked_position: None,
        })
    }

    fn expected(&self, set: &[ItemId]) -> f64 {
        let mut total = 0.0;
        for (user, &mix) in self.user_mix.iter().enumerate() {
            let mut reach = 1.0;
            let mut value = 0.0;
            for (k, p) in self.click_profile(user, set).into_iter().enumerate() {
                value += reach * p;
                reach *= (1.0 - p) * (1.0 - self.p_abandon[user][k]);
            }
            total += mix * value;
        }
        total
    }

    /// Click probability of an assignment.
    pub fn expected_reward(&self, s: &Assignment) -> Result<f64> {
        self.check_items(s.items())?;
        Ok(self.expected(s.items()))
    }

    /// Best assignment and its value. Only ad types matter, so the search
    /// runs over one type per position and uses the lowest ad id of each
    /// type.
    pub fn optimum(&self) -> (Assignment, f64) {
        let kinds = self.p_click[0].len();
        let mut reps: Vec<Option<usize>> = vec![None; kinds];
        for (a, &t) in self.ad_types.iter().enumerate() {
            reps[t].get_or_insert(a);
        }
        let options: Vec<Option<usize>> = std::iter::once(None)
            .chain(reps.iter().copied().flatten().map(Some))
            .collect();
        let mut best = (Assignment::empty(), self.expected(&[]));
        let mut digits = vec![0usize; self.num_positions];
        loop {
            let s: Assignment = digits
                .iter()
                .enumerate()
                .filter_map(|(k, &d)| options[d].map(|a| self.item(k, a)))
                .collect();
            let v = self.expected(s.items());
            if v > best.1 + 1e-12 {
                best = (s, v);
            }
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return best;
                }
                digits[i] += 1;
                if digits[i] < options.len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
}

/// [`AdModel::expected_reward`] as a value oracle over the model's ground
/// set.
#[derive(Debug, Clone)]
pub struct AdOracle {
    model: Arc<AdModel>,
}

impl AdOracle {
    pub fn new(model: Arc<AdModel>) -> Self {
        Self { model }
    }
}

impl ValueOracle for AdOracle {
    fn ground_size(&self) -> usize {
        self.model.num_positions * self.model.num_ads()
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        self.model.expected(set)
    }

    fn flags(&self) -> OracleFlags {
        OracleFlags::MONOTONE_SUBMODULAR
    }

    fn value_bound(&self) -> f64 {
        self.model
            .p_click
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0, f64::max)
    }
}
