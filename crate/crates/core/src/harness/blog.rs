//! Synthetic stand-in for daily blog cascades.
//!
//! Each blog belongs to one of a few communities and has a fixed activity
//! level. Every day a batch of cascades is drawn; a cascade starts in one
//! community, has a random size, and each blog joins it with a probability
//! that depends on its activity and whether it shares the community. A
//! day's objective is the size-weighted coverage of that day's cascades,
//! discounted by position.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ground::GroundSet;
use crate::objectives::{DiscountedPositional, WeightedCoverage};
use crate::oracle::ValueOracle;
use crate::rng::{indexed_rng, stream_rng, streams};

const COMMUNITIES: usize = 3;
const MAX_CASCADE_SIZE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BlogStream {
    seed: u64,
    cascades: usize,
    num_positions: usize,
    gamma: f64,
    community: Vec<usize>,
    activity: Vec<f64>,
    ground: GroundSet,
}

impl BlogStream {
    /// `cascades` per day, `blogs` candidates at each of `num_positions`.
    pub fn new(
        seed: u64,
        cascades: usize,
        blogs: usize,
        num_positions: usize,
        gamma: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid(format!(
                "discount {gamma} must lie in (0, 1)"
            )));
        }
        if blogs == 0 || num_positions == 0 {
            return Err(Error::invalid("need at least one blog and one position"));
        }
        let mut rng = stream_rng(seed, streams::INSTANCE);
        let community = (0..blogs).map(|_| rng.gen_range(0..COMMUNITIES)).collect();
        let activity = (0..blogs).map(|_| rng.gen_range(0.2..1.0)).collect();
        Ok(Self {
            seed,
            cascades,
            num_positions,
            gamma,
            community,
            activity,
            ground: GroundSet::grid(num_positions, blogs),
        })
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn num_blogs(&self) -> usize {
        self.community.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Coverage of day `t`'s cascades by blogs.
    pub fn cascades(&self, t: u64) -> WeightedCoverage {
        let mut rng = indexed_rng(self.seed, streams::ENVIRONMENT, t);
        let blogs = self.num_blogs();
        let mut weights = Vec::with_capacity(self.cascades);
        let mut covers = vec![Vec::new(); blogs];
        for e in 0..self.cascades {
            let home = rng.gen_range(0..COMMUNITIES);
            let size = (1.0 - 3.0 * (1.0 - rng.gen::<f64>()).ln())
                .min(MAX_CASCADE_SIZE)
                .floor();
            weights.push(size);
            for b in 0..blogs {
                let affinity = if self.community[b] == home { 0.6 } else { 0.05 };
                if rng.gen::<f64>() < affinity * self.activity[b] {
                    covers[b].push(e);
                }
            }
        }
        WeightedCoverage::new(weights, covers).expect("generated covers stay in range")
    }

    /// Day `t`'s discounted ranking objective.
    pub fn day(&self, t: u64) -> DiscountedPositional {
        let inner: Arc<dyn ValueOracle> = Arc::new(self.cascades(t));
        DiscountedPositional::ranking(inner, self.num_positions, self.gamma)
            .expect("discount validated at construction")
            .0
    }

    /// Upper bound on any day's value of any set.
    pub fn reward_bound(&self) -> f64 {
        self.gamma * MAX_CASCADE_SIZE * self.cascades as f64
    }
}

/// The first `days` objectives of [`BlogStream`].
pub fn synthetic_blog_stream(
    seed: u64,
    days: u64,
    cascades: usize,
    blogs: usize,
    num_positions: usize,
    gamma: f64,
) -> Result<Vec<DiscountedPositional>> {
    let s = BlogStream::new(seed, cascades, blogs, num_positions, gamma)?;
    Ok((0..days).map(|t| s.day(t)).collect())
}
