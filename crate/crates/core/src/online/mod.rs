//! Online algorithms: the colored-table greedy for assignments and online
//! continuous greedy for general matroids.

pub mod multilinear;
pub mod ocg;
pub mod tg_online;

pub use multilinear::{
    marginal, multilinear_eval, sample_marginal_estimate, MultilinearMode, SparseEstimate,
};
pub use ocg::{ocg_offline_solve, Ocg, OcgHorizon, OcgOfflineOutcome, OcgPlay};
pub use tg_online::{default_explore, FeedbackMode, TgOnline, TgPlay};
