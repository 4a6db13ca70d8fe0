//! Experiment environments, regret accounting and trace output.

pub mod ad_model;
pub mod blog;
pub mod regret;
pub mod runs;
pub mod trace;

pub use ad_model::{AdModel, AdOracle, AdOutcome};
pub use blog::{synthetic_blog_stream, BlogStream};
pub use regret::{independent_sets, one_minus_inv_e, regret_1m1e, RegretAccount, RegretReport};
pub use runs::{
    matroid_greedy, run_ad_sim, run_ocg, run_tg_online, AdPolicy, Environment, Stationary,
};
pub use trace::{csv_header, mean_std, RewardTrace, RoundRecord, CSV_HEADER};
