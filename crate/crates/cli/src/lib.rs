//! Command-line front end: instance loading, algorithm selection, seeding,
//! CSV traces and summaries.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use subassign::harness::{
    csv_header, mean_std, one_minus_inv_e, run_ad_sim, run_ocg, run_tg_online, AdModel, AdPolicy,
    BlogStream, Environment, RewardTrace, Stationary,
};
use subassign::instance::{load_instance, Instance, MatroidSpec};
use subassign::matroid::{check_matroid_axioms, rank};
use subassign::offline::{
    beta, color_averaged_value, tabular_greedy, Estimator, DEFAULT_EXACT_CAP,
};
use subassign::online::{default_explore, ocg_offline_solve, FeedbackMode, OcgHorizon};
use subassign::oracle::{
    brute_force_opt, check_monotone_submodular, DEFAULT_CHECK_CAP, DEFAULT_OPT_CAP,
};
use subassign::rng::{derive_seed, stream_rng, streams};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] subassign::Error),
    #[error("validation failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "subassign",
    version,
    about = "Submodular assignment experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Colored-table greedy on an instance file.
    Offline(OfflineArgs),
    /// Online colored-table greedy on an instance or the synthetic blog stream.
    TgOnline(TgOnlineArgs),
    /// Online continuous greedy on an instance or the synthetic blog stream.
    Ocg(OcgArgs),
    /// The online continuous greedy run offline on a fixed function.
    OcgOffline(OcgOfflineArgs),
    /// Bandit ad-allocation simulation.
    AdSim(AdSimArgs),
    /// Brute-force oracle and matroid validators.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Exact,
    Sampled,
}

#[derive(Debug, Args)]
pub struct OfflineArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub colors: u64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Exact)]
    pub estimator: EstimatorArg,
    /// Color vectors per estimate in sampled mode.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
}

/// Where the functions `f_t` come from.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Stationary stream `f_t = f` from an instance file.
    #[arg(long, conflicts_with = "blog")]
    pub instance: Option<PathBuf>,
    /// Synthetic blog-cascade stream (a proxy for real cascade data).
    #[arg(long)]
    pub blog: bool,
    #[arg(long, default_value_t = 10)]
    pub blogs: usize,
    #[arg(long, default_value_t = 5)]
    pub positions: usize,
    #[arg(long, default_value_t = 30)]
    pub cascades: usize,
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeedbackArg {
    Full,
    Bandit,
}

#[derive(Debug, Args)]
pub struct TgOnlineArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub colors: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    #[arg(long, value_enum, default_value_t = FeedbackArg::Full)]
    pub feedback: FeedbackArg,
    /// Exploration probability; defaults to `min(1, (|V| C K / T)^(1/3))`.
    #[arg(long)]
    pub explore: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OcgArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Step size; `1/delta` must be a whole number of stages.
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OcgOfflineArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Rounds to run; otherwise derived from `--opt-lower-bound`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "opt_lower_bound")]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub opt_lower_bound: Option<f64>,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Tg,
    Random,
    Fixed,
}

#[derive(Debug, Args)]
pub struct AdSimArgs {
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub positions: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub ads: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    #[arg(long, value_enum, default_value_t = AlgoArg::Tg)]
    pub algo: AlgoArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub colors: u64,
    #[arg(long)]
    pub explore: Option<f64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Largest ground set checked exhaustively.
    #[arg(long, default_value_t = DEFAULT_CHECK_CAP)]
    pub cap: usize,
}

/// What a run produced: an optional CSV trace and a human-readable summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub csv: Option<String>,
    pub summary: String,
}

pub fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    match &cli.command {
        Command::Offline(a) => offline(a),
        Command::TgOnline(a) => tg_online(a),
        Command::Ocg(a) => ocg(a),
        Command::OcgOffline(a) => ocg_offline(a),
        Command::AdSim(a) => ad_sim(a),
        Command::Check(a) => check(a),
    }
}

fn opt_line(inst: &Instance) -> (Option<f64>, String) {
    match brute_force_opt(&inst.oracle, &inst.ground, DEFAULT_OPT_CAP) {
        Ok((s, v)) => (Some(v), format!("OPT (brute force): {v} at {s}\n")),
        Err(e) => (None, format!("OPT (brute force): unavailable ({e})\n")),
    }
}

fn offline(a: &OfflineArgs) -> Result<RunOutput, CliError> {
    let inst = load_instance(&a.instance)?;
    let colors = a.colors as usize;
    let estimator = match a.estimator {
        EstimatorArg::Exact => Estimator::Exact {
            cap: DEFAULT_EXACT_CAP,
        },
        EstimatorArg::Sampled => Estimator::Sampled {
            samples: a.samples as usize,
        },
    };
    let mut rng = stream_rng(a.seed, streams::COLORS);
    let out = tabular_greedy(
        &inst.ground,
        &inst.oracle,
        colors,
        estimator,
        None,
        &mut rng,
    )?;
    let value = inst.oracle.eval(out.assignment.items());
    let mut est_rng = stream_rng(a.seed, streams::ESTIMATOR);
    let big_f = color_averaged_value(
        &inst.oracle,
        &inst.ground,
        &out.table.entries(),
        colors,
        out.estimator,
        &mut est_rng,
    )?;
    let k = inst.ground.num_positions();
    let b = beta(k, colors);
    let (opt, opt_text) = opt_line(&inst);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "algorithm: tabular greedy, K={k}, C={colors}, seed={}",
        a.seed
    );
    let _ = writeln!(s, "assignment: {}", out.assignment);
    let _ = writeln!(s, "value: {value}");
    let kind = match out.estimator {
        Estimator::Exact { .. } => "exact",
        Estimator::Sampled { .. } => "estimated",
    };
    let _ = writeln!(s, "F(G) ({kind}): {big_f}");
    let _ = writeln!(s, "beta(K,C): {b}");
    s.push_str(&opt_text);
    if let Some(opt) = opt {
        let _ = writeln!(s, "bound: F(G) >= beta*OPT = {}", b * opt);
    }
    Ok(RunOutput {
        csv: None,
        summary: s,
    })
}

fn environment(
    src: &SourceArgs,
    seed: u64,
) -> Result<(Box<dyn Environment>, Option<Instance>), CliError> {
    match (&src.instance, src.blog) {
        (Some(path), false) => {
            let inst = load_instance(path)?;
            let env = Stationary::new(inst.ground.clone(), inst.oracle.clone())?;
            Ok((Box::new(env), Some(inst)))
        }
        (None, true) => {
            let env = BlogStream::new(seed, src.cascades, src.blogs, src.positions, src.gamma)?;
            Ok((Box::new(env), None))
        }
        _ => Err(CliError::Usage(
            "exactly one of --instance or --blog is required".into(),
        )),
    }
}

fn explore_rate(
    explore: Option<f64>,
    rounds: u64,
    items: usize,
    colors: usize,
    k: usize,
) -> Result<f64, CliError> {
    match explore {
        Some(e) if (0.0..=1.0).contains(&e) => Ok(e),
        Some(e) => Err(CliError::Usage(format!("--explore {e} must lie in [0, 1]"))),
        None => Ok(default_explore(rounds, items, colors, k)),
    }
}

fn trace_csv(trace: &RewardTrace) -> String {
    let mut buf = Vec::new();
    buf.extend_from_slice(csv_header(false).as_bytes());
    buf.push(b'\n');
    trace
        .write_csv_rows(&mut buf, None)
        .expect("writing to memory");
    String::from_utf8(buf).expect("csv is ascii")
}

fn trace_summary(s: &mut String, trace: &RewardTrace) {
    let t = trace.rounds() as f64;
    let _ = writeln!(s, "total reward: {}", trace.total_reward());
    let _ = writeln!(s, "mean reward per round: {}", trace.total_reward() / t);
    let comparator = if trace.regret_exact {
        "exact optimum"
    } else {
        "greedy proxy"
    };
    let _ = writeln!(s, "(1-1/e)-regret: {} ({comparator})", trace.final_regret());
    let _ = writeln!(s, "(1-1/e)-regret per round: {}", trace.final_regret() / t);
}

fn tg_online(a: &TgOnlineArgs) -> Result<RunOutput, CliError> {
    let (env, _) = environment(&a.source, a.seed)?;
    let colors = a.colors as usize;
    let ground = env.ground();
    let k = ground.num_positions();
    let mode = match a.feedback {
        FeedbackArg::Full => FeedbackMode::Full,
        FeedbackArg::Bandit => FeedbackMode::Bandit {
            explore: explore_rate(a.explore, a.rounds, ground.num_items(), colors, k)?,
        },
    };
    let trace = run_tg_online(
        env.as_ref(),
        colors,
        a.rounds,
        mode,
        a.seed,
        DEFAULT_OPT_CAP,
    )?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "algorithm: online tabular greedy, K={k}, C={colors}, T={}, seed={}",
        a.rounds, a.seed
    );
    match mode {
        FeedbackMode::Full => s.push_str("feedback: full information\n"),
        FeedbackMode::Bandit { explore } => {
            let _ = writeln!(s, "feedback: bandit, explore={explore}");
        }
    }
    trace_summary(&mut s, &trace);
    let _ = writeln!(
        s,
        "bound: E[sum f_t(G_t)] >= beta(K,C) * max_S sum f_t(S) - regret terms, beta(K,C) = {}",
        beta(k, colors)
    );
    Ok(RunOutput {
        csv: Some(trace_csv(&trace)),
        summary: s,
    })
}

fn stages_of(delta: f64) -> Result<usize, CliError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CliError::Usage(format!(
            "--delta {delta} must lie in (0, 1]"
        )));
    }
    let stages = (1.0 / delta).round();
    if (stages * delta - 1.0).abs() > 1e-9 {
        return Err(CliError::Usage(format!(
            "1/delta must be a whole number, got {}",
            1.0 / delta
        )));
    }
    Ok(stages as usize)
}

fn ocg(a: &OcgArgs) -> Result<RunOutput, CliError> {
    let stages = stages_of(a.delta)?;
    let (env, inst) = environment(&a.source, a.seed)?;
    let matroid = match &inst {
        Some(i) => i.matroid()?,
        None => Arc::new(subassign::matroid::PartitionMatroid::from_ground(
            env.ground(),
        )),
    };
    let d = rank(matroid.as_ref());
    let trace = run_ocg(env.as_ref(), matroid, stages, a.rounds, a.seed)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "algorithm: online continuous greedy, n={}, d={d}, delta={}, T={}, seed={}",
        env.ground().num_items(),
        a.delta,
        a.rounds,
        a.seed
    );
    trace_summary(&mut s, &trace);
    let _ = writeln!(
        s,
        "bound: E[sum f_t(S_t)] >= (1-1/e-d*delta) * max_S sum f_t(S) - regret terms, 1-1/e-d*delta = {}",
        one_minus_inv_e() - d as f64 * a.delta
    );
    Ok(RunOutput {
        csv: Some(trace_csv(&trace)),
        summary: s,
    })
}

fn ocg_offline(a: &OcgOfflineArgs) -> Result<RunOutput, CliError> {
    let inst = load_instance(&a.instance)?;
    let horizon = match (a.rounds, a.opt_lower_bound) {
        (Some(t), None) => OcgHorizon::Rounds(t),
        (None, Some(opt)) => OcgHorizon::OptLowerBound(opt),
        _ => {
            return Err(CliError::Usage(
                "one of --rounds or --opt-lower-bound is required".into(),
            ))
        }
    };
    let matroid = inst.matroid()?;
    let out = ocg_offline_solve(&inst.oracle, matroid, a.epsilon, horizon, a.seed)?;
    let value = inst.oracle.eval(&out.set);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "algorithm: offline continuous greedy, epsilon={}, stages={}, T={}, chosen round={}, seed={}",
        a.epsilon, out.stages, out.rounds, out.chosen_round, a.seed
    );
    let _ = writeln!(s, "set: {}", subassign::Assignment::from(out.set.clone()));
    let _ = writeln!(s, "value: {value}");
    let factor = one_minus_inv_e() - a.epsilon;
    if inst.matroid_spec == MatroidSpec::Partition {
        let (opt, text) = opt_line(&inst);
        s.push_str(&text);
        if let Some(opt) = opt {
            let _ = writeln!(
                s,
                "bound: E[f(S)] >= (1-1/e-epsilon)*OPT = {}",
                factor * opt
            );
        }
    } else {
        let _ = writeln!(
            s,
            "bound: E[f(S)] >= (1-1/e-epsilon)*OPT, 1-1/e-epsilon = {factor}"
        );
    }
    Ok(RunOutput {
        csv: None,
        summary: s,
    })
}

fn ad_sim(a: &AdSimArgs) -> Result<RunOutput, CliError> {
    let model = AdModel::standard(a.positions as usize, a.ads as usize)?;
    let colors = a.colors as usize;
    let policy = match a.algo {
        AlgoArg::Tg => AdPolicy::TgOnline {
            colors,
            explore: explore_rate(
                a.explore,
                a.rounds,
                model.ground().num_items(),
                colors,
                model.num_positions(),
            )?,
        },
        AlgoArg::Random => AdPolicy::Random,
        AlgoArg::Fixed => AdPolicy::Fixed,
    };
    log::info!("running {} trials of {:?}", a.trials, policy);
    let traces = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            run_ad_sim(
                &model,
                policy,
                a.rounds,
                derive_seed(a.seed, streams::TRIAL, i),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut buf = Vec::new();
    buf.extend_from_slice(csv_header(true).as_bytes());
    buf.push(b'\n');
    for (i, t) in traces.iter().enumerate() {
        t.write_csv_rows(&mut buf, Some(i))
            .expect("writing to memory");
    }
    let totals: Vec<f64> = traces.iter().map(RewardTrace::total_reward).collect();
    let regrets: Vec<f64> = traces.iter().map(RewardTrace::final_regret).collect();
    let (mean, sd) = mean_std(&totals);
    let (rmean, rsd) = mean_std(&regrets);
    let (best, opt) = model.optimum();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "ad simulation: {} positions, {} ads, T={}, trials={}, seed={}",
        a.positions, a.ads, a.rounds, a.trials, a.seed
    );
    match policy {
        AdPolicy::TgOnline { colors, explore } => {
            let _ = writeln!(
                s,
                "policy: bandit online tabular greedy, C={colors}, explore={explore}"
            );
        }
        AdPolicy::Random => s.push_str("policy: uniformly random ads\n"),
        AdPolicy::Fixed => s.push_str("policy: best fixed assignment\n"),
    }
    let _ = writeln!(s, "cumulative reward: mean {mean}, stddev {sd}");
    let _ = writeln!(
        s,
        "(1-1/e)-regret (expected clicks): mean {rmean}, stddev {rsd}"
    );
    let _ = writeln!(s, "optimum: {best} with expected reward {opt} per round");
    let _ = writeln!(
        s,
        "bound: E[reward] >= beta(K,C) * OPT * T - regret terms, beta(K,C) = {}",
        beta(a.positions as usize, colors)
    );
    Ok(RunOutput {
        csv: Some(String::from_utf8(buf).expect("csv is ascii")),
        summary: s,
    })
}

fn check(a: &CheckArgs) -> Result<RunOutput, CliError> {
    let inst = load_instance(&a.instance)?;
    let mut s = String::new();
    let report = check_monotone_submodular(&inst.oracle, &inst.ground, a.cap)?;
    let _ = writeln!(s, "objective: {}", inst.family);
    let _ = writeln!(s, "monotone: {}", report.monotone);
    let _ = writeln!(s, "submodular: {}", report.submodular);
    if let Some(w) = &report.witness {
        let _ = writeln!(s, "witness: {w:?}");
    }
    let matroid = inst.matroid()?;
    let axioms = check_matroid_axioms(matroid.as_ref(), a.cap);
    match &axioms {
        Ok(()) => s.push_str("matroid axioms: ok\n"),
        Err(e) => {
            let _ = writeln!(s, "matroid axioms: {e}");
        }
    }
    let _ = writeln!(s, "declared bound g: {}", inst.bound());
    if !(report.monotone && report.submodular) || axioms.is_err() {
        return Err(CliError::Check(s));
    }
    Ok(RunOutput {
        csv: None,
        summary: s,
    })
}
