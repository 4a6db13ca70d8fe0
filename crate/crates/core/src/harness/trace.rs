//! Per-round records and CSV output.

use std::io::{self, Write};

use crate::ground::Assignment;

pub const CSV_HEADER: &str = "round,reward,cum_reward,regret_1m1e,explored_flag";

/// Header with a leading `trial` column when traces of several trials share
/// one file.
pub fn csv_header(with_trial: bool) -> String {
    if with_trial {
        format!("trial,{CSV_HEADER}")
    } else {
        CSV_HEADER.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// One based.
    pub round: u64,
    pub assignment: Assignment,
    pub reward: f64,
    pub cum_reward: f64,
    /// Running `(1 - 1/e)`-regret after this round.
    pub regret: f64,
    pub explored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardTrace {
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    /// False when regret is measured against a greedy proxy.
    pub regret_exact: bool,
}

impl RewardTrace {
    pub fn new(seed: u64, regret_exact: bool) -> Self {
        Self {
            seed,
            records: Vec::new(),
            regret_exact,
        }
    }

    pub fn push(&mut self, assignment: Assignment, reward: f64, regret: f64, explored: bool) {
        let cum_reward = self.total_reward() + reward;
        self.records.push(RoundRecord {
            round: self.records.len() as u64 + 1,
            assignment,
            reward,
            cum_reward,
            regret,
            explored,
        });
    }

    pub fn rounds(&self) -> usize {
        self.records.len()
    }

    pub fn total_reward(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_reward)
    }

    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.regret)
    }

    /// Rows without a header.
    pub fn write_csv_rows<W: Write>(&self, w: &mut W, trial: Option<usize>) -> io::Result<()> {
        for r in &self.records {
            if let Some(t) = trial {
                write!(w, "{t},")?;
            }
            writeln!(
                w,
                "{},{},{},{},{}",
                r.round,
                r.reward,
                r.cum_reward,
                r.regret,
                u8::from(r.explored)
            )?;
        }
        Ok(())
    }
}

/// Sample mean and standard deviation (`n - 1` denominator; zero for a
/// single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_and_totals() {
        let mut t = RewardTrace::new(1, true);
        t.push(Assignment::from(vec![0]), 1.0, -0.5, false);
        t.push(Assignment::empty(), 0.0, 0.25, true);
        let mut out = Vec::new();
        t.write_csv_rows(&mut out, None).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "1,1,1,-0.5,0\n2,0,1,0.25,1\n"
        );
        let mut out = Vec::new();
        t.write_csv_rows(&mut out, Some(3)).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("3,1,1,"));
        assert_eq!(t.total_reward(), 1.0);
        assert_eq!(
            csv_header(true),
            "trial,round,reward,cum_reward,regret_1m1e,explored_flag"
        );
    }

    #[test]
    fn mean_and_spread() {
        assert_eq!(mean_std(&[]), (0.0, 0.0));
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
