//! The multilinear extension `F(y) = E[f(S_y)]`, its marginal
//! `ΔF(y)_v = E[f(S_y + v) - f(S_y)]`, and the single-evaluation unbiased
//! estimator of the marginal.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ground::ItemId;
use crate::oracle::ValueOracle;

/// Largest number of fractional coordinates enumerated in exact mode.
pub const EXACT_FRACTIONAL_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultilinearMode {
    /// Enumerate every subset of the fractional coordinates.
    Exact,
    /// Average over this many independent draws of `S_y`.
    MonteCarlo { samples: usize },
}

fn validate(n: usize, y: &[f64]) -> Result<()> {
    if y.len() != n {
        return Err(Error::invalid(format!(
            "point has {} coordinates, oracle has {n} items",
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("coordinate {v} outside [0, 1]")));
    }
    Ok(())
}

/// Coordinates equal to one (always present) and strictly fractional ones.
fn split(y: &[f64]) -> (Vec<ItemId>, Vec<ItemId>) {
    let ones = (0..y.len()).filter(|&v| y[v] == 1.0).collect();
    let frac = (0..y.len()).filter(|&v| y[v] > 0.0 && y[v] < 1.0).collect();
    (ones, frac)
}

fn check_cap(frac: usize) -> Result<()> {
    if frac > EXACT_FRACTIONAL_CAP {
        return Err(Error::CapExceeded {
            what: "fractional coordinates for exact multilinear evaluation",
            needed: frac as u128,
            cap: EXACT_FRACTIONAL_CAP as u128,
        });
    }
    Ok(())
}

/// `sum_S f(base ∪ S) Pr[S]` over subsets `S` of `frac`.
fn enumerate<O: ValueOracle + ?Sized>(
    oracle: &O,
    y: &[f64],
    base: &[ItemId],
    frac: &[ItemId],
) -> f64 {
    let mut total = 0.0;
    let mut set = Vec::with_capacity(base.len() + frac.len());
    for mask in 0u64..1 << frac.len() {
        set.clear();
        set.extend_from_slice(base);
        let mut p = 1.0;
        for (i, &v) in frac.iter().enumerate() {
            if mask >> i & 1 == 1 {
                set.push(v);
                p *= y[v];
            } else {
                p *= 1.0 - y[v];
            }
        }
        total += p * oracle.eval(&set);
    }
    total
}

fn draw_set<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Vec<ItemId> {
    (0..y.len()).filter(|&v| rng.gen::<f64>() < y[v]).collect()
}

/// `F(y)`.
pub fn multilinear_eval<O, R>(
    oracle: &O,
    y: &[f64],
    mode: MultilinearMode,
    rng: &mut R,
) -> Result<f64>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    validate(oracle.ground_size(), y)?;
    match mode {
        MultilinearMode::Exact => {
            let (ones, frac) = split(y);
            check_cap(frac.len())?;
            Ok(enumerate(oracle, y, &ones, &frac))
        }
        MultilinearMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::invalid("Monte Carlo mode needs at least one sample"));
            }
            let total: f64 = (0..samples).map(|_| oracle.eval(&draw_set(y, rng))).sum();
            Ok(total / samples as f64)
        }
    }
}

/// `ΔF(y)`, one entry per item.
pub fn marginal<O, R>(oracle: &O, y: &[f64], mode: MultilinearMode, rng: &mut R) -> Result<Vec<f64>>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    let n = oracle.ground_size();
    validate(n, y)?;
    match mode {
        MultilinearMode::Exact => {
            let (ones, frac) = split(y);
            check_cap(frac.len())?;
            let mut out = vec![0.0; n];
            for v in 0..n {
                if y[v] == 1.0 {
                    continue;
                }
                // (1 - y_v) * (F(y | y_v = 1) - F(y | y_v = 0))
                let rest: Vec<ItemId> = frac.iter().copied().filter(|&u| u != v).collect();
                let mut with_v = ones.clone();
                with_v.push(v);
                let gain =
                    enumerate(oracle, y, &with_v, &rest) - enumerate(oracle, y, &ones, &rest);
                out[v] = (1.0 - y[v]) * gain;
            }
            Ok(out)
        }
        MultilinearMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::invalid("Monte Carlo mode needs at least one sample"));
            }
            let mut out = vec![0.0; n];
            for _ in 0..samples {
                let s = draw_set(y, rng);
                let base = oracle.eval(&s);
                let mut member = vec![false; n];
                for &v in &s {
                    member[v] = true;
                }
                let mut with_v = s.clone();
                for v in (0..n).filter(|&v| !member[v]) {
                    with_v.push(v);
                    out[v] += oracle.eval(&with_v) - base;
                    with_v.pop();
                }
            }
            for o in &mut out {
                *o /= samples as f64;
            }
            Ok(out)
        }
    }
}

/// A vector with a single (possibly zero) nonzero coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseEstimate {
    pub coordinate: ItemId,
    pub value: f64,
}

impl SparseEstimate {
    pub fn to_dense(self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        out[self.coordinate] = self.value;
        out
    }
}

/// Unbiased estimate of `ΔF(y)` from one oracle evaluation.
///
/// Draws `v` uniformly, thresholds `θ_u ~ U[0,1]`, `A = {u : θ_u <= y_u}`,
/// `B = A + v` and a fair coin `X`; returns `-2n f(A)` at `v` when `X = 0`
/// and `+2n f(B)` at `v` otherwise.
pub fn sample_marginal_estimate<O, R>(oracle: &O, y: &[f64], rng: &mut R) -> Result<SparseEstimate>
where
    O: ValueOracle + ?Sized,
    R: Rng + ?Sized,
{
    let n = oracle.ground_size();
    validate(n, y)?;
    if n == 0 {
        return Err(Error::invalid("empty ground set has no marginal"));
    }
    let v = rng.gen_range(0..n);
    let mut a: Vec<ItemId> = (0..n).filter(|&u| rng.gen::<f64>() <= y[u]).collect();
    let scale = 2.0 * n as f64;
    let value = if rng.gen::<bool>() {
        if !a.contains(&v) {
            a.push(v);
        }
        scale * oracle.eval(&a)
    } else {
        -scale * oracle.eval(&a)
    };
    Ok(SparseEstimate {
        coordinate: v,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::WeightedCoverage;
    use crate::oracle::{FnOracle, OracleFlags};
    use crate::rng::indexed_rng;

    fn min_one(n: usize) -> FnOracle<impl Fn(&[ItemId]) -> f64 + Send + Sync> {
        FnOracle::new(
            n,
            OracleFlags::MONOTONE_SUBMODULAR,
            1.0,
            |s: &[ItemId]| (s.len() as f64).min(1.0),
        )
    }

    #[test]
    fn integral_point_is_exact() {
        let mut rng = indexed_rng(1, "ml", 0);
        let f = WeightedCoverage::random(&mut rng, 6, 8, 0.4);
        let y = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let v = multilinear_eval(&f, &y, MultilinearMode::Exact, &mut rng).unwrap();
        assert_eq!(v, f.eval(&[0, 2, 5]));
    }

    #[test]
    fn min_one_on_two_coordinates() {
        let mut rng = indexed_rng(1, "ml", 1);
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let v =
                multilinear_eval(&min_one(2), &[p, p], MultilinearMode::Exact, &mut rng).unwrap();
            assert!((v - (1.0 - (1.0 - p) * (1.0 - p))).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_at_zero_and_one() {
        let mut rng = indexed_rng(1, "ml", 2);
        let f = WeightedCoverage::random(&mut rng, 5, 7, 0.4);
        let m = marginal(&f, &[0.0; 5], MultilinearMode::Exact, &mut rng).unwrap();
        for (v, &mv) in m.iter().enumerate() {
            assert!((mv - (f.eval(&[v]) - f.eval(&[]))).abs() < 1e-12);
        }
        let y = [1.0, 0.3, 0.0, 1.0, 0.6];
        let m = marginal(&f, &y, MultilinearMode::Exact, &mut rng).unwrap();
        assert_eq!(m[0], 0.0);
        assert_eq!(m[3], 0.0);
    }

    #[test]
    fn monte_carlo_tracks_exact() {
        let mut rng = indexed_rng(1, "ml", 3);
        let f = WeightedCoverage::random(&mut rng, 6, 8, 0.4);
        let y = [0.2, 0.7, 0.5, 0.1, 0.9, 0.4];
        let exact = multilinear_eval(&f, &y, MultilinearMode::Exact, &mut rng).unwrap();
        let mc = multilinear_eval(
            &f,
            &y,
            MultilinearMode::MonteCarlo { samples: 20_000 },
            &mut rng,
        )
        .unwrap();
        let bound: f64 = f.weights().iter().sum();
        assert!((exact - mc).abs() < 4.0 * bound / (20_000f64).sqrt());
        let me = marginal(&f, &y, MultilinearMode::Exact, &mut rng).unwrap();
        let mm = marginal(
            &f,
            &y,
            MultilinearMode::MonteCarlo { samples: 20_000 },
            &mut rng,
        )
        .unwrap();
        for (a, b) in me.iter().zip(&mm) {
            assert!((a - b).abs() < 4.0 * bound / (20_000f64).sqrt());
        }
    }

    #[test]
    fn rejects_bad_points() {
        let mut rng = indexed_rng(1, "ml", 4);
        let f = min_one(2);
        assert!(multilinear_eval(&f, &[0.5], MultilinearMode::Exact, &mut rng).is_err());
        assert!(multilinear_eval(&f, &[0.5, 1.5], MultilinearMode::Exact, &mut rng).is_err());
        let big = min_one(21);
        let y = vec![0.5; 21];
        assert!(matches!(
            multilinear_eval(&big, &y, MultilinearMode::Exact, &mut rng),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn single_item_estimate_cases() {
        let f = FnOracle::new(
            1,
            OracleFlags::MONOTONE_SUBMODULAR,
            1.0,
            |s: &[ItemId]| s.len() as f64,
        );
        let mut rng = indexed_rng(1, "ml", 5);
        let mut total = 0.0;
        let draws = 20_000;
        for _ in 0..draws {
            let e = sample_marginal_estimate(&f, &[0.0], &mut rng).unwrap();
            assert_eq!(e.coordinate, 0);
            assert!(e.value == 0.0 || e.value == 2.0);
            total += e.value;
        }
        let mean = total / draws as f64;
        assert!((mean - 1.0).abs() < 3.0 / (draws as f64).sqrt());
    }

    #[test]
    fn estimate_magnitude_bounded() {
        let mut rng = indexed_rng(1, "ml", 6);
        let f = WeightedCoverage::random(&mut rng, 5, 6, 0.5);
        let top = f.eval(&[0, 1, 2, 3, 4]);
        for _ in 0..1000 {
            let e = sample_marginal_estimate(&f, &[0.3, 0.5, 0.1, 0.9, 0.0], &mut rng).unwrap();
            assert!(e.coordinate < 5);
            assert!(e.value.abs() <= 10.0 * top + 1e-12);
        }
    }
}
