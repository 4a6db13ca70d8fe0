//! Plain-text instance files.
//!
//! ```text
//! # comments and blank lines are ignored
//! K n
//! id partition            (n lines, partitions 0..K-1)
//! objective <family> ...  (exactly one block, see below)
//! bound g                 (required)
//! matroid partition | uniform r | explicit
//! ```
//!
//! Objective blocks:
//!
//! * `objective coverage` followed by `weights w_0 .. w_{m-1}` and any
//!   number of `cover id e ...` lines.
//! * `objective modular` followed by `value id v` lines (missing ids are 0).
//! * `objective concave <curve>` with curve `linear`, `saturating`, `sqrt`,
//!   `log1p` or `capped c`, followed by `group weight id ...` lines.
//! * `objective discounted gamma` followed by `weights w_0 ..`, `blog b e ...`
//!   lines for the inner coverage over blogs, and one `place id b` line per
//!   item giving the blog shown by that item.
//!
//! `matroid explicit` is followed by `set id ...` lines listing the maximal
//! independent sets. Without a `matroid` line the partition matroid of the
//! ground set is used.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ground::{GroundSet, ItemId};
use crate::matroid::{ExplicitMatroid, Matroid, PartitionMatroid, UniformMatroid};
use crate::objectives::{
    ConcaveOverIntersection, Curve, DiscountedPositional, InterestGroup, Modular, WeightedCoverage,
};
use crate::oracle::{OracleFlags, ValueOracle, TOLERANCE};

/// Grammar version documented in the README.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum MatroidSpec {
    Partition,
    Uniform(usize),
    Explicit(Vec<Vec<usize>>),
}

/// A parsed instance.
#[derive(Clone)]
pub struct Instance {
    pub ground: GroundSet,
    pub oracle: Arc<dyn ValueOracle>,
    pub matroid_spec: MatroidSpec,
    pub family: &'static str,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("ground", &self.ground)
            .field("family", &self.family)
            .field("bound", &self.oracle.value_bound())
            .field("matroid_spec", &self.matroid_spec)
            .finish()
    }
}

impl Instance {
    pub fn bound(&self) -> f64 {
        self.oracle.value_bound()
    }

    pub fn matroid(&self) -> Result<Arc<dyn Matroid>> {
        let n = self.ground.num_items();
        Ok(match &self.matroid_spec {
            MatroidSpec::Partition => Arc::new(PartitionMatroid::from_ground(&self.ground)),
            MatroidSpec::Uniform(r) => Arc::new(UniformMatroid::new(n, *r)),
            MatroidSpec::Explicit(sets) => Arc::new(ExplicitMatroid::new(n, sets)?),
        })
    }
}

/// Inner oracle with the declared bound in place of its own.
struct Declared {
    inner: Arc<dyn ValueOracle>,
    bound: f64,
}

impl ValueOracle for Declared {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }

    fn eval(&self, set: &[ItemId]) -> f64 {
        self.inner.eval(set)
    }

    fn flags(&self) -> OracleFlags {
        self.inner.flags()
    }

    fn value_bound(&self) -> f64 {
        self.bound
    }
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text)
}

enum Block {
    None,
    Coverage {
        weights: Option<Vec<f64>>,
        covers: Vec<Vec<usize>>,
    },
    Modular {
        values: Vec<f64>,
    },
    Concave {
        curve: Curve,
        groups: Vec<InterestGroup>,
    },
    Discounted {
        gamma: f64,
        weights: Option<Vec<f64>>,
        blogs: Vec<Vec<usize>>,
        place: Vec<Option<usize>>,
    },
    Explicit,
}

struct Line<'a> {
    no: usize,
    words: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.no,
            msg: msg.into(),
        }
    }

    fn arity(&self, n: usize) -> Result<()> {
        if self.words.len() != n {
            return Err(self.err(format!("`{}` takes {} argument(s)", self.words[0], n - 1)));
        }
        Ok(())
    }

    fn num<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        let w = self
            .words
            .get(i)
            .ok_or_else(|| self.err(format!("missing argument {i} to `{}`", self.words[0])))?;
        w.parse()
            .map_err(|_| self.err(format!("cannot parse `{w}`")))
    }

    fn real(&self, i: usize) -> Result<f64> {
        let v: f64 = self.num(i)?;
        if !v.is_finite() {
            return Err(self.err(format!("`{}` is not finite", self.words[i])));
        }
        Ok(v)
    }

    fn rest<T: std::str::FromStr>(&self, from: usize) -> Result<Vec<T>> {
        (from..self.words.len()).map(|i| self.num(i)).collect()
    }

    fn reals(&self, from: usize) -> Result<Vec<f64>> {
        (from..self.words.len()).map(|i| self.real(i)).collect()
    }

    fn item(&self, i: usize, n: usize) -> Result<usize> {
        let id: usize = self.num(i)?;
        if id >= n {
            return Err(self.err(format!("item {id} out of range 0..{n}")));
        }
        Ok(id)
    }
}

fn parse_curve(line: &Line<'_>) -> Result<Curve> {
    let name = line
        .words
        .get(2)
        .ok_or_else(|| line.err("concave objective needs a curve"))?;
    let curve = match *name {
        "linear" => Curve::Linear,
        "saturating" => Curve::Saturating,
        "sqrt" => Curve::Sqrt,
        "log1p" => Curve::Log1p,
        "capped" => {
            line.arity(4)?;
            let c = line.real(3)?;
            if c < 0.0 {
                return Err(line.err("curve cap must be non-negative"));
            }
            return Ok(Curve::Capped(c));
        }
        other => return Err(line.err(format!("unknown curve `{other}`"))),
    };
    line.arity(3)?;
    Ok(curve)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = content.split_whitespace().collect();
            (!words.is_empty()).then_some(Line { no: i + 1, words })
        })
        .collect::<Vec<_>>()
        .into_iter();

    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty instance file".into(),
    })?;
    header.arity(2)?;
    let k: usize = header.num(0)?;
    let n: usize = header.num(1)?;
    if k == 0 {
        return Err(header.err("K must be at least 1"));
    }
    if n > lines.len() {
        return Err(header.err(format!("expected {n} item lines, found {}", lines.len())));
    }

    let mut partition_of = vec![None; n];
    for _ in 0..n {
        let line = lines.next().expect("length checked above");
        line.arity(2)?;
        let id = line.item(0, n)?;
        let p: usize = line.num(1)?;
        if p >= k {
            return Err(line.err(format!("partition {p} out of range 0..{k}")));
        }
        if partition_of[id].replace(p).is_some() {
            return Err(line.err(format!("item {id} listed twice")));
        }
    }
    let partition_of: Vec<usize> = partition_of
        .into_iter()
        .map(|p| p.expect("n distinct ids in 0..n"))
        .collect();
    let ground = GroundSet::from_partition_of(k, &partition_of)?;

    let mut block = Block::None;
    let mut objective: Option<(usize, &'static str, Block)> = None;
    let mut bound: Option<(usize, f64)> = None;
    let mut matroid_spec: Option<MatroidSpec> = None;
    let mut explicit_sets = Vec::new();
    let mut last_line = header.no;

    for line in lines {
        last_line = line.no;
        let kw = line.words[0];
        match kw {
            "objective" => {
                if objective.is_some() || !matches!(block, Block::None | Block::Explicit) {
                    return Err(line.err("only one objective block is allowed"));
                }
                let family = *line
                    .words
                    .get(1)
                    .ok_or_else(|| line.err("objective needs a family"))?;
                block = match family {
                    "coverage" => {
                        line.arity(2)?;
                        Block::Coverage {
                            weights: None,
                            covers: vec![Vec::new(); n],
                        }
                    }
                    "modular" => {
                        line.arity(2)?;
                        Block::Modular {
                            values: vec![0.0; n],
                        }
                    }
                    "concave" => Block::Concave {
                        curve: parse_curve(&line)?,
                        groups: Vec::new(),
                    },
                    "discounted" => {
                        line.arity(3)?;
                        let gamma = line.real(2)?;
                        if !(gamma > 0.0 && gamma < 1.0) {
                            return Err(line.err(format!("discount {gamma} must lie in (0, 1)")));
                        }
                        Block::Discounted {
                            gamma,
                            weights: None,
                            blogs: Vec::new(),
                            place: vec![None; n],
                        }
                    }
                    other => return Err(line.err(format!("unknown objective family `{other}`"))),
                };
                objective = Some((line.no, family_name(family), Block::None));
            }
            "bound" => {
                line.arity(2)?;
                if bound.is_some() {
                    return Err(line.err("bound declared twice"));
                }
                let g = line.real(1)?;
                if g < 0.0 {
                    return Err(line.err("bound must be non-negative"));
                }
                bound = Some((line.no, g));
            }
            "matroid" => {
                if matroid_spec.is_some() {
                    return Err(line.err("matroid declared twice"));
                }
                let kind = *line
                    .words
                    .get(1)
                    .ok_or_else(|| line.err("matroid needs a kind"))?;
                matroid_spec = Some(match kind {
                    "partition" => {
                        line.arity(2)?;
                        MatroidSpec::Partition
                    }
                    "uniform" => {
                        line.arity(3)?;
                        MatroidSpec::Uniform(line.num(2)?)
                    }
                    "explicit" => {
                        line.arity(2)?;
                        finish_block(&mut block, &mut objective);
                        block = Block::Explicit;
                        MatroidSpec::Explicit(Vec::new())
                    }
                    other => return Err(line.err(format!("unknown matroid kind `{other}`"))),
                });
            }
            "set" => {
                if !matches!(block, Block::Explicit) {
                    return Err(line.err("`set` outside an explicit matroid block"));
                }
                let ids = (1..line.words.len())
                    .map(|i| line.item(i, n))
                    .collect::<Result<Vec<_>>>()?;
                explicit_sets.push(ids);
            }
            _ => body_line(&line, &mut block, n)?,
        }
    }
    finish_block(&mut block, &mut objective);

    let (obj_line, family, body) = objective.ok_or(Error::Parse {
        line: last_line,
        msg: "missing objective block".into(),
    })?;
    let (bound_line, g) = bound.ok_or(Error::Parse {
        line: last_line,
        msg: "missing `bound` line; the value bound must be declared".into(),
    })?;
    let at = |no: usize| {
        move |e: Error| Error::Parse {
            line: no,
            msg: e.to_string(),
        }
    };
    let inner: Arc<dyn ValueOracle> = match body {
        Block::Coverage { weights, covers } => {
            let weights = weights.ok_or(Error::Parse {
                line: obj_line,
                msg: "coverage objective needs a `weights` line".into(),
            })?;
            Arc::new(WeightedCoverage::new(weights, covers).map_err(at(obj_line))?)
        }
        Block::Modular { values } => Arc::new(Modular::new(values).map_err(at(obj_line))?),
        Block::Concave { curve, groups } => {
            Arc::new(ConcaveOverIntersection::new(n, groups, curve).map_err(at(obj_line))?)
        }
        Block::Discounted {
            gamma,
            weights,
            blogs,
            place,
        } => {
            let weights = weights.ok_or(Error::Parse {
                line: obj_line,
                msg: "discounted objective needs a `weights` line".into(),
            })?;
            let element_of = place
                .iter()
                .enumerate()
                .map(|(id, b)| {
                    b.ok_or(Error::Parse {
                        line: obj_line,
                        msg: format!("item {id} has no `place` line"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let coverage: Arc<dyn ValueOracle> =
                Arc::new(WeightedCoverage::new(weights, blogs).map_err(at(obj_line))?);
            Arc::new(
                DiscountedPositional::new(coverage, gamma, &ground, element_of)
                    .map_err(at(obj_line))?,
            )
        }
        Block::None | Block::Explicit => unreachable!("objective always carries its body"),
    };

    let empty = inner.eval(&[]);
    let needed = (0..n).map(|v| inner.eval(&[v]) - empty).fold(0.0, f64::max);
    if g + TOLERANCE < needed {
        return Err(Error::Parse {
            line: bound_line,
            msg: format!("declared bound {g} is below the largest singleton marginal {needed}"),
        });
    }

    let matroid_spec = match matroid_spec {
        Some(MatroidSpec::Explicit(_)) => MatroidSpec::Explicit(explicit_sets),
        Some(m) => m,
        None => MatroidSpec::Partition,
    };
    Ok(Instance {
        ground,
        oracle: Arc::new(Declared { inner, bound: g }),
        matroid_spec,
        family,
    })
}

fn family_name(word: &str) -> &'static str {
    match word {
        "coverage" => "coverage",
        "modular" => "modular",
        "concave" => "concave",
        _ => "discounted",
    }
}

/// Moves the active objective body into `objective`.
fn finish_block(block: &mut Block, objective: &mut Option<(usize, &'static str, Block)>) {
    if matches!(block, Block::None | Block::Explicit) {
        return;
    }
    if let Some((_, _, slot)) = objective {
        *slot = std::mem::replace(block, Block::None);
    }
}

fn body_line(line: &Line<'_>, block: &mut Block, n: usize) -> Result<()> {
    let kw = line.words[0];
    match (kw, block) {
        ("weights", Block::Coverage { weights, .. } | Block::Discounted { weights, .. }) => {
            if weights.is_some() {
                return Err(line.err("weights declared twice"));
            }
            *weights = Some(line.reals(1)?);
        }
        ("cover", Block::Coverage { covers, .. }) => {
            let id = line.item(1, n)?;
            covers[id].extend(line.rest::<usize>(2)?);
        }
        ("value", Block::Modular { values }) => {
            line.arity(3)?;
            let id = line.item(1, n)?;
            values[id] = line.real(2)?;
        }
        ("group", Block::Concave { groups, .. }) => {
            let w = line.real(1)?;
            let items = (2..line.words.len())
                .map(|i| line.item(i, n))
                .collect::<Result<Vec<_>>>()?;
            groups.push(InterestGroup::new(items, w));
        }
        ("blog", Block::Discounted { blogs, .. }) => {
            let b: usize = line.num(1)?;
            if blogs.len() <= b {
                blogs.resize(b + 1, Vec::new());
            }
            blogs[b].extend(line.rest::<usize>(2)?);
        }
        ("place", Block::Discounted { place, .. }) => {
            line.arity(3)?;
            let id = line.item(1, n)?;
            if place[id].replace(line.num(2)?).is_some() {
                return Err(line.err(format!("item {id} placed twice")));
            }
        }
        _ => return Err(line.err(format!("unexpected `{kw}` here"))),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::locally_greedy_in_order;
    use crate::oracle::brute_force_opt;

    const ALICE_BOB: &str = "\
# two positions, two ads each
2 4
0 0
1 0
2 1
3 1
objective concave saturating
group 0.45 0
group 0.55 1 3
bound 0.55
";

    #[test]
    fn alice_bob_file() {
        let inst = parse_instance(ALICE_BOB).unwrap();
        assert_eq!(inst.family, "concave");
        assert_eq!(inst.matroid_spec, MatroidSpec::Partition);
        let lg = locally_greedy_in_order(&inst.ground, &inst.oracle).unwrap();
        assert!((inst.oracle.eval(lg.items()) - 0.55).abs() < 1e-12);
        let (_, opt) = brute_force_opt(&inst.oracle, &inst.ground, 1000).unwrap();
        assert!((opt - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_modular_and_matroids() {
        let cov = "2 3\n0 0\n1 0\n2 1\nobjective coverage\nweights 1 2 3\ncover 0 0 1\ncover 2 2\nbound 3\nmatroid uniform 1\n";
        let inst = parse_instance(cov).unwrap();
        assert_eq!(inst.oracle.eval(&[0, 2]), 6.0);
        assert_eq!(inst.oracle.eval(&[1]), 0.0);
        assert!(!inst.matroid().unwrap().is_independent(&[0, 2]));

        let modular = "1 2\n1 0\n0 0\nobjective modular\nvalue 1 2.5\nbound 2.5\nmatroid explicit\nset 0\nset 1\n";
        let inst = parse_instance(modular).unwrap();
        assert_eq!(inst.oracle.eval(&[0, 1]), 2.5);
        assert_eq!(
            inst.matroid_spec,
            MatroidSpec::Explicit(vec![vec![0], vec![1]])
        );
    }

    #[test]
    fn discounted_file() {
        let text =
            "2 4\n0 0\n1 0\n2 1\n3 1\nobjective discounted 0.8\nweights 1 1\nblog 0 0\nblog 1 1\n\
                    place 0 0\nplace 1 1\nplace 2 0\nplace 3 1\nbound 0.8\n";
        let inst = parse_instance(text).unwrap();
        assert!((inst.oracle.eval(&[0, 3]) - 1.44).abs() < 1e-12);
        assert!((inst.oracle.eval(&[0, 2]) - 0.8).abs() < 1e-12);
    }

    fn line_of(text: &str) -> usize {
        match parse_instance(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of(""), 1);
        assert_eq!(line_of("2 x\n"), 1);
        assert_eq!(line_of("1 2\n0 0\n0 0\n"), 3);
        assert_eq!(line_of("1 1\n0 3\n"), 2);
        assert_eq!(line_of("1 1\n0 0\nobjective modular\nvalue 0 1\n"), 4);
        assert_eq!(
            line_of("1 1\n0 0\nobjective modular\nvalue 0 2\nbound 1\n"),
            5
        );
        assert_eq!(line_of("1 1\n0 0\nobjective magic\n"), 3);
        assert_eq!(
            line_of("1 1\n0 0\n\n# c\nobjective modular\ncover 0 1\n"),
            6
        );
        assert_eq!(line_of("1 1\n0 0\nobjective concave capped -1\n"), 3);
    }
}
