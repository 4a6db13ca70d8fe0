use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use subassign::experts::{Expert, Rwm};
use subassign::harness::{regret_1m1e, AdModel};
use subassign::instance::parse_instance;
use subassign::matroid::{round_to_independent, FractionalPoint, Matroid, PartitionMatroid};
use subassign::objectives::{
    ConcaveOverIntersection, Curve, DiscountedPositional, InterestGroup, WeightedCoverage,
};
use subassign::offline::{locally_greedy_in_order, tabular_greedy, Estimator};
use subassign::online::{multilinear_eval, MultilinearMode};
use subassign::oracle::{brute_force_opt, check_monotone_submodular};
use subassign::rng::indexed_rng;
use subassign::{Assignment, GroundSet, ValueOracle};

/// Partition sizes, each in `1..=3`.
fn sizes(max_k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=max_k)
}

fn ground_of(sizes: &[usize]) -> GroundSet {
    let mut next = 0;
    let parts = sizes
        .iter()
        .map(|&s| {
            let p: Vec<usize> = (next..next + s).collect();
            next += s;
            p
        })
        .collect();
    GroundSet::new(parts).unwrap()
}

fn coverage(seed: u64, n: usize) -> WeightedCoverage {
    let mut rng = indexed_rng(seed, "properties", 0);
    WeightedCoverage::random(&mut rng, n, 6, 0.4)
}

fn curve(i: u8) -> Curve {
    match i % 5 {
        0 => Curve::Linear,
        1 => Curve::Saturating,
        2 => Curve::Capped(2.0),
        3 => Curve::Sqrt,
        _ => Curve::Log1p,
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn coverage_is_monotone_submodular(seed in any::<u64>(), n in 1usize..=8) {
        let f = coverage(seed, n);
        let g = GroundSet::new(vec![(0..n).collect()]).unwrap();
        let r = check_monotone_submodular(&f, &g, 10).unwrap();
        prop_assert!(r.monotone && r.submodular, "{:?}", r.witness);
    }

    #[test]
    fn concave_is_monotone_submodular(seed in any::<u64>(), n in 1usize..=8, c in any::<u8>()) {
        let mut rng = indexed_rng(seed, "properties", 1);
        let groups = (0..4)
            .map(|_| {
                let items = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                InterestGroup::new(items, rng.gen::<f64>())
            })
            .collect();
        let f = ConcaveOverIntersection::new(n, groups, curve(c)).unwrap();
        let g = GroundSet::new(vec![(0..n).collect()]).unwrap();
        let r = check_monotone_submodular(&f, &g, 10).unwrap();
        prop_assert!(r.monotone && r.submodular, "{:?}", r.witness);
    }

    #[test]
    fn discounted_is_monotone_submodular(seed in any::<u64>(), k in 1usize..=3, blogs in 1usize..=3, gamma in 0.05f64..0.95) {
        let inner: Arc<dyn ValueOracle> = Arc::new(coverage(seed, blogs));
        let (f, g) = DiscountedPositional::ranking(inner, k, gamma).unwrap();
        let r = check_monotone_submodular(&f, &g, 10).unwrap();
        prop_assert!(r.monotone && r.submodular, "{:?}", r.witness);
    }

    #[test]
    fn opt_dominates_every_algorithm(seed in any::<u64>(), sz in sizes(3), colors in 1usize..=4) {
        let g = ground_of(&sz);
        let f = coverage(seed, g.num_items());
        let (_, opt) = brute_force_opt(&f, &g, 1_000_000).unwrap();
        let lg = locally_greedy_in_order(&g, &f).unwrap();
        prop_assert!(g.is_feasible(&lg).unwrap());
        prop_assert!(f.eval(lg.items()) <= opt + 1e-9);
        let mut rng = indexed_rng(seed, "properties", 2);
        let out = tabular_greedy(&g, &f, colors, Estimator::default(), None, &mut rng).unwrap();
        prop_assert!(g.is_feasible(&out.assignment).unwrap());
        prop_assert!(f.eval(out.assignment.items()) <= opt + 1e-9);
    }

    #[test]
    fn monotone_along_random_chains(seed in any::<u64>(), n in 1usize..=10) {
        let f = coverage(seed, n);
        let mut rng = indexed_rng(seed, "properties", 3);
        let mut s: Vec<usize> = Vec::new();
        let mut prev = f.eval(&s);
        for v in 0..n {
            if rng.gen_bool(0.6) {
                s.push(v);
                let cur = f.eval(&s);
                prop_assert!(cur >= prev - 1e-12);
                prev = cur;
            }
        }
    }

    #[test]
    fn rwm_probabilities_form_a_distribution(seed in any::<u64>(), rewards in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 0..40)) {
        let mut e = Rwm::new(3, 1.0, indexed_rng(seed, "properties", 4)).unwrap();
        for r in &rewards {
            e.update(r).unwrap();
            let p = e.probabilities();
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(e.select() < 3);
        }
    }

    #[test]
    fn rounding_is_always_independent(seed in any::<u64>(), sz in sizes(4), parts in 1usize..=4) {
        let g = ground_of(&sz);
        let m = PartitionMatroid::from_ground(&g);
        let mut rng = indexed_rng(seed, "properties", 5);
        let combo: Vec<(Vec<usize>, f64)> = (0..parts)
            .map(|_| {
                let s = g.partitions().iter().filter_map(|p| rng.gen_bool(0.7).then(|| p[rng.gen_range(0..p.len())])).collect();
                (s, 1.0 / parts as f64)
            })
            .collect();
        let y = FractionalPoint::new(&m, combo).unwrap();
        for _ in 0..20 {
            let s = round_to_independent(&m, &y, &mut rng).unwrap();
            prop_assert!(m.is_independent(&s));
        }
    }

    #[test]
    fn multilinear_lies_between_extremes(seed in any::<u64>(), y in prop::collection::vec(0.0f64..=1.0, 1..=7)) {
        let f = coverage(seed, y.len());
        let mut rng = indexed_rng(seed, "properties", 6);
        let v = multilinear_eval(&f, &y, MultilinearMode::Exact, &mut rng).unwrap();
        let all: Vec<usize> = (0..y.len()).collect();
        prop_assert!(v >= f.eval(&[]) - 1e-12 && v <= f.eval(&all) + 1e-12);
    }

    #[test]
    fn optimum_replay_has_regret_minus_opt_over_e(seed in any::<u64>(), sz in sizes(3), rounds in 1usize..=5) {
        let g = ground_of(&sz);
        let f = coverage(seed, g.num_items());
        let (s, opt) = brute_force_opt(&f, &g, 1_000_000).unwrap();
        let stream = vec![f; rounds];
        let r = regret_1m1e(&vec![s; rounds], &stream, &g, 1_000_000).unwrap();
        prop_assert!((r.regret + rounds as f64 * opt / std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn ad_rewards_are_probabilities(k in 1usize..=4, a in 1usize..=6, picks in prop::collection::vec(0usize..6, 4)) {
        let model = AdModel::standard(k, a * 2).unwrap();
        let s: Assignment = (0..k).map(|p| model.item(p, picks[p] % (a * 2))).collect();
        let r = model.expected_reward(&s).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(r <= model.optimum().1 + 1e-12);
    }

    #[test]
    fn parser_never_panics(text in "[0-9a-z #\\.\\-\n]{0,200}") {
        let _ = parse_instance(&text);
    }

    #[test]
    fn parser_survives_truncation_and_huge_counts(cut in 0usize..120, n in any::<u64>()) {
        let text = "2 4\n0 0\n1 0\n2 1\n3 1\nobjective concave capped 1\ngroup 0.5 0\ngroup 0.5 1 3\nbound 0.5\n";
        let _ = parse_instance(&text[..cut.min(text.len())]);
        let _ = parse_instance(&format!("1 {n}\n0 0\n"));
    }

    #[test]
    fn parser_accepts_generated_coverage(seed in any::<u64>(), sz in sizes(3)) {
        let g = ground_of(&sz);
        let f = coverage(seed, g.num_items());
        let mut text = format!("{} {}\n", g.num_positions(), g.num_items());
        for item in g.items() {
            text += &format!("{} {}\n", item.id, item.partition);
        }
        text += "objective coverage\nweights";
        for w in f.weights() {
            text += &format!(" {w}");
        }
        text += "\n";
        for (v, c) in f.covers().iter().enumerate() {
            text += &format!("cover {v}");
            for e in c {
                text += &format!(" {e}");
            }
            text += "\n";
        }
        text += &format!("bound {}\n", f.weights().iter().sum::<f64>());
        let inst = parse_instance(&text).unwrap();
        prop_assert_eq!(&inst.ground, &g);
        for mask in 0u32..1 << g.num_items().min(8) {
            let s: Vec<usize> = (0..g.num_items()).filter(|&v| mask >> v & 1 == 1).collect();
            prop_assert_eq!(inst.oracle.eval(&s), f.eval(&s));
        }
    }
}
