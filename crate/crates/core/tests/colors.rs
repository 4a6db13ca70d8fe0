use rand::Rng;

use subassign::objectives::WeightedCoverage;
use subassign::offline::{color_averaged_value, tabular_greedy, Estimator};
use subassign::rng::indexed_rng;
use subassign::GroundSet;

#[test]
fn more_colors_do_not_hurt_on_average() {
    let instances = 120;
    let mut totals = [0.0; 2];
    for i in 0..instances {
        let mut rng = indexed_rng(21, "colors-instance", i);
        let k = rng.gen_range(2..=3);
        let mut next = 0;
        let parts = (0..k)
            .map(|_| {
                let s = rng.gen_range(1..=3);
                let p: Vec<usize> = (next..next + s).collect();
                next += s;
                p
            })
            .collect();
        let g = GroundSet::new(parts).unwrap();
        let f = WeightedCoverage::random(&mut rng, next, 8, 0.35);
        for (slot, c) in [1usize, 4].into_iter().enumerate() {
            let out = tabular_greedy(&g, &f, c, Estimator::default(), None, &mut rng).unwrap();
            totals[slot] += color_averaged_value(
                &f,
                &g,
                &out.table.entries(),
                c,
                Estimator::default(),
                &mut rng,
            )
            .unwrap();
        }
    }
    let (one, four) = (totals[0] / instances as f64, totals[1] / instances as f64);
    println!("mean F(G): C=1 {one}, C=4 {four}");
    assert!(four >= one - 1e-9, "C=1 {one}, C=4 {four}");
}
