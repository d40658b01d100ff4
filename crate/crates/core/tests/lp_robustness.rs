//! Random collections put hundreds of hyperplane rows through one point at
//! the starting basis; both pricing rules must still reach a certified
//! optimum, and agree on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scoreforge::geometry::random_point;
use scoreforge::lp::{build_lp, solve_lp_with, LpStatus, Pricing, SolverOptions};
use scoreforge::{extract_h, objective, Collection, InfoStructure};

const AGREE_TOL: f64 = 1e-9;

fn random_collection(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Collection {
    let structures = (0..count)
        .map(|i| {
            let k = rng.random_range(2..=4);
            let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let atoms = (0..k).map(|j| (random_point(d, rng), weights[j] / total)).collect();
            InfoStructure::new(atoms, format!("X{i}")).unwrap()
        })
        .collect();
    Collection::new(structures, "random").unwrap()
}

#[test]
fn pricing_rules_agree_on_random_collections() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..40 {
        let d = 2 + case % 3;
        let c = random_collection(&mut rng, d, 1 + case % 6);
        let inst = build_lp(&c);
        let mut opts = Vec::new();
        for pricing in [Pricing::Bland, Pricing::Dantzig] {
            for refactor_interval in [0, 50] {
                let o = SolverOptions { pricing, refactor_interval, ..Default::default() };
                let sol = solve_lp_with(&inst, &o).unwrap_or_else(|e| panic!("case {case}: {e}"));
                assert_eq!(sol.status, LpStatus::Optimal);
                let h = extract_h(&sol).unwrap();
                let obj = objective(&h, &c).unwrap().objective;
                assert!((obj - sol.objective).abs() <= AGREE_TOL, "case {case}: {obj} vs {}", sol.objective);
                opts.push(sol.objective);
            }
        }
        let spread = opts.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - opts.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(spread <= AGREE_TOL, "case {case}: {opts:?}");
    }
}
