//! Values pinned against independent computations: a HiGHS solve of the same
//! linear programs and a 40-digit brute force of the guarded objectives.

use scoreforge::asymptotics::{beta_guarded_objective, dirichlet_guarded_objective, guard};
use scoreforge::info::{beta_collection_adaptive, beta_collection_static, ThetaLattice};
use scoreforge::lp::optimal_rule;
use scoreforge::ClosedFormRule;

const LP_TOL: f64 = 1e-9;
const OBJ_REL_TOL: f64 = 1e-10;

fn close_rel(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs()
}

#[test]
fn static_beta_optima() {
    for (n, want) in [
        (5, 0.028957528957528955),
        (10, 0.009813459308129852),
        (20, 0.0029455639044670863),
    ] {
        let (_, opt, _) = optimal_rule(&beta_collection_static(n)).unwrap();
        assert!((opt - want).abs() <= LP_TOL, "N = {n}: {opt} vs {want}");
    }
}

#[test]
fn adaptive_beta_optima() {
    for (n, want) in [(5, 0.018637592023110605), (10, 0.005919588023095722)] {
        let (_, opt, _) = optimal_rule(&beta_collection_adaptive(n)).unwrap();
        assert!((opt - want).abs() <= LP_TOL, "N = {n}: {opt} vs {want}");
    }
}

#[test]
fn guarded_beta_log_objective() {
    let h = ClosedFormRule::log(2);
    for (n, want, at) in [
        (10, 0.0042225390005366946899, 10),
        (100, 0.000066642772371629990346, 100),
        (1000, 7.103846400845957858e-7, 1000),
    ] {
        let (obj, (arg_n, _)) = beta_guarded_objective(&h, n, guard(n, 0.5)).unwrap();
        assert!(close_rel(obj, want, OBJ_REL_TOL), "N = {n}: {obj} vs {want}");
        assert_eq!(arg_n, at);
    }
}

#[test]
fn guarded_dirichlet_log_objective() {
    let h = ClosedFormRule::log(3);
    for (n, want) in [(10, 0.0052627621220499858187), (30, 0.00077227810211809305798)] {
        let obj = dirichlet_guarded_objective(&h, n, guard(n, 0.5), ThetaLattice::Natural).unwrap();
        assert!(close_rel(obj, want, OBJ_REL_TOL), "N = {n}: {obj} vs {want}");
    }
}
