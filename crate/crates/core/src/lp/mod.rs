//! The linear program whose solution is an optimal bounded scoring rule for
//! a finite collection.
//!
//! Over the points `Ā` (support points, prior means and the `d` vertices) the
//! unknowns are values `h_α ∈ [0, 1]` and subgradients `g_α`, with the last
//! coordinate of each `g_α` pinned to zero. Supporting hyperplane rows
//! `h_α' ≥ h_α + g_α·(x_α' − x_α)` make the data consistent with a convex
//! function, and the epigraph variable `t` linearizes the worst-case gain.

mod solver;

use std::collections::BTreeMap;

pub use solver::{
    certificate, solve, Certificate, LinearProgram, LpStatus, Pricing, SimplexResult,
    SolverOptions, SparseRow,
};

use crate::error::{Error, Result};
use crate::gain::objective;
use crate::geometry::{dot, PointKey, SimplexPoint};
use crate::info::Collection;
use crate::rules::{AffinePiece, ConvexFunction, PiecewiseLinearConvex};

pub const FEAS_TOL: f64 = 1e-8;
pub const GAP_TOL: f64 = 1e-8;

/// One epigraph row: `t ≤ Σ_j p_j h_{atom_j} − h_mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureRow {
    pub label: String,
    pub atoms: Vec<(usize, f64)>,
    pub mean: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    pub d: usize,
    /// `Ā`: deduplicated support points and means, then the vertices.
    pub points: Vec<SimplexPoint>,
    /// `vertices[k]` is the index of `ê_k` in `points`.
    pub vertices: Vec<usize>,
    pub structures: Vec<StructureRow>,
    /// Pairs `(vertex, point)` at the same location, tied by equality rows.
    pub coincident: Vec<(usize, usize)>,
    pub program: LinearProgram,
    pub has_constant: bool,
}

impl LpInstance {
    pub fn t_var(&self) -> usize {
        0
    }

    pub fn h_var(&self, alpha: usize) -> usize {
        1 + alpha
    }

    /// Gradients are only determined up to adding a multiple of `1`, so the
    /// last coordinate is pinned to zero and has no variable.
    pub fn g_var(&self, alpha: usize, k: usize) -> Option<usize> {
        (k + 1 < self.d).then(|| g_var(self.points.len(), self.d, alpha, k))
    }

    pub fn num_vars(&self) -> usize {
        self.program.n
    }

    pub fn num_rows(&self) -> usize {
        self.program.m()
    }
}

fn h_var(alpha: usize) -> usize {
    1 + alpha
}

fn g_var(a: usize, d: usize, alpha: usize, k: usize) -> usize {
    1 + a + alpha * (d - 1) + k
}

/// Builds the epigraph form of the program for a finite collection.
pub fn build_lp(c: &Collection) -> LpInstance {
    let d = c.dim();
    let mut points: Vec<SimplexPoint> = Vec::new();
    let mut index: BTreeMap<PointKey, usize> = BTreeMap::new();
    let mut intern = |p: &SimplexPoint, points: &mut Vec<SimplexPoint>| -> usize {
        *index.entry(p.key()).or_insert_with(|| {
            points.push(p.clone());
            points.len() - 1
        })
    };
    let mut structures = Vec::with_capacity(c.len());
    for s in c.structures() {
        let atoms = s
            .atoms()
            .iter()
            .map(|a| (intern(&a.point, &mut points), a.prob))
            .collect();
        let mean = intern(s.mean(), &mut points);
        structures.push(StructureRow {
            label: s.label().to_string(),
            atoms,
            mean,
        });
    }
    let interior_count = points.len();
    let mut vertices = Vec::with_capacity(d);
    let mut coincident = Vec::new();
    for k in 0..d {
        let v = SimplexPoint::vertex(d, k);
        let at = points[..interior_count]
            .iter()
            .position(|p| p.coords() == v.coords());
        vertices.push(points.len());
        if let Some(alpha) = at {
            coincident.push((points.len(), alpha));
        }
        points.push(v);
    }

    let a = points.len();
    let n = 1 + a * d;
    let mut cvec = vec![0.0; n];
    cvec[0] = 1.0;
    let mut program = LinearProgram::new(n, cvec, vec![true; n]);

    for s in &structures {
        let mut row: SparseRow = vec![(0, 1.0), (h_var(s.mean), 1.0)];
        row.extend(s.atoms.iter().map(|&(alpha, p)| (h_var(alpha), -p)));
        program.push_row(row, 0.0);
    }
    for alpha in 0..a {
        program.push_row(vec![(h_var(alpha), 1.0)], 1.0);
        program.push_row(vec![(h_var(alpha), -1.0)], 0.0);
    }
    for alpha in 0..a {
        let xa = points[alpha].coords();
        for beta in 0..a {
            if alpha == beta {
                continue;
            }
            let xb = points[beta].coords();
            let mut row: SparseRow = vec![(h_var(alpha), 1.0), (h_var(beta), -1.0)];
            for k in 0..d - 1 {
                row.push((g_var(a, d, alpha, k), xb[k] - xa[k]));
            }
            program.push_row(row, 0.0);
        }
    }
    for &(v, alpha) in &coincident {
        program.push_row(vec![(h_var(v), 1.0), (h_var(alpha), -1.0)], 0.0);
        program.push_row(vec![(h_var(v), -1.0), (h_var(alpha), 1.0)], 0.0);
    }

    LpInstance {
        d,
        points,
        vertices,
        structures,
        coincident,
        program,
        has_constant: c.has_constant(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `Opt`, the optimal worst-case gain.
    pub objective: f64,
    pub h: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub points: Vec<SimplexPoint>,
    pub certificate: Certificate,
    pub pivots: usize,
    /// The collection contains a constant structure, so `Opt = 0`.
    pub degenerate: bool,
}

pub fn solve_lp(inst: &LpInstance) -> Result<LpSolution> {
    solve_lp_with(inst, &SolverOptions::default())
}

pub fn solve_lp_with(inst: &LpInstance, opts: &SolverOptions) -> Result<LpSolution> {
    let res = solve(&inst.program, opts)?;
    match res.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpStatus("infeasible".into())),
        LpStatus::Unbounded => {
            // the box rows bound every h and hence t
            return Err(Error::LpStatus("unbounded".into()));
        }
    }
    if !res.certificate.check(res.objective, FEAS_TOL, GAP_TOL) {
        return Err(Error::Verification(format!(
            "certificate out of tolerance: {:?}",
            res.certificate
        )));
    }
    let a = inst.points.len();
    let h = (0..a).map(|alpha| res.x[inst.h_var(alpha)]).collect();
    let g = (0..a)
        .map(|alpha| {
            (0..inst.d)
                .map(|k| inst.g_var(alpha, k).map_or(0.0, |j| res.x[j]))
                .collect()
        })
        .collect();
    if inst.has_constant {
        log::warn!("collection contains a constant structure; the optimum is 0");
    }
    Ok(LpSolution {
        status: res.status,
        objective: res.objective,
        h,
        g,
        points: inst.points.clone(),
        certificate: res.certificate,
        pivots: res.pivots,
        degenerate: inst.has_constant || res.objective.abs() <= FEAS_TOL,
    })
}

/// Pieces closer than this at every vertex are merged on extraction.
pub const PIECE_DEDUP_TOL: f64 = 1e-12;

/// `H(x) = max(max_α h_α + g_α·(x − x_α), min_α h_α)`, with duplicate
/// pieces removed.
pub fn extract_h(sol: &LpSolution) -> Result<PiecewiseLinearConvex> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::LpStatus(sol.status.to_string()));
    }
    let d = sol.points[0].dim();
    let pieces = sol
        .points
        .iter()
        .zip(sol.h.iter().zip(&sol.g))
        .map(|(x, (&h, g))| AffinePiece {
            g: g.iter().map(|c| c + 0.0).collect(),
            b: h - dot(g, x.coords()) + 0.0,
        })
        .collect();
    // + 0.0 turns -0 into 0
    let floor = sol.h.iter().copied().fold(f64::INFINITY, f64::min) + 0.0;
    Ok(PiecewiseLinearConvex::new(d, pieces, floor)?.dedup(PIECE_DEDUP_TOL))
}

/// Solves, extracts `H`, and re-checks that `Obj_C(H)` matches `Opt`.
pub fn optimal_rule(c: &Collection) -> Result<(PiecewiseLinearConvex, f64, LpSolution)> {
    optimal_rule_with(c, &SolverOptions::default())
}

pub fn optimal_rule_with(
    c: &Collection,
    opts: &SolverOptions,
) -> Result<(PiecewiseLinearConvex, f64, LpSolution)> {
    let inst = build_lp(c);
    let sol = solve_lp_with(&inst, opts)?;
    let h = extract_h(&sol)?;
    let obj = objective(&h, c)?.objective;
    if (obj - sol.objective).abs() > FEAS_TOL {
        return Err(Error::Verification(format!(
            "objective of extracted rule {obj} differs from LP optimum {}",
            sol.objective
        )));
    }
    Ok((h, sol.objective, sol))
}

/// Largest `|H(x_α) − h_α|` over the LP points.
pub fn interpolation_error(h: &PiecewiseLinearConvex, sol: &LpSolution) -> f64 {
    sol.points
        .iter()
        .zip(&sol.h)
        .map(|(x, &v)| (h.value(x.coords()) - v).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{beta_bernoulli_exact, beta_collection_adaptive, beta_collection_static, InfoStructure};
    use crate::rules::ClosedFormRule;
    use approx::assert_abs_diff_eq;
    use num_rational::Rational64;

    fn half() -> Collection {
        Collection::singleton(beta_bernoulli_exact(Rational64::new(1, 2), 0).unwrap())
    }

    #[test]
    fn instance_counts() {
        let inst = build_lp(&half());
        assert_eq!(inst.points.len(), 5);
        let a = 5;
        assert_eq!(inst.num_vars(), 2 * a + 1);
        assert_eq!(inst.g_var(0, 1), None);
        assert_eq!(inst.num_rows(), 2 * a + a * (a - 1) + 1);
        assert!(inst.coincident.is_empty());
    }

    #[test]
    fn vertex_support_gets_equality_rows() {
        let x = beta_bernoulli_exact(Rational64::new(1, 1), 0).unwrap();
        let y = beta_bernoulli_exact(Rational64::new(1, 2), 0).unwrap();
        let inst = build_lp(&Collection::new(vec![x, y], "v").unwrap());
        assert_eq!(inst.coincident.len(), 1);
        let (v, alpha) = inst.coincident[0];
        assert_eq!(inst.points[v].coords(), inst.points[alpha].coords());
    }

    #[test]
    fn singleton_half_is_v_shape() {
        let (h, opt, sol) = optimal_rule(&half()).unwrap();
        assert_abs_diff_eq!(opt, 1.0 / 3.0, epsilon = 1e-8);
        let v = ClosedFormRule::v_shape(0.5).unwrap();
        for x in [0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0] {
            assert_abs_diff_eq!(h.eval_binary(x).unwrap(), v.eval_binary(x).unwrap(), epsilon = 1e-6);
        }
        assert!(interpolation_error(&h, &sol) <= 1e-8);
        for k in 0..2 {
            assert!(h.eval(&SimplexPoint::vertex(2, k)).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn constant_structure_forces_zero() {
        let constant = InfoStructure::new(vec![(SimplexPoint::binary(0.3).unwrap(), 1.0)], "const").unwrap();
        let c = Collection::new(
            vec![beta_bernoulli_exact(Rational64::new(1, 2), 0).unwrap(), constant],
            "c",
        )
        .unwrap();
        let (_, opt, sol) = optimal_rule(&c).unwrap();
        assert_abs_diff_eq!(opt, 0.0, epsilon = 1e-12);
        assert!(sol.degenerate);
    }

    #[test]
    fn static_collection_self_consistent() {
        let c = beta_collection_static(5);
        let (h, opt, sol) = optimal_rule(&c).unwrap();
        assert!(opt > 0.0);
        assert_abs_diff_eq!(objective(&h, &c).unwrap().objective, opt, epsilon = 1e-8);
        assert!(sol.certificate.check(opt, FEAS_TOL, GAP_TOL));
    }

    #[test]
    fn adaptive_never_beats_static() {
        let (_, s, _) = optimal_rule(&beta_collection_static(5)).unwrap();
        let (_, a, _) = optimal_rule(&beta_collection_adaptive(5)).unwrap();
        assert!(a <= s + 1e-9, "{a} > {s}");
    }

    #[test]
    fn pricing_rules_agree() {
        let c = beta_collection_static(4);
        let inst = build_lp(&c);
        let a = solve_lp_with(&inst, &SolverOptions { pricing: Pricing::Bland, ..Default::default() }).unwrap();
        let b = solve_lp_with(&inst, &SolverOptions { pricing: Pricing::Dantzig, ..Default::default() }).unwrap();
        assert_abs_diff_eq!(a.objective, b.objective, epsilon = 1e-9);
    }
}
