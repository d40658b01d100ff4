//! Collections under which a given bounded convex function is an optimal
//! scoring rule.
//!
//! Every structure built here has information gain exactly `opt` under the
//! target `H`. Upper-bound structures pin `H*(θ) ≤ H(θ)` for any optimal
//! `H*`, lower-bound structures pin `H*(θ) ≥ H(θ)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gain::{csv_writer, format_float, info_gain, objective};
use crate::geometry::{simplex_lattice, SimplexPoint};
use crate::info::{Collection, InfoStructure};
use crate::lp::optimal_rule;
use crate::rules::{ConvexFunction, PiecewiseLinearConvex, ACTIVE_TOL};

/// Tolerance on `min H = 0` and `H(ê_j) = 1`.
pub const NECESSARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NecessaryReport {
    pub passed: bool,
    pub grid_min: f64,
    pub grid_argmin: SimplexPoint,
    pub vertex_values: Vec<f64>,
}

/// A settled `H` must have minimum 0 and value 1 at every vertex.
pub fn necessary_check<H: ConvexFunction + ?Sized>(h: &H, grid: &[SimplexPoint]) -> Result<NecessaryReport> {
    let d = h.dim();
    let mut best: Option<(f64, &SimplexPoint)> = None;
    for x in grid {
        let v = h.eval(x)?;
        if best.is_none_or(|b| v < b.0) {
            best = Some((v, x));
        }
    }
    let (grid_min, argmin) = best.ok_or(Error::EmptyCollection)?;
    let vertex_values: Vec<f64> = (0..d)
        .map(|k| h.value(SimplexPoint::vertex(d, k).coords()))
        .collect();
    let passed = grid_min <= NECESSARY_TOL
        && vertex_values.iter().all(|v| (v - 1.0).abs() <= NECESSARY_TOL);
    Ok(NecessaryReport {
        passed,
        grid_min,
        grid_argmin: argmin.clone(),
        vertex_values,
    })
}

/// The default verification grid. The steps have many small divisors so
/// centres and thirds lie on the grid.
pub fn default_grid(d: usize) -> Vec<SimplexPoint> {
    let m = match d {
        2 => 2520,
        3 => 120,
        4 => 48,
        5 => 20,
        _ => 8,
    };
    simplex_lattice(d, m)
}

/// `Pr[θ] = 1 − ε'`, `Pr[ê_j] = ε'θ_j` with `ε' = opt/(1 − H(θ))`; gain `opt`.
///
/// Returns `None` when `H(θ) = 1`, where any structure will do.
pub fn construct_x_up<H: ConvexFunction + ?Sized>(
    h: &H,
    theta: &SimplexPoint,
    opt: f64,
) -> Result<Option<InfoStructure>> {
    let d = h.dim();
    let c = 1.0 - h.eval(theta)?;
    if c <= NECESSARY_TOL {
        return Ok(None);
    }
    if !(opt > 0.0) || opt > c * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "opt {opt} exceeds the upper-bound capacity {c}"
        )));
    }
    let eps = (opt / c).min(1.0);
    let mut atoms = vec![(theta.clone(), 1.0 - eps)];
    for j in 0..d {
        atoms.push((SimplexPoint::vertex(d, j), eps * theta.coords()[j]));
    }
    InfoStructure::new(atoms, format!("up({})", coords_label(theta))).map(Some)
}

/// The ratio-rule decomposition `θ* = r θ + Σ_j β_j ê_j` with `β ≥ 0`.
/// Returns `(j*, r, β)`.
pub fn decompose(theta: &SimplexPoint, theta_star: &SimplexPoint) -> Result<(usize, f64, Vec<f64>)> {
    let t = theta.coords();
    let s = theta_star.coords();
    if t == s {
        return Err(Error::InvalidArgument("theta equals the minimum point".into()));
    }
    let (j_star, r) = t
        .iter()
        .zip(s)
        .enumerate()
        .filter(|(_, (tj, _))| **tj > 0.0)
        .map(|(j, (tj, sj))| (j, sj / tj))
        .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let beta: Vec<f64> = t
        .iter()
        .zip(s)
        .enumerate()
        .map(|(j, (tj, sj))| if j == j_star { 0.0 } else { (sj - r * tj).max(0.0) })
        .collect();
    if beta.iter().any(|b| *b < 0.0) || !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument("no nonnegative decomposition".into()));
    }
    Ok((j_star, r, beta))
}

/// `Pr[θ*] = 1 − ε'`, `Pr[θ] = ε'r`, `Pr[ê_j] = ε'β_j` with
/// `ε' = opt/(1 − r(1 − H(θ)))`; mean `θ*`, gain `opt`.
///
/// Returns `None` when `H(θ) = 0`.
pub fn construct_x_lo<H: ConvexFunction + ?Sized>(
    h: &H,
    theta: &SimplexPoint,
    theta_star: &SimplexPoint,
    opt: f64,
) -> Result<Option<InfoStructure>> {
    let d = h.dim();
    theta_star.check_dim(d)?;
    let ht = h.eval(theta)?;
    if ht <= NECESSARY_TOL {
        return Ok(None);
    }
    let (_, r, beta) = decompose(theta, theta_star)?;
    let cap = 1.0 - r * (1.0 - ht);
    if !(opt > 0.0) || opt > cap * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "opt {opt} exceeds the lower-bound capacity {cap}"
        )));
    }
    let eps = (opt / cap).min(1.0);
    let mut atoms = vec![(theta_star.clone(), 1.0 - eps), (theta.clone(), eps * r)];
    for (j, b) in beta.iter().enumerate() {
        atoms.push((SimplexPoint::vertex(d, j), eps * b));
    }
    InfoStructure::new(atoms, format!("lo({})", coords_label(theta))).map(Some)
}

/// `Pr[θ*] = 1 − ε`, `Pr[ê_j] = εθ*_j`.
pub fn construct_x_star(theta_star: &SimplexPoint, eps: f64) -> Result<InfoStructure> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1)")));
    }
    if !theta_star.is_interior() {
        return Err(Error::InvalidArgument("minimum point must be interior".into()));
    }
    let d = theta_star.dim();
    let mut atoms = vec![(theta_star.clone(), 1.0 - eps)];
    for j in 0..d {
        atoms.push((SimplexPoint::vertex(d, j), eps * theta_star.coords()[j]));
    }
    InfoStructure::new(atoms, format!("star({})", coords_label(theta_star)))
}

fn coords_label(x: &SimplexPoint) -> String {
    x.coords()
        .iter()
        .map(|c| format!("{c:.6}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointRole {
    /// A vertex of some face that is neither a simplex vertex nor `θ*`.
    FaceVertex,
    /// The centroid of a face, where a single piece is active.
    FaceInterior,
    Minimum,
}

#[derive(Debug, Clone)]
pub struct SettlementPlan {
    pub target: PiecewiseLinearConvex,
    pub theta_star: SimplexPoint,
    pub points: Vec<(SimplexPoint, PointRole)>,
    pub collection: Collection,
    pub eps: f64,
}

/// One constraint of the face arrangement, as `a·x = rhs`.
struct Hyperplane {
    a: Vec<f64>,
    rhs: f64,
    pieces: Vec<usize>,
}

/// The floor takes piece index `pieces.len()`.
fn piece_values(h: &PiecewiseLinearConvex, x: &[f64]) -> Vec<f64> {
    h.pieces()
        .iter()
        .map(|p| p.value(x))
        .chain(std::iter::once(h.floor()))
        .collect()
}

fn active(h: &PiecewiseLinearConvex, x: &[f64], piece: usize) -> bool {
    let vals = piece_values(h, x);
    let top = h.value(x);
    vals[piece] >= top - 1e-9 * (1.0 + top.abs())
}

/// Vertices of the cells where each piece is active, by brute force over
/// `(d − 1)`-subsets of the arrangement hyperplanes.
fn arrangement_vertices(h: &PiecewiseLinearConvex) -> Vec<SimplexPoint> {
    let d = h.dim();
    let grad = |i: usize| -> (Vec<f64>, f64) {
        if i < h.pieces().len() {
            (h.pieces()[i].g.clone(), h.pieces()[i].b)
        } else {
            (vec![0.0; d], h.floor())
        }
    };
    let mut planes = Vec::new();
    for k in 0..d {
        let mut a = vec![0.0; d];
        a[k] = 1.0;
        planes.push(Hyperplane { a, rhs: 0.0, pieces: vec![] });
    }
    let np = h.pieces().len() + usize::from(h.floor().is_finite());
    for i in 0..np {
        for j in (i + 1)..np {
            let (gi, bi) = grad(i);
            let (gj, bj) = grad(j);
            let a: Vec<f64> = gi.iter().zip(&gj).map(|(x, y)| x - y).collect();
            if a.iter().all(|c| c.abs() < 1e-14) {
                continue;
            }
            planes.push(Hyperplane { a, rhs: bj - bi, pieces: vec![i, j] });
        }
    }

    let mut found: BTreeMap<Vec<i64>, SimplexPoint> = BTreeMap::new();
    let mut subset = Vec::with_capacity(d - 1);
    fn rec(
        start: usize,
        need: usize,
        planes: &[Hyperplane],
        subset: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if need == 0 {
            visit(subset);
            return;
        }
        for i in start..planes.len() {
            subset.push(i);
            rec(i + 1, need - 1, planes, subset, visit);
            subset.pop();
        }
    }
    let mut visit = |idx: &[usize]| {
        let mut m = DMatrix::<f64>::zeros(d, d);
        let mut rhs = DVector::<f64>::zeros(d);
        for (row, &p) in idx.iter().enumerate() {
            for k in 0..d {
                m[(row, k)] = planes[p].a[k];
            }
            rhs[row] = planes[p].rhs;
        }
        for k in 0..d {
            m[(d - 1, k)] = 1.0;
        }
        rhs[d - 1] = 1.0;
        let Some(x) = m.lu().solve(&rhs) else {
            return;
        };
        let mut x: Vec<f64> = x.iter().copied().collect();
        if x.iter().any(|c| !c.is_finite() || *c < -1e-10) {
            return;
        }
        for c in x.iter_mut() {
            if c.abs() < 1e-13 {
                *c = 0.0;
            }
        }
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|c| *c /= s);
        for &p in idx {
            if planes[p].pieces.iter().any(|&q| !active(h, &x, q)) {
                return;
            }
        }
        let key = x.iter().map(|c| (c * 1e9).round() as i64).collect();
        if let Ok(pt) = SimplexPoint::new(x) {
            found.entry(key).or_insert(pt);
        }
    };
    rec(0, d - 1, &planes, &mut subset, &mut visit);
    found.into_values().collect()
}

/// Builds a collection under which the piecewise-linear `H` is optimal,
/// with every structure at the common gain `ε`.
pub fn settle_plan(h: &PiecewiseLinearConvex) -> Result<SettlementPlan> {
    let deduped = h.dedup(1e-9);
    let h = &deduped;
    let d = h.dim();
    let verts = arrangement_vertices(h);
    let mut grid = default_grid(d);
    grid.extend(verts.iter().cloned());
    let check = necessary_check(h, &grid)?;
    if !check.passed {
        return Err(Error::InvalidArgument(format!(
            "rule fails the necessary condition: grid min {}, vertex values {:?}",
            check.grid_min, check.vertex_values
        )));
    }
    let hmin = verts
        .iter()
        .map(|x| h.value(x.coords()))
        .fold(f64::INFINITY, f64::min);
    let minimizers: Vec<&SimplexPoint> = verts
        .iter()
        .filter(|x| h.value(x.coords()) <= hmin + NECESSARY_TOL)
        .collect();
    let mut star = vec![0.0; d];
    for x in &minimizers {
        for k in 0..d {
            star[k] += x.coords()[k] / minimizers.len() as f64;
        }
    }
    let theta_star = SimplexPoint::new(star)?;
    if !theta_star.is_interior() || h.value(theta_star.coords()) > NECESSARY_TOL {
        return Err(Error::InvalidArgument("no interior minimum point found".into()));
    }

    let mut points: Vec<(SimplexPoint, PointRole)> = Vec::new();
    let np = h.pieces().len() + usize::from(h.floor().is_finite());
    for piece in 0..np {
        let face: Vec<&SimplexPoint> = verts.iter().filter(|x| active(h, x.coords(), piece)).collect();
        if face.is_empty() {
            continue;
        }
        let mut u = vec![0.0; d];
        for x in &face {
            for k in 0..d {
                u[k] += x.coords()[k] / face.len() as f64;
            }
        }
        // skip faces of lower dimension: some other piece ties at the centroid
        let vals = piece_values(h, &u);
        let top = vals[piece];
        let unique = vals
            .iter()
            .enumerate()
            .take(np)
            .all(|(q, v)| q == piece || *v < top - ACTIVE_TOL.max(1e-9));
        if unique {
            points.push((SimplexPoint::new(u)?, PointRole::FaceInterior));
        }
    }
    for x in &verts {
        let is_vertex = x.coords().iter().any(|&c| c == 1.0);
        let is_star = x.coords().iter().zip(theta_star.coords()).all(|(a, b)| (a - b).abs() < 1e-12);
        if !is_vertex && !is_star {
            points.push((x.clone(), PointRole::FaceVertex));
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no designated points".into()));
    }

    let mut cap = 1.0 - h.value(theta_star.coords());
    for (x, _) in &points {
        let hx = h.value(x.coords());
        cap = cap.min(1.0 - hx);
        if hx > NECESSARY_TOL {
            let (_, r, _) = decompose(x, &theta_star)?;
            cap = cap.min(1.0 - r * (1.0 - hx));
        }
    }
    let eps = 0.5 * cap;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("designated points leave no room for epsilon".into()));
    }

    let mut structures = vec![construct_x_star(&theta_star, eps)?];
    for (x, _) in &points {
        structures.extend(construct_x_up(h, x, eps)?);
        structures.extend(construct_x_lo(h, x, &theta_star, eps)?);
    }
    points.push((theta_star.clone(), PointRole::Minimum));
    Ok(SettlementPlan {
        target: h.clone(),
        theta_star,
        points,
        collection: Collection::new(structures, "settle_plan")?,
        eps,
    })
}

#[derive(Debug, Clone)]
pub struct RegionPlan {
    pub theta_star: SimplexPoint,
    /// Grid points with `δ < H(θ) < 1 − δ`.
    pub points: Vec<SimplexPoint>,
    pub collection: Collection,
    pub delta: f64,
}

/// Structures at gain `δ` for every grid point of the open region
/// `δ < H(θ) < 1 − δ`, plus `X*(θ*, δ)`.
pub fn settle_on_region<H: ConvexFunction + ?Sized>(
    h: &H,
    delta: f64,
    grid: &[SimplexPoint],
) -> Result<RegionPlan> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "delta {delta} leaves an empty region (need 0 < delta < 1/2)"
        )));
    }
    let check = necessary_check(h, grid)?;
    if !check.passed {
        return Err(Error::InvalidArgument(format!(
            "rule fails the necessary condition: grid min {}, vertex values {:?}",
            check.grid_min, check.vertex_values
        )));
    }
    let theta_star = check.grid_argmin.clone();
    let mut structures = vec![construct_x_star(&theta_star, delta)?];
    let mut points = Vec::new();
    for x in grid {
        let v = h.eval(x)?;
        if v > delta && v < 1.0 - delta {
            structures.extend(construct_x_up(h, x, delta)?);
            structures.extend(construct_x_lo(h, x, &theta_star, delta)?);
            points.push(x.clone());
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no grid point lies in the region".into()));
    }
    Ok(RegionPlan {
        theta_star,
        points,
        collection: Collection::new(structures, format!("settle_region(delta={delta})"))?,
        delta,
    })
}

/// The comparison of an LP re-solve against the target.
#[derive(Debug, Clone)]
pub struct SettlementCheck {
    pub lp_objective: f64,
    pub target_objective: f64,
    /// `(point, H(point), H_lp(point))`.
    pub rows: Vec<(SimplexPoint, f64, f64)>,
    pub max_deviation: f64,
}

impl SettlementCheck {
    /// `x0,…,x{d−1},H_target,H_lp,abs_diff` with LF line endings.
    pub fn to_csv(&self) -> String {
        let d = self.rows.first().map_or(0, |r| r.0.dim());
        let mut w = csv_writer(Vec::new());
        let mut header: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
        header.extend(["H_target", "H_lp", "abs_diff"].map(String::from));
        w.write_record(&header).expect("in-memory write");
        for (x, a, b) in &self.rows {
            let mut rec: Vec<String> = x.coords().iter().map(|&c| format_float(c)).collect();
            rec.extend([format_float(*a), format_float(*b), format_float((a - b).abs())]);
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Re-solves the LP on `collection` and compares the optimum with `h` at
/// the given points.
pub fn verify_settlement<H: ConvexFunction + ?Sized>(
    h: &H,
    collection: &Collection,
    points: &[SimplexPoint],
) -> Result<SettlementCheck> {
    let (lp_rule, opt, _) = optimal_rule(collection)?;
    let target_objective = objective(h, collection)?.objective;
    let rows: Vec<_> = points
        .iter()
        .map(|x| (x.clone(), h.value(x.coords()), lp_rule.value(x.coords())))
        .collect();
    let max_deviation = rows.iter().map(|r| (r.1 - r.2).abs()).fold(0.0, f64::max);
    Ok(SettlementCheck {
        lp_objective: opt,
        target_objective,
        rows,
        max_deviation,
    })
}

/// The convex function that agrees with `Q₂` for `x ≥ x_δ` and is affine
/// below, showing that collections with `Obj ≥ δ` need not settle `Q₂`
/// uniquely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticWitness {
    pub delta: f64,
    /// `x_δ = (1 − √(1 − δ))/2`.
    pub x_delta: f64,
    slope: f64,
}

impl QuadraticWitness {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
        }
        let root = (1.0 - delta).sqrt();
        Ok(Self {
            delta,
            x_delta: (1.0 - root) / 2.0,
            slope: -2.0 * delta / (1.0 - root),
        })
    }

    fn q2(x: f64) -> f64 {
        4.0 * (x - 0.5) * (x - 0.5)
    }
}

pub fn quadratic_unsettled_witness(delta: f64) -> Result<QuadraticWitness> {
    QuadraticWitness::new(delta)
}

impl ConvexFunction for QuadraticWitness {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let t = x[0];
        if t < self.x_delta {
            1.0 + self.slope * t
        } else {
            Self::q2(t)
        }
    }

    fn subgradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let t = x[0];
        let s = if t <= self.x_delta { self.slope } else { 8.0 * (t - 0.5) };
        Ok(vec![s, 0.0])
    }
}

/// `J_H(X)` for every structure of a collection, as a sanity check that a
/// plan has uniform gain.
pub fn gain_spread<H: ConvexFunction + ?Sized>(h: &H, c: &Collection) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in c.structures() {
        let j = info_gain(h, x)?;
        lo = lo.min(j);
        hi = hi.max(j);
    }
    Ok((lo, hi))
}

/// Mean of a structure minus the expected mean, in max norm.
pub fn mean_error(x: &InfoStructure, expected: &SimplexPoint) -> f64 {
    x.mean()
        .coords()
        .iter()
        .zip(expected.coords())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::ClosedFormRule;
    use approx::assert_abs_diff_eq;

    fn b(x: f64) -> SimplexPoint {
        SimplexPoint::binary(x).unwrap()
    }

    fn v_half() -> PiecewiseLinearConvex {
        ClosedFormRule::v_shape(0.5).unwrap().as_piecewise().unwrap().clone()
    }

    #[test]
    fn necessary_examples() {
        let grid = default_grid(3);
        assert!(necessary_check(&ClosedFormRule::quadratic(3), &grid).unwrap().passed);
        assert!(necessary_check(&ClosedFormRule::log(3), &grid).unwrap().passed);
        let half = crate::rules::AffineShift {
            inner: PiecewiseLinearConvex::new(
                3,
                vec![],
                0.0,
            )
            .unwrap(),
            slope: vec![0.0; 3],
            offset: 0.5,
        };
        assert!(!necessary_check(&half, &grid).unwrap().passed);
    }

    #[test]
    fn x_up_example() {
        let v = ClosedFormRule::v_shape(0.5).unwrap();
        let x = construct_x_up(&v, &b(0.25), 0.1).unwrap().unwrap();
        let probs: Vec<(f64, f64)> = x.atoms().iter().map(|a| (a.point.scalar(), a.prob)).collect();
        assert_eq!(probs.len(), 3);
        assert_abs_diff_eq!(probs[0].1, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(probs[1].1, 0.2 * 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(probs[2].1, 0.2 * 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(info_gain(&v, &x).unwrap(), 0.1, epsilon = 1e-12);
        assert!(mean_error(&x, &b(0.25)) <= 1e-12);
        assert!(construct_x_up(&v, &b(1.0), 0.1).unwrap().is_none());
        assert!(construct_x_up(&v, &b(0.25), 0.6).is_err());
    }

    #[test]
    fn x_lo_example() {
        let v = ClosedFormRule::v_shape(0.5).unwrap();
        let (j, r, beta) = decompose(&b(0.25), &b(0.5)).unwrap();
        assert_eq!(j, 1);
        assert_abs_diff_eq!(r, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta[0], 1.0 / 3.0, epsilon = 1e-15);
        let x = construct_x_lo(&v, &b(0.25), &b(0.5), 0.1).unwrap().unwrap();
        assert!(mean_error(&x, &b(0.5)) <= 1e-12);
        assert_abs_diff_eq!(info_gain(&v, &x).unwrap(), 0.1, epsilon = 1e-12);
        assert!(construct_x_lo(&v, &b(0.5), &b(0.5), 0.1).unwrap().is_none());
        let q = ClosedFormRule::quadratic(2);
        assert!(construct_x_lo(&q, &b(0.5), &b(0.5), 0.1).unwrap().is_none());
        assert!(decompose(&b(0.3), &b(0.3)).is_err());
    }

    #[test]
    fn x_star_example() {
        let x = construct_x_star(&b(0.5), 0.1).unwrap();
        let probs: Vec<(f64, f64)> = x.atoms().iter().map(|a| (a.point.scalar(), a.prob)).collect();
        assert_eq!(probs, vec![(0.5, 0.9), (1.0, 0.05), (0.0, 0.05)]);
        for h in [ClosedFormRule::quadratic(2), ClosedFormRule::log(2)] {
            let theta = b(0.3);
            let x = construct_x_star(&theta, 0.2).unwrap();
            let want = 0.2 * (1.0 - h.eval(&theta).unwrap());
            assert_abs_diff_eq!(info_gain(&h, &x).unwrap(), want, epsilon = 1e-12);
        }
        assert!(construct_x_star(&b(0.5), 0.0).is_err());
        assert!(construct_x_star(&b(0.0), 0.5).is_err());
    }

    #[test]
    fn v_shape_plan_points() {
        let plan = settle_plan(&v_half()).unwrap();
        let mut designated: Vec<f64> = plan
            .points
            .iter()
            .filter(|p| p.1 != PointRole::Minimum)
            .map(|p| p.0.scalar())
            .collect();
        designated.sort_by(f64::total_cmp);
        assert_eq!(designated, vec![0.25, 0.75]);
        assert_abs_diff_eq!(plan.theta_star.scalar(), 0.5, epsilon = 1e-12);
        assert_eq!(plan.collection.len(), 5);
        let (lo, hi) = gain_spread(&plan.target, &plan.collection).unwrap();
        assert_abs_diff_eq!(lo, plan.eps, epsilon = 1e-10);
        assert_abs_diff_eq!(hi, plan.eps, epsilon = 1e-10);
    }

    #[test]
    fn pyramid_plan_points() {
        let p = ClosedFormRule::pyramid(SimplexPoint::center(3)).unwrap();
        let plan = settle_plan(p.as_piecewise().unwrap()).unwrap();
        let interiors = plan.points.iter().filter(|p| p.1 == PointRole::FaceInterior).count();
        assert_eq!(interiors, 3);
        assert_abs_diff_eq!(plan.theta_star.coords()[0], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn settle_plan_rejects_bad_targets() {
        let half = PiecewiseLinearConvex::new(2, vec![], 0.5).unwrap();
        assert!(settle_plan(&half).is_err());
    }

    #[test]
    fn region_gains_are_delta() {
        let q = ClosedFormRule::quadratic(2);
        let grid: Vec<SimplexPoint> = (0..=20).map(|k| b(k as f64 / 20.0)).collect();
        let plan = settle_on_region(&q, 0.1, &grid).unwrap();
        for x in plan.collection.structures() {
            assert_abs_diff_eq!(info_gain(&q, x).unwrap(), 0.1, epsilon = 1e-10);
        }
        assert!(settle_on_region(&q, 0.5, &grid).is_err());
    }

    #[test]
    fn witness_shape() {
        let w = quadratic_unsettled_witness(0.5).unwrap();
        assert_abs_diff_eq!(w.x_delta, (1.0 - 0.5f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.x_delta, 0.14645, epsilon = 1e-5);
        assert_eq!(w.value(&[0.0, 1.0]), 1.0);
        let q = ClosedFormRule::quadratic(2);
        let at = [w.x_delta, 1.0 - w.x_delta];
        assert_abs_diff_eq!(w.value(&at), q.value(&at), epsilon = 1e-12);
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        for w3 in grid.windows(3) {
            let f = |t: f64| w.value(&[t, 1.0 - t]);
            assert!(f(w3[1]) <= 0.5 * (f(w3[0]) + f(w3[2])) + 1e-12);
        }
        for &t in &grid {
            assert!(w.value(&[t, 1.0 - t]) >= q.value(&[t, 1.0 - t]) - 1e-12);
        }
        assert!(quadratic_unsettled_witness(1.0).is_err());
    }
}
