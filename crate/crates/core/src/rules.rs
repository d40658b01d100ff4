//! Bounded convex functions on the simplex and the Savage-form scoring rules
//! they induce.
//!
//! A proper scoring rule pays `PS(ω, x) = H(x) + ∂H(x)·(1_ω − x)` for a report
//! `x` when state `ω` realizes. Every built-in `H` is scaled so that
//! `H(c) = 0` at the barycenter and `H(ê_k) = 1` at the vertices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, SimplexPoint};

/// Subgradient coordinates below this make the log rule singular.
pub const LOG_BOUNDARY_GUARD: f64 = 1e-12;

/// Pieces within this of the maximum count as active at a kink.
pub const ACTIVE_TOL: f64 = 1e-12;

/// A convex function on `Δ_d`.
pub trait ConvexFunction: Send + Sync {
    fn dim(&self) -> usize;

    /// `H(x)` on raw coordinates. Callers guarantee `x` is a point of `Δ_d`.
    fn value(&self, x: &[f64]) -> f64;

    /// A subgradient at `x`, or a singularity error.
    fn subgradient_at(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `H(x) − H(b) − ∇H(b)·(x − b)` evaluated without cancellation, when
    /// the function has a closed form for it at `b`.
    fn bregman(&self, _base: &[f64], _x: &[f64]) -> Option<f64> {
        None
    }

    fn eval(&self, x: &SimplexPoint) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(self.value(x.coords()))
    }

    fn subgradient(&self, x: &SimplexPoint) -> Result<Vec<f64>> {
        x.check_dim(self.dim())?;
        self.subgradient_at(x.coords())
    }

    /// Binary parametrization: `H((x, 1 − x))`.
    fn eval_binary(&self, x: f64) -> Result<f64> {
        self.eval(&SimplexPoint::binary(x)?)
    }

    /// Binary parametrization: derivative of `x ↦ H((x, 1 − x))`.
    fn slope_binary(&self, x: f64) -> Result<f64> {
        let g = self.subgradient(&SimplexPoint::binary(x)?)?;
        Ok(g[0] - g[1])
    }
}

/// Savage score `PS(ω, x) = H(x) + ∂H(x)·(1_ω − x)` with a 0-based state
/// index. At the vertex `x = ê_ω` the subgradient term vanishes and is not
/// evaluated, so the log rule scores `H(ê_ω) = 1` there.
pub fn savage_score<H: ConvexFunction + ?Sized>(h: &H, state: usize, x: &SimplexPoint) -> Result<f64> {
    let d = h.dim();
    x.check_dim(d)?;
    if state >= d {
        return Err(Error::InvalidArgument(format!("state {state} outside 0..{d}")));
    }
    let hx = h.value(x.coords());
    if x.vertex_index() == Some(state) {
        return Ok(hx);
    }
    let g = h.subgradient_at(x.coords())?;
    let term: f64 = g
        .iter()
        .zip(x.coords())
        .enumerate()
        .map(|(k, (gk, xk))| gk * ((k == state) as u8 as f64 - xk))
        .sum();
    Ok(hx + term)
}

/// How a subgradient is chosen where `H` is not differentiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Gradient of the active affine piece with the lowest index.
    #[default]
    LowestIndex,
}

/// A convex function paired with its subgradient policy.
#[derive(Debug, Clone)]
pub struct ScoringRule<H> {
    pub convex: H,
    pub tie_break: TieBreak,
}

impl<H: ConvexFunction> ScoringRule<H> {
    pub fn new(convex: H) -> Self {
        Self {
            convex,
            tie_break: TieBreak::LowestIndex,
        }
    }

    pub fn score(&self, state: usize, report: &SimplexPoint) -> Result<f64> {
        savage_score(&self.convex, state, report)
    }

    /// `E_{W~belief}[PS(W, report)]`.
    pub fn expected_score(&self, belief: &SimplexPoint, report: &SimplexPoint) -> Result<f64> {
        belief.check_dim(self.convex.dim())?;
        let mut total = 0.0;
        for (w, &p) in belief.coords().iter().enumerate() {
            if p > 0.0 {
                total += p * self.score(w, report)?;
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub g: Vec<f64>,
    pub b: f64,
}

impl AffinePiece {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.b + dot(&self.g, x)
    }
}

/// `H(x) = max(max_α {b_α + g_α·x}, floor)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinearConvex {
    d: usize,
    pieces: Vec<AffinePiece>,
    floor: f64,
}

#[derive(Deserialize)]
struct RawPiecewise {
    d: usize,
    pieces: Vec<AffinePiece>,
    floor: f64,
}

impl<'de> Deserialize<'de> for PiecewiseLinearConvex {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPiecewise::deserialize(de)?;
        PiecewiseLinearConvex::new(raw.d, raw.pieces, raw.floor).map_err(serde::de::Error::custom)
    }
}

impl PiecewiseLinearConvex {
    pub fn new(d: usize, pieces: Vec<AffinePiece>, floor: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("dimension {d} < 2")));
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.g.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.g.len(),
                });
            }
            if !p.b.is_finite() || p.g.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!("piece {i} is not finite")));
            }
        }
        if floor.is_nan() || floor == f64::INFINITY {
            return Err(Error::InvalidArgument(format!("floor {floor}")));
        }
        Ok(Self { d, pieces, floor })
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    /// Drops pieces that agree with an earlier piece at every simplex vertex
    /// to within `tol`; two such pieces coincide on the whole simplex.
    pub fn dedup(&self, tol: f64) -> Self {
        let at_vertices = |p: &AffinePiece| -> Vec<f64> { p.g.iter().map(|g| g + p.b).collect() };
        let mut kept: Vec<(AffinePiece, Vec<f64>)> = Vec::new();
        for p in &self.pieces {
            let v = at_vertices(p);
            let seen = kept
                .iter()
                .any(|(_, w)| w.iter().zip(&v).all(|(a, b)| (a - b).abs() <= tol));
            if !seen {
                kept.push((p.clone(), v));
            }
        }
        Self {
            d: self.d,
            pieces: kept.into_iter().map(|k| k.0).collect(),
            floor: self.floor,
        }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    fn max_piece(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the lowest-index active piece, or `None` when the floor is
    /// strictly above every piece.
    pub fn active_piece(&self, x: &[f64]) -> Option<usize> {
        let best = self.max_piece(x);
        if self.floor > best + ACTIVE_TOL {
            return None;
        }
        let tol = ACTIVE_TOL * (1.0 + best.abs());
        self.pieces.iter().position(|p| p.value(x) >= best - tol)
    }

    /// `0 <= H <= 1` (within `tol`) on every grid point.
    pub fn is_bounded_on(&self, grid: &[SimplexPoint], tol: f64) -> bool {
        grid.iter().all(|x| {
            let v = self.value(x.coords());
            v >= -tol && v <= 1.0 + tol
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite floats serialize")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

impl ConvexFunction for PiecewiseLinearConvex {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.max_piece(x).max(self.floor)
    }

    fn subgradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self.active_piece(x) {
            Some(i) => self.pieces[i].g.clone(),
            None => vec![0.0; self.d],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedFormKind {
    Quadratic,
    Spherical,
    Log,
    Pyramid { mean: SimplexPoint },
}

/// The analytic rules, each scaled into `[0, 1]` with `H(ê_k) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormRule {
    kind: ClosedFormKind,
    d: usize,
    faces: Option<PiecewiseLinearConvex>,
}

impl ClosedFormRule {
    /// `Q(x) = d/(d−1) Σ_k (x_k − 1/d)²`.
    pub fn quadratic(d: usize) -> Self {
        Self::smooth(ClosedFormKind::Quadratic, d)
    }

    /// `H_s(x) = √d/(√d−1) ‖x‖ − 1/(√d−1)`.
    pub fn spherical(d: usize) -> Self {
        Self::smooth(ClosedFormKind::Spherical, d)
    }

    /// `H_ln(x) = Σ_k x_k ln x_k / ln d + 1`, with `0 ln 0 = 0`.
    pub fn log(d: usize) -> Self {
        Self::smooth(ClosedFormKind::Log, d)
    }

    fn smooth(kind: ClosedFormKind, d: usize) -> Self {
        assert!(d >= 2, "closed-form rules need d >= 2");
        Self {
            kind,
            d,
            faces: None,
        }
    }

    /// The upside-down pyramid: 0 at `mean`, 1 at every vertex, affine on
    /// each sub-simplex `conv(mean, {ê_j}_{j≠k})`.
    ///
    /// Face `k` is the linear form `Σ_j a_j x_j` with `a_j = 1` for `j ≠ k`
    /// and `a_k = −(1 − μ_k)/μ_k`, which vanishes at `μ`.
    pub fn pyramid(mean: SimplexPoint) -> Result<Self> {
        if !mean.is_interior() {
            return Err(Error::InvalidArgument(
                "pyramid mean must be strictly interior".into(),
            ));
        }
        let d = mean.dim();
        let pieces = (0..d)
            .map(|k| {
                let mu = mean.coords()[k];
                let g = (0..d)
                    .map(|j| if j == k { -(1.0 - mu) / mu } else { 1.0 })
                    .collect();
                AffinePiece { g, b: 0.0 }
            })
            .collect();
        let faces = PiecewiseLinearConvex::new(d, pieces, 0.0)?;
        Ok(Self {
            kind: ClosedFormKind::Pyramid { mean },
            d,
            faces: Some(faces),
        })
    }

    /// The binary v-shape with minimum at `mean ∈ (0, 1)`.
    pub fn v_shape(mean: f64) -> Result<Self> {
        Self::pyramid(SimplexPoint::binary(mean)?)
    }

    pub fn kind(&self) -> &ClosedFormKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ClosedFormKind::Quadratic => "quadratic",
            ClosedFormKind::Spherical => "spherical",
            ClosedFormKind::Log => "log",
            ClosedFormKind::Pyramid { .. } => "pyramid",
        }
    }

    /// Builds `quadratic`, `spherical` or `log` by name.
    pub fn by_name(name: &str, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("dimension {d} < 2")));
        }
        match name {
            "quadratic" => Ok(Self::quadratic(d)),
            "spherical" => Ok(Self::spherical(d)),
            "log" => Ok(Self::log(d)),
            other => Err(Error::InvalidArgument(format!("unknown rule {other:?}"))),
        }
    }

    /// The piecewise-linear representation of a pyramid.
    pub fn as_piecewise(&self) -> Option<&PiecewiseLinearConvex> {
        self.faces.as_ref()
    }

    fn spherical_scale(&self) -> f64 {
        let r = (self.d as f64).sqrt();
        r / (r - 1.0)
    }

    fn check_log_interior(&self, x: &[f64]) -> Result<()> {
        if let Some(c) = x.iter().find(|&&c| c < LOG_BOUNDARY_GUARD) {
            return Err(Error::Singularity(format!(
                "log rule is not differentiable at the boundary (coordinate {c})"
            )));
        }
        Ok(())
    }

    /// Analytic Hessian in ambient coordinates. Piecewise-linear kinds return
    /// the zero matrix (their Hessian almost everywhere).
    pub fn hessian_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.d;
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
        Ok(match &self.kind {
            ClosedFormKind::Quadratic => {
                DMatrix::identity(d, d) * (2.0 * d as f64 / (d as f64 - 1.0))
            }
            ClosedFormKind::Spherical => {
                let n = dot(x, x).sqrt();
                let s = self.spherical_scale();
                DMatrix::from_fn(d, d, |i, j| {
                    let id = if i == j { 1.0 / n } else { 0.0 };
                    s * (id - x[i] * x[j] / (n * n * n))
                })
            }
            ClosedFormKind::Log => {
                self.check_log_interior(x)?;
                let ln_d = (d as f64).ln();
                DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 / (x[i] * ln_d) } else { 0.0 })
            }
            ClosedFormKind::Pyramid { .. } => DMatrix::zeros(d, d),
        })
    }

    pub fn hessian(&self, x: &SimplexPoint) -> Result<DMatrix<f64>> {
        x.check_dim(self.d)?;
        self.hessian_at(x.coords())
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

impl ConvexFunction for ClosedFormRule {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = self.d as f64;
        match &self.kind {
            ClosedFormKind::Quadratic => {
                let c = 1.0 / d;
                d / (d - 1.0) * x.iter().map(|&v| (v - c) * (v - c)).sum::<f64>()
            }
            ClosedFormKind::Spherical => {
                let r = d.sqrt();
                self.spherical_scale() * dot(x, x).sqrt() - 1.0 / (r - 1.0)
            }
            ClosedFormKind::Log => x.iter().map(|&v| xlogx(v)).sum::<f64>() / d.ln() + 1.0,
            ClosedFormKind::Pyramid { .. } => self.faces.as_ref().expect("pyramid faces").value(x),
        }
    }

    fn subgradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.d as f64;
        match &self.kind {
            ClosedFormKind::Quadratic => {
                let k = 2.0 * d / (d - 1.0);
                Ok(x.iter().map(|&v| k * (v - 1.0 / d)).collect())
            }
            ClosedFormKind::Spherical => {
                let n = dot(x, x).sqrt();
                let s = self.spherical_scale();
                Ok(x.iter().map(|&v| s * v / n).collect())
            }
            ClosedFormKind::Log => {
                self.check_log_interior(x)?;
                let ln_d = d.ln();
                Ok(x.iter().map(|&v| (v.ln() + 1.0) / ln_d).collect())
            }
            ClosedFormKind::Pyramid { .. } => {
                self.faces.as_ref().expect("pyramid faces").subgradient_at(x)
            }
        }
    }

    fn bregman(&self, base: &[f64], x: &[f64]) -> Option<f64> {
        let d = self.d as f64;
        match &self.kind {
            ClosedFormKind::Quadratic => Some(
                d / (d - 1.0)
                    * x.iter()
                        .zip(base)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>(),
            ),
            ClosedFormKind::Spherical => {
                // ‖x‖‖b‖ − x·b via the Lagrange identity
                let nx = dot(x, x).sqrt();
                let nb = dot(base, base).sqrt();
                let mut cross = 0.0;
                for i in 0..x.len() {
                    for j in (i + 1)..x.len() {
                        let w = x[i] * base[j] - x[j] * base[i];
                        cross += w * w;
                    }
                }
                Some(self.spherical_scale() * cross / (nb * (nx * nb + dot(x, base))))
            }
            ClosedFormKind::Log => {
                if base.iter().any(|&b| b < LOG_BOUNDARY_GUARD) {
                    return None;
                }
                let mut total = 0.0;
                for (&a, &b) in x.iter().zip(base) {
                    total += if a == 0.0 {
                        b
                    } else {
                        let r = (a - b) / b;
                        b * ((1.0 + r) * r.ln_1p() - r)
                    };
                }
                Some(total / d.ln())
            }
            ClosedFormKind::Pyramid { .. } => None,
        }
    }
}

/// Any rule the CLI can load: a closed form or a piecewise-linear function.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    ClosedForm(ClosedFormRule),
    Piecewise(PiecewiseLinearConvex),
}

impl ConvexFunction for Rule {
    fn dim(&self) -> usize {
        match self {
            Rule::ClosedForm(r) => r.dim(),
            Rule::Piecewise(r) => r.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Rule::ClosedForm(r) => r.value(x),
            Rule::Piecewise(r) => r.value(x),
        }
    }

    fn subgradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Rule::ClosedForm(r) => r.subgradient_at(x),
            Rule::Piecewise(r) => r.subgradient_at(x),
        }
    }

    fn bregman(&self, base: &[f64], x: &[f64]) -> Option<f64> {
        match self {
            Rule::ClosedForm(r) => r.bregman(base, x),
            Rule::Piecewise(r) => r.bregman(base, x),
        }
    }
}

/// `H + a·x + b`, used to check that gains ignore affine terms.
#[derive(Debug, Clone)]
pub struct AffineShift<H> {
    pub inner: H,
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl<H: ConvexFunction> ConvexFunction for AffineShift<H> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) + dot(&self.slope, x) + self.offset
    }

    fn subgradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.inner.subgradient_at(x)?;
        for (gk, ak) in g.iter_mut().zip(&self.slope) {
            *gk += ak;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_points, simplex_lattice};
    use approx::assert_abs_diff_eq;

    fn builtins(d: usize) -> Vec<ClosedFormRule> {
        vec![
            ClosedFormRule::quadratic(d),
            ClosedFormRule::spherical(d),
            ClosedFormRule::log(d),
        ]
    }

    #[test]
    fn eval_examples() {
        let q = ClosedFormRule::quadratic(2);
        assert_eq!(q.eval_binary(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(q.eval_binary(0.75).unwrap(), 0.25, epsilon = 1e-15);
        let l = ClosedFormRule::log(2);
        assert_eq!(l.eval(&SimplexPoint::vertex(2, 0)).unwrap(), 1.0);
        let err = q.eval(&SimplexPoint::center(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn normalization() {
        for d in [2, 3, 5] {
            for r in builtins(d) {
                assert_abs_diff_eq!(r.eval(&SimplexPoint::center(d)).unwrap(), 0.0, epsilon = 1e-12);
                for k in 0..d {
                    assert_abs_diff_eq!(
                        r.eval(&SimplexPoint::vertex(d, k)).unwrap(),
                        1.0,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn boundedness_on_random_grid() {
        for d in [2, 3, 5] {
            let grid = random_points(d, 1000, 11);
            let mut rules: Vec<ClosedFormRule> = builtins(d);
            rules.push(ClosedFormRule::pyramid(SimplexPoint::center(d)).unwrap());
            for r in &rules {
                for x in &grid {
                    let v = r.eval(x).unwrap();
                    assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{} {v}", r.name());
                }
            }
        }
    }

    #[test]
    fn subgradient_examples() {
        let q = ClosedFormRule::quadratic(2);
        let g = q.subgradient(&SimplexPoint::center(2)).unwrap();
        assert_abs_diff_eq!(g[0] - g[1], 0.0, epsilon = 1e-15);

        let v = ClosedFormRule::v_shape(0.5).unwrap();
        assert_abs_diff_eq!(v.slope_binary(0.25).unwrap(), -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.slope_binary(0.75).unwrap(), 2.0, epsilon = 1e-12);
        // kink: lowest-index piece wins
        assert_abs_diff_eq!(v.slope_binary(0.5).unwrap(), -2.0, epsilon = 1e-12);

        let l = ClosedFormRule::log(2);
        let g = l.subgradient(&SimplexPoint::center(2)).unwrap();
        assert_abs_diff_eq!(g[0] - g[1], 0.0, epsilon = 1e-15);
        assert!(matches!(
            l.subgradient(&SimplexPoint::binary(0.0).unwrap()),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn savage_examples() {
        let q = ClosedFormRule::quadratic(2);
        let half = SimplexPoint::binary(0.5).unwrap();
        assert_abs_diff_eq!(savage_score(&q, 0, &half).unwrap(), 0.0, epsilon = 1e-15);
        let one = SimplexPoint::binary(1.0).unwrap();
        assert_abs_diff_eq!(savage_score(&q, 0, &one).unwrap(), 1.0, epsilon = 1e-15);
        // binary form: PS(0, x) = H(x) − H'(x)·x
        assert_abs_diff_eq!(savage_score(&q, 1, &one).unwrap(), 1.0 - 4.0, epsilon = 1e-12);

        let l = ClosedFormRule::log(2);
        assert_eq!(savage_score(&l, 0, &one).unwrap(), 1.0);
        assert!(savage_score(&l, 1, &one).is_err());
        assert!(savage_score(&l, 2, &half).is_err());
    }

    #[test]
    fn savage_identity_on_grid() {
        for d in [2, 3] {
            let grid = simplex_lattice(d, 9);
            let mut rules: Vec<Rule> = builtins(d).into_iter().map(Rule::ClosedForm).collect();
            rules.push(Rule::ClosedForm(
                ClosedFormRule::pyramid(SimplexPoint::center(d)).unwrap(),
            ));
            for r in &rules {
                let sr = ScoringRule::new(r.clone());
                for x in &grid {
                    let Ok(e) = sr.expected_score(x, x) else {
                        continue; // log subgradient at boundary
                    };
                    assert_abs_diff_eq!(e, r.eval(x).unwrap(), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn pyramid_examples() {
        let v = ClosedFormRule::v_shape(0.5).unwrap();
        for (x, want) in [(0.0, 1.0), (0.5, 0.0), (1.0, 1.0), (0.25, 0.5)] {
            assert_abs_diff_eq!(v.eval_binary(x).unwrap(), want, epsilon = 1e-12);
        }
        let v = ClosedFormRule::v_shape(0.2).unwrap();
        assert_abs_diff_eq!(v.eval_binary(0.6).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v.eval_binary(0.1).unwrap(), 0.5, epsilon = 1e-12);

        let p = ClosedFormRule::pyramid(SimplexPoint::center(3)).unwrap();
        let mid = SimplexPoint::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(p.eval(&mid).unwrap(), 1.0, epsilon = 1e-12);

        assert!(ClosedFormRule::pyramid(SimplexPoint::vertex(3, 0)).is_err());
        assert!(ClosedFormRule::v_shape(0.0).is_err());
    }

    #[test]
    fn pyramid_matches_barycentric_interpolation() {
        // On conv(μ, ê_i, ê_j) write x = λ0 μ + λi ê_i + λj ê_j; the pyramid is λi + λj.
        let mu = SimplexPoint::new(vec![0.2, 0.5, 0.3]).unwrap();
        let p = ClosedFormRule::pyramid(mu.clone()).unwrap();
        for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            for l0 in [0.1, 0.4, 0.9] {
                for s in [0.0, 0.3, 1.0] {
                    let li = (1.0 - l0) * s;
                    let lj = (1.0 - l0) * (1.0 - s);
                    let mut x = vec![0.0; 3];
                    for m in 0..3 {
                        x[m] = l0 * mu.coords()[m];
                    }
                    x[i] += li;
                    x[j] += lj;
                    let _ = k;
                    assert_abs_diff_eq!(p.value(&x), li + lj, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn pyramid_dominates_normalized_rules() {
        // H'(x) − H'(μ) <= pyramid(x) − pyramid(μ) for bounded H'
        let d = 3;
        let mu = SimplexPoint::new(vec![0.3, 0.3, 0.4]).unwrap();
        let p = ClosedFormRule::pyramid(mu.clone()).unwrap();
        for r in builtins(d) {
            let h0 = r.eval(&mu).unwrap();
            for x in simplex_lattice(d, 20) {
                let lhs = r.eval(&x).unwrap() - h0;
                let rhs = p.eval(&x).unwrap();
                assert!(lhs <= rhs + 1e-12, "{} at {:?}", r.name(), x.coords());
            }
        }
    }

    #[test]
    fn bregman_matches_direct_difference() {
        let base = [0.3, 0.5, 0.2];
        let x = [0.1, 0.6, 0.3];
        for r in builtins(3) {
            let g = r.subgradient_at(&base).unwrap();
            let direct = r.value(&x)
                - r.value(&base)
                - g.iter().zip(x.iter().zip(&base)).map(|(g, (a, b))| g * (a - b)).sum::<f64>();
            assert_abs_diff_eq!(r.bregman(&base, &x).unwrap(), direct, epsilon = 1e-13);
        }
        let l = ClosedFormRule::log(3);
        assert!(l.bregman(&[0.0, 0.5, 0.5], &x).is_none());
        assert_abs_diff_eq!(
            l.bregman(&base, &[0.0, 0.8, 0.2]).unwrap(),
            l.value(&[0.0, 0.8, 0.2]) - l.value(&base)
                - l.subgradient_at(&base).unwrap().iter().zip([-0.3, 0.3, 0.0]).map(|(a, b)| a * b).sum::<f64>(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn piecewise_json_round_trip() {
        let p = PiecewiseLinearConvex::new(
            2,
            vec![
                AffinePiece { g: vec![0.1 + 0.2, -1.0 / 3.0], b: 1e-17 },
                AffinePiece { g: vec![std::f64::consts::PI, 0.0], b: -0.25 },
            ],
            0.125,
        )
        .unwrap();
        let back = PiecewiseLinearConvex::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
        assert!(PiecewiseLinearConvex::from_json(r#"{"d":2,"pieces":[{"g":[1.0],"b":0}],"floor":0}"#).is_err());
    }

    #[test]
    fn floor_and_ties() {
        let p = PiecewiseLinearConvex::new(
            2,
            vec![
                AffinePiece { g: vec![1.0, 0.0], b: 0.0 },
                AffinePiece { g: vec![0.0, 1.0], b: 0.0 },
            ],
            0.8,
        )
        .unwrap();
        let mid = [0.5, 0.5];
        assert_eq!(p.value(&mid), 0.8);
        assert_eq!(p.subgradient_at(&mid).unwrap(), vec![0.0, 0.0]);
        let x = [0.9, 0.1];
        assert_eq!(p.active_piece(&x), Some(0));
    }
}
