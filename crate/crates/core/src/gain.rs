//! Information gain `J_H(X) = E H(X) − H(E X)`, worst-case objectives over
//! collections, and the curvature operators that govern their asymptotics.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{compensated_sum, SimplexPoint};
use crate::info::{Collection, InfoStructure};
use crate::rules::{ClosedFormRule, ConvexFunction, PiecewiseLinearConvex};

/// Jensen gap of `H` over weighted points with the given mean.
///
/// Uses the function's stable Bregman form when it has one at `mean`, which
/// keeps the relative error small even when the gap is far below `H`'s scale.
pub fn jensen_gap<H: ConvexFunction + ?Sized>(h: &H, points: &[(&[f64], f64)], mean: &[f64]) -> f64 {
    if let Some(first) = points.first() {
        if h.bregman(mean, first.0).is_some() {
            let terms = points
                .iter()
                .map(|(x, p)| p * h.bregman(mean, x).expect("bregman available at mean"));
            return compensated_sum(terms);
        }
    }
    let terms = points
        .iter()
        .map(|(x, p)| p * h.value(x))
        .chain(std::iter::once(-h.value(mean)));
    compensated_sum(terms)
}

pub fn info_gain<H: ConvexFunction + ?Sized>(h: &H, x: &InfoStructure) -> Result<f64> {
    x.mean().check_dim(h.dim())?;
    let points: Vec<(&[f64], f64)> = x.atoms().iter().map(|a| (a.point.coords(), a.prob)).collect();
    Ok(jensen_gap(h, &points, x.mean().coords()))
}

/// Per-structure gains and their minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub gains: Vec<(String, f64)>,
    pub objective: f64,
    /// Index of the first structure attaining the minimum.
    pub argmin: usize,
}

impl GainReport {
    pub fn argmin_label(&self) -> &str {
        &self.gains[self.argmin].0
    }

    /// `label,J` with a header row and LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer(Vec::new());
        w.write_record(["label", "J"]).expect("in-memory write");
        for (label, j) in &self.gains {
            w.write_record([label.as_str(), &format_float(*j)]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// CSV writer with LF line endings.
/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`, and
/// no negative zero.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-5..1e16).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn csv_writer<W: std::io::Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

/// `Obj_C(H) = min_{X ∈ C} J_H(X)`. Structures are evaluated in parallel; the
/// result does not depend on the schedule.
pub fn objective<H: ConvexFunction + ?Sized>(h: &H, c: &Collection) -> Result<GainReport> {
    if c.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let gains: Vec<(String, f64)> = c
        .structures()
        .par_iter()
        .map(|x| Ok((x.label().to_string(), info_gain(h, x)?)))
        .collect::<Result<_>>()?;
    let mut argmin = 0;
    for (i, g) in gains.iter().enumerate() {
        if g.1 < gains[argmin].1 {
            argmin = i;
        }
    }
    Ok(GainReport {
        objective: gains[argmin].1,
        argmin,
        gains,
    })
}

/// `Obj(H)/Obj(H_ref)` on each collection.
pub fn relative_gain<H, R>(h: &H, h_ref: &R, collections: &[Collection]) -> Result<Vec<f64>>
where
    H: ConvexFunction + ?Sized,
    R: ConvexFunction + ?Sized,
{
    collections
        .iter()
        .map(|c| {
            let den = objective(h_ref, c)?.objective;
            if den <= 0.0 {
                return Err(Error::ZeroDenominator(den));
            }
            Ok(objective(h, c)?.objective / den)
        })
        .collect()
}

/// Functions with an analytic Hessian on the interior of the simplex.
pub trait Curvature {
    fn hessian_at(&self, x: &[f64]) -> Result<DMatrix<f64>>;
}

impl Curvature for ClosedFormRule {
    fn hessian_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        ClosedFormRule::hessian_at(self, x)
    }
}

impl Curvature for PiecewiseLinearConvex {
    /// Zero away from the kinks.
    fn hessian_at(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        Ok(DMatrix::zeros(d, d))
    }
}

pub fn hessian<H: Curvature + ConvexFunction>(h: &H, x: &SimplexPoint) -> Result<DMatrix<f64>> {
    x.check_dim(h.dim())?;
    h.hessian_at(x.coords())
}

fn quad_form(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += v[i] * m[(i, j)] * v[j];
        }
    }
    s
}

/// `x(1−x) h''(x)` in the binary parametrization.
pub fn d_beta<H: Curvature + ConvexFunction>(h: &H, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!("x = {x} is not in (0, 1)")));
    }
    let m = h.hessian_at(&[x, 1.0 - x])?;
    Ok(x * (1.0 - x) * quad_form(&m, &[1.0, -1.0]))
}

fn interior(x: &SimplexPoint) -> Result<()> {
    if !x.is_interior() {
        return Err(Error::InvalidArgument(format!("{:?} is on the boundary", x.coords())));
    }
    Ok(())
}

/// `Σ_k x_k (ê_k − x)ᵀ ∇²H(x) (ê_k − x)`.
pub fn d_dir<H: Curvature + ConvexFunction>(h: &H, x: &SimplexPoint) -> Result<f64> {
    x.check_dim(h.dim())?;
    interior(x)?;
    let m = h.hessian_at(x.coords())?;
    let c = x.coords();
    let terms = (0..c.len()).map(|k| {
        let u: Vec<f64> = (0..c.len())
            .map(|j| (j == k) as u8 as f64 - c[j])
            .collect();
        c[k] * quad_form(&m, &u)
    });
    Ok(compensated_sum(terms))
}

/// `Tr(A(x) ∇²H(x))` with `A(x) = diag(x) − x xᵀ`; equal to [`d_dir`].
pub fn d_dir_trace<H: Curvature + ConvexFunction>(h: &H, x: &SimplexPoint) -> Result<f64> {
    x.check_dim(h.dim())?;
    interior(x)?;
    let m = h.hessian_at(x.coords())?;
    let c = x.coords();
    let d = c.len();
    let a = DMatrix::from_fn(d, d, |i, j| if i == j { c[i] } else { 0.0 } - c[i] * c[j]);
    Ok((a * m).trace())
}

/// `min vᵀ∇²H(x)v` over grid points and unit tangent directions.
pub fn strong_convexity_modulus<H: Curvature + ConvexFunction>(
    h: &H,
    grid: &[SimplexPoint],
    directions: &[Vec<f64>],
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for x in grid {
        x.check_dim(h.dim())?;
        let m = h.hessian_at(x.coords())?;
        for v in directions {
            best = best.min(quad_form(&m, v));
        }
    }
    Ok(best)
}

/// Central-difference Hessian of `H` in ambient coordinates.
pub fn fd_hessian<H: ConvexFunction + ?Sized>(h: &H, x: &[f64], step: f64) -> DMatrix<f64> {
    let d = x.len();
    let f = |dx: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in dx {
            y[i] += s;
        }
        h.value(&y)
    };
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            (f(&[(i, step)]) - 2.0 * h.value(x) + f(&[(i, -step)])) / (step * step)
        } else {
            (f(&[(i, step), (j, step)]) - f(&[(i, step), (j, -step)]) - f(&[(i, -step), (j, step)])
                + f(&[(i, -step), (j, -step)]))
                / (4.0 * step * step)
        }
    })
}
