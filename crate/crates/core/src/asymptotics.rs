//! Large-`n` behaviour of scaled worst-case gains.
//!
//! The sweeps stream over the Beta and Dirichlet lattices instead of building
//! the collections, so `N` in the thousands stays cheap.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gain::{csv_writer, format_float, jensen_gap};
use crate::geometry::{interior_lattice, tangent_directions, SimplexPoint};
use crate::info::{beta_atoms, beta_collection_static, ThetaLattice};
use crate::lp::{build_lp, extract_h, solve_lp, LpSolution};
use crate::rules::{ClosedFormKind, ClosedFormRule, ConvexFunction};

/// Scaled objectives along an increasing parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSweep {
    pub family: String,
    pub params: Vec<u64>,
    pub scaled: Vec<f64>,
    pub target: f64,
    /// Least-squares slope of `log |scaled − target|` against `log n`.
    pub rate: Option<f64>,
}

impl LimitSweep {
    fn new(family: impl Into<String>, params: Vec<u64>, scaled: Vec<f64>, target: f64) -> Self {
        let errs: Vec<f64> = scaled.iter().map(|s| (s - target).abs()).collect();
        let rate = fit_rate(&params, &errs);
        Self {
            family: family.into(),
            params,
            scaled,
            target,
            rate,
        }
    }

    pub fn abs_err(&self) -> Vec<f64> {
        self.scaled.iter().map(|s| (s - self.target).abs()).collect()
    }

    /// `n,scaled_obj,target,abs_err` with LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer(Vec::new());
        w.write_record(["n", "scaled_obj", "target", "abs_err"]).expect("in-memory write");
        for (n, s) in self.params.iter().zip(&self.scaled) {
            w.write_record([
                n.to_string(),
                format_float(*s),
                format_float(self.target),
                format_float((s - self.target).abs()),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Slope of the least-squares line through `(ln n, ln err)`, skipping zero
/// errors. `None` with fewer than two usable points.
pub fn fit_rate(params: &[u64], errs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = params
        .iter()
        .zip(errs)
        .filter(|(n, e)| **n > 0 && **e > 0.0 && e.is_finite())
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_grid(params: &[u64]) -> Result<()> {
    if params.is_empty() || params.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "parameter grid must be nonempty and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Limits of the scaled objectives for the built-in rules: `d/(d−1)` for the
/// two-point family under `Q`, and half the infimum of the curvature
/// operator over the open simplex for the Beta and Dirichlet families.
pub fn limit_target(rule: &ClosedFormRule, family: Family) -> f64 {
    let d = rule.dim() as f64;
    match (family, rule.kind()) {
        (Family::TwoPoint, ClosedFormKind::Quadratic) => d / (d - 1.0),
        (Family::TwoPoint, _) => f64::NAN,
        (_, ClosedFormKind::Log) => (d - 1.0) / (2.0 * d.ln()),
        // the curvature operators of Q and H_s vanish at the boundary
        (_, ClosedFormKind::Quadratic | ClosedFormKind::Spherical) => 0.0,
        (_, ClosedFormKind::Pyramid { .. }) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    TwoPoint,
    Beta,
    Dirichlet,
}

/// Grid and directions for the two-point surrogate of the vanishing
/// covariance family.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointConfig {
    /// Interior lattice points per axis.
    pub per_axis: usize,
    pub n_random_directions: usize,
    pub seed: u64,
}

impl Default for TwoPointConfig {
    fn default() -> Self {
        Self {
            per_axis: 25,
            n_random_directions: 64,
            seed: 20_240_601,
        }
    }
}

impl TwoPointConfig {
    pub fn grid(&self, d: usize) -> Vec<SimplexPoint> {
        interior_lattice(d, self.per_axis + 1)
    }

    pub fn directions(&self, d: usize) -> Vec<Vec<f64>> {
        tangent_directions(d, self.n_random_directions, self.seed)
    }
}

/// `min n²·J_H(x* ± v/n)` over the grid and directions; pairs whose atoms
/// leave the simplex are skipped.
pub fn two_point_scaled_min<H: ConvexFunction + ?Sized>(
    h: &H,
    n: u64,
    grid: &[SimplexPoint],
    directions: &[Vec<f64>],
) -> Result<(f64, usize)> {
    let d = h.dim();
    let step = 1.0 / n as f64;
    let scale = (n as f64) * (n as f64);
    let (best, skipped) = grid
        .par_iter()
        .map(|x| {
            let c = x.coords();
            let mut best = f64::INFINITY;
            let mut skipped = 0usize;
            let mut plus = vec![0.0; d];
            let mut minus = vec![0.0; d];
            for v in directions {
                for k in 0..d {
                    plus[k] = c[k] + step * v[k];
                    minus[k] = c[k] - step * v[k];
                }
                if plus.iter().chain(&minus).any(|&t| t < 0.0) {
                    skipped += 1;
                    continue;
                }
                let j = jensen_gap(h, &[(&plus, 0.5), (&minus, 0.5)], c);
                best = best.min(scale * j);
            }
            (best, skipped)
        })
        .reduce(|| (f64::INFINITY, 0), |a, b| (a.0.min(b.0), a.1 + b.1));
    if !best.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "every grid point is too close to the boundary for n = {n}"
        )));
    }
    Ok((best, skipped))
}

/// Two-point surrogate of `n²·Obj` over `{X : ‖Cov X‖ ≥ 1/n²}`. It bounds
/// the true objective from above.
pub fn quadratic_limit_sweep<H: ConvexFunction + ?Sized>(
    h: &H,
    n_values: &[u64],
    grid: &[SimplexPoint],
    directions: &[Vec<f64>],
    target: f64,
) -> Result<LimitSweep> {
    check_grid(n_values)?;
    if n_values[0] == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut scaled = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let (s, skipped) = two_point_scaled_min(h, n, grid, directions)?;
        if skipped > 0 {
            log::warn!("n = {n}: skipped {skipped} grid/direction pairs near the boundary");
        }
        scaled.push(s);
    }
    Ok(LimitSweep::new("two_point", n_values.to_vec(), scaled, target))
}

/// `δ_N = N^{−exponent}`.
pub fn guard(n_max: u64, exponent: f64) -> f64 {
    (n_max.max(1) as f64).powf(-exponent)
}

/// `J_H(X_θ^{(n)})` in the binary parametrization.
pub fn beta_gain<H: ConvexFunction + ?Sized>(h: &H, theta: f64, n: u64) -> f64 {
    let (hi, lo) = beta_atoms(theta, n);
    jensen_gap(
        h,
        &[(&[hi, 1.0 - hi], theta), (&[lo, 1.0 - lo], 1.0 - theta)],
        &[theta, 1.0 - theta],
    )
}

/// `min J_H(X_θ^{(n)})` over `n ≤ N` and `θ = k/(n+2)` with
/// `δ < θ < 1 − δ`, with the minimizing `(n, k)`.
pub fn beta_guarded_objective<H: ConvexFunction + ?Sized>(
    h: &H,
    n_max: u64,
    delta: f64,
) -> Result<(f64, (u64, u64))> {
    let best = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let den = (n + 2) as f64;
            let mut best = (f64::INFINITY, (n, 0));
            for k in 1..=n + 1 {
                let theta = k as f64 / den;
                if theta <= delta || theta >= 1.0 - delta {
                    continue;
                }
                let j = beta_gain(h, theta, n);
                if j < best.0 {
                    best = (j, (n, k));
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, (0, 0)),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    if !best.0.is_finite() {
        return Err(Error::EmptyCollection);
    }
    Ok(best)
}

/// `(N+3)²·Obj` over the guarded adaptive Beta lattice, `δ_N = N^{−exponent}`.
pub fn beta_limit_sweep<H: ConvexFunction + ?Sized>(
    h: &H,
    n_values: &[u64],
    delta_exponent: f64,
    target: f64,
) -> Result<LimitSweep> {
    check_grid(n_values)?;
    check_exponent(delta_exponent)?;
    let mut scaled = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let (obj, _) = beta_guarded_objective(h, n, guard(n, delta_exponent))?;
        let s = (n + 3) as f64;
        scaled.push(s * s * obj);
    }
    Ok(LimitSweep::new("beta", n_values.to_vec(), scaled, target))
}

fn check_exponent(e: f64) -> Result<()> {
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::InvalidArgument(format!("guard exponent {e} outside (0, 1)")));
    }
    Ok(())
}

/// Calls `f` with every composition of `total` into `parts` positive
/// integers, written into `buf[offset..]`.
fn for_each_positive(total: u64, parts: usize, buf: &mut [u64], offset: usize, f: &mut dyn FnMut(&[u64])) {
    if parts == 1 {
        if total >= 1 {
            buf[offset] = total;
            f(buf);
        }
        return;
    }
    if total < parts as u64 {
        return;
    }
    for c in 1..=(total - parts as u64 + 1) {
        buf[offset] = c;
        for_each_positive(total - c, parts - 1, buf, offset + 1, f);
    }
}

/// Values of `H` at the interior points `j/M` of one lattice, indexed by the
/// first `d − 1` counts in mixed radix `M + 1`.
struct LatticeTable {
    m: u64,
    d: usize,
    values: Vec<f64>,
}

/// Entries per table before the sweep falls back to direct evaluation.
const TABLE_CAP: usize = 1 << 23;

impl LatticeTable {
    fn size(m: u64, d: usize) -> Option<usize> {
        let base = (m + 1) as usize;
        let mut s = 1usize;
        for _ in 0..d - 1 {
            s = s.checked_mul(base)?;
        }
        (s <= TABLE_CAP).then_some(s)
    }

    fn index(&self, j: &[u64]) -> usize {
        let base = (self.m + 1) as usize;
        let mut idx = 0usize;
        for k in (0..self.d - 1).rev() {
            idx = idx * base + j[k] as usize;
        }
        idx
    }

    fn build<H: ConvexFunction + ?Sized>(h: &H, m: u64, d: usize) -> Option<Self> {
        let size = Self::size(m, d)?;
        let mut table = Self {
            m,
            d,
            values: vec![f64::NAN; size],
        };
        let inv = 1.0 / m as f64;
        let chunks: Vec<Vec<(usize, f64)>> = (1..m)
            .into_par_iter()
            .map(|j0| {
                let mut out = Vec::new();
                let mut buf = vec![0u64; d];
                buf[0] = j0;
                let mut x = vec![0.0; d];
                for_each_positive(m - j0, d - 1, &mut buf, 1, &mut |j| {
                    for k in 0..d {
                        x[k] = j[k] as f64 * inv;
                    }
                    out.push((table.index(j), h.value(&x)));
                });
                out
            })
            .collect();
        for entries in chunks {
            for (i, v) in entries {
                table.values[i] = v;
            }
        }
        Some(table)
    }

    fn get(&self, j: &[u64]) -> f64 {
        self.values[self.index(j)]
    }
}

/// `J_H` of the Dirichlet structure at prior `j/M` with `M = n + d`, using
/// tables at `M` and `M + 1` when available.
fn dirichlet_gain_lattice<H: ConvexFunction + ?Sized>(
    h: &H,
    j: &[u64],
    m: u64,
    tables: Option<(&LatticeTable, &LatticeTable)>,
    scratch: &mut Vec<u64>,
) -> f64 {
    let d = j.len();
    let inv_m = 1.0 / m as f64;
    match tables {
        Some((tm, tm1)) => {
            let mut total = 0.0;
            scratch.clear();
            scratch.extend_from_slice(j);
            for k in 0..d {
                scratch[k] += 1;
                total += j[k] as f64 * inv_m * tm1.get(scratch);
                scratch[k] -= 1;
            }
            total - tm.get(j)
        }
        None => {
            let inv_m1 = 1.0 / (m + 1) as f64;
            let mean: Vec<f64> = j.iter().map(|&c| c as f64 * inv_m).collect();
            let atoms: Vec<Vec<f64>> = (0..d)
                .map(|k| {
                    (0..d)
                        .map(|i| (j[i] + u64::from(i == k)) as f64 * inv_m1)
                        .collect()
                })
                .collect();
            let pts: Vec<(&[f64], f64)> = atoms.iter().zip(&mean).map(|(a, &p)| (a.as_slice(), p)).collect();
            jensen_gap(h, &pts, &mean)
        }
    }
}

/// `J_H` of the Dirichlet structure with an arbitrary interior prior.
fn dirichlet_gain_float<H: ConvexFunction + ?Sized>(h: &H, theta: &[f64], n: u64) -> f64 {
    let d = theta.len();
    let m = (n + d as u64) as f64;
    let atoms: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            (0..d)
                .map(|i| (m * theta[i] + f64::from(u8::from(i == k))) / (m + 1.0))
                .collect()
        })
        .collect();
    let pts: Vec<(&[f64], f64)> = atoms.iter().zip(theta).map(|(a, &p)| (a.as_slice(), p)).collect();
    jensen_gap(h, &pts, theta)
}

/// `min J_H` over the guarded Dirichlet collection with `n ≤ N`.
pub fn dirichlet_guarded_objective<H: ConvexFunction + ?Sized>(
    h: &H,
    n_max: u64,
    delta: f64,
    lattice: ThetaLattice,
) -> Result<f64> {
    let d = h.dim();
    if !(delta >= 0.0 && delta < 1.0 / d as f64) {
        return Err(Error::InvalidArgument(format!(
            "guard {delta} leaves no interior (need 0 <= delta < 1/{d})"
        )));
    }
    let mut best = f64::INFINITY;
    let mut next: Option<LatticeTable> = None;
    for n in 0..=n_max {
        let m = lattice.denominator(n, d);
        if m == 0 {
            return Err(Error::InvalidArgument("lattice step 1/0".into()));
        }
        let natural = lattice == ThetaLattice::Natural;
        let tables = if natural {
            let tm = match next.take() {
                Some(t) if t.m == m => Some(t),
                _ => LatticeTable::build(h, m, d),
            };
            let tm1 = LatticeTable::build(h, m + 1, d);
            match (tm, tm1) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            }
        } else {
            None
        };
        let threshold = delta * m as f64;
        let level = (1..m)
            .into_par_iter()
            .filter(|&j0| j0 as f64 > threshold)
            .map(|j0| {
                let mut best = f64::INFINITY;
                let mut buf = vec![0u64; d];
                buf[0] = j0;
                let mut scratch = Vec::with_capacity(d);
                let mut theta = vec![0.0; d];
                for_each_positive(m - j0, d - 1, &mut buf, 1, &mut |j| {
                    if j.iter().any(|&c| c as f64 <= threshold) {
                        return;
                    }
                    let g = if natural {
                        dirichlet_gain_lattice(
                            h,
                            j,
                            m,
                            tables.as_ref().map(|(a, b)| (a, b)),
                            &mut scratch,
                        )
                    } else {
                        for k in 0..d {
                            theta[k] = j[k] as f64 / m as f64;
                        }
                        dirichlet_gain_float(h, &theta, n)
                    };
                    best = best.min(g);
                });
                best
            })
            .reduce(|| f64::INFINITY, f64::min);
        best = best.min(level);
        if let Some((_, b)) = tables {
            next = Some(b);
        }
    }
    if !best.is_finite() {
        return Err(Error::EmptyCollection);
    }
    Ok(best)
}

/// `(N+d+1)²·Obj` over the guarded Dirichlet lattice.
pub fn dirichlet_limit_sweep<H: ConvexFunction + ?Sized>(
    h: &H,
    n_values: &[u64],
    delta_exponent: f64,
    lattice: ThetaLattice,
    target: f64,
) -> Result<LimitSweep> {
    check_grid(n_values)?;
    check_exponent(delta_exponent)?;
    let d = h.dim() as u64;
    let mut scaled = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let obj = dirichlet_guarded_objective(h, n, guard(n, delta_exponent), lattice)?;
        let s = (n + d + 1) as f64;
        scaled.push(s * s * obj);
    }
    Ok(LimitSweep::new("dirichlet", n_values.to_vec(), scaled, target))
}

/// Checks `J_H(X) ≥ J_H(μ + t(X − μ))/t` for each `t`.
pub fn scaling_check<H: ConvexFunction + ?Sized>(
    h: &H,
    x: &crate::info::InfoStructure,
    t_values: &[f64],
) -> Result<bool> {
    let j = crate::gain::info_gain(h, x)?;
    for &t in t_values {
        let js = crate::gain::info_gain(h, &x.scale(t)?)?;
        if j < js / t - 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Distance of the LP optimum for the static Beta collection from the log
/// rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub opt: f64,
    /// `max |H_N(θ) − H_ln(θ)|` outside the boundary band, over the support
    /// points or the supplied grid.
    pub deviation: f64,
    /// `|H_N(1/2)|`; both functions have their minimum there.
    pub center_deviation: f64,
    /// `max |H_N(θ) − H_N(1 − θ)|` over the same points.
    pub asymmetry: f64,
}

/// Averages an LP solution with its mirror image `x ↦ reverse(x)`. The
/// average is optimal whenever the collection is mirror-symmetric.
pub fn symmetrize(sol: &LpSolution) -> Result<LpSolution> {
    let mirror_of = |p: &SimplexPoint| -> Result<usize> {
        let m: Vec<f64> = p.coords().iter().rev().copied().collect();
        sol.points
            .iter()
            .position(|q| q.coords().iter().zip(&m).all(|(a, b)| (a - b).abs() <= 1e-12))
            .ok_or_else(|| Error::InvalidStructure(format!("no mirror image of {:?}", p.coords())))
    };
    let mut out = sol.clone();
    for (a, p) in sol.points.iter().enumerate() {
        let b = mirror_of(p)?;
        out.h[a] = 0.5 * (sol.h[a] + sol.h[b]);
        for (k, g) in out.g[a].iter_mut().enumerate() {
            *g = 0.5 * (sol.g[a][k] + sol.g[b][sol.g[b].len() - 1 - k]);
        }
    }
    Ok(out)
}

/// For each `N`, solves the static Beta program and measures how far the
/// optimum is from `H_ln` at least `1/(N+2)` from the endpoints. With no
/// grid the comparison uses the LP support points only.
pub fn lp_log_convergence(
    n_values: &[u64],
    grid: Option<&[f64]>,
    symmetrized: bool,
) -> Result<Vec<ConvergenceRow>> {
    check_grid(n_values)?;
    let log = ClosedFormRule::log(2);
    n_values
        .par_iter()
        .map(|&n| {
            let inst = build_lp(&beta_collection_static(n));
            let mut sol = solve_lp(&inst)?;
            if symmetrized {
                sol = symmetrize(&sol)?;
            }
            let h = extract_h(&sol)?;
            let band = 1.0 / (n + 2) as f64;
            let thetas: Vec<f64> = match grid {
                Some(g) => g.to_vec(),
                None => sol.points.iter().map(|p| p.scalar()).collect(),
            };
            let mut deviation: f64 = 0.0;
            let mut asymmetry: f64 = 0.0;
            for t in thetas {
                if t < band - 1e-15 || t > 1.0 - band + 1e-15 {
                    continue;
                }
                let v = h.value(&[t, 1.0 - t]);
                deviation = deviation.max((v - log.value(&[t, 1.0 - t])).abs());
                asymmetry = asymmetry.max((v - h.value(&[1.0 - t, t])).abs());
            }
            Ok(ConvergenceRow {
                n,
                opt: sol.objective,
                deviation,
                center_deviation: h.value(&[0.5, 0.5]).abs(),
                asymmetry,
            })
        })
        .collect()
}
