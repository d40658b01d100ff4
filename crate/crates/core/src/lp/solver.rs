//! Dense primal simplex for `max cᵀx  s.t.  Ax ≤ b`, with free and
//! nonnegative variables.
//!
//! The tableau is kept in condensed form: one row per basic variable and one
//! column per nonbasic variable. Slacks are implicit. Free variables may enter
//! in either direction and never leave the basis once they are in it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub n: usize,
    pub rows: Vec<SparseRow>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub free: Vec<bool>,
}

impl LinearProgram {
    pub fn new(n: usize, c: Vec<f64>, free: Vec<bool>) -> Self {
        assert_eq!(c.len(), n);
        assert_eq!(free.len(), n);
        Self {
            n,
            rows: Vec::new(),
            b: Vec::new(),
            c,
            free,
        }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Adds `row·x ≤ rhs`, merging repeated columns and dropping zeros.
    pub fn push_row(&mut self, mut row: SparseRow, rhs: f64) {
        row.sort_by_key(|e| e.0);
        let mut merged: SparseRow = Vec::with_capacity(row.len());
        for (j, a) in row {
            assert!(j < self.n, "column {j} out of range");
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.rows.push(merged);
        self.b.push(rhs);
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(j, a) in &self.rows[i] {
            out[j] = a;
        }
        out
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pricing {
    /// Smallest eligible index enters; smallest index leaves on ties.
    Bland,
    /// Largest reduced cost enters, switching to Bland's rule during runs
    /// of degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub pricing: Pricing,
    /// Rebuild the tableau from the original data every this many pivots.
    pub refactor_interval: usize,
    pub max_pivots: usize,
    /// Degenerate pivots in a row before Dantzig pricing hands over to Bland.
    pub degenerate_streak: usize,
    pub pivot_tol: f64,
    pub optimality_tol: f64,
    /// Scale of the right-hand side relaxation used against degeneracy; the
    /// original right-hand side is restored before returning. Zero disables.
    pub perturbation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pricing: Pricing::Bland,
            refactor_interval: 50,
            max_pivots: 2_000_000,
            degenerate_streak: 50,
            pivot_tol: 1e-7,
            optimality_tol: 1e-9,
            perturbation: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

/// Residuals of a primal/dual pair, computed from the original data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Certificate {
    /// `max(Ax − b)⁺`, together with `max(−x)⁺` over nonnegative variables.
    pub primal_residual: f64,
    /// `max |Aᵀy − c|` over free variables, `max(c − Aᵀy)⁺` over nonnegative
    /// ones, and `max(−y)⁺`.
    pub dual_residual: f64,
    /// `|cᵀx − bᵀy|`.
    pub gap: f64,
}

impl Certificate {
    pub fn check(&self, objective: f64, feas_tol: f64, gap_tol: f64) -> bool {
        self.primal_residual <= feas_tol
            && self.dual_residual <= feas_tol
            && self.gap <= gap_tol * (1.0 + objective.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row duals, nonnegative at optimality.
    pub y: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
    pub refactors: usize,
    pub certificate: Certificate,
}

/// Primal feasibility slack allowed by the Harris ratio test.
const HARRIS_TOL: f64 = 1e-9;
/// Basic values below `-CLEANUP_TOL` are repaired after unperturbing.
const CLEANUP_TOL: f64 = 1e-11;

struct Tableau<'a> {
    lp: &'a LinearProgram,
    m: usize,
    ncol: usize,
    /// Row-major `m × ncol`: `x_row[i] = beta[i] + Σ_j t[i][j]·u_j`.
    t: Vec<f64>,
    beta: Vec<f64>,
    /// `z = z0 + Σ_j d[j]·u_j`.
    d: Vec<f64>,
    z0: f64,
    /// Variable ids: structurals `0..n`, slack of row `r` is `n + r`.
    row_var: Vec<usize>,
    col_var: Vec<usize>,
    /// `u_j = col_sign[j]·x_{col_var[j]}`; basic rows store `row_sign·x`.
    col_sign: Vec<f64>,
    row_sign: Vec<f64>,
    pivots: usize,
    refactors: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Pivoted,
}

impl<'a> Tableau<'a> {
    /// Slack basis: `s = b − Ax`.
    fn slack_basis(lp: &'a LinearProgram) -> Self {
        let (m, n) = (lp.m(), lp.n);
        let mut t = vec![0.0; m * n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in row {
                t[i * n + j] = -a;
            }
        }
        Self {
            lp,
            m,
            ncol: n,
            t,
            beta: lp.b.clone(),
            d: lp.c.clone(),
            z0: 0.0,
            row_var: (0..m).map(|r| n + r).collect(),
            col_var: (0..n).collect(),
            col_sign: vec![1.0; n],
            row_sign: vec![1.0; m],
            pivots: 0,
            refactors: 0,
        }
    }

    fn is_free(&self, var: usize) -> bool {
        var < self.lp.n && self.lp.free[var]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.ncol..(i + 1) * self.ncol]
    }

    /// Basis change: `col_var[j]` enters in row `r`.
    fn pivot(&mut self, r: usize, j: usize) {
        let ncol = self.ncol;
        let p = self.t[r * ncol + j];
        debug_assert!(p != 0.0);
        // Solve row r for u_j; the leaving variable takes column j.
        let mut new_row: Vec<f64> = self.row(r).iter().map(|a| -a / p).collect();
        new_row[j] = 1.0 / p;
        let new_beta = -self.beta[r] / p;
        let nz: Vec<usize> = (0..ncol).filter(|&k| new_row[k] != 0.0).collect();

        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * ncol + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * ncol..(i + 1) * ncol];
            row[j] = 0.0;
            for &k in &nz {
                row[k] += f * new_row[k];
            }
            self.beta[i] += f * new_beta;
        }
        let f = self.d[j];
        if f != 0.0 {
            self.d[j] = 0.0;
            for &k in &nz {
                self.d[k] += f * new_row[k];
            }
            self.z0 += f * new_beta;
        }
        self.t[r * ncol..(r + 1) * ncol].copy_from_slice(&new_row);
        self.beta[r] = new_beta;

        let leaving = self.row_var[r];
        let leaving_sign = self.row_sign[r];
        self.row_var[r] = self.col_var[j];
        self.row_sign[r] = self.col_sign[j];
        self.col_var[j] = leaving;
        self.col_sign[j] = leaving_sign;
        self.pivots += 1;
    }

    fn negate_column(&mut self, j: usize) {
        let ncol = self.ncol;
        for i in 0..self.m {
            self.t[i * ncol + j] = -self.t[i * ncol + j];
        }
        self.d[j] = -self.d[j];
        self.col_sign[j] = -self.col_sign[j];
    }

    /// Columns whose increase improves the objective, with their sign flip.
    fn eligible(&self, j: usize, tol: f64) -> Option<bool> {
        let dj = self.d[j];
        if dj > tol {
            Some(false)
        } else if dj < -tol && self.is_free(self.col_var[j]) {
            Some(true)
        } else {
            None
        }
    }

    fn choose_entering(&self, bland: bool, tol: f64) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        for j in 0..self.ncol {
            let Some(flip) = self.eligible(j, tol) else {
                continue;
            };
            best = match best {
                None => Some((j, flip)),
                Some((k, f)) => {
                    let better = if bland {
                        self.col_var[j] < self.col_var[k]
                    } else {
                        self.d[j].abs() > self.d[k].abs()
                    };
                    if better {
                        Some((j, flip))
                    } else {
                        Some((k, f))
                    }
                }
            };
        }
        best
    }

    /// Leaving row for entering column `j`. Bland mode takes the exact
    /// minimum ratio with ties to the smallest basic variable id; otherwise a
    /// two-pass Harris test picks the largest pivot among rows within
    /// `HARRIS_TOL` of the minimum.
    fn choose_leaving(&self, j: usize, tol: f64, bland: bool) -> Option<(usize, f64)> {
        let candidates = || {
            (0..self.m).filter_map(move |i| {
                let a = self.t[i * self.ncol + j];
                (a < -tol && !self.is_free(self.row_var[i])).then_some((i, -a))
            })
        };
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for (i, a) in candidates() {
                let ratio = self.beta[i].max(0.0) / a;
                best = match best {
                    Some((k, rk))
                        if rk < ratio || (rk == ratio && self.row_var[k] < self.row_var[i]) =>
                    {
                        Some((k, rk))
                    }
                    _ => Some((i, ratio)),
                };
            }
            return best;
        }
        let bound = candidates()
            .map(|(i, a)| (self.beta[i].max(0.0) + HARRIS_TOL) / a)
            .fold(f64::INFINITY, f64::min);
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, a) in candidates() {
            let ratio = self.beta[i].max(0.0) / a;
            if ratio > bound {
                continue;
            }
            best = match best {
                Some((k, rk, ak)) if ak > a || (ak == a && self.row_var[k] < self.row_var[i]) => {
                    Some((k, rk, ak))
                }
                _ => Some((i, ratio, a)),
            };
        }
        best.map(|(i, r, _)| (i, r))
    }

    fn step(&mut self, bland: bool, opts: &SolverOptions) -> (Step, bool) {
        let Some((j, flip)) = self.choose_entering(bland, opts.optimality_tol) else {
            return (Step::Optimal, false);
        };
        if flip {
            self.negate_column(j);
        }
        let Some((r, ratio)) = self.choose_leaving(j, opts.pivot_tol, bland) else {
            return (Step::Unbounded, false);
        };
        self.pivot(r, j);
        (Step::Pivoted, ratio == 0.0)
    }

    /// Pivots every nonbasic free variable into the basis, keeping the basis
    /// feasible. Free variables never leave, so the main loop afterwards only
    /// exchanges slacks; doing this first with the largest admissible pivot
    /// avoids long degenerate runs through badly conditioned bases.
    fn crash_free(&mut self, opts: &SolverOptions) -> usize {
        let mut count = 0;
        for var in 0..self.lp.n {
            if !self.lp.free[var] {
                continue;
            }
            let Some(j) = self.col_var.iter().position(|&v| v == var) else {
                continue;
            };
            if self.d[j] < 0.0 {
                self.negate_column(j);
            }
            let mut leave = self.choose_leaving(j, opts.pivot_tol, false);
            if leave.is_none() {
                self.negate_column(j);
                leave = self.choose_leaving(j, opts.pivot_tol, false);
            }
            if let Some((r, _)) = leave {
                self.pivot(r, j);
                count += 1;
            }
        }
        count
    }

    fn run(&mut self, opts: &SolverOptions) -> Result<LpStatus> {
        let mut streak = 0usize;
        let mut since_refactor = 0usize;
        loop {
            let bland = match opts.pricing {
                Pricing::Bland => true,
                Pricing::Dantzig => streak >= opts.degenerate_streak,
            };
            let (step, degenerate) = self.step(bland, opts);
            match step {
                Step::Optimal => {
                    // confirm on a fresh factorization before stopping
                    if since_refactor == 0 {
                        return Ok(LpStatus::Optimal);
                    }
                    self.refactor()?;
                    since_refactor = 0;
                    if self.choose_entering(true, opts.optimality_tol).is_none() {
                        return Ok(LpStatus::Optimal);
                    }
                }
                Step::Unbounded => return Ok(LpStatus::Unbounded),
                Step::Pivoted => {
                    streak = if degenerate { streak + 1 } else { 0 };
                    since_refactor += 1;
                    if self.pivots >= opts.max_pivots {
                        return Err(Error::LpStatus(format!(
                            "not solved within {} pivots",
                            opts.max_pivots
                        )));
                    }
                    if opts.refactor_interval > 0 && since_refactor >= opts.refactor_interval {
                        self.refactor()?;
                        since_refactor = 0;
                    }
                }
            }
        }
    }

    /// Dual simplex pivots that restore primal feasibility while keeping the
    /// reduced costs optimal. Returns `false` when some row cannot be repaired.
    fn dual_cleanup(&mut self, opts: &SolverOptions) -> Result<bool> {
        let mut since_refactor = 0usize;
        loop {
            let leaving = (0..self.m)
                .filter(|&i| !self.is_free(self.row_var[i]) && self.beta[i] < -CLEANUP_TOL)
                .min_by(|&a, &b| self.beta[a].total_cmp(&self.beta[b]));
            let Some(r) = leaving else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64, bool)> = None;
            for j in 0..self.ncol {
                let a = self.t[r * self.ncol + j];
                let free = self.is_free(self.col_var[j]);
                let (a, flip) = if a > opts.pivot_tol {
                    (a, false)
                } else if free && a < -opts.pivot_tol {
                    (-a, true)
                } else {
                    continue;
                };
                let dj = if flip { -self.d[j] } else { self.d[j] };
                let ratio = (-dj).max(0.0) / a;
                if best.is_none_or(|(_, rb, _)| ratio < rb) {
                    best = Some((j, ratio, flip));
                }
            }
            let Some((j, _, flip)) = best else {
                return Ok(false);
            };
            if flip {
                self.negate_column(j);
            }
            self.pivot(r, j);
            since_refactor += 1;
            if self.pivots >= opts.max_pivots {
                return Err(Error::LpStatus(format!(
                    "not solved within {} pivots",
                    opts.max_pivots
                )));
            }
            if opts.refactor_interval > 0 && since_refactor >= opts.refactor_interval {
                self.refactor()?;
                since_refactor = 0;
            }
        }
    }

    /// Rebuilds `t`, `beta`, `d` and `z0` from the original data and the
    /// current basis.
    ///
    /// With `k` basic structurals, exactly `k` slacks are nonbasic; their rows
    /// hold with equality and determine the basic structurals through a
    /// `k × k` solve. Every other row then follows from its sparse entries.
    fn refactor(&mut self) -> Result<()> {
        let lp = self.lp;
        let n = lp.n;
        let ncol = self.ncol;
        let basic_struct: Vec<usize> = self.row_var.iter().copied().filter(|&v| v < n).collect();
        let tight: Vec<(usize, usize)> = self
            .col_var
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v >= n)
            .map(|(j, &v)| (j, v - n))
            .collect();
        let k = basic_struct.len();
        if tight.len() != k {
            return Err(Error::LpStatus("corrupt basis".into()));
        }
        let mut pos = vec![usize::MAX; n];
        for (p, &v) in basic_struct.iter().enumerate() {
            pos[v] = p;
        }
        let mut col_of = vec![usize::MAX; n];
        for (j, &v) in self.col_var.iter().enumerate() {
            if v < n {
                col_of[v] = j;
            }
        }

        // x_B = g0 + G·u, from A_T,B x_B = b_T − A_T,N x_N − s_T
        let mut g = DMatrix::<f64>::zeros(k, ncol + 1);
        let mut mat = DMatrix::<f64>::zeros(k, k);
        for (q, &(tj, r)) in tight.iter().enumerate() {
            g[(q, ncol)] = lp.b[r];
            g[(q, tj)] = -1.0;
            for &(v, a) in &lp.rows[r] {
                if pos[v] != usize::MAX {
                    mat[(q, pos[v])] = a;
                } else {
                    let j = col_of[v];
                    g[(q, j)] -= a * self.col_sign[j];
                }
            }
        }
        if k > 0 {
            let lu = mat.lu();
            g = lu
                .solve(&g)
                .ok_or_else(|| Error::LpStatus("singular basis".into()))?;
        }

        for i in 0..self.m {
            let v = self.row_var[i];
            let row = &mut self.t[i * ncol..(i + 1) * ncol];
            if v < n {
                let p = pos[v];
                let s = self.row_sign[i];
                for j in 0..ncol {
                    row[j] = s * g[(p, j)];
                }
                self.beta[i] = s * g[(p, ncol)];
            } else {
                let r = v - n;
                row.iter_mut().for_each(|e| *e = 0.0);
                let mut beta = lp.b[r];
                for &(w, a) in &lp.rows[r] {
                    if pos[w] != usize::MAX {
                        let p = pos[w];
                        for j in 0..ncol {
                            row[j] -= a * g[(p, j)];
                        }
                        beta -= a * g[(p, ncol)];
                    } else {
                        let j = col_of[w];
                        row[j] -= a * self.col_sign[j];
                    }
                }
                self.beta[i] = beta;
            }
        }

        self.d.iter_mut().for_each(|e| *e = 0.0);
        self.z0 = 0.0;
        for &v in &basic_struct {
            let cv = lp.c[v];
            if cv == 0.0 {
                continue;
            }
            let p = pos[v];
            for j in 0..ncol {
                self.d[j] += cv * g[(p, j)];
            }
            self.z0 += cv * g[(p, ncol)];
        }
        for (j, &v) in self.col_var.iter().enumerate() {
            if v < n {
                self.d[j] += lp.c[v] * self.col_sign[j];
            }
        }
        self.refactors += 1;
        Ok(())
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.lp.n];
        for (i, &v) in self.row_var.iter().enumerate() {
            if v < self.lp.n {
                x[v] = self.row_sign[i] * self.beta[i];
            }
        }
        x
    }

    fn dual(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (j, &v) in self.col_var.iter().enumerate() {
            if v >= self.lp.n {
                y[v - self.lp.n] = -self.d[j];
            }
        }
        y
    }
}

/// Residuals of `(x, y)` against the original program.
pub fn certificate(lp: &LinearProgram, x: &[f64], y: &[f64]) -> Certificate {
    let mut primal: f64 = 0.0;
    for i in 0..lp.m() {
        primal = primal.max(lp.row_dot(i, x) - lp.b[i]);
    }
    for j in 0..lp.n {
        if !lp.free[j] {
            primal = primal.max(-x[j]);
        }
    }
    let mut aty = vec![0.0; lp.n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in row {
            aty[j] += a * y[i];
        }
    }
    let mut dual: f64 = 0.0;
    for j in 0..lp.n {
        let r = aty[j] - lp.c[j];
        dual = dual.max(if lp.free[j] { r.abs() } else { -r });
    }
    for &yi in y {
        dual = dual.max(-yi);
    }
    let cx: f64 = lp.c.iter().zip(x).map(|(c, x)| c * x).sum();
    let by: f64 = lp.b.iter().zip(y).map(|(b, y)| b * y).sum();
    Certificate {
        primal_residual: primal.max(0.0),
        dual_residual: dual,
        gap: (cx - by).abs(),
    }
}

/// Phase 1: `max −x0` over `Ax − x0·1 ≤ b`, started from the slack basis by
/// pivoting `x0` into the most violated row. Returns a feasible basis for
/// the original program, or `None` when it is infeasible.
/// `(row_var, col_var, col_sign, row_sign, pivots)` of a feasible basis.
type Basis = (Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>, usize);

fn phase_one(lp: &LinearProgram, opts: &SolverOptions) -> Result<Option<Basis>> {
    let n = lp.n;
    let mut aux = LinearProgram::new(n + 1, vec![0.0; n + 1], lp.free.iter().copied().chain([false]).collect());
    aux.c[n] = -1.0;
    for (row, &b) in lp.rows.iter().zip(&lp.b) {
        let mut r = row.clone();
        r.push((n, -1.0));
        aux.push_row(r, b);
    }
    let mut tab = Tableau::slack_basis(&aux);
    let (r, _) = lp
        .b
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &b)| if b < acc.1 { (i, b) } else { acc });
    tab.pivot(r, n);
    if tab.crash_free(opts) > 0 {
        tab.refactor()?;
    }
    let status = tab.run(opts)?;
    debug_assert_eq!(status, LpStatus::Optimal);
    if -tab.z0 > opts.pivot_tol.max(1e-9) {
        return Ok(None);
    }
    // drive x0 out of the basis if it is still there
    if let Some(i) = tab.row_var.iter().position(|&v| v == n) {
        let j = (0..tab.ncol)
            .filter(|&j| tab.t[i * tab.ncol + j].abs() > opts.pivot_tol)
            .max_by(|&a, &b| {
                tab.t[i * tab.ncol + a]
                    .abs()
                    .total_cmp(&tab.t[i * tab.ncol + b].abs())
            })
            .ok_or_else(|| Error::LpStatus("cannot remove auxiliary variable".into()))?;
        tab.pivot(i, j);
    }
    let shift = |v: usize| if v > n { v - 1 } else { v };
    let keep: Vec<usize> = (0..tab.ncol).filter(|&j| tab.col_var[j] != n).collect();
    let col_var = keep.iter().map(|&j| shift(tab.col_var[j])).collect();
    let col_sign = keep.iter().map(|&j| tab.col_sign[j]).collect();
    let row_var = tab.row_var.iter().map(|&v| shift(v)).collect();
    Ok(Some((row_var, col_var, col_sign, tab.row_sign.clone(), tab.pivots)))
}

/// `b_i + scale·(1 + |b_i|)·u_i` with `u_i` spread over `[0.5, 1)`.
fn perturbed(lp: &LinearProgram, scale: f64) -> LinearProgram {
    let mut out = lp.clone();
    for (i, b) in out.b.iter_mut().enumerate() {
        let u = 0.5 + 0.5 * (i as f64 * 0.618_033_988_749_894_9).fract();
        *b += scale * (1.0 + b.abs()) * u;
    }
    out
}

fn infeasible(lp: &LinearProgram) -> SimplexResult {
    SimplexResult {
        status: LpStatus::Infeasible,
        x: vec![0.0; lp.n],
        y: vec![0.0; lp.m()],
        objective: f64::NAN,
        pivots: 0,
        refactors: 0,
        certificate: Certificate::default(),
    }
}

/// Runs phase 1 if needed, the free-variable crash and the main loop.
fn optimize<'a>(lp: &'a LinearProgram, opts: &SolverOptions) -> Result<Option<(Tableau<'a>, LpStatus)>> {
    let mut tab = Tableau::slack_basis(lp);
    if lp.b.iter().any(|&b| b < 0.0) {
        let Some((row_var, col_var, col_sign, row_sign, pivots)) = phase_one(lp, opts)? else {
            return Ok(None);
        };
        tab.row_var = row_var;
        tab.col_var = col_var;
        tab.col_sign = col_sign;
        tab.row_sign = row_sign;
        tab.pivots = pivots;
        tab.refactor()?;
    }
    if tab.crash_free(opts) > 0 {
        tab.refactor()?;
    }
    let status = tab.run(opts)?;
    Ok(Some((tab, status)))
}

pub fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<SimplexResult> {
    for (i, row) in lp.rows.iter().enumerate() {
        if !lp.b[i].is_finite() || row.iter().any(|e| !e.1.is_finite()) {
            return Err(Error::InvalidArgument(format!("row {i} is not finite")));
        }
    }
    let relaxed;
    let work = if opts.perturbation > 0.0 {
        relaxed = perturbed(lp, opts.perturbation);
        &relaxed
    } else {
        lp
    };
    let Some((first, mut status)) = optimize(work, opts)? else {
        return Ok(infeasible(lp));
    };
    let mut tab = Tableau::slack_basis(lp);
    tab.row_var = first.row_var;
    tab.col_var = first.col_var;
    tab.col_sign = first.col_sign;
    tab.row_sign = first.row_sign;
    tab.pivots = first.pivots;
    tab.refactors = first.refactors;
    if !std::ptr::eq(work, lp) {
        tab.refactor()?;
        if status == LpStatus::Optimal {
            if !tab.dual_cleanup(opts)? {
                return Ok(infeasible(lp));
            }
            status = tab.run(opts)?;
        }
    } else {
        tab.t = first.t;
        tab.beta = first.beta;
        tab.d = first.d;
        tab.z0 = first.z0;
    }
    let x = tab.primal();
    let y = tab.dual();
    let cert = certificate(lp, &x, &y);
    log::debug!(
        "simplex: {status} after {} pivots, {} refactors, m={} n={}",
        tab.pivots,
        tab.refactors,
        lp.m(),
        lp.n
    );
    Ok(SimplexResult {
        status,
        objective: if status == LpStatus::Optimal { tab.z0 } else { f64::NAN },
        x,
        y,
        pivots: tab.pivots,
        refactors: tab.refactors,
        certificate: cert,
    })
}
