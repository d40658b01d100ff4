//! CSV data behind the Beta-Bernoulli figures: LP optima for the static and
//! adaptive collections next to the log rule, and their distance.

use std::path::{Path, PathBuf};

use crate::asymptotics::lp_log_convergence;
use crate::error::{Error, Result};
use crate::gain::{csv_writer, format_float};
use crate::info::{beta_collection_adaptive, beta_collection_static};
use crate::lp::optimal_rule;
use crate::rules::{ClosedFormRule, ConvexFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct FigureConfig {
    /// Evenly spaced `θ` values on `[0, 1]`, endpoints included.
    pub grid: usize,
    pub finite_n: Vec<u64>,
    pub diff_panels: Vec<u64>,
    /// `N` values summarized in `figure3_diff.csv`.
    pub diff_n: Vec<u64>,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self {
            grid: 401,
            finite_n: vec![5, 10],
            diff_panels: vec![10, 20],
            diff_n: vec![5, 10, 20],
        }
    }
}

pub fn theta_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 / last).collect())
}

/// `theta,H_opt,H_log,diff` for a binary rule.
pub fn curve_csv<H: ConvexFunction + ?Sized>(h: &H, grid: &[f64]) -> String {
    let log = ClosedFormRule::log(2);
    let mut w = csv_writer(Vec::new());
    w.write_record(["theta", "H_opt", "H_log", "diff"]).expect("in-memory write");
    for &t in grid {
        let x = [t, 1.0 - t];
        let (a, b) = (h.value(&x), log.value(&x));
        w.write_record([format_float(t), format_float(a), format_float(b), format_float(a - b)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// File names and contents, in a fixed order.
pub fn render_figures(cfg: &FigureConfig) -> Result<Vec<(String, String)>> {
    let grid = theta_grid(cfg.grid)?;
    let mut out = Vec::new();
    for (kind, build) in [
        ("static", beta_collection_static as fn(u64) -> crate::info::Collection),
        ("adaptive", beta_collection_adaptive),
    ] {
        for &n in &cfg.finite_n {
            let (h, _, _) = optimal_rule(&build(n))?;
            out.push((format!("figure2_{kind}_N{n}.csv"), curve_csv(&h, &grid)));
        }
    }
    for &n in &cfg.diff_panels {
        let (h, _, _) = optimal_rule(&beta_collection_static(n))?;
        out.push((format!("figure3_N{n}.csv"), curve_csv(&h, &grid)));
    }
    let rows = lp_log_convergence(&cfg.diff_n, Some(&grid), false)?;
    let mut w = csv_writer(Vec::new());
    w.write_record(["N", "max_abs_diff"]).expect("in-memory write");
    for r in rows {
        w.write_record([r.n.to_string(), format_float(r.deviation)])
            .expect("in-memory write");
    }
    out.push((
        "figure3_diff.csv".to_string(),
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8"),
    ));
    Ok(out)
}

pub fn write_figures(cfg: &FigureConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    render_figures(cfg)?
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}
