//! Bounded proper scoring rules that maximize the worst-case information
//! gain over a collection of information structures.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: simplex points, lattices, tangent directions.
//! - [`rules`]: closed-form and piecewise-linear convex functions and their
//!   Savage-form scores.
//! - [`info`]: finite-support information structures and the Beta/Dirichlet
//!   families.
//! - [`gain`]: information gain, worst-case objectives, curvature operators.
//! - [`lp`]: the linear program whose solution is an optimal bounded rule.
//! - [`settle`]: collections under which a given rule is optimal.
//! - [`asymptotics`]: large-`N` sweeps of scaled objectives.
//! - [`figures`]: CSV exports of optimal rules for Beta families.

pub mod asymptotics;
pub mod error;
pub mod figures;
pub mod gain;
pub mod geometry;
pub mod info;
pub mod lp;
pub mod rules;
pub mod settle;

pub use error::{Error, Result};
pub use gain::{info_gain, objective, GainReport};
pub use geometry::SimplexPoint;
pub use info::{Collection, InfoStructure};
pub use lp::{build_lp, extract_h, optimal_rule, solve_lp, LpInstance, LpSolution, LpStatus};
pub use rules::{
    savage_score, ClosedFormRule, ConvexFunction, PiecewiseLinearConvex, Rule, ScoringRule,
};
