//! Finite-support information structures: random posteriors `X` over the
//! simplex, and collections of them.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    compensated_sum, compositions, format_ratio, parse_ratio, ratio_to_f64, PointKey, SimplexPoint,
};

/// Probabilities must sum to one within this tolerance.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: SimplexPoint,
    pub prob: f64,
    pub exact_prob: Option<Rational64>,
}

/// A finite-support distribution over `Δ_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoStructure {
    atoms: Vec<Atom>,
    mean: SimplexPoint,
    label: String,
}

impl InfoStructure {
    /// Builds a structure from float-weighted atoms, dropping zero weights
    /// and merging coincident points.
    pub fn new(atoms: Vec<(SimplexPoint, f64)>, label: impl Into<String>) -> Result<Self> {
        let atoms = atoms
            .into_iter()
            .map(|(point, prob)| Atom {
                point,
                prob,
                exact_prob: None,
            })
            .collect();
        Self::assemble(atoms, label.into())
    }

    /// Builds a structure with exact probabilities. Points should carry exact
    /// coordinates for the mean to be exact as well.
    pub fn new_exact(atoms: Vec<(SimplexPoint, Rational64)>, label: impl Into<String>) -> Result<Self> {
        let atoms = atoms
            .into_iter()
            .map(|(point, q)| Atom {
                point,
                prob: ratio_to_f64(&q),
                exact_prob: Some(q),
            })
            .collect();
        Self::assemble(atoms, label.into())
    }

    fn assemble(raw: Vec<Atom>, label: String) -> Result<Self> {
        let first = raw.first().ok_or(Error::EmptyCollection)?;
        let d = first.point.dim();
        let mut merged: Vec<Atom> = Vec::with_capacity(raw.len());
        let mut index: BTreeMap<PointKey, usize> = BTreeMap::new();
        for atom in raw {
            atom.point.check_dim(d)?;
            if !atom.prob.is_finite() || atom.prob < 0.0 {
                return Err(Error::InvalidStructure(format!("probability {}", atom.prob)));
            }
            if atom.prob == 0.0 {
                continue;
            }
            match index.get(&atom.point.key()) {
                Some(&i) => {
                    let m = &mut merged[i];
                    m.exact_prob = match (m.exact_prob, atom.exact_prob) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                    m.prob = match m.exact_prob {
                        Some(q) => ratio_to_f64(&q),
                        None => m.prob + atom.prob,
                    };
                }
                None => {
                    index.insert(atom.point.key(), merged.len());
                    merged.push(atom);
                }
            }
        }
        if merged.is_empty() {
            return Err(Error::InvalidStructure("all probabilities are zero".into()));
        }
        let all_exact = merged.iter().all(|a| a.exact_prob.is_some());
        if all_exact {
            let total: Rational64 = merged.iter().filter_map(|a| a.exact_prob).sum();
            if !total.is_one() {
                return Err(Error::InvalidStructure(format!("probabilities sum to {total}")));
            }
        } else {
            let total = compensated_sum(merged.iter().map(|a| a.prob));
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidStructure(format!("probabilities sum to {total}")));
            }
        }
        let mean = compute_mean(&merged, d, all_exact)?;
        Ok(Self {
            atoms: merged,
            mean,
            label,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mean(&self) -> &SimplexPoint {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// A structure with a single atom never moves the belief.
    pub fn is_constant(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn is_exact(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| a.exact_prob.is_some() && a.point.exact().is_some())
    }

    /// `Σ p_i (x_i − μ)(x_i − μ)ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mu = self.mean.coords();
        let mut cov = DMatrix::zeros(d, d);
        for a in &self.atoms {
            let dx: Vec<f64> = a.point.coords().iter().zip(mu).map(|(x, m)| x - m).collect();
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += a.prob * dx[i] * dx[j];
                }
            }
        }
        cov
    }

    /// Spectral norm of the covariance, its largest eigenvalue.
    pub fn cov_norm(&self) -> f64 {
        let cov = self.covariance();
        let eig = cov
            .clone()
            .try_symmetric_eigen(1e-12, 10_000)
            .unwrap_or_else(|| cov.symmetric_eigen());
        eig.eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    /// Contracts every atom toward the mean: `μ + t(x_i − μ)`.
    pub fn scale(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!("scale factor {t} outside (0, 1]")));
        }
        let mu = self.mean.coords();
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let x: Vec<f64> = a
                    .point
                    .coords()
                    .iter()
                    .zip(mu)
                    .map(|(x, m)| (m + t * (x - m)).max(0.0))
                    .collect();
                Ok((SimplexPoint::new(x)?, a.prob))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms, format!("{}*{t}", self.label))
    }

    /// Exact variant of [`scale`](Self::scale) for rational structures.
    pub fn scale_exact(&self, t: Rational64) -> Result<Self> {
        if !(t > Rational64::zero() && t <= Rational64::one()) {
            return Err(Error::InvalidArgument(format!("scale factor {t} outside (0, 1]")));
        }
        let mu = self
            .mean
            .exact()
            .ok_or_else(|| Error::InvalidArgument("structure is not exact".into()))?;
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let x = a
                    .point
                    .exact()
                    .ok_or_else(|| Error::InvalidArgument("structure is not exact".into()))?;
                let y = x.iter().zip(mu).map(|(x, m)| m + t * (x - m)).collect();
                let p = a
                    .exact_prob
                    .ok_or_else(|| Error::InvalidArgument("structure is not exact".into()))?;
                Ok((SimplexPoint::from_rationals(y)?, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new_exact(atoms, format!("{}*{t}", self.label))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StructureJson::from(self)).expect("structure serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: StructureJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        raw.into_structure()
    }
}

fn compute_mean(atoms: &[Atom], d: usize, exact_probs: bool) -> Result<SimplexPoint> {
    if exact_probs && atoms.iter().all(|a| a.point.exact().is_some()) {
        let mut mu = vec![Rational64::zero(); d];
        for a in atoms {
            let p = a.exact_prob.expect("exact probability");
            for (m, x) in mu.iter_mut().zip(a.point.exact().expect("exact point")) {
                *m += p * x;
            }
        }
        return SimplexPoint::from_rationals(mu);
    }
    let mu: Vec<f64> = (0..d)
        .map(|k| compensated_sum(atoms.iter().map(|a| a.prob * a.point.coords()[k])).max(0.0))
        .collect();
    SimplexPoint::new(mu)
}

/// A number written either as a float or as a `"num/den"` string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Float(f64),
    Ratio(String),
}

impl Number {
    fn exact(q: &Rational64) -> Self {
        Number::Ratio(format_ratio(q))
    }

    fn resolve(&self) -> Result<(f64, Option<Rational64>)> {
        match self {
            Number::Float(v) => Ok((*v, None)),
            Number::Ratio(s) => {
                let q = parse_ratio(s)?;
                Ok((ratio_to_f64(&q), Some(q)))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    x: Vec<Number>,
    p: Number,
}

#[derive(Serialize, Deserialize)]
struct StructureJson {
    d: usize,
    atoms: Vec<AtomJson>,
    #[serde(default)]
    label: String,
}

impl From<&InfoStructure> for StructureJson {
    fn from(s: &InfoStructure) -> Self {
        let atoms = s
            .atoms
            .iter()
            .map(|a| AtomJson {
                x: match a.point.exact() {
                    Some(q) => q.iter().map(Number::exact).collect(),
                    None => a.point.coords().iter().map(|&v| Number::Float(v)).collect(),
                },
                p: match &a.exact_prob {
                    Some(q) => Number::exact(q),
                    None => Number::Float(a.prob),
                },
            })
            .collect();
        StructureJson {
            d: s.dim(),
            atoms,
            label: s.label.clone(),
        }
    }
}

impl StructureJson {
    fn into_structure(self) -> Result<InfoStructure> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            if a.x.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: a.x.len(),
                });
            }
            let coords = a.x.iter().map(Number::resolve).collect::<Result<Vec<_>>>()?;
            let point = if coords.iter().all(|c| c.1.is_some()) {
                SimplexPoint::from_rationals(coords.iter().map(|c| c.1.unwrap()).collect())?
            } else {
                SimplexPoint::new(coords.iter().map(|c| c.0).collect())?
            };
            let (p, q) = a.p.resolve()?;
            atoms.push(Atom {
                point,
                prob: p,
                exact_prob: q,
            });
        }
        if atoms.is_empty() {
            return Err(Error::InvalidStructure("no atoms".into()));
        }
        InfoStructure::assemble(atoms, self.label)
    }
}

/// A nonempty family of structures sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    structures: Vec<InfoStructure>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct CollectionJson {
    #[serde(default)]
    label: String,
    structures: Vec<StructureJson>,
}

impl Collection {
    pub fn new(structures: Vec<InfoStructure>, label: impl Into<String>) -> Result<Self> {
        let first = structures.first().ok_or(Error::EmptyCollection)?;
        let d = first.dim();
        for s in &structures {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
        }
        Ok(Self {
            structures,
            label: label.into(),
        })
    }

    pub fn singleton(x: InfoStructure) -> Self {
        let label = x.label().to_string();
        Self {
            structures: vec![x],
            label,
        }
    }

    pub fn structures(&self) -> &[InfoStructure] {
        &self.structures
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.structures[0].dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_constant(&self) -> bool {
        self.structures.iter().any(InfoStructure::is_constant)
    }

    /// Appends a structure of matching dimension.
    pub fn push(&mut self, x: InfoStructure) -> Result<()> {
        x.mean().check_dim(self.dim())?;
        self.structures.push(x);
        Ok(())
    }

    /// Distinct support points over all structures, in first-seen order.
    pub fn support(&self) -> Vec<SimplexPoint> {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for s in &self.structures {
            for a in s.atoms() {
                if seen.insert(a.point.key(), ()).is_none() {
                    out.push(a.point.clone());
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let raw = CollectionJson {
            label: self.label.clone(),
            structures: self.structures.iter().map(StructureJson::from).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("collection serializes")
    }

    /// Parses a collection, or a single structure as a singleton collection.
    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if value.get("structures").is_some() {
            let raw: CollectionJson =
                serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
            let structures = raw
                .structures
                .into_iter()
                .map(StructureJson::into_structure)
                .collect::<Result<Vec<_>>>()?;
            Collection::new(structures, raw.label)
        } else {
            let raw: StructureJson =
                serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
            Ok(Collection::singleton(raw.into_structure()?))
        }
    }
}

/// Binary atoms of the Beta-Bernoulli structure `X_θ^{(n)}`:
/// `((n+2)θ+1)/(n+3)` with probability `θ` and `(n+2)θ/(n+3)` otherwise.
pub fn beta_atoms(theta: f64, n: u64) -> (f64, f64) {
    let m = (n + 2) as f64;
    let den = (n + 3) as f64;
    ((m * theta + 1.0) / den, m * theta / den)
}

pub fn beta_bernoulli(theta: f64, n: u64) -> Result<InfoStructure> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta {theta} outside [0, 1]")));
    }
    let (hi, lo) = beta_atoms(theta, n);
    InfoStructure::new(
        vec![
            (SimplexPoint::binary(hi)?, theta),
            (SimplexPoint::binary(lo)?, 1.0 - theta),
        ],
        format!("beta(theta={theta},n={n})"),
    )
}

pub fn beta_bernoulli_exact(theta: Rational64, n: u64) -> Result<InfoStructure> {
    if theta < Rational64::zero() || theta > Rational64::one() {
        return Err(Error::InvalidArgument(format!("theta {theta} outside [0, 1]")));
    }
    let m = Rational64::from_integer(n as i64 + 2);
    let den = Rational64::from_integer(n as i64 + 3);
    let one = Rational64::one();
    InfoStructure::new_exact(
        vec![
            (SimplexPoint::binary_exact((m * theta + one) / den)?, theta),
            (SimplexPoint::binary_exact(m * theta / den)?, one - theta),
        ],
        format!("beta(theta={},n={n})", format_ratio(&theta)),
    )
}

/// `d` atoms at `((n+d)θ + ê_k)/(n+d+1)` with probability `θ_k`.
pub fn dirichlet_categorical(theta: &SimplexPoint, n: u64) -> Result<InfoStructure> {
    let d = theta.dim();
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension {d} < 2")));
    }
    let label = format!("dirichlet(theta={},n={n})", point_label(theta));
    if let Some(q) = theta.exact() {
        let m = Rational64::from_integer((n + d as u64) as i64);
        let den = Rational64::from_integer((n + d as u64 + 1) as i64);
        let atoms = (0..d)
            .filter(|&k| !q[k].is_zero())
            .map(|k| {
                let x = (0..d)
                    .map(|j| (m * q[j] + Rational64::from_integer((j == k) as i64)) / den)
                    .collect();
                Ok((SimplexPoint::from_rationals(x)?, q[k]))
            })
            .collect::<Result<Vec<_>>>()?;
        return InfoStructure::new_exact(atoms, label);
    }
    let m = (n + d as u64) as f64;
    let den = m + 1.0;
    let t = theta.coords();
    let atoms = (0..d)
        .filter(|&k| t[k] > 0.0)
        .map(|k| {
            let x = (0..d)
                .map(|j| (m * t[j] + (j == k) as u8 as f64) / den)
                .collect();
            Ok((SimplexPoint::new(x)?, t[k]))
        })
        .collect::<Result<Vec<_>>>()?;
    InfoStructure::new(atoms, label)
}

fn point_label(x: &SimplexPoint) -> String {
    match x.exact() {
        Some(q) => q.iter().map(format_ratio).collect::<Vec<_>>().join(";"),
        None => x
            .coords()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";"),
    }
}

/// `{X_θ^{(N)} : θ = k/(N+2), k = 1..N+1}`.
pub fn beta_collection_static(n_max: u64) -> Collection {
    let den = n_max as i64 + 2;
    let structures = (1..den)
        .map(|k| beta_bernoulli_exact(Rational64::new(k, den), n_max).expect("valid theta"))
        .collect();
    Collection::new(structures, format!("beta_static(N={n_max})")).expect("nonempty")
}

/// `{X_θ^{(n)} : n ≤ N, θ = k/(n+2)}`, deduplicated.
pub fn beta_collection_adaptive(n_max: u64) -> Collection {
    let mut seen = BTreeMap::new();
    let mut structures = Vec::new();
    for n in 0..=n_max {
        let den = n as i64 + 2;
        for k in 1..den {
            let theta = Rational64::new(k, den);
            if seen.insert((theta, n), ()).is_none() {
                structures.push(beta_bernoulli_exact(theta, n).expect("valid theta"));
            }
        }
    }
    Collection::new(structures, format!("beta_adaptive(N={n_max})")).expect("nonempty")
}

/// Resolution of the prior lattice used by [`dirichlet_collection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaLattice {
    /// Step `1/(n+d)` for structures with `n` observations.
    #[default]
    Natural,
    /// A fixed step `1/m` for every `n`.
    Fixed(u64),
}

impl ThetaLattice {
    pub fn denominator(self, n: u64, d: usize) -> u64 {
        match self {
            ThetaLattice::Natural => n + d as u64,
            ThetaLattice::Fixed(m) => m,
        }
    }
}

/// Dirichlet structures with `n ≤ N` and every prior coordinate above `δ`.
pub fn dirichlet_collection(n_max: u64, d: usize, delta: f64, lattice: ThetaLattice) -> Result<Collection> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension {d} < 2")));
    }
    if !(delta >= 0.0 && delta < 1.0 / d as f64) {
        return Err(Error::InvalidArgument(format!(
            "guard {delta} leaves no interior (need 0 <= delta < 1/{d})"
        )));
    }
    if lattice == ThetaLattice::Fixed(0) {
        return Err(Error::InvalidArgument("lattice step 1/0".into()));
    }
    let mut structures = Vec::new();
    for n in 0..=n_max {
        let m = lattice.denominator(n, d);
        for comp in compositions(m as usize, d) {
            if comp.iter().any(|&c| c as f64 <= delta * m as f64) {
                continue;
            }
            let theta = SimplexPoint::from_rationals(
                comp.iter().map(|&c| Rational64::new(c as i64, m as i64)).collect(),
            )?;
            structures.push(dirichlet_categorical(&theta, n)?);
        }
    }
    Collection::new(structures, format!("dirichlet(N={n_max},d={d},delta={delta})"))
}

/// `x* ± v/n`, each with probability ½.
pub fn two_point(center: &SimplexPoint, v: &[f64], n: u64) -> Result<InfoStructure> {
    let d = center.dim();
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: v.len(),
        });
    }
    let sum: f64 = v.iter().sum();
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if sum.abs() > 1e-12 || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a tangent unit vector (sum {sum}, norm {norm})"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let step = 1.0 / n as f64;
    let make = |sign: f64| -> Result<SimplexPoint> {
        let x: Vec<f64> = center
            .coords()
            .iter()
            .zip(v)
            .map(|(c, vk)| c + sign * step * vk)
            .collect();
        if x.iter().any(|&c| c < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "atom {x:?} leaves the simplex"
            )));
        }
        SimplexPoint::new(x)
    };
    InfoStructure::new(
        vec![(make(1.0)?, 0.5), (make(-1.0)?, 0.5)],
        format!("two_point(n={n})"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn mean_examples() {
        let x = InfoStructure::new(
            vec![
                (SimplexPoint::binary(1.0 / 3.0).unwrap(), 0.5),
                (SimplexPoint::binary(2.0 / 3.0).unwrap(), 0.5),
            ],
            "sym",
        )
        .unwrap();
        assert_abs_diff_eq!(x.mean().scalar(), 0.5, epsilon = 1e-15);
        assert_eq!(beta_bernoulli_exact(r(3, 10), 0).unwrap().mean().exact().unwrap()[0], r(3, 10));
        let single = InfoStructure::new(vec![(SimplexPoint::center(3), 1.0)], "c").unwrap();
        assert_eq!(single.mean().coords(), SimplexPoint::center(3).coords());
        assert!(single.is_constant());
    }

    #[test]
    fn rejects_bad_structures() {
        assert!(InfoStructure::new(vec![(SimplexPoint::center(2), 0.5)], "x").is_err());
        assert!(InfoStructure::new(vec![(SimplexPoint::center(2), -1.0)], "x").is_err());
        assert!(InfoStructure::new(
            vec![(SimplexPoint::center(2), 0.5), (SimplexPoint::center(3), 0.5)],
            "x"
        )
        .is_err());
    }

    #[test]
    fn merges_and_drops() {
        let x = InfoStructure::new_exact(
            vec![
                (SimplexPoint::binary_exact(r(1, 3)).unwrap(), r(1, 4)),
                (SimplexPoint::binary_exact(r(2, 6)).unwrap(), r(1, 4)),
                (SimplexPoint::binary_exact(r(1, 1)).unwrap(), r(1, 2)),
                (SimplexPoint::binary_exact(r(0, 1)).unwrap(), r(0, 1)),
            ],
            "m",
        )
        .unwrap();
        assert_eq!(x.atoms().len(), 2);
        assert_eq!(x.atoms()[0].exact_prob, Some(r(1, 2)));
    }

    #[test]
    fn covariance_examples() {
        let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        let x = two_point(&SimplexPoint::center(2), &v, 10).unwrap();
        assert_abs_diff_eq!(x.cov_norm(), 0.01, epsilon = 1e-14);
        assert_abs_diff_eq!(x.mean().scalar(), 0.5, epsilon = 1e-15);
        let single = InfoStructure::new(vec![(SimplexPoint::center(3), 1.0)], "c").unwrap();
        assert_eq!(single.covariance(), DMatrix::zeros(3, 3));
        let coin = InfoStructure::new(
            vec![(SimplexPoint::vertex(2, 0), 0.5), (SimplexPoint::vertex(2, 1), 0.5)],
            "coin",
        )
        .unwrap();
        assert_abs_diff_eq!(coin.covariance()[(0, 0)], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn beta_examples() {
        let x = beta_bernoulli_exact(r(1, 2), 0).unwrap();
        let pts: Vec<_> = x.atoms().iter().map(|a| a.point.exact().unwrap()[0]).collect();
        assert_eq!(pts, vec![r(2, 3), r(1, 3)]);
        assert!(x.atoms().iter().all(|a| a.exact_prob == Some(r(1, 2))));

        let x = beta_bernoulli(1.0, 5).unwrap();
        assert_eq!(x.atoms().len(), 1);
        assert_eq!(x.atoms()[0].point.scalar(), 1.0);

        let x = beta_bernoulli(0.3, 10).unwrap();
        assert_abs_diff_eq!(x.atoms()[0].point.scalar(), (12.0 * 0.3 + 1.0) / 13.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.atoms()[1].point.scalar(), 12.0 * 0.3 / 13.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.mean().scalar(), 0.3, epsilon = 1e-12);

        assert!(beta_bernoulli(1.5, 0).is_err());
    }

    #[test]
    fn dirichlet_examples() {
        let b = beta_bernoulli_exact(r(1, 2), 0).unwrap();
        let d = dirichlet_categorical(&SimplexPoint::binary_exact(r(1, 2)).unwrap(), 0).unwrap();
        assert_eq!(b.atoms(), d.atoms());

        let x = dirichlet_categorical(&SimplexPoint::center(3), 0).unwrap();
        assert_eq!(x.atoms().len(), 3);
        assert_eq!(x.atoms()[0].point.exact().unwrap(), &[r(1, 2), r(1, 4), r(1, 4)]);
        assert_eq!(x.mean().exact().unwrap(), SimplexPoint::center(3).exact().unwrap());

        let v = dirichlet_categorical(&SimplexPoint::vertex(3, 0), 7).unwrap();
        assert_eq!(v.atoms().len(), 1);
        assert_eq!(v.atoms()[0].point.vertex_index(), Some(0));
    }

    #[test]
    fn collection_counts() {
        assert_eq!(beta_collection_static(0).len(), 1);
        let one: Vec<_> = beta_collection_static(1)
            .structures()
            .iter()
            .map(|s| s.mean().exact().unwrap()[0])
            .collect();
        assert_eq!(one, vec![r(1, 3), r(2, 3)]);
        assert_eq!(beta_collection_static(5).len(), 6);
        assert_eq!(beta_collection_adaptive(1).len(), 3);
        assert_eq!(beta_collection_adaptive(0), {
            let mut c = beta_collection_static(0);
            c.label = "beta_adaptive(N=0)".into();
            c
        });
    }

    #[test]
    fn adaptive_support_matches_enumeration() {
        // independent count: distinct rationals ((n+2)k/(n+2) ± ...) over n <= 10
        let mut pts = std::collections::BTreeSet::new();
        for n in 0..=10i64 {
            for k in 1..(n + 2) {
                pts.insert(r(k + 1, n + 3));
                pts.insert(r(k, n + 3));
            }
        }
        assert_eq!(beta_collection_adaptive(10).support().len(), pts.len());
    }

    #[test]
    fn adaptive_contains_static() {
        let a = beta_collection_adaptive(6);
        for s in beta_collection_static(6).structures() {
            assert!(a.structures().contains(s));
        }
    }

    #[test]
    fn dirichlet_collection_examples() {
        let c = dirichlet_collection(0, 3, 0.1, ThetaLattice::Fixed(3)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.structures()[0].mean().exact().unwrap(), SimplexPoint::center(3).exact().unwrap());

        let guarded = dirichlet_collection(6, 2, 0.2, ThetaLattice::Natural).unwrap();
        let beta: Vec<_> = beta_collection_adaptive(6)
            .structures()
            .iter()
            .filter(|s| {
                let t = s.mean().scalar();
                t > 0.2 && t < 0.8
            })
            .map(|s| s.atoms().to_vec())
            .collect();
        let dir: Vec<_> = guarded.structures().iter().map(|s| s.atoms().to_vec()).collect();
        assert_eq!(beta.len(), dir.len());
        for a in &beta {
            assert!(dir.contains(a));
        }
        assert!(dirichlet_collection(3, 3, 1.0 / 3.0, ThetaLattice::Natural).is_err());
    }

    #[test]
    fn scale_examples() {
        let x = beta_bernoulli_exact(r(3, 10), 5).unwrap();
        assert_eq!(x.scale_exact(Rational64::one()).unwrap().atoms(), x.atoms());
        let y = x.scale_exact(r(8, 13)).unwrap();
        assert_eq!(y.atoms(), beta_bernoulli_exact(r(3, 10), 10).unwrap().atoms());
        let half = x.scale(0.5).unwrap();
        assert_abs_diff_eq!(half.cov_norm(), x.cov_norm() / 4.0, epsilon = 1e-15);
        assert!(x.scale(0.0).is_err());
        assert!(x.scale(1.5).is_err());
    }

    #[test]
    fn two_point_rejects_escape() {
        let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        assert!(two_point(&SimplexPoint::binary(0.01).unwrap(), &v, 1).is_err());
        assert!(two_point(&SimplexPoint::center(2), &[1.0, 0.0], 10).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = beta_collection_adaptive(3);
        let back = Collection::from_json(&c.to_json()).unwrap();
        assert_eq!(c, back);
        let x = two_point(&SimplexPoint::center(2), &[1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()], 7).unwrap();
        let back = InfoStructure::from_json(&x.to_json()).unwrap();
        assert_eq!(x, back);
        let single = Collection::from_json(&x.to_json()).unwrap();
        assert_eq!(single.len(), 1);
        let err = Collection::from_json("{\"d\": 2,\n \"atoms\": [}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
