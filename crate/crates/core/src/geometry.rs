//! Points of the probability simplex, lattices over it, and tangent directions.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Coordinates must sum to one within this tolerance.
pub const SUM_TOL: f64 = 1e-12;

/// A probability vector in the simplex over `d >= 2` states.
///
/// For `d = 2` the scalar parametrization `x` stands for `(x, 1 - x)`, so
/// coordinate 0 carries the probability of the event.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
    exact: Option<Vec<Rational64>>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        validate_coords(&coords)?;
        Ok(Self {
            coords,
            exact: None,
        })
    }

    pub fn from_rationals(exact: Vec<Rational64>) -> Result<Self> {
        if exact.len() < 2 {
            return Err(Error::InvalidPoint(format!(
                "dimension {} < 2",
                exact.len()
            )));
        }
        if exact.iter().any(|q| *q < Rational64::zero()) {
            return Err(Error::InvalidPoint("negative coordinate".into()));
        }
        let sum: Rational64 = exact.iter().copied().sum();
        if sum != Rational64::from_integer(1) {
            return Err(Error::InvalidPoint(format!("coordinates sum to {sum}")));
        }
        let coords = exact.iter().map(ratio_to_f64).collect();
        Ok(Self {
            coords,
            exact: Some(exact),
        })
    }

    /// `(x, 1 - x)`.
    pub fn binary(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidPoint(format!("binary coordinate {x} outside [0, 1]")));
        }
        Ok(Self {
            coords: vec![x, 1.0 - x],
            exact: None,
        })
    }

    pub fn binary_exact(x: Rational64) -> Result<Self> {
        Self::from_rationals(vec![x, Rational64::from_integer(1) - x])
    }

    /// The barycenter `c = (1/d, ..., 1/d)`.
    pub fn center(d: usize) -> Self {
        let q = Rational64::new(1, d as i64);
        Self::from_rationals(vec![q; d]).expect("center is a valid point")
    }

    /// The vertex `ê_k`.
    pub fn vertex(d: usize, k: usize) -> Self {
        let exact = (0..d)
            .map(|j| Rational64::from_integer((j == k) as i64))
            .collect();
        Self::from_rationals(exact).expect("vertex is a valid point")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn exact(&self) -> Option<&[Rational64]> {
        self.exact.as_deref()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// The binary coordinate `x` of `(x, 1 - x)`.
    pub fn scalar(&self) -> f64 {
        self.coords[0]
    }

    pub fn is_interior(&self) -> bool {
        self.coords.iter().all(|&c| c > 0.0)
    }

    /// Index of the vertex this point equals, if any.
    pub fn vertex_index(&self) -> Option<usize> {
        if let Some(q) = &self.exact {
            return q.iter().position(|c| *c == Rational64::from_integer(1));
        }
        self.coords.iter().position(|&c| c == 1.0)
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// Key for exact deduplication: the rational coordinates when present,
    /// otherwise the bit patterns of the floats.
    pub fn key(&self) -> PointKey {
        match &self.exact {
            Some(q) => PointKey::Exact(q.iter().map(|r| (*r.numer(), *r.denom())).collect()),
            None => PointKey::Float(self.coords.iter().map(|c| canonical_bits(*c)).collect()),
        }
    }

    /// Key that identifies rational and float points with equal values when
    /// the rational converts exactly.
    pub fn float_key(&self) -> Vec<u64> {
        self.coords.iter().map(|c| canonical_bits(*c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKey {
    Exact(Vec<(i64, i64)>),
    Float(Vec<u64>),
}

fn canonical_bits(c: f64) -> u64 {
    if c == 0.0 {
        0
    } else {
        c.to_bits()
    }
}

fn validate_coords(coords: &[f64]) -> Result<()> {
    if coords.len() < 2 {
        return Err(Error::InvalidPoint(format!("dimension {} < 2", coords.len())));
    }
    if let Some(c) = coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::InvalidPoint(format!("coordinate {c} is negative or not finite")));
    }
    let sum: f64 = coords.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidPoint(format!("coordinates sum to {sum}")));
    }
    Ok(())
}

pub fn ratio_to_f64(q: &Rational64) -> f64 {
    q.to_f64().expect("i64 ratio converts to f64")
}

pub fn format_ratio(q: &Rational64) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"num/den"` or an integer.
pub fn parse_ratio(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let parse = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|e| Error::Parse(format!("bad rational {s:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse(d)?;
            if den == 0 {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational64::new(parse(n)?, den))
        }
        None => Ok(Rational64::from_integer(parse(s)?)),
    }
}

/// All points of the simplex whose coordinates are multiples of `1/m`.
pub fn simplex_lattice(d: usize, m: usize) -> Vec<SimplexPoint> {
    let mut out = Vec::new();
    for counts in compositions(m, d) {
        let exact = counts
            .iter()
            .map(|&c| Rational64::new(c as i64, m as i64))
            .collect();
        out.push(SimplexPoint::from_rationals(exact).expect("lattice point"));
    }
    out
}

/// Lattice points with every coordinate strictly positive.
pub fn interior_lattice(d: usize, m: usize) -> Vec<SimplexPoint> {
    simplex_lattice(d, m)
        .into_iter()
        .filter(SimplexPoint::is_interior)
        .collect()
}

/// Every way of writing `total` as an ordered sum of `parts` nonnegative
/// integers, in lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; parts];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, out);
        }
    }
    if parts > 0 {
        rec(0, total, &mut cur, &mut out);
    }
    out
}

/// Uniform samples on the simplex (normalized exponentials), reproducible
/// from `seed`.
pub fn random_points(d: usize, count: usize, seed: u64) -> Vec<SimplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_point(d, &mut rng))
        .collect()
}

pub fn random_point<R: Rng>(d: usize, rng: &mut R) -> SimplexPoint {
    let raw: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let mut coords: Vec<f64> = raw.iter().map(|r| r / total).collect();
    // push the rounding residue into the largest coordinate
    let residue = 1.0 - coords.iter().sum::<f64>();
    let (imax, _) = coords
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |a, (i, &c)| if c > a.1 { (i, c) } else { a });
    coords[imax] += residue;
    SimplexPoint::new(coords).expect("normalized sample")
}

/// Unit tangent directions (`1ᵀv = 0`, `‖v‖ = 1`): every normalized
/// coordinate-pair difference `(ê_i - ê_j)/√2` with `i < j`, followed by
/// `n_random` seeded Gaussian directions projected onto the tangent space.
pub fn tangent_directions(d: usize, n_random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut v = vec![0.0; d];
            v[i] = s;
            v[j] = -s;
            dirs.push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < d * (d - 1) / 2 + n_random {
        let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mean = raw.iter().sum::<f64>() / d as f64;
        let v: Vec<f64> = raw.iter().map(|r| r - mean).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-8 {
            dirs.push(v.iter().map(|c| c / norm).collect());
        }
    }
    dirs
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_points() {
        assert!(SimplexPoint::new(vec![1.0]).is_err());
        assert!(SimplexPoint::new(vec![0.6, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.2, -0.2]).is_err());
        assert!(SimplexPoint::binary(1.5).is_err());
        assert!(SimplexPoint::from_rationals(vec![Rational64::new(1, 3); 2]).is_err());
    }

    #[test]
    fn center_and_vertices() {
        let c = SimplexPoint::center(3);
        assert!(c.is_interior());
        assert_eq!(c.vertex_index(), None);
        let v = SimplexPoint::vertex(4, 2);
        assert_eq!(v.vertex_index(), Some(2));
        assert_eq!(v.coords(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn lattice_counts() {
        // C(m + d - 1, d - 1)
        assert_eq!(simplex_lattice(3, 4).len(), 15);
        assert_eq!(interior_lattice(3, 4).len(), 3);
        assert_eq!(simplex_lattice(2, 10).len(), 11);
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!(parse_ratio("2/6").unwrap(), Rational64::new(1, 3));
        assert_eq!(parse_ratio(" 3 ").unwrap(), Rational64::from_integer(3));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("a/2").is_err());
        assert_eq!(format_ratio(&Rational64::new(2, 4)), "1/2");
    }

    #[test]
    fn directions_are_tangent_unit() {
        let dirs = tangent_directions(4, 10, 7);
        assert_eq!(dirs.len(), 6 + 10);
        for v in dirs {
            assert!(v.iter().sum::<f64>().abs() < 1e-12);
            assert!((dot(&v, &v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_points_are_valid_and_reproducible() {
        let a = random_points(5, 50, 3);
        let b = random_points(5, 50, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let vals = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(vals) - 4e-16).abs() < 1e-30);
    }
}
