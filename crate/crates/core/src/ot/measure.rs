use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, vecops::*, Scalar};
use crate::sphere::GroundSpace;

/// Finitely many atoms with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S> {
    space: GroundSpace<S>,
    points: Vec<Vec<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn new(space: GroundSpace<S>, points: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        if points.is_empty() {
            return invalid("a measure needs at least one atom");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= S::zero())) {
            return invalid("weights must be finite and nonnegative");
        }
        let total: S = weights.iter().copied().sum();
        let tol = lit::<S>(1e-10).max(lit::<S>(4.0) * S::epsilon() * lit(weights.len() as f64));
        if (total - S::one()).abs() > tol {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        for (i, p) in points.iter().enumerate() {
            if !space.contains(p, lit(1e-9)) {
                return Err(Error::Domain(format!("atom {i} is not a point of the ground space")));
            }
        }
        Ok(DiscreteMeasure { space, points, weights })
    }

    pub fn uniform(space: GroundSpace<S>, points: Vec<Vec<S>>) -> Result<Self> {
        let n = points.len();
        let w = S::one() / lit(n.max(1) as f64);
        Self::new(space, points, vec![w; n])
    }

    pub fn dirac(space: GroundSpace<S>, p: Vec<S>) -> Result<Self> {
        Self::new(space, vec![p], vec![S::one()])
    }

    /// Normalizes arbitrary nonnegative masses.
    pub fn from_masses(space: GroundSpace<S>, points: Vec<Vec<S>>, masses: Vec<S>) -> Result<Self> {
        let total: S = masses.iter().copied().sum();
        if !(total > S::zero()) {
            return invalid("total mass must be positive");
        }
        Self::new(space, points, masses.iter().map(|m| *m / total).collect())
    }

    pub fn space(&self) -> &GroundSpace<S> {
        &self.space
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Drops atoms of zero mass.
    pub fn trimmed(&self) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > S::zero()).collect();
        DiscreteMeasure {
            space: self.space.clone(),
            points: keep.iter().map(|&i| self.points[i].clone()).collect(),
            weights: keep.iter().map(|&i| self.weights[i]).collect(),
        }
    }
}

/// M_μ(β): the largest mass of a geodesic ball of radius β.
///
/// Candidate centres are the atoms and, on S^2, the points at distance exactly β from two
/// atoms; balls are counted closed (slack 1e-12), which gives the supremum over open balls
/// of every radius above β. In other dimensions only atom centres are tried.
pub fn mass_concentration<S: Scalar>(measure: &DiscreteMeasure<S>, beta: S) -> Result<S> {
    if !(beta > S::zero()) {
        return invalid("beta must be positive");
    }
    let space = measure.space();
    let pts = measure.points();
    let w = measure.weights();
    let n = pts.len();
    let slack = lit::<S>(1e-12);
    let reach = beta + beta + slack;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| space.distance_unchecked(&pts[i], &pts[j]) <= reach).collect())
        .collect();
    let ball_mass = |c: &[S], around: &[usize]| -> S {
        around
            .iter()
            .filter(|&&j| space.distance_unchecked(c, &pts[j]) <= beta + slack)
            .fold(S::zero(), |acc, &j| acc + w[j])
    };
    let mut best = S::zero();
    let two_circle = matches!(space, GroundSpace::Sphere { d: 3 }) && beta < S::FRAC_PI_2();
    for i in 0..n {
        best = best.max(ball_mass(&pts[i], &neighbours[i]));
        if !two_circle {
            continue;
        }
        for &j in &neighbours[i] {
            if j <= i {
                continue;
            }
            let (p, q) = (&pts[i], &pts[j]);
            let half = space.distance_unchecked(p, q) * lit(0.5);
            if half <= S::zero() || half > beta {
                continue;
            }
            let mid = add(p, q);
            let mid = scale(&mid, S::one() / norm(&mid));
            let cr = vec![p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]];
            let nc = norm(&cr);
            if nc <= S::epsilon() {
                continue;
            }
            let nrm = scale(&cr, S::one() / nc);
            let cos_r = (beta.cos() / half.cos()).min(S::one());
            let sin_r = (S::one() - cos_r * cos_r).max(S::zero()).sqrt();
            for sgn in [S::one(), -S::one()] {
                let c = axpy(&scale(&mid, cos_r), sgn * sin_r, &nrm);
                best = best.max(ball_mass(&c, &neighbours[i]));
            }
        }
    }
    Ok(best)
}
