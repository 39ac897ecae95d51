use super::measure::DiscreteMeasure;
use crate::cost::CostModel;
use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Scalar};
use crate::sphere::GroundSpace;
use std::collections::BTreeMap;

/// Sparse coupling between two discrete measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<S> {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, S)>,
}

impl<S: Scalar> TransportPlan<S> {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, S)>) -> Result<Self> {
        for &(i, j, m) in &entries {
            if i >= rows || j >= cols {
                return invalid(format!("entry ({i}, {j}) outside a {rows}x{cols} plan"));
            }
            if !(m.is_finite() && m >= S::zero()) {
                return invalid("plan masses must be finite and nonnegative");
            }
        }
        Ok(TransportPlan { rows, cols, entries })
    }

    /// Plan (Id, T)#μ for an index map T into `cols` targets.
    pub fn from_assignment(assignment: &[usize], weights: &[S], cols: usize) -> Result<Self> {
        if assignment.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), got: assignment.len() });
        }
        let entries = assignment.iter().zip(weights).enumerate().map(|(i, (&j, &w))| (i, j, w)).collect();
        Self::new(weights.len(), cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, S)] {
        &self.entries
    }

    pub fn total_mass(&self) -> S {
        self.entries.iter().fold(S::zero(), |a, e| a + e.2)
    }

    pub fn row_sums(&self) -> Vec<S> {
        let mut r = vec![S::zero(); self.rows];
        for &(i, _, m) in &self.entries {
            r[i] = r[i] + m;
        }
        r
    }

    pub fn col_sums(&self) -> Vec<S> {
        let mut c = vec![S::zero(); self.cols];
        for &(_, j, m) in &self.entries {
            c[j] = c[j] + m;
        }
        c
    }

    /// Marginals equal `a` and `b` within `tol`.
    pub fn check_marginals(&self, a: &[S], b: &[S], tol: S) -> Result<()> {
        if a.len() != self.rows || b.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows + self.cols, got: a.len() + b.len() });
        }
        for (k, (s, w)) in self.row_sums().iter().zip(a).enumerate() {
            if (*s - *w).abs() > tol {
                return Err(Error::Marginal(format!("row {k} carries {s}, expected {w}")));
            }
        }
        for (k, (s, w)) in self.col_sums().iter().zip(b).enumerate() {
            if (*s - *w).abs() > tol {
                return Err(Error::Marginal(format!("column {k} carries {s}, expected {w}")));
            }
        }
        Ok(())
    }

    /// ∫ c dγ; fails if positive mass sits on an infinite-cost arc.
    pub fn cost(&self, model: &CostModel<S>, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<S> {
        let mut total = S::zero();
        for &(i, j, m) in &self.entries {
            if m == S::zero() {
                continue;
            }
            let c = model
                .cost(&mu.points()[i], &nu.points()[j])
                .finite()
                .ok_or_else(|| Error::Domain(format!("plan puts mass on the forbidden arc ({i}, {j})")))?;
            total = total + m * c;
        }
        Ok(total)
    }

    /// (1 − w) self + w other, entries merged and sorted.
    pub fn mix(&self, other: &TransportPlan<S>, w: S) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return invalid("plans of different shapes cannot be mixed");
        }
        if !(w >= S::zero() && w <= S::one()) {
            return invalid("mixture weight must lie in [0, 1]");
        }
        let mut acc: BTreeMap<(usize, usize), S> = BTreeMap::new();
        for &(i, j, m) in &self.entries {
            let e = acc.entry((i, j)).or_insert(S::zero());
            *e = *e + (S::one() - w) * m;
        }
        for &(i, j, m) in &other.entries {
            let e = acc.entry((i, j)).or_insert(S::zero());
            *e = *e + w * m;
        }
        let entries = acc.into_iter().filter(|(_, m)| *m > S::zero()).map(|((i, j), m)| (i, j, m)).collect();
        Self::new(self.rows, self.cols, entries)
    }

    /// Smallest distance between coupled atoms carrying mass above 1e-12.
    pub fn support_min_distance(
        &self,
        space: &GroundSpace<S>,
        mu: &DiscreteMeasure<S>,
        nu: &DiscreteMeasure<S>,
    ) -> Result<S> {
        let thr = lit::<S>(1e-12);
        let d = self
            .entries
            .iter()
            .filter(|e| e.2 > thr)
            .map(|&(i, j, _)| space.distance_unchecked(&mu.points()[i], &nu.points()[j]))
            .fold(S::infinity(), |a, b| a.min(b));
        if d.is_infinite() {
            return invalid("plan has no entries");
        }
        Ok(d)
    }
}
