//! Seeded experiments instantiating the stability inequalities, with CSV/JSON reports.

mod calculus;
mod gauss;
mod plans;
mod report;
mod support;
mod target;

pub use calculus::{gradient_fd_error, run_calculus_check, run_reflector_design, GRAD_FD_STEP};
pub use gauss::{gauss_family, run_gauss_experiment, GaussGrid};
pub use plans::{
    certified_instance, loglog_slope, run_both_measures, run_gap_bound, run_holder_check, run_holder_experiment,
    CertifiedInstance,
    PRODUCT_LP_CAP,
};
pub use report::{
    default_tolerance, emit_report, parse_json_report, render_csv, render_json, sig12, summarize, BoundRow, Report,
    ReportFormat, ReportSummary,
};
pub use support::{run_support_localization, support_instance};
pub use target::{run_target_stability, stability_rows, StabilityParts};

use crate::concavity::{certify_strong_c_concavity, sharpest_potential, Potential, SUPERDIFF_TOL};
use crate::cost::{CostKind, CostModel};
use crate::error::{invalid, Error, Result};
use crate::ot::TransportPlan;
use crate::scalar::derive_seed;
use crate::sphere::GroundSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parameters shared by the sweeps. Keys mirror the CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub cost: CostKind,
    /// Domain or truncation radius.
    pub eps: f64,
    pub n_source: usize,
    pub n_target: usize,
    /// Strictly positive, ascending.
    pub perturbations: Vec<f64>,
    pub seed: u64,
    pub instances: usize,
    /// Mixture plans per instance in the gap check.
    pub mixtures: usize,
    /// Mass concentration radius for support localization.
    pub beta: f64,
    /// Random pairs in the Hölder check.
    pub pairs: usize,
    /// Monte Carlo samples for curvature measures.
    pub samples: usize,
    /// Normals in the sphere grid of the Gauss experiment.
    pub grid: usize,
    /// Tangent directions per point in the MTW check.
    pub dirs: usize,
    /// Points per c-segment in the c-convexity check.
    pub segment_points: usize,
    /// Body files replacing the built-in Gauss family (the first is the reference).
    pub bodies: Vec<String>,
    pub format: ReportFormat,
    pub out: Option<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            cost: CostKind::Reflector,
            eps: 0.3,
            n_source: 100,
            n_target: 100,
            perturbations: vec![0.01, 0.02, 0.05, 0.1, 0.2],
            seed: 0,
            instances: 5,
            mixtures: 50,
            beta: 0.4,
            pairs: 500,
            samples: 40000,
            grid: 2000,
            dirs: 20,
            segment_points: 20,
            bodies: Vec::new(),
            format: ReportFormat::Csv,
            out: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.perturbations.is_empty() {
            return invalid("at least one perturbation magnitude is required");
        }
        if self.perturbations.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return invalid("perturbation magnitudes must be strictly positive");
        }
        if self.perturbations.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("perturbation magnitudes must be sorted ascending");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return invalid("eps must be positive");
        }
        if self.bodies.len() == 1 {
            return invalid("bodies needs a reference body followed by at least one comparison body");
        }
        if !(self.beta > 0.0 && self.beta <= std::f64::consts::PI) {
            return invalid("beta must lie in (0, π]");
        }
        for (name, v) in [
            ("n_source", self.n_source),
            ("n_target", self.n_target),
            ("instances", self.instances),
            ("mixtures", self.mixtures),
            ("pairs", self.pairs),
            ("samples", self.samples),
            ("grid", self.grid),
            ("dirs", self.dirs),
            ("segment_points", self.segment_points),
        ] {
            if v == 0 {
                return invalid(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// Seed of the k-th instance.
    pub fn instance_seed(&self, k: usize) -> u64 {
        derive_seed(self.seed, k as u64)
    }
}

/// Single-valued map read off a plan: each source sends (almost) all its mass to one target.
pub fn plan_map(plan: &TransportPlan<f64>) -> Result<Vec<usize>> {
    let mut best = vec![(usize::MAX, 0.0f64); plan.rows()];
    for &(i, j, m) in plan.entries() {
        if m > best[i].1 {
            best[i] = (j, m);
        }
    }
    let rows = plan.row_sums();
    for (i, (j, m)) in best.iter().enumerate() {
        if *j == usize::MAX || *m < rows[i] * (1.0 - 1e-9) {
            return Err(Error::Numerical(format!("plan splits the mass of source {i}")));
        }
    }
    Ok(best.into_iter().map(|b| b.0).collect())
}

/// Moves every point along a seeded geodesic direction by t; the direction of point k
/// depends only on (seed, k), so magnitudes sweep one geodesic family.
pub fn displace(space: &GroundSpace<f64>, points: &[Vec<f64>], t: f64, seed: u64) -> Vec<Vec<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let v = space.random_unit_tangent(p, &mut rng);
            space.exp(p, &v.iter().map(|c| c * t).collect::<Vec<_>>())
        })
        .collect()
}

/// Points of `a` followed by the points of `b` that do not already occur in `a`;
/// returns the union and the union index of every point of `b`.
pub fn union_points(a: &[Vec<f64>], b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut all = a.to_vec();
    let mut idx = Vec::with_capacity(b.len());
    for p in b {
        match a.iter().position(|q| q == p) {
            Some(k) => idx.push(k),
            None => {
                idx.push(all.len());
                all.push(p.clone());
            }
        }
    }
    (all, idx)
}

/// Potential inducing `map` with the largest modulus, and its brute-force certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedPotential {
    pub potential: Potential<f64>,
    /// Brute-force strong c-concavity constant of `potential`.
    pub constant: f64,
    /// Constant targeted by the construction.
    pub sharpened: f64,
    /// Domain radius the certificate covers (0 = every finite pair).
    pub eps: f64,
}

pub fn certify_map(
    model: &CostModel<f64>,
    xs: &[Vec<f64>],
    map: &[usize],
    ys: &[Vec<f64>],
    eps: Option<f64>,
) -> Result<CertifiedPotential> {
    let sharp = sharpest_potential(model, xs, map, ys, eps)?;
    let domain = eps.unwrap_or(0.0);
    let cert = certify_strong_c_concavity(model, &sharp.potential, domain, xs, SUPERDIFF_TOL)?;
    Ok(CertifiedPotential {
        potential: sharp.potential,
        constant: cert.strong_constant_c,
        sharpened: sharp.constant,
        eps: domain,
    })
}

/// Geodesic distance squared averaged against the source weights.
pub(crate) fn mean_sq_distance(
    space: &GroundSpace<f64>,
    weights: &[f64],
    a: &[Vec<f64>],
    b: &[Vec<f64>],
) -> f64 {
    weights
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (p, q))| {
            let d = space.distance_unchecked(p, q);
            w * d * d
        })
        .sum()
}
