use super::{BoundRow, SweepConfig};
use crate::applications::reflector_map;
use crate::c_geometry::sample_domain_pair;
use crate::cost::{h_profile, CostKind, CostModel};
use crate::error::{Error, Result};
use crate::ot::solve_discrete_ot;
use crate::ot::DiscreteMeasure;
use crate::scalar::{derive_seed, vecops::*};
use crate::sphere::{fibonacci_points, Rotation3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central difference step for the gradient check.
pub const GRAD_FD_STEP: f64 = 1e-5;

/// Gradient check by central differences along the tangent basis at x.
pub fn gradient_fd_error(model: &CostModel<f64>, x: &[f64], y: &[f64], h: f64) -> Result<(f64, f64)> {
    let space = model.space();
    let g = model.grad_x(x, y)?;
    let mut err = 0.0f64;
    for e in space.tangent_basis(x) {
        let at = |s: f64| -> Result<f64> {
            let p = space.exp(x, &scale(&e, s));
            model.cost(&p, y).finite().ok_or_else(|| Error::Domain("difference stencil hit the singular set".into()))
        };
        let fd = (at(h)? - at(-h)?) / (2.0 * h);
        err = err.max((fd - dot(&g, &e)).abs());
    }
    Ok((err, norm(&g)))
}

/// Calculus rows on `samples` pairs of D_eps: cexp(x, −∇x c(x,y)) = y within 1e−9,
/// gradient against central differences within 1e−5 relative to ‖∇x c‖, and for the reflector
/// cost c = h(d) within 1e−12.
pub fn run_calculus_check(config: &SweepConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    let dim = if config.cost.needs_sphere() { 3 } else { 2 };
    let model = CostModel::standard(config.cost, dim)?;
    let h = (config.cost == CostKind::Reflector).then(|| h_profile(&model)).transpose()?;
    let mut rows = Vec::new();
    for k in 0..config.samples {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, k as u64));
        let (x, y) = sample_domain_pair(&model, config.eps, &mut rng);
        let p = scale(&model.grad_x(&x, &y)?, -1.0);
        let back = model.cexp(&x, &p)?;
        rows.push(BoundRow::strict(format!("cexp/pair{k}"), k as f64, dist(&back, &y), 1e-9));
        let (err, g) = gradient_fd_error(&model, &x, &y, GRAD_FD_STEP)?;
        rows.push(BoundRow::strict(format!("grad/pair{k}"), k as f64, err, 1e-5 * g).with("grad_norm", g));
        if let Some(h) = h {
            let c = model.cost_finite(&x, &y)?;
            let d = model.space().distance(&x, &y)?;
            rows.push(BoundRow::strict(format!("h-profile/pair{k}"), d, (c - h.h(d)).abs(), 1e-12));
        }
    }
    Ok(rows)
}

/// Reflector design on grids: μ a Fibonacci grid, ν a randomly rotated Fibonacci grid. The
/// argmin map of the LP dual must reproduce the optimal plan: every support arc minimizes
/// c(x, ·) − ψ up to 1e−9. Index mismatches against the lowest-index argmin are reported.
pub fn run_reflector_design(config: &SweepConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    let model = CostModel::standard(CostKind::Reflector, 3)?;
    let space = model.space().clone();
    let mut rows = Vec::new();
    for k in 0..config.instances {
        let rot = Rotation3::random(config.instance_seed(k));
        let mu = DiscreteMeasure::uniform(space.clone(), fibonacci_points(config.n_source)?)?;
        let grid: Vec<Vec<f64>> = fibonacci_points(config.n_target)?;
        let nu = DiscreteMeasure::uniform(space.clone(), grid.iter().map(|p| rot.apply(p)).collect())?;
        let sol = solve_discrete_ot(&model, &mu, &nu)?;
        let t = reflector_map(&model, &sol.dual_psi, mu.points())?;
        let psi = sol.dual_psi.values();
        let value = |i: usize, j: usize| model.cost_finite(&mu.points()[i], &nu.points()[j]).map(|c| c - psi[j]);
        let mut worst = 0.0f64;
        let mut mismatches = 0usize;
        for &(i, j, _) in sol.plan.entries() {
            let best = value(i, t.indices[i])?;
            worst = worst.max(value(i, j)? - best);
            if !t.ties[i] && j != t.indices[i] {
                mismatches += 1;
            }
        }
        let ties = t.ties.iter().filter(|b| **b).count();
        rows.push(
            BoundRow::strict(format!("reflector-gap/instance{k}"), k as f64, sol.duality_gap, 1e-8)
                .with("primal", sol.primal_value),
        );
        rows.push(
            BoundRow::strict(format!("reflector-argmin/instance{k}"), k as f64, worst, 1e-9)
                .with("ties", ties as f64)
                .with("index_mismatches", mismatches as f64),
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calculus_rows_pass_for_every_cost() {
        for (cost, eps) in [
            (CostKind::Reflector, 0.3),
            (CostKind::Gauss, 0.2),
            (CostKind::NegInner, 0.3),
            (CostKind::Quadratic, 0.3),
        ] {
            let config = SweepConfig { cost, eps, samples: 30, seed: 4, ..SweepConfig::default() };
            let rows = run_calculus_check(&config).unwrap();
            let expected = if cost == CostKind::Reflector { 90 } else { 60 };
            assert_eq!(rows.len(), expected);
            assert!(rows.iter().all(|r| r.pass), "{cost}: {:?}", rows.iter().find(|r| !r.pass));
        }
    }

    #[test]
    fn reflector_design_rows_pass() {
        let config = SweepConfig { n_source: 60, n_target: 60, instances: 2, seed: 8, ..SweepConfig::default() };
        let rows = run_reflector_design(&config).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }
}
