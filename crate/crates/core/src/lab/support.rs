use super::{BoundRow, SweepConfig};
use crate::cost::{h_profile, CostKind, CostModel};
use crate::error::{invalid, Error, Result};
use crate::ot::{hall_feasible_plan, mass_concentration, solve_discrete_ot, support_bound, DiscreteMeasure};
use crate::scalar::derive_seed;
use crate::sphere::{uniform_sample, GroundSpace};

/// Attempts per instance before giving up on the concentration filter.
pub const MAX_FILTER_RETRIES: u64 = 200;

/// Concentration threshold, strict with a margin against rounding in mass sums.
const CONCENTRATION_LIMIT: f64 = 0.125 - 1e-12;

/// A pair of uniform measures on n random atoms with M_μ(β), M_ν(β) < 1/8.
pub fn support_instance(
    space: &GroundSpace<f64>,
    n: usize,
    beta: f64,
    seed: u64,
) -> Result<(DiscreteMeasure<f64>, DiscreteMeasure<f64>)> {
    for attempt in 0..MAX_FILTER_RETRIES {
        let s = derive_seed(seed, attempt);
        let mu = DiscreteMeasure::uniform(space.clone(), uniform_sample(space, n, derive_seed(s, 1)))?;
        let nu = DiscreteMeasure::uniform(space.clone(), uniform_sample(space, n, derive_seed(s, 2)))?;
        if mass_concentration(&mu, beta)? < CONCENTRATION_LIMIT && mass_concentration(&nu, beta)? < CONCENTRATION_LIMIT {
            return Ok((mu, nu));
        }
    }
    Err(Error::InvalidParameter(format!(
        "no {n}-atom pair with mass concentration below 1/8 at radius {beta} after {MAX_FILTER_RETRIES} attempts"
    )))
}

/// Support localization rows per instance: δ ≤ min support distance of the optimal plan,
/// and the Hall plan keeps distance ≥ β/2 at cost ≤ h(β/2).
pub fn run_support_localization(config: &SweepConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    if config.cost != CostKind::Reflector {
        return invalid("support localization is stated for the reflector cost");
    }
    let model = CostModel::standard(CostKind::Reflector, 3)?;
    let h = h_profile(&model)?;
    let space = model.space().clone();
    let beta = config.beta;
    let (eps, c_eps, delta) = support_bound(&model, beta)?;
    let mut rows = Vec::new();
    for k in 0..config.instances {
        let (mu, nu) = support_instance(&space, config.n_source, beta, config.instance_seed(k))?;
        let m_mu = mass_concentration(&mu, beta)?;
        let m_nu = mass_concentration(&nu, beta)?;
        let sol = solve_discrete_ot(&model, &mu, &nu)?;
        let d_min = sol.plan.support_min_distance(&space, &mu, &nu)?;
        rows.push(
            BoundRow::new(format!("support/instance{k}"), beta, delta, d_min, 0.0)
                .with("eps", eps)
                .with("C_eps", c_eps)
                .with("M_mu", m_mu)
                .with("M_nu", m_nu),
        );
        let hall = hall_feasible_plan(&mu, &nu, beta)?;
        let hall_d = hall.support_min_distance(&space, &mu, &nu)?;
        rows.push(BoundRow::new(format!("hall-distance/instance{k}"), beta, beta / 2.0, hall_d, 0.0));
        let hall_cost = hall.cost(&model, &mu, &nu)?;
        rows.push(
            BoundRow::new(format!("hall-cost/instance{k}"), beta, hall_cost, h.h(beta / 2.0), 0.0)
                .with("optimal_cost", sol.primal_value),
        );
    }
    Ok(rows)
}
