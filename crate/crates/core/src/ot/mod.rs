//! Discrete optimal transport: exact solving, duals, W1 and plan diagnostics.

mod maxflow;
mod measure;
mod plan;
pub mod simplex;

pub use measure::{mass_concentration, DiscreteMeasure};
pub use plan::TransportPlan;
pub use simplex::{network_simplex, CostMatrix, TransportSolution};

use crate::concavity::Potential;
use crate::cost::{h_profile, CostModel};
use crate::error::{invalid, Error, HallWitness, Result};
use crate::scalar::{derive_seed, lit, to_f64, Scalar};
use crate::sphere::GroundSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest problem accepted by the exact solver (atoms per side).
pub const MAX_ATOMS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<S> {
    pub plan: TransportPlan<S>,
    pub primal_value: S,
    pub dual_phi: Potential<S>,
    pub dual_psi: Potential<S>,
    pub duality_gap: S,
}

fn check_size(n: usize, m: usize) -> Result<()> {
    if n > MAX_ATOMS || m > MAX_ATOMS {
        return Err(Error::SizeLimit(format!("{n}x{m} exceeds the {MAX_ATOMS}-atom cap of the exact solver")));
    }
    Ok(())
}

/// Improves a feasible dual pair by alternating c-transforms on the matrix:
/// u = v^c, then v = u^c̄. Both steps can only raise the dual objective.
fn tighten_duals<S: Scalar>(costs: &CostMatrix<S>, v0: &[S]) -> (Vec<S>, Vec<S>) {
    let (n, m) = (costs.rows(), costs.cols());
    let u: Vec<S> = (0..n)
        .map(|i| (0..m).filter_map(|j| costs.get(i, j).map(|c| c - v0[j])).fold(S::infinity(), |a, b| a.min(b)))
        .collect();
    let v: Vec<S> = (0..m)
        .map(|j| {
            let best = (0..n).filter_map(|i| costs.get(i, j).map(|c| c - u[i])).fold(S::infinity(), |a, b| a.min(b));
            if best.is_finite() {
                best
            } else {
                v0[j]
            }
        })
        .collect();
    (u, v)
}

/// Solves a transportation problem given by a cost matrix, with Hall diagnostics on failure.
pub fn solve_cost_matrix<S: Scalar>(costs: &CostMatrix<S>, a: &[S], b: &[S]) -> Result<TransportSolution<S>> {
    check_size(costs.rows(), costs.cols())?;
    match network_simplex(costs, a, b)? {
        Ok(mut sol) => {
            let (u, v) = tighten_duals(costs, &sol.v);
            let shift = v[0];
            sol.u = u.iter().map(|x| *x + shift).collect();
            sol.v = v.iter().map(|x| *x - shift).collect();
            Ok(sol)
        }
        Err(simplex::Infeasible) => {
            let flow = maxflow::bipartite_flow(a, b, |i, j| costs.get(i, j).is_some());
            let source_mass = flow.cut_sources.iter().fold(S::zero(), |acc, &i| acc + a[i]);
            let neighbour_mass = flow.cut_targets.iter().fold(S::zero(), |acc, &j| acc + b[j]);
            Err(Error::HallViolation(HallWitness {
                sources: flow.cut_sources,
                source_mass: to_f64(source_mass),
                neighbour_mass: to_f64(neighbour_mass),
            }))
        }
    }
}

fn same_space<S: Scalar>(model_space: &GroundSpace<S>, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<()> {
    if mu.space() != model_space || nu.space() != model_space {
        return invalid("measures must live on the cost model's ground space");
    }
    Ok(())
}

/// Exact Kantorovich solution with c-concave dual potentials, normalized by ψ(0) = 0.
pub fn solve_discrete_ot<S: Scalar>(
    model: &CostModel<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<SolveResult<S>> {
    same_space(model.space(), mu, nu)?;
    let costs =
        CostMatrix::from_fn(mu.len(), nu.len(), |i, j| model.cost(&mu.points()[i], &nu.points()[j]).finite());
    let sol = solve_cost_matrix(&costs, mu.weights(), nu.weights())?;
    let plan = TransportPlan::new(mu.len(), nu.len(), sol.entries)?;
    let dual = mu.weights().iter().zip(&sol.u).fold(S::zero(), |acc, (w, u)| acc + *w * *u)
        + nu.weights().iter().zip(&sol.v).fold(S::zero(), |acc, (w, v)| acc + *w * *v);
    let primal = plan.cost(model, mu, nu)?;
    Ok(SolveResult {
        plan,
        primal_value: primal,
        dual_phi: Potential::new(mu.points().to_vec(), sol.u)?,
        dual_psi: Potential::new(nu.points().to_vec(), sol.v)?,
        duality_gap: (primal - dual).abs(),
    })
}

/// Exact optimal value for an arbitrary ground metric between weighted point sets.
pub fn transport_value<S: Scalar>(
    a_points: &[Vec<S>],
    a: &[S],
    b_points: &[Vec<S>],
    b: &[S],
    dist: impl Fn(&[S], &[S]) -> S,
) -> Result<S> {
    let costs = CostMatrix::from_fn(a_points.len(), b_points.len(), |i, j| Some(dist(&a_points[i], &b_points[j])));
    Ok(solve_cost_matrix(&costs, a, b)?.value.max(S::zero()))
}

/// W1 for the geodesic (sphere) or Euclidean (box) distance.
pub fn wasserstein1<S: Scalar>(space: &GroundSpace<S>, a: &DiscreteMeasure<S>, b: &DiscreteMeasure<S>) -> Result<S> {
    if a.space() != space || b.space() != space {
        return invalid("measures must live on the given ground space");
    }
    transport_value(a.points(), a.weights(), b.points(), b.weights(), |x, y| space.distance_unchecked(x, y))
}

/// Pushforward weights T#μ on `cols` targets.
pub fn pushforward_weights<S: Scalar>(assignment: &[usize], weights: &[S], cols: usize) -> Vec<S> {
    let mut out = vec![S::zero(); cols];
    for (&j, &w) in assignment.iter().zip(weights) {
        out[j] = out[j] + w;
    }
    out
}

/// ∫ c dγ − ∫ c(x, T x) dμ for γ ∈ Γ(μ, T#μ), T given as indices into ν's atoms.
pub fn suboptimality_gap<S: Scalar>(
    model: &CostModel<S>,
    gamma: &TransportPlan<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    t: &[usize],
) -> Result<S> {
    if t.len() != mu.len() || t.iter().any(|&j| j >= nu.len()) {
        return invalid("map must send every source atom to a target atom");
    }
    let target = pushforward_weights(t, mu.weights(), nu.len());
    gamma.check_marginals(mu.weights(), &target, lit(1e-8))?;
    let plan_cost = gamma.cost(model, mu, nu)?;
    let mut map_cost = S::zero();
    for (i, &j) in t.iter().enumerate() {
        map_cost = map_cost + mu.weights()[i] * model.cost_finite(&mu.points()[i], &nu.points()[j])?;
    }
    Ok(plan_cost - map_cost)
}

/// ∫ d(T x, y) dγ(x, y), an upper bound for W1(γ, (Id, T)#μ).
pub fn plan_map_distance_w1<S: Scalar>(
    space: &GroundSpace<S>,
    gamma: &TransportPlan<S>,
    t: &[usize],
    nu: &DiscreteMeasure<S>,
) -> Result<S> {
    let mut total = S::zero();
    for &(i, j, m) in gamma.entries() {
        let ti = *t.get(i).ok_or_else(|| Error::DimensionMismatch { expected: gamma.rows(), got: t.len() })?;
        total = total + m * space.distance_unchecked(&nu.points()[ti], &nu.points()[j]);
    }
    Ok(total)
}

/// A plan supported on {d(x, y) ≥ β/2}, found by max-flow.
pub fn hall_feasible_plan<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    beta: S,
) -> Result<TransportPlan<S>> {
    if mu.space() != nu.space() {
        return invalid("measures must share a ground space");
    }
    let half = lit::<S>(0.5);
    for (name, m) in [("source", mu), ("target", nu)] {
        let c = mass_concentration(m, beta)?;
        if c > half {
            return invalid(format!("{name} mass concentration {c} exceeds 1/2 at radius {beta}"));
        }
    }
    let space = mu.space();
    let allowed = |i: usize, j: usize| space.distance_unchecked(&mu.points()[i], &nu.points()[j]) >= beta * half;
    let flow = maxflow::bipartite_flow(mu.weights(), nu.weights(), allowed);
    if flow.flow < S::one() - lit(1e-9) {
        let source_mass = flow.cut_sources.iter().fold(S::zero(), |acc, &i| acc + mu.weights()[i]);
        let neighbour_mass = flow.cut_targets.iter().fold(S::zero(), |acc, &j| acc + nu.weights()[j]);
        return Err(Error::HallViolation(HallWitness {
            sources: flow.cut_sources,
            source_mass: to_f64(source_mass),
            neighbour_mass: to_f64(neighbour_mass),
        }));
    }
    TransportPlan::new(mu.len(), nu.len(), flow.entries)
}

/// The support-localization chain: returns (ε, C_ε, δ) with ε = min(β, h⁻¹(4 h(β/2))),
/// C_ε = h(ε) + 2 h(ε/2) + 2 |c_min| and δ = h⁻¹(C_ε).
pub fn support_bound<S: Scalar>(model: &CostModel<S>, beta: S) -> Result<(S, S, S)> {
    let h = h_profile(model)?;
    let half = lit::<S>(0.5);
    let eps = beta.min(h.h_inv(lit::<S>(4.0) * h.h(beta * half))?);
    let c_eps = h.h(eps) + lit::<S>(2.0) * h.h(eps * half) + lit::<S>(2.0) * model.min_value().abs();
    let delta = h.h_inv(c_eps)?;
    Ok((eps, c_eps, delta))
}

/// Sampled lower estimate of the cost's Lipschitz constant on D_eps for the product
/// metric d(x,x') + d(y,y'): pairs of nearby configurations at random scales.
pub fn cost_lipschitz_estimate<S: Scalar>(model: &CostModel<S>, eps: S, n: usize, seed: u64) -> Result<S> {
    if n == 0 {
        return invalid("need at least one sample");
    }
    let space = model.space();
    let mut best = S::zero();
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
        let (x, y) = crate::c_geometry::sample_domain_pair(model, eps, &mut rng);
        let r = lit::<S>(10f64.powf(-3.0 + 2.0 * rng.gen::<f64>()));
        let x2 = space.random_step(&x, r, &mut rng);
        let y2 = space.random_step(&y, r, &mut rng);
        if !model.in_domain(&x2, &y2, eps) {
            continue;
        }
        let (Some(c1), Some(c2)) = (model.cost(&x, &y).finite(), model.cost(&x2, &y2).finite()) else {
            continue;
        };
        let d = space.distance_unchecked(&x, &x2) + space.distance_unchecked(&y, &y2);
        if d > S::zero() {
            best = best.max((c1 - c2).abs() / d);
        }
    }
    Ok(best)
}
