use super::{certify_map, displace, plan_map, BoundRow, CertifiedPotential, SweepConfig};
use crate::applications::grid_map;
use crate::cost::CostModel;
use crate::error::{invalid, Error, Result};
use crate::ot::{
    plan_map_distance_w1, solve_discrete_ot, suboptimality_gap, transport_value, wasserstein1, DiscreteMeasure,
    TransportPlan,
};
use crate::scalar::derive_seed;
use crate::sphere::uniform_sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest plan support accepted by the product-space W1 solver.
pub const PRODUCT_LP_CAP: usize = 80;

/// An optimal map between random uniform measures with a certified potential.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedInstance {
    pub model: CostModel<f64>,
    pub mu: DiscreteMeasure<f64>,
    pub nu: DiscreteMeasure<f64>,
    pub map: Vec<usize>,
    pub primal_value: f64,
    pub certificate: CertifiedPotential,
}

/// Builds the instance. With `eps`, the certificate is restricted to D_eps, shrinking eps
/// by halves until every optimal pair lies in the domain.
pub fn certified_instance(model: &CostModel<f64>, n: usize, seed: u64, eps: Option<f64>) -> Result<CertifiedInstance> {
    let space = model.space().clone();
    let mu = DiscreteMeasure::uniform(space.clone(), uniform_sample(&space, n, derive_seed(seed, 1)))?;
    let nu = DiscreteMeasure::uniform(space.clone(), uniform_sample(&space, n, derive_seed(seed, 2)))?;
    let sol = solve_discrete_ot(model, &mu, &nu)?;
    let map = plan_map(&sol.plan)?;
    let eps = eps.map(|mut e| {
        while e > 1e-9 && mu.points().iter().zip(&map).any(|(x, &j)| !model.in_domain(x, &nu.points()[j], e)) {
            e *= 0.5;
        }
        e
    });
    let certificate = certify_map(model, mu.points(), &map, nu.points(), eps)?;
    if !(certificate.constant > 0.0) {
        return Err(Error::Certificate(format!(
            "optimal potential has no positive modulus (C = {})",
            certificate.constant
        )));
    }
    Ok(CertifiedInstance { model: model.clone(), mu, nu, map, primal_value: sol.primal_value, certificate })
}

/// Random permutation with every pair (i, σ(i)) in D_eps, repaired by admissible swaps.
fn admissible_permutation<R: Rng>(inst: &CertifiedInstance, eps: f64, rng: &mut R) -> Result<Vec<usize>> {
    let n = inst.mu.len();
    let ok = |i: usize, j: usize| inst.model.in_domain(&inst.mu.points()[i], &inst.nu.points()[j], eps);
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(rng);
    for i in 0..n {
        let mut tries = 0;
        while !ok(i, sigma[i]) {
            let j = rng.gen_range(0..n);
            if ok(i, sigma[j]) && ok(j, sigma[i]) {
                sigma.swap(i, j);
            }
            tries += 1;
            if tries > 100 * n {
                return Err(Error::Infeasible("no admissible permutation found on D_eps".into()));
            }
        }
    }
    Ok(sigma)
}

/// Gap rows: for mixtures γ = (1 − w) γ_T + w γ_σ check C ∫ d(T x, y)² dγ ≤ gap(γ) and
/// ∫ d(T x, y) dγ ≤ √(gap / C). Weight 0 and 1 are always included.
pub fn run_gap_bound(config: &SweepConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    let model = CostModel::standard(config.cost, 3)?;
    let space = model.space().clone();
    let mut rows = Vec::new();
    for k in 0..config.instances {
        let seed = config.instance_seed(k);
        let inst = certified_instance(&model, config.n_source, seed, Some(config.eps))?;
        let c = inst.certificate.constant;
        let eps = inst.certificate.eps;
        let gamma_t = TransportPlan::from_assignment(&inst.map, inst.mu.weights(), inst.nu.len())?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
        for m in 0..config.mixtures {
            let w = match m {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen::<f64>(),
            };
            let sigma = admissible_permutation(&inst, eps, &mut rng)?;
            let other = TransportPlan::from_assignment(&sigma, inst.mu.weights(), inst.nu.len())?;
            let gamma = gamma_t.mix(&other, w)?;
            let gap = suboptimality_gap(&model, &gamma, &inst.mu, &inst.nu, &inst.map)?;
            let sq: f64 = gamma
                .entries()
                .iter()
                .map(|&(i, j, mass)| {
                    let d = space.distance_unchecked(&inst.nu.points()[inst.map[i]], &inst.nu.points()[j]);
                    mass * d * d
                })
                .sum();
            let dist = plan_map_distance_w1(&space, &gamma, &inst.map, &inst.nu)?;
            let label = format!("instance{k}/mixture{m}");
            rows.push(
                BoundRow::new(format!("gap/{label}"), w, c * sq, gap, 0.0)
                    .with("C", c)
                    .with("eps", eps)
                    .with("sq_distance", sq),
            );
            rows.push(
                BoundRow::new(format!("gap-w1/{label}"), w, dist, (gap.max(0.0) / c).sqrt(), 0.0)
                    .with("C", c)
                    .with("gap", gap),
            );
        }
    }
    Ok(rows)
}

/// Least-squares slope of log y against log x over positive pairs.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// W1 between two plans for the product metric d(x, x') + d(y, y').
fn product_w1(
    inst: &CertifiedInstance,
    a: &TransportPlan<f64>,
    b: &TransportPlan<f64>,
    mu_b: &DiscreteMeasure<f64>,
    nu_b: &DiscreteMeasure<f64>,
) -> Result<f64> {
    let space = inst.model.space();
    let pairs = |p: &TransportPlan<f64>, mu: &DiscreteMeasure<f64>, nu: &DiscreteMeasure<f64>| {
        let (pts, ws): (Vec<Vec<f64>>, Vec<f64>) = p
            .entries()
            .iter()
            .map(|&(i, j, m)| ([mu.points()[i].as_slice(), nu.points()[j].as_slice()].concat(), m))
            .unzip();
        (pts, ws)
    };
    let (pa, wa) = pairs(a, &inst.mu, &inst.nu);
    let (pb, wb) = pairs(b, mu_b, nu_b);
    let d = space.dim();
    transport_value(&pa, &wa, &pb, &wb, |u, v| {
        space.distance_unchecked(&u[..d], &v[..d]) + space.distance_unchecked(&u[d..], &v[d..])
    })
}

/// Both-measure rows on the truncated cost: W1(γ_T, γ̃) ≤ ε + √(2 Lip(c) ε / C) with
/// ε = W1(μ̃, μ) + W1(ν, ν̃), plus the log-log slope check of each instance.
pub fn run_both_measures(config: &SweepConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    if config.n_source > PRODUCT_LP_CAP {
        return Err(Error::SizeLimit(format!(
            "the product-space LP is capped at {PRODUCT_LP_CAP} atoms per side; use smaller grids"
        )));
    }
    let model = CostModel::standard(config.cost, 3)?.truncated(config.eps)?;
    let lip = model.lipschitz_constant()?;
    let space = model.space().clone();
    let mut rows = Vec::new();
    for k in 0..config.instances {
        let seed = config.instance_seed(k);
        let inst = certified_instance(&model, config.n_source, seed, None)?;
        let c = inst.certificate.constant;
        let gamma_t = TransportPlan::from_assignment(&inst.map, inst.mu.weights(), inst.nu.len())?;
        let mut observed = Vec::new();
        for &t in &config.perturbations {
            let mu_t = DiscreteMeasure::new(
                space.clone(),
                displace(&space, inst.mu.points(), t, derive_seed(seed, 4)),
                inst.mu.weights().to_vec(),
            )?;
            let nu_t = DiscreteMeasure::new(
                space.clone(),
                displace(&space, inst.nu.points(), t, derive_seed(seed, 5)),
                inst.nu.weights().to_vec(),
            )?;
            let gamma = solve_discrete_ot(&model, &mu_t, &nu_t)?.plan;
            let e = wasserstein1(&space, &mu_t, &inst.mu)? + wasserstein1(&space, &inst.nu, &nu_t)?;
            let lhs = product_w1(&inst, &gamma_t, &gamma, &mu_t, &nu_t)?;
            let rhs = e + (2.0 * lip * e / c).sqrt();
            observed.push((e, lhs));
            rows.push(
                BoundRow::new(format!("both/instance{k}"), t, lhs, rhs, 0.0)
                    .with("C", c)
                    .with("lip_c", lip)
                    .with("eps_w1", e),
            );
        }
        if let Some(slope) = loglog_slope(&observed) {
            rows.push(BoundRow::new(format!("slope-min/instance{k}"), 0.0, 0.4, slope, 0.0).with("slope", slope));
            rows.push(BoundRow::new(format!("slope-max/instance{k}"), 0.0, slope, 1.1, 0.0).with("slope", slope));
        }
    }
    Ok(rows)
}

/// Hölder rows d(T x, T x')² ≤ (Lip(c) / C) d(x, x') over random source pairs; the first
/// pair is diagonal. T is recomputed from the potential.
pub fn run_holder_check(
    model: &CostModel<f64>,
    psi: &CertifiedPotential,
    sources: &[Vec<f64>],
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<BoundRow>> {
    if sources.is_empty() || n_pairs == 0 {
        return invalid("need sources and at least one pair");
    }
    if !(psi.constant > 0.0) {
        return Err(Error::Certificate(format!("potential has no positive modulus (C = {})", psi.constant)));
    }
    let lip = model.lipschitz_constant()?;
    let space = model.space();
    let t = grid_map(model, &psi.potential, sources)?;
    let ys = psi.potential.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sources.len();
    Ok((0..n_pairs)
        .map(|p| {
            let i = rng.gen_range(0..n);
            let j = if p == 0 { i } else { rng.gen_range(0..n) };
            let dx = space.distance_unchecked(&sources[i], &sources[j]);
            let dy = space.distance_unchecked(&ys[t.indices[i]], &ys[t.indices[j]]);
            BoundRow::new(format!("holder/pair{p}"), dx, dy * dy, lip / psi.constant * dx, 0.0)
                .with("C", psi.constant)
                .with("lip_c", lip)
        })
        .collect())
}

/// Hölder rows for the optimal map of a certified random instance on the truncated cost.
pub fn run_holder_experiment(config: &SweepConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    let model = CostModel::standard(config.cost, 3)?.truncated(config.eps)?;
    let inst = certified_instance(&model, config.n_source, config.seed, None)?;
    run_holder_check(&model, &inst.certificate, inst.mu.points(), config.pairs, derive_seed(config.seed, 7))
}
