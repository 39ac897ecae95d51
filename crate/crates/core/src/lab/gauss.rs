use super::{mean_sq_distance, plan_map, union_points, BoundRow};
use crate::applications::{dual_potentials, gauss_curvature_measure, grid_map, ConvexBody};
use crate::concavity::{c_transform, c_transform_target, certify_strong_c_concavity, SUPERDIFF_TOL};
use crate::cost::{CostKind, CostModel};
use crate::error::{invalid, Error, Result};
use crate::ot::{solve_discrete_ot, wasserstein1, DiscreteMeasure};
use crate::scalar::derive_seed;
use crate::sphere::{fibonacci_points, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Discretization of the Gauss experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussGrid {
    /// Fibonacci normals carrying σ.
    pub normals: usize,
    /// Monte Carlo samples for the reported curvature-measure distance.
    pub samples: usize,
}

/// The reference ball K0 followed by five bodies in K(0.9, 1.1): K0 itself, K0 rotated by
/// 0.1, an ellipsoid-like stretch, a jittered polytope and a cube-like radial bulge.
pub fn gauss_family(seed: u64) -> Result<(ConvexBody, Vec<(String, ConvexBody)>)> {
    let k0 = ConvexBody::ball(3, 200)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() - 0.5).collect();
    let rotated = k0.rotated(&Rotation3::axis_angle(&axis, 0.1)?)?;
    let stretched = k0.scaled(&[1.05, 1.0, 0.95])?;
    let jittered = ConvexBody::new(
        fibonacci_points(300)?.into_iter().map(|p: Vec<f64>| {
            let s = 0.96 + 0.08 * rng.gen::<f64>();
            p.iter().map(|v| v * s).collect()
        }).collect(),
    )?;
    let bulged = ConvexBody::ball(3, 400)?
        .radially_perturbed(|u| 0.95 + 0.15 * (u.iter().map(|v| v.powi(4)).sum::<f64>() - 1.0 / 3.0))?;
    let family = vec![
        ("identity".to_string(), k0.clone()),
        ("rotation".to_string(), rotated),
        ("stretch".to_string(), stretched),
        ("jitter".to_string(), jittered),
        ("bulge".to_string(), bulged),
    ];
    Ok((k0, family))
}

/// σ-grid pushed through the inverse Gauss map: atoms (vertex directions, in vertex order),
/// weights, and the atom index of every normal.
fn gauss_pushforward(k: &ConvexBody, ns: &[Vec<f64>]) -> Result<(DiscreteMeasure<f64>, Vec<usize>)> {
    let mut counts = vec![0usize; k.vertices().len()];
    let mut vertex_of = Vec::with_capacity(ns.len());
    for n in ns {
        let g = k.gauss_map_inverse(&crate::sphere::UnitVector::new(n.clone())?)?;
        counts[g.vertex] += 1;
        vertex_of.push(g.vertex);
    }
    let mut atom_of_vertex = vec![usize::MAX; counts.len()];
    let mut pts = Vec::new();
    let mut ws = Vec::new();
    for (v, c) in counts.iter().enumerate() {
        if *c > 0 {
            atom_of_vertex[v] = pts.len();
            let x = &k.vertices()[v];
            let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            pts.push(x.iter().map(|a| a / r).collect());
            ws.push(*c as f64 / ns.len() as f64);
        }
    }
    let map = vertex_of.iter().map(|&v| atom_of_vertex[v]).collect();
    Ok((DiscreteMeasure::new(crate::sphere::GroundSpace::sphere(3)?, pts, ws)?, map))
}

/// Rows ‖d(T_K, T_L)‖²_{L²(σ)} ≤ (Lip ψ_K + Lip ψ_L)/C · W1(ν_K, ν_L) for each body L, where
/// ν = T#σ on the normal grid, T_K is the inverse Gauss map of K0, T_L the LP map for
/// (σ, G_L⁻¹#σ), checked against the argmin of its dual, and C the certified modulus of
/// ψ_K = ln ρ_K. Support rows check d(n, T n) ≤ arccos(r/R).
pub fn run_gauss_experiment(
    k0: &ConvexBody,
    family: &[(String, ConvexBody)],
    grid: GaussGrid,
    seed: u64,
) -> Result<Vec<BoundRow>> {
    if family.is_empty() || grid.normals == 0 || grid.samples == 0 {
        return invalid("need bodies, normals and samples");
    }
    let model = CostModel::standard(CostKind::Gauss, 3)?;
    let space = model.space().clone();
    let ns: Vec<Vec<f64>> = fibonacci_points(grid.normals)?;
    let sigma = DiscreteMeasure::uniform(space.clone(), ns.clone())?;
    let radii_k = k0.radii();
    let (nu_k, tk) = gauss_pushforward(k0, &ns)?;
    let mu_k_mc = gauss_curvature_measure(k0, grid.samples, derive_seed(seed, 0))?;
    let mut rows = Vec::new();
    for (idx, (name, body)) in family.iter().enumerate() {
        let radii = body.radii();
        if !radii.within(0.9, 1.1) {
            return Err(Error::InvalidParameter(format!(
                "body '{name}' has radii r = {}, R = {} outside K(0.9, 1.1)",
                radii.r, radii.big_r
            )));
        }
        let (target, _) = gauss_pushforward(body, &ns)?;
        let lp = solve_discrete_ot(&model, &sigma, &target)?;
        // the plan is integral, hence a map; it must minimize c(n, ·) − ψ_L for the LP dual
        let t_l = plan_map(&lp.plan)?;
        let dual_map = grid_map(&model, &lp.dual_psi, &ns)?;
        let value = |i: usize, j: usize| {
            model.cost_finite(&ns[i], &target.points()[j]).map(|c| c - lp.dual_psi.values()[j])
        };
        let mut ties = 0usize;
        for (i, (&j, &k)) in t_l.iter().zip(&dual_map.indices).enumerate() {
            let gap = value(i, j)? - value(i, k)?;
            if gap > 1e-9 * (1.0 + value(i, k)?.abs()) {
                return Err(Error::Certificate(format!("LP map leaves the dual argmin at normal {i} (gap {gap})")));
            }
            ties += usize::from(j != k);
        }
        let nu_l = DiscreteMeasure::new(space.clone(), target.points().to_vec(), target.weights().to_vec())?;

        let (ys, _) = union_points(nu_k.points(), nu_l.points());
        let (_, psi_k) = dual_potentials(k0, &ys, &ns)?;
        // c-concave extension of the LP dual to the union
        let phi_l = c_transform(&model, &lp.dual_psi, &ns)?.potential;
        let psi_l = c_transform_target(&model, &phi_l, &ys)?.potential;

        let a: Vec<Vec<f64>> = tk.iter().map(|&j| ys[j].clone()).collect();
        let b: Vec<Vec<f64>> = t_l.iter().map(|&j| target.points()[j].clone()).collect();
        let far = |pts: &[Vec<f64>]| {
            ns.iter().zip(pts).map(|(n, x)| space.distance_unchecked(n, x)).fold(0.0, f64::max)
        };
        let (far_k, far_l) = (far(&a), far(&b));
        let eps = (std::f64::consts::FRAC_PI_2 - far_k.max(far_l)) * (1.0 - 1e-12);
        let cert = certify_strong_c_concavity(&model, &psi_k, eps, &ns, SUPERDIFF_TOL)?;
        if !(cert.strong_constant_c > 0.0) {
            return Err(Error::Certificate(format!(
                "ln ρ of the reference body has no positive modulus on D_{eps} (C = {})",
                cert.strong_constant_c
            )));
        }
        let c = cert.strong_constant_c;
        let lip_k = psi_k.lipschitz_constant(&space)?;
        let lip_l = psi_l.lipschitz_constant(&space)?;
        let w1 = wasserstein1(&space, &nu_k, &nu_l)?;
        let lhs = mean_sq_distance(&space, sigma.weights(), &a, &b);
        let mu_l_mc = gauss_curvature_measure(body, grid.samples, derive_seed(seed, idx as u64 + 1))?;
        let w1_mc = wasserstein1(&space, &mu_k_mc, &mu_l_mc)?;
        rows.push(
            BoundRow::new(format!("gauss/{name}"), idx as f64, lhs, (lip_k + lip_l) / c * w1, 0.0)
                .with("C", c)
                .with("lip_psi_k", lip_k)
                .with("lip_psi_l", lip_l)
                .with("w1", w1)
                .with("w1_monte_carlo", w1_mc)
                .with("eps", eps)
                .with("ties", ties as f64)
                .with("r", radii.r)
                .with("R", radii.big_r),
        );
        rows.push(
            BoundRow::new(format!("gauss-support/{name}"), idx as f64, far_l, (radii.r / radii.big_r).acos(), 0.0)
                .with("support_eps", radii.support_epsilon()),
        );
    }
    let (far_k, bound_k) = (
        ns.iter().zip(&tk).map(|(n, &j)| space.distance_unchecked(n, &nu_k.points()[j])).fold(0.0, f64::max),
        (radii_k.r / radii_k.big_r).acos(),
    );
    rows.push(BoundRow::new("gauss-support/reference", -1.0, far_k, bound_k, 0.0));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_lies_in_the_anisotropy_class() {
        let (_, fam) = gauss_family(1).unwrap();
        assert_eq!(fam.len(), 5);
        for (name, b) in &fam {
            let r = b.radii();
            assert!(r.within(0.9, 1.1), "{name}: {r:?}");
        }
    }

    #[test]
    fn identical_body_gives_zero_lhs() {
        let (k0, fam) = gauss_family(1).unwrap();
        let rows =
            run_gauss_experiment(&k0, &fam[..1], GaussGrid { normals: 500, samples: 2000 }, 3).unwrap();
        assert_eq!(rows[0].lhs, 0.0);
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }
}
