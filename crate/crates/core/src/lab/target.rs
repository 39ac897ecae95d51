use super::{certify_map, displace, mean_sq_distance, plan_map, union_points, BoundRow, SweepConfig};
use crate::concavity::CERTIFICATE_TOL;
use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::ot::{solve_discrete_ot, wasserstein1, DiscreteMeasure};
use crate::sphere::{fibonacci_points, Rotation3};
use rayon::prelude::*;

/// Ingredients of ∫ ω(d(T0, T1)) dμ ≤ (Lip ψ0 + Lip ψ1) W1(ν0, ν1) with ω(r) = C r².
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityParts {
    /// ∫ d(T0 x, T1 x)² dμ.
    pub sq_distance: f64,
    /// Certified modulus of the strongly c-concave potential.
    pub constant: f64,
    /// The certified potential is ψ0 because ψ1 has no positive modulus.
    pub swapped: bool,
    pub lip0: f64,
    pub lip1: f64,
    pub w1: f64,
}

impl StabilityParts {
    pub fn rhs(&self) -> f64 {
        (self.lip0 + self.lip1) * self.w1
    }
}

/// Solves both problems, builds potentials on supp ν0 ∪ supp ν1 inducing the optimal maps,
/// certifies them and measures both sides.
pub fn stability_rows(
    model: &CostModel<f64>,
    mu: &DiscreteMeasure<f64>,
    nu0: &DiscreteMeasure<f64>,
    nu1: &DiscreteMeasure<f64>,
) -> Result<StabilityParts> {
    let space = model.space();
    let t0 = plan_map(&solve_discrete_ot(model, mu, nu0)?.plan)?;
    let t1 = plan_map(&solve_discrete_ot(model, mu, nu1)?.plan)?;
    let (ys, idx0) = union_points(nu1.points(), nu0.points());
    let map0: Vec<usize> = t0.iter().map(|&j| idx0[j]).collect();
    let cert1 = certify_map(model, mu.points(), &t1, &ys, None)?;
    let cert0 = certify_map(model, mu.points(), &map0, &ys, None)?;
    for (name, c) in [("psi0", &cert0), ("psi1", &cert1)] {
        if c.constant < -CERTIFICATE_TOL {
            return Err(Error::Certificate(format!(
                "{name} is not c-concave on the union of supports (constant {})",
                c.constant
            )));
        }
    }
    let (constant, swapped) = if cert1.constant > 0.0 {
        (cert1.constant, false)
    } else if cert0.constant > 0.0 {
        (cert0.constant, true)
    } else {
        return Err(Error::Certificate(format!(
            "no strongly c-concave potential: certified constants {} and {}",
            cert0.constant, cert1.constant
        )));
    };
    let a: Vec<Vec<f64>> = map0.iter().map(|&j| ys[j].clone()).collect();
    let b: Vec<Vec<f64>> = t1.iter().map(|&j| ys[j].clone()).collect();
    Ok(StabilityParts {
        sq_distance: mean_sq_distance(space, mu.weights(), &a, &b),
        constant,
        swapped,
        lip0: cert0.potential.lipschitz_constant(space)?,
        lip1: cert1.potential.lipschitz_constant(space)?,
        w1: wasserstein1(space, nu0, nu1)?,
    })
}

fn row(label: String, t: f64, parts: &StabilityParts, c: f64) -> BoundRow {
    BoundRow::new(label, t, c * parts.sq_distance, parts.rhs(), 0.0)
        .with("C", c)
        .with("C_row", parts.constant)
        .with("lip_psi0", parts.lip0)
        .with("lip_psi1", parts.lip1)
        .with("w1", parts.w1)
        .with("sq_distance", parts.sq_distance)
        .with("swapped", f64::from(u8::from(parts.swapped)))
}

/// Nearest-atom binning of ν onto a grid: returns ν_h and the largest displacement h.
pub(crate) fn bin_to_grid(nu: &DiscreteMeasure<f64>, grid: &[Vec<f64>]) -> Result<(DiscreteMeasure<f64>, f64)> {
    let space = nu.space();
    let mut mass = vec![0.0; grid.len()];
    let mut h = 0.0f64;
    for (p, w) in nu.points().iter().zip(nu.weights()) {
        let (k, d) = grid
            .iter()
            .enumerate()
            .map(|(k, g)| (k, space.distance_unchecked(p, g)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty grid");
        mass[k] += w;
        h = h.max(d);
    }
    let (pts, ws): (Vec<Vec<f64>>, Vec<f64>) =
        grid.iter().cloned().zip(mass).filter(|(_, m)| *m > 0.0).unzip();
    Ok((DiscreteMeasure::new(space.clone(), pts, ws)?, h))
}

/// Target stability sweep: μ a Fibonacci grid, ν0 a randomly rotated grid, ν_t the atoms of
/// ν0 moved by t along fixed random geodesics. ω uses the smallest certified constant of the
/// sweep, which is a valid modulus for every row. Each instance adds the binning rows.
pub fn run_target_stability(config: &SweepConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    let model = CostModel::standard(config.cost, 3)?;
    let space = model.space().clone();
    let mu = DiscreteMeasure::uniform(space.clone(), fibonacci_points(config.n_source)?)?;
    let grid: Vec<Vec<f64>> = fibonacci_points(config.n_target)?;
    let coarse: Vec<Vec<f64>> = fibonacci_points((config.n_target / 4).max(4))?;
    let mut rows = Vec::new();
    for k in 0..config.instances {
        let seed = config.instance_seed(k);
        let rot = Rotation3::random(seed);
        let nu0 = DiscreteMeasure::uniform(space.clone(), grid.iter().map(|p| rot.apply(p)).collect())?;
        let parts: Vec<StabilityParts> = config
            .perturbations
            .par_iter()
            .map(|&t| {
                let nu1 = DiscreteMeasure::uniform(space.clone(), displace(&space, nu0.points(), t, seed))?;
                stability_rows(&model, &mu, &nu0, &nu1)
            })
            .collect::<Result<_>>()?;
        let c = parts.iter().map(|p| p.constant).fold(f64::INFINITY, f64::min);
        for (t, p) in config.perturbations.iter().zip(&parts) {
            rows.push(row(format!("target/instance{k}"), *t, p, c));
        }
        let (nu_h, h) = bin_to_grid(&nu0, &coarse)?;
        let p = stability_rows(&model, &mu, &nu0, &nu_h)?;
        rows.push(BoundRow::new(format!("binning-w1/instance{k}"), h, p.w1, h, 0.0).with("h", h));
        let lhs = p.constant * p.sq_distance;
        rows.push(
            BoundRow::new(format!("binning/instance{k}"), h, lhs, (p.lip0 + p.lip1) * h, 0.0)
                .with("C", p.constant)
                .with("lip_psi0", p.lip0)
                .with("lip_psi1", p.lip1)
                .with("h", h)
                .with("w1", p.w1),
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostKind;
    use crate::sphere::GroundSpace;

    #[test]
    fn identical_targets_give_zero_rows() {
        let model = CostModel::standard(CostKind::Reflector, 3).unwrap();
        let s = model.space().clone();
        let mu = DiscreteMeasure::uniform(s.clone(), fibonacci_points(30).unwrap()).unwrap();
        let rot = Rotation3::random(2);
        let nu = DiscreteMeasure::uniform(s, mu.points().iter().map(|p| rot.apply(p)).collect()).unwrap();
        let p = stability_rows(&model, &mu, &nu, &nu).unwrap();
        assert_eq!(p.sq_distance, 0.0);
        assert_eq!(p.w1, 0.0);
        assert!(p.constant > 0.0);
        assert!(BoundRow::new("t0", 0.0, p.constant * p.sq_distance, p.rhs(), 0.0).pass);
    }

    #[test]
    fn small_sweep_passes() {
        let config = SweepConfig { n_source: 40, n_target: 40, instances: 2, seed: 5, ..SweepConfig::default() };
        let rows = run_target_stability(&config).unwrap();
        assert_eq!(rows.len(), 2 * 7);
        for r in &rows {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn binning_moves_mass_at_most_h() {
        let s = GroundSpace::sphere(3).unwrap();
        let nu = DiscreteMeasure::uniform(s.clone(), fibonacci_points(50).unwrap()).unwrap();
        let (nh, h) = bin_to_grid(&nu, &fibonacci_points(12).unwrap()).unwrap();
        assert!((nh.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(wasserstein1(&s, &nu, &nh).unwrap() <= h + 1e-12);
    }
}
