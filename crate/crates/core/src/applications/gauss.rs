use super::body::ConvexBody;
use crate::concavity::Potential;
use crate::error::{invalid, Result};
use crate::ot::DiscreteMeasure;
use crate::scalar::{derive_seed, vecops::*};
use crate::sphere::{GroundSpace, UnitVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Monte Carlo Gauss curvature measure: uniform normals pushed to vertex directions.
/// Atoms are listed in vertex order; vertices receiving no sample are dropped.
pub fn gauss_curvature_measure(k: &ConvexBody, n_samples: usize, seed: u64) -> Result<DiscreteMeasure<f64>> {
    if n_samples == 0 {
        return invalid("need at least one sample");
    }
    let space = GroundSpace::sphere(k.dim())?;
    let hits: Vec<usize> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, s as u64));
            k.argmax(&space.sample_point(&mut rng)).0
        })
        .collect();
    let mut counts = vec![0usize; k.vertices().len()];
    for h in hits {
        counts[h] += 1;
    }
    let (points, weights): (Vec<Vec<f64>>, Vec<f64>) = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(v, c)| (scale(&k.vertices()[v], 1.0 / norm(&k.vertices()[v])), *c as f64 / n_samples as f64))
        .unzip();
    DiscreteMeasure::new(space, points, weights)
}

/// φ = −ln h_K on the normals `ns` and ψ = ln ρ_K on the directions `xs`.
pub fn dual_potentials(k: &ConvexBody, xs: &[Vec<f64>], ns: &[Vec<f64>]) -> Result<(Potential<f64>, Potential<f64>)> {
    let phi = ns
        .iter()
        .map(|n| Ok(-k.support_function(&UnitVector::new(n.clone())?)?.ln()))
        .collect::<Result<Vec<f64>>>()?;
    let psi = xs
        .iter()
        .map(|x| Ok(k.radial_function(&UnitVector::new(x.clone())?)?.ln()))
        .collect::<Result<Vec<f64>>>()?;
    Ok((Potential::new(ns.to_vec(), phi)?, Potential::new(xs.to_vec(), psi)?))
}

/// Normalized area of a spherical cap of geodesic radius `a` on S^{d−1}.
pub fn cap_area(d: usize, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if a >= PI {
        return 1.0;
    }
    match d {
        2 => a / PI,
        3 => (1.0 - a.cos()) / 2.0,
        _ => {
            // ∫₀^a sin^{d−2} / ∫₀^π sin^{d−2} by composite Simpson
            let integral = |hi: f64| {
                let m = 2000;
                let h = hi / m as f64;
                let f = |t: f64| t.sin().powi(d as i32 - 2);
                let mut s = f(0.0) + f(hi);
                for i in 1..m {
                    s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
                }
                s * h / 3.0
            };
            integral(a) / integral(PI)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapReport {
    pub caps_checked: usize,
    pub violations: usize,
    /// min over caps of σ(Θ_{π/2}) − μ(Θ); must be positive.
    pub worst_margin: f64,
    /// (center, radius) of the worst cap.
    pub worst_cap: Option<(Vec<f64>, f64)>,
}

/// Screens μ(Θ) < σ(Θ_{π/2}) on random closed caps Θ of radius in (0, π/2).
pub fn verify_aleksandrov_caps(mu: &DiscreteMeasure<f64>, n_caps: usize, seed: u64) -> Result<CapReport> {
    let space = mu.space().clone();
    if !space.is_sphere() {
        return invalid("the cap condition is defined on the sphere");
    }
    if n_caps == 0 {
        return invalid("need at least one cap");
    }
    let d = space.dim();
    let rows: Vec<(f64, Vec<f64>, f64)> = (0..n_caps)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
            let center = space.sample_point(&mut rng);
            let r = (1.0 - rng.gen::<f64>()) * PI / 2.0;
            let inside: f64 = mu
                .points()
                .iter()
                .zip(mu.weights())
                .filter(|(p, _)| space.distance_unchecked(p, &center) <= r)
                .map(|(_, w)| *w)
                .sum();
            (cap_area(d, r + PI / 2.0) - inside, center, r)
        })
        .collect();
    let mut report = CapReport { caps_checked: n_caps, violations: 0, worst_margin: f64::INFINITY, worst_cap: None };
    for (margin, center, r) in rows {
        if margin <= 0.0 {
            report.violations += 1;
        }
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_cap = Some((center, r));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostKind, CostModel};
    use crate::ot::{mass_concentration, solve_discrete_ot};
    use crate::sphere::{fibonacci_points, uniform_sample, Rotation3};

    #[test]
    fn cube_has_eight_equal_atoms() {
        let mu = gauss_curvature_measure(&ConvexBody::cube(3).unwrap(), 40000, 1).unwrap();
        assert_eq!(mu.len(), 8);
        for w in mu.weights() {
            assert!((w - 0.125).abs() < 0.01, "{w}");
        }
    }

    #[test]
    fn square_has_four_equal_atoms() {
        let mu = gauss_curvature_measure(&ConvexBody::cube(2).unwrap(), 40000, 2).unwrap();
        assert_eq!(mu.len(), 4);
        for w in mu.weights() {
            assert!((w - 0.25).abs() < 0.01, "{w}");
        }
    }

    #[test]
    fn homothety_invariance_is_exact() {
        let k = ConvexBody::random_polytope(3, 40, 5, 0.5).unwrap();
        let base = gauss_curvature_measure(&k, 5000, 7).unwrap();
        for lam in [0.5, 2.0] {
            let scaled = gauss_curvature_measure(&k.scaled(&[lam; 3]).unwrap(), 5000, 7).unwrap();
            assert_eq!(scaled, base);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let k = ConvexBody::random_polytope(3, 30, 6, 0.5).unwrap();
        let rot = Rotation3::axis_angle(&[1.0, 2.0, 0.5], 0.7).unwrap();
        let a = gauss_curvature_measure(&k, 40000, 1).unwrap();
        let b = gauss_curvature_measure(&k.rotated(&rot).unwrap(), 40000, 2).unwrap();
        let mut tv = 0.0;
        for (p, w) in a.points().iter().zip(a.weights()) {
            let q = rot.apply(p);
            let wb: f64 = b.points().iter().zip(b.weights()).filter(|(r, _)| dist(r, &q) < 1e-9).map(|(_, w)| *w).sum();
            tv += (w - wb).abs();
        }
        assert!(tv / 2.0 < 0.01, "total variation {tv}");
    }

    #[test]
    fn ball_measure_is_near_uniform() {
        let mu = gauss_curvature_measure(&ConvexBody::ball(3, 2000).unwrap(), 100000, 3).unwrap();
        let m = mass_concentration(&mu, 0.3).unwrap();
        let cap = cap_area(3, 0.3);
        assert!((m - cap).abs() < 0.35 * cap, "{m} vs {cap}");
    }

    #[test]
    fn potentials_of_balls() {
        let xs: Vec<Vec<f64>> = fibonacci_points(50).unwrap();
        let k = ConvexBody::ball(3, 2000).unwrap();
        let (phi, psi) = dual_potentials(&k, &xs, &xs).unwrap();
        assert!(phi.values().iter().chain(psi.values()).all(|v| v.abs() < 5e-3));
        let k2 = k.scaled(&[2.0; 3]).unwrap();
        let (phi2, psi2) = dual_potentials(&k2, &xs, &xs).unwrap();
        for i in 0..xs.len() {
            assert!((phi2.values()[i] - phi.values()[i] + 2f64.ln()).abs() < 1e-12);
            assert!((psi2.values()[i] - psi.values()[i] - 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn potentials_are_admissible() {
        let model = CostModel::standard(CostKind::Gauss, 3).unwrap();
        let k = ConvexBody::random_polytope(3, 80, 8, 0.6).unwrap();
        let xs = uniform_sample(model.space(), 1000, 1);
        let ns = uniform_sample(model.space(), 1000, 2);
        let (phi, psi) = dual_potentials(&k, &xs, &ns).unwrap();
        for i in 0..1000 {
            if let Some(c) = model.cost(&xs[i], &ns[i]).finite() {
                assert!(phi.values()[i] + psi.values()[i] <= c + 1e-10);
            }
        }
    }

    #[test]
    fn cube_dual_matches_lp_primal() {
        let model = CostModel::standard(CostKind::Gauss, 3).unwrap();
        let k = ConvexBody::cube(3).unwrap();
        let ns = fibonacci_points(2000).unwrap();
        let sigma = DiscreteMeasure::uniform(model.space().clone(), ns.clone()).unwrap();
        let mu_k = gauss_curvature_measure(&k, 40000, 4).unwrap();
        let (phi, psi) = dual_potentials(&k, mu_k.points(), &ns).unwrap();
        let dual: f64 = phi.values().iter().map(|v| v / 2000.0).sum::<f64>()
            + psi.values().iter().zip(mu_k.weights()).map(|(v, w)| v * w).sum::<f64>();
        let primal = solve_discrete_ot(&model, &sigma, &mu_k).unwrap().primal_value;
        assert!((dual - primal).abs() < 0.02, "{dual} vs {primal}");
    }

    #[test]
    fn cap_screen() {
        let s = GroundSpace::sphere(3).unwrap();
        let grid = DiscreteMeasure::uniform(s.clone(), fibonacci_points(2000).unwrap()).unwrap();
        assert_eq!(verify_aleksandrov_caps(&grid, 300, 1).unwrap().violations, 0);
        let dirac = DiscreteMeasure::dirac(s, vec![0.0, 0.0, 1.0]).unwrap();
        let r = verify_aleksandrov_caps(&dirac, 300, 1).unwrap();
        assert!(r.violations > 0 && r.worst_margin < 0.0);
        let cube = gauss_curvature_measure(&ConvexBody::cube(3).unwrap(), 40000, 1).unwrap();
        assert_eq!(verify_aleksandrov_caps(&cube, 500, 2).unwrap().violations, 0);
    }

    #[test]
    fn cap_areas() {
        for d in [2, 3] {
            for a in [0.3, 1.0, 2.5] {
                let generic = {
                    let m = 20000;
                    let h = a / m as f64;
                    let f = |t: f64| t.sin().powi(d as i32 - 2);
                    let full: f64 = (0..m).map(|i| f((i as f64 + 0.5) * PI / m as f64) * PI / m as f64).sum();
                    (0..m).map(|i| f((i as f64 + 0.5) * h) * h).sum::<f64>() / full
                };
                assert!((cap_area(d, a) - generic).abs() < 1e-6);
            }
        }
        assert!((cap_area(4, PI / 2.0) - 0.5).abs() < 1e-9);
    }
}
