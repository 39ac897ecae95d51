//! c-segments, c-convexity of D_eps, and the Ma–Trudinger–Wang tensor.

use crate::cost::{CostKind, CostModel};
use crate::error::{invalid, Error, Result};
use crate::scalar::{derive_seed, lit, vecops::*, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Point y_t = cexp_x((1 − t) p0 + t p1) with p_i = −∇x c(x, y_i).
pub fn c_segment<S: Scalar>(model: &CostModel<S>, x: &[S], y0: &[S], y1: &[S], t: S) -> Result<Vec<S>> {
    let p0 = neg(&model.grad_x(x, y0)?);
    let p1 = neg(&model.grad_x(x, y1)?);
    let p = axpy(&scale(&p0, S::one() - t), t, &p1);
    model.cexp(x, &p)
}

fn neg<S: Scalar>(v: &[S]) -> Vec<S> {
    scale(v, -S::one())
}

/// Draws y with (x, y) in D_eps. On the sphere the law is area-uniform on the admissible
/// cap (exactly so for S^2); on boxes it is uniform.
pub fn sample_partner<S: Scalar, R: Rng>(model: &CostModel<S>, x: &[S], eps: S, rng: &mut R) -> Vec<S> {
    let space = model.space();
    let (lo, hi) = match model.kind() {
        CostKind::Reflector => (-1.0, crate::scalar::to_f64(eps).cos()),
        CostKind::Gauss => ((std::f64::consts::FRAC_PI_2 - crate::scalar::to_f64(eps)).cos(), 1.0),
        _ => return space.sample_point(rng),
    };
    let cos_r: f64 = lo + (hi - lo) * rng.gen::<f64>();
    let r = cos_r.clamp(-1.0, 1.0).acos();
    let dir = space.random_unit_tangent(x, rng);
    let y = space.exp(x, &scale(&dir, lit(r)));
    if model.in_domain(x, &y, eps) {
        y
    } else {
        // rounding at the cap boundary: nudge inward
        let r = match model.kind() {
            CostKind::Reflector => r + 1e-12,
            _ => r - 1e-12,
        };
        space.exp(x, &scale(&dir, lit(r)))
    }
}

/// A pair (x, y) in D_eps.
pub fn sample_domain_pair<S: Scalar, R: Rng>(model: &CostModel<S>, eps: S, rng: &mut R) -> (Vec<S>, Vec<S>) {
    let x = model.space().sample_point(rng);
    let y = sample_partner(model, &x, eps, rng);
    (x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityViolation<S> {
    pub x: Vec<S>,
    pub y0: Vec<S>,
    pub y1: Vec<S>,
    pub t: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport<S> {
    pub pairs_checked: usize,
    pub points_checked: usize,
    pub violations: Vec<ConvexityViolation<S>>,
    /// Reflector only: max |‖p0‖² − (4/‖x − y0‖² − 1)|.
    pub max_norm_identity_error: Option<S>,
    /// Segments where max_t ‖p_t‖ exceeded max(‖p0‖, ‖p1‖).
    pub norm_bound_failures: usize,
}

/// Samples segments with both endpoints in D_eps and reports points y_t leaving D_eps.
pub fn check_c_convexity<S: Scalar>(
    model: &CostModel<S>,
    eps: S,
    n_pairs: usize,
    n_t: usize,
    seed: u64,
) -> Result<ConvexityReport<S>> {
    match model.kind() {
        CostKind::Reflector if !(eps > S::zero() && eps < lit(2.0)) => return invalid("reflector needs eps in (0, 2)"),
        CostKind::Gauss if !(eps > S::zero() && eps < S::FRAC_PI_2()) => return invalid("gauss needs eps in (0, π/2)"),
        _ => {}
    }
    if n_t < 2 {
        return invalid("need at least two points per segment");
    }
    let slack = lit::<S>(1e-9);
    let domain_eps = match model.kind() {
        CostKind::Reflector => eps - slack,
        CostKind::Gauss => eps - slack,
        _ => eps,
    };
    let results: Vec<Result<(Vec<ConvexityViolation<S>>, Option<S>, bool)>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let x = model.space().sample_point(&mut rng);
            let y0 = sample_partner(model, &x, eps, &mut rng);
            let y1 = sample_partner(model, &x, eps, &mut rng);
            let p0 = neg(&model.grad_x(&x, &y0)?);
            let p1 = neg(&model.grad_x(&x, &y1)?);
            let mut viol = Vec::new();
            let mut max_pt = S::zero();
            for k in 0..n_t {
                let t = lit::<S>(k as f64 / (n_t - 1) as f64);
                let p = axpy(&scale(&p0, S::one() - t), t, &p1);
                max_pt = max_pt.max(norm(&p));
                let yt = model.cexp(&x, &p)?;
                if !model.in_domain(&x, &yt, domain_eps) {
                    viol.push(ConvexityViolation { x: x.clone(), y0: y0.clone(), y1: y1.clone(), t });
                }
            }
            let ident = (model.kind() == CostKind::Reflector).then(|| {
                let d2 = dot(&sub(&x, &y0), &sub(&x, &y0));
                (dot(&p0, &p0) - (lit::<S>(4.0) / d2 - S::one())).abs()
            });
            let bound = norm(&p0).max(norm(&p1));
            Ok((viol, ident, max_pt > bound * (S::one() + slack)))
        })
        .collect();
    let mut report = ConvexityReport {
        pairs_checked: n_pairs,
        points_checked: n_pairs * n_t,
        violations: Vec::new(),
        max_norm_identity_error: None,
        norm_bound_failures: 0,
    };
    for r in results {
        let (v, ident, bad) = r?;
        report.violations.extend(v);
        if let Some(e) = ident {
            report.max_norm_identity_error = Some(report.max_norm_identity_error.map_or(e, |m: S| m.max(e)));
        }
        report.norm_bound_failures += bad as usize;
    }
    Ok(report)
}

/// Tangent vector η̃ = −(D²xy c)ᵀ η at y for η tangent at x, in ambient coordinates.
pub fn eta_tilde<S: Scalar>(model: &CostModel<S>, x: &[S], y: &[S], eta: &[S]) -> Result<Vec<S>> {
    let a = model.cross_hessian(x, y)?;
    let fx = model.space().tangent_basis(x);
    let fy = model.space().tangent_basis(y);
    let coords: Vec<S> = fx.iter().map(|e| dot(e, eta)).collect();
    let mut out = vec![S::zero(); y.len()];
    for (j, f) in fy.iter().enumerate() {
        let c = (0..fx.len()).fold(S::zero(), |acc, i| acc + a[(i, j)] * coords[i]);
        out = axpy(&out, -c, f);
    }
    Ok(out)
}

/// MTW tensor S_c(x,y)(η, ζ) with η tangent at x and ζ tangent at y.
pub fn mtw_tensor<S: Scalar>(model: &CostModel<S>, x: &[S], y: &[S], zeta: &[S], eta: &[S], fd_step: S) -> Result<S> {
    let et = eta_tilde(model, x, y, eta)?;
    mtw_tensor_q(model, x, y, zeta, &et, fd_step)
}

/// MTW tensor with the transported direction η̃ (tangent at y) given directly:
/// −3/2 ∂²_a ∂²_s c(cexp_y(q0 + a η̃), exp_y(s ζ)) at q0 = −∇y c(x, y).
pub fn mtw_tensor_q<S: Scalar>(
    model: &CostModel<S>,
    x: &[S],
    y: &[S],
    zeta: &[S],
    eta_t: &[S],
    fd_step: S,
) -> Result<S> {
    if !(fd_step > S::zero()) {
        return invalid("fd_step must be positive");
    }
    let space = model.space();
    let q0 = neg(&model.grad_y(x, y)?);
    let inner_step = fd_step * lit(0.1);
    // ∂²_s c(x', exp_y(s ζ)) at s = 0 from the analytic gradient along the geodesic.
    let hess_along = |xp: &[S]| -> Result<S> {
        let g = |s: S| -> Result<S> {
            let p = space.exp(y, &scale(zeta, s));
            let vel = space.geodesic_velocity(y, zeta, s);
            Ok(dot(&model.grad_y(xp, &p)?, &vel))
        };
        let d = |k: S| -> Result<S> { Ok((g(k)? - g(-k)?) / (lit::<S>(2.0) * k)) };
        Ok((lit::<S>(4.0) * d(inner_step * lit(0.5))? - d(inner_step)?) / lit(3.0))
    };
    let at = |a: S| -> Result<S> {
        let xa = model.cexp_y(y, &axpy(&q0, a, eta_t))?;
        hess_along(&xa).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("MTW stencil step a = {a} left the domain: {m}")),
            other => other,
        })
    };
    let center = at(S::zero())?;
    let second = |h: S| -> Result<S> { Ok((at(h)? - lit::<S>(2.0) * center + at(-h)?) / (h * h)) };
    let d_h = second(fd_step)?;
    let d_h2 = second(fd_step * lit(0.5))?;
    let rich = (lit::<S>(4.0) * d_h2 - d_h) / lit(3.0);
    Ok(lit::<S>(-1.5) * rich)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtwSample<S> {
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub zeta: Vec<S>,
    pub eta: Vec<S>,
    pub eta_tilde: Vec<S>,
    /// S_c / (‖ζ‖² ‖η̃‖²)
    pub normalized_value: S,
    /// |⟨ζ, η̃⟩| / (‖ζ‖ ‖η̃‖)
    pub alignment: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtwReport<S> {
    /// Minimum of S_c/(‖ζ‖²‖η̃‖²) over non-degenerate samples.
    pub min_tensor_value: S,
    /// Sample requiring the largest constant, when that constant is positive.
    pub violating_pair: Option<MtwSample<S>>,
    /// Smallest C ≥ 0 with S_c ≥ −C |⟨ζ,η̃⟩| ‖ζ‖ ‖η̃‖ on every sample.
    pub mtw_constant_c: S,
    /// Minimum normalized value over ζ ⟂ η̃ (the classical weak condition).
    pub orthogonal_min: S,
    pub n_points: usize,
    pub n_dirs: usize,
    pub samples_evaluated: usize,
    pub degenerate_skipped: usize,
}

/// Default outer finite difference step for the MTW tensor.
pub const MTW_FD_STEP: f64 = 1e-2;

/// Sampling certificate of (MTWw) on D_eps.
pub fn verify_mtww<S: Scalar>(
    model: &CostModel<S>,
    eps: S,
    n_points: usize,
    n_dirs: usize,
    seed: u64,
) -> Result<MtwReport<S>> {
    if n_points == 0 || n_dirs == 0 {
        return invalid("need at least one point and one direction");
    }
    let h = lit::<S>(MTW_FD_STEP);
    let tiny = lit::<S>(1e-8);
    let per_point: Vec<Result<(Vec<(MtwSample<S>, S)>, usize, S)>> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let space = model.space();
            let (x, y) = sample_domain_pair(model, eps, &mut rng);
            let mut out = Vec::with_capacity(n_dirs);
            let mut skipped = 0;
            for _ in 0..n_dirs {
                let zeta = space.random_unit_tangent(&y, &mut rng);
                let eta = space.random_unit_tangent(&x, &mut rng);
                let et = eta_tilde(model, &x, &y, &eta)?;
                let (nz, ne) = (norm(&zeta), norm(&et));
                if nz < tiny || ne < tiny {
                    skipped += 1;
                    continue;
                }
                let val = mtw_tensor_q(model, &x, &y, &zeta, &et, h)?;
                let ip = dot(&zeta, &et).abs();
                let need = if val >= S::zero() {
                    S::zero()
                } else if ip > S::zero() {
                    -val / (ip * nz * ne)
                } else {
                    S::infinity()
                };
                let sample = MtwSample {
                    x: x.clone(),
                    y: y.clone(),
                    zeta,
                    eta,
                    eta_tilde: et,
                    normalized_value: val / (nz * nz * ne * ne),
                    alignment: ip / (nz * ne),
                };
                out.push((sample, need));
            }
            // ζ ⟂ η̃ configuration at the same point
            let zeta = space.random_unit_tangent(&y, &mut rng);
            let orth_val = if space.tangent_dim() >= 2 {
                let mut w = space.random_unit_tangent(&y, &mut rng);
                w = axpy(&w, -dot(&w, &zeta), &zeta);
                let nw = norm(&w);
                if nw > tiny {
                    let w = scale(&w, S::one() / nw);
                    mtw_tensor_q(model, &x, &y, &zeta, &w, h)?
                } else {
                    S::infinity()
                }
            } else {
                S::infinity()
            };
            Ok((out, skipped, orth_val))
        })
        .collect();
    let mut report = MtwReport {
        min_tensor_value: S::infinity(),
        violating_pair: None,
        mtw_constant_c: S::zero(),
        orthogonal_min: S::infinity(),
        n_points,
        n_dirs,
        samples_evaluated: 0,
        degenerate_skipped: 0,
    };
    for r in per_point {
        let (samples, skipped, orth) = r?;
        report.degenerate_skipped += skipped;
        report.orthogonal_min = report.orthogonal_min.min(orth);
        for (s, need) in samples {
            report.samples_evaluated += 1;
            report.min_tensor_value = report.min_tensor_value.min(s.normalized_value);
            if need > report.mtw_constant_c {
                report.mtw_constant_c = need;
                report.violating_pair = Some(s);
            }
        }
    }
    Ok(report)
}
