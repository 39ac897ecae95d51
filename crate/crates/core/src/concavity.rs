//! c-transforms, c-superdifferentials and strong c-concavity.

use crate::cost::CostModel;
use crate::error::{invalid, Error, Result};
use crate::linalg::Mat;
use crate::scalar::{derive_seed, lit, vecops::*, Scalar};
use crate::sphere::GroundSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Default membership tolerance for c-superdifferentials.
pub const SUPERDIFF_TOL: f64 = 1e-9;
/// Default tolerance when judging certificates.
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Real values on a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<S> {
    points: Vec<Vec<S>>,
    values: Vec<S>,
}

impl<S: Scalar> Potential<S> {
    pub fn new(points: Vec<Vec<S>>, values: Vec<S>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("potential values must be finite");
        }
        Ok(Potential { points, values })
    }

    pub fn from_fn(points: Vec<Vec<S>>, f: impl Fn(&[S]) -> S) -> Result<Self> {
        let values = points.iter().map(|p| f(p)).collect();
        Self::new(points, values)
    }

    pub fn constant(points: Vec<Vec<S>>, v: S) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![v; n])
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shifted(&self, a: S) -> Self {
        Potential { points: self.points.clone(), values: self.values.iter().map(|v| *v + a).collect() }
    }

    /// Exact Lipschitz constant of the grid function: max |Δψ| / d over distinct pairs.
    pub fn lipschitz_constant(&self, space: &GroundSpace<S>) -> Result<S> {
        for p in &self.points {
            space.check_dim(p)?;
        }
        let n = self.len();
        let best = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut m = S::zero();
                for j in i + 1..n {
                    let d = space.distance_unchecked(&self.points[i], &self.points[j]);
                    let dv = (self.values[i] - self.values[j]).abs();
                    if d > S::zero() {
                        m = m.max(dv / d);
                    } else if dv > S::zero() {
                        m = S::infinity();
                    }
                }
                m
            })
            .reduce(S::zero, |a, b| a.max(b));
        Ok(best)
    }
}

/// Result of a c-transform: values, minimizing indices and tie flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CTransform<S> {
    pub potential: Potential<S>,
    pub argmin: Vec<usize>,
    pub ties: Vec<bool>,
}

fn transform_impl<S: Scalar>(
    from: &Potential<S>,
    to: &[Vec<S>],
    cost: impl Fn(&[S], &[S]) -> Option<S> + Sync,
) -> Result<CTransform<S>> {
    if from.is_empty() {
        return invalid("c-transform of an empty potential");
    }
    let rows: Vec<Result<(S, usize, bool)>> = to
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut best: Option<(S, usize)> = None;
            let mut tie = false;
            for (j, (p, v)) in from.points.iter().zip(&from.values).enumerate() {
                if let Some(c) = cost(x, p) {
                    let val = c - *v;
                    match best {
                        None => best = Some((val, j)),
                        Some((b, _)) if val < b => {
                            best = Some((val, j));
                            tie = false;
                        }
                        Some((b, _)) if val == b => tie = true,
                        _ => {}
                    }
                }
            }
            best.map(|(v, j)| (v, j, tie))
                .ok_or_else(|| Error::Domain(format!("every cost is infinite at point {i}")))
        })
        .collect();
    let mut values = Vec::with_capacity(to.len());
    let mut argmin = Vec::with_capacity(to.len());
    let mut ties = Vec::with_capacity(to.len());
    for r in rows {
        let (v, j, t) = r?;
        values.push(v);
        argmin.push(j);
        ties.push(t);
    }
    Ok(CTransform { potential: Potential::new(to.to_vec(), values)?, argmin, ties })
}

/// ψ^c(x) = min_y c(x,y) − ψ(y) for each x in `xs`; ties go to the lowest index.
pub fn c_transform<S: Scalar>(model: &CostModel<S>, psi: &Potential<S>, xs: &[Vec<S>]) -> Result<CTransform<S>> {
    transform_impl(psi, xs, |x, y| model.cost(x, y).finite())
}

/// φ^c̄(y) = min_x c(x,y) − φ(x) for each y in `ys`.
pub fn c_transform_target<S: Scalar>(model: &CostModel<S>, phi: &Potential<S>, ys: &[Vec<S>]) -> Result<CTransform<S>> {
    transform_impl(phi, ys, |y, x| model.cost(x, y).finite())
}

/// Double transform ψ ↦ (ψ^c)^c̄ over sources `xs`, evaluated back on ψ's points.
pub fn c_concavify<S: Scalar>(model: &CostModel<S>, psi: &Potential<S>, xs: &[Vec<S>]) -> Result<Potential<S>> {
    let phi = c_transform(model, psi, xs)?.potential;
    Ok(c_transform_target(model, &phi, psi.points())?.potential)
}

/// For every x: the values ψ(y) − c(x,y) (None when infinite) and their maximum.
fn source_profiles<S: Scalar>(model: &CostModel<S>, psi: &Potential<S>, xs: &[Vec<S>]) -> Vec<(Vec<Option<S>>, S)> {
    xs.par_iter()
        .map(|x| {
            let vals: Vec<Option<S>> = psi
                .points
                .iter()
                .zip(&psi.values)
                .map(|(y, v)| model.cost(x, y).finite().map(|c| *v - c))
                .collect();
            let m = vals.iter().flatten().fold(S::neg_infinity(), |a, b| a.max(*b));
            (vals, m)
        })
        .collect()
}

/// Indices of x in `xs` belonging to ∂^cψ(y) for y = psi.points()[y_index].
pub fn c_superdifferential<S: Scalar>(
    model: &CostModel<S>,
    psi: &Potential<S>,
    y_index: usize,
    xs: &[Vec<S>],
    tol: S,
) -> Result<Vec<usize>> {
    if y_index >= psi.len() {
        return invalid(format!("target index {y_index} out of range"));
    }
    Ok(superdifferentials(model, psi, xs, tol).swap_remove(y_index))
}

/// ∂^cψ(y) for all y at once.
pub fn superdifferentials<S: Scalar>(
    model: &CostModel<S>,
    psi: &Potential<S>,
    xs: &[Vec<S>],
    tol: S,
) -> Vec<Vec<usize>> {
    let prof = source_profiles(model, psi, xs);
    let mut out = vec![Vec::new(); psi.len()];
    for (i, (vals, m)) in prof.iter().enumerate() {
        for (j, v) in vals.iter().enumerate() {
            if let Some(v) = v {
                if *v >= *m - tol {
                    out[j].push(i);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityCertificate<S> {
    /// Every target has a nonempty superdifferential and no triple has negative slack.
    pub is_c_concave: bool,
    /// min over admissible triples of [ψ(y) − c(x,y) − ψ(z) + c(x,z)] / d(y,z)².
    pub strong_constant_c: S,
    /// Differential margin, when computed.
    pub lambda_min: Option<S>,
    /// (x index, y index, z index) attaining the minimum.
    pub worst_triple: Option<(usize, usize, usize)>,
    pub triples_checked: usize,
    /// Targets skipped because their superdifferential is empty.
    pub skipped_targets: usize,
}

/// Brute-force certificate of strong c-concavity with modulus ω(r) = C r².
/// Triples (x, y, z) with x ∈ ∂^cψ(y) (tolerance `tol`) and (x,y), (x,z) ∈ D_eps.
pub fn certify_strong_c_concavity<S: Scalar>(
    model: &CostModel<S>,
    psi: &Potential<S>,
    eps: S,
    xs: &[Vec<S>],
    tol: S,
) -> Result<ConcavityCertificate<S>> {
    let space = model.space();
    let prof = source_profiles(model, psi, xs);
    let ys = &psi.points;
    let per_x: Vec<(S, Option<(usize, usize, usize)>, usize, Vec<usize>)> = prof
        .par_iter()
        .enumerate()
        .map(|(i, (vals, m))| {
            let x = &xs[i];
            let mut best = S::infinity();
            let mut arg = None;
            let mut count = 0usize;
            let mut members = Vec::new();
            let admissible: Vec<bool> = ys.iter().map(|y| model.in_domain(x, y, eps)).collect();
            for (j, vj) in vals.iter().enumerate() {
                let Some(vj) = vj else { continue };
                if *vj < *m - tol {
                    continue;
                }
                members.push(j);
                if !admissible[j] {
                    continue;
                }
                for (k, vk) in vals.iter().enumerate() {
                    let Some(vk) = vk else { continue };
                    if k == j || !admissible[k] {
                        continue;
                    }
                    let d = space.distance_unchecked(&ys[j], &ys[k]);
                    if d <= S::zero() {
                        continue;
                    }
                    count += 1;
                    let r = (*vj - *vk) / (d * d);
                    if r < best {
                        best = r;
                        arg = Some((i, j, k));
                    }
                }
            }
            (best, arg, count, members)
        })
        .collect();
    let mut cert = ConcavityCertificate {
        is_c_concave: true,
        strong_constant_c: S::infinity(),
        lambda_min: None,
        worst_triple: None,
        triples_checked: 0,
        skipped_targets: 0,
    };
    let mut covered = vec![false; psi.len()];
    for (best, arg, count, members) in per_x {
        cert.triples_checked += count;
        for j in members {
            covered[j] = true;
        }
        if best < cert.strong_constant_c {
            cert.strong_constant_c = best;
            cert.worst_triple = arg;
        }
    }
    if cert.triples_checked == 0 {
        return Err(Error::Certificate("no admissible triples".into()));
    }
    cert.skipped_targets = covered.iter().filter(|c| !**c).count();
    cert.is_c_concave = cert.skipped_targets == 0 && cert.strong_constant_c >= -lit::<S>(CERTIFICATE_TOL);
    Ok(cert)
}

/// A potential that can be evaluated off-grid, with a Riemannian Hessian.
pub trait SmoothPotential<S: Scalar>: Sync {
    fn value(&self, y: &[S]) -> S;

    /// Hessian in the frame at y; default: geodesic second differences with Richardson
    /// extrapolation and polarization.
    fn hessian(&self, space: &GroundSpace<S>, y: &[S], h: S) -> Result<Mat<S>> {
        let frame = space.tangent_basis(y);
        let f0 = self.value(y);
        let quad = |v: &[S]| -> Result<S> {
            let sd = |s: S| -> Result<S> {
                let p = space.exp(y, &scale(v, s));
                let m = space.exp(y, &scale(v, -s));
                for q in [&p, &m] {
                    if !space.contains(q, lit(1e-12)) {
                        return Err(Error::Domain(format!("stencil step {s} leaves the ground space")));
                    }
                }
                Ok((self.value(&p) - lit::<S>(2.0) * f0 + self.value(&m)) / (s * s))
            };
            Ok((lit::<S>(4.0) * sd(h * lit(0.5))? - sd(h)?) / lit(3.0))
        };
        let k = frame.len();
        let mut m = Mat::zeros(k, k);
        for i in 0..k {
            m[(i, i)] = quad(&frame[i])?;
        }
        for i in 0..k {
            for j in i + 1..k {
                let v = (quad(&add(&frame[i], &frame[j]))? - quad(&sub(&frame[i], &frame[j]))?) * lit(0.25);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }
}

/// Wraps a closure as a smooth potential.
pub struct FnPotential<F>(pub F);

impl<S: Scalar, F: Fn(&[S]) -> S + Sync> SmoothPotential<S> for FnPotential<F> {
    fn value(&self, y: &[S]) -> S {
        (self.0)(y)
    }
}

/// Grid potential smoothed by weighted quadratic regression over the k nearest grid points,
/// in normal coordinates around the query point.
pub struct LocalQuadraticFit<'a, S> {
    pub space: &'a GroundSpace<S>,
    pub potential: &'a Potential<S>,
    pub neighbours: usize,
}

impl<'a, S: Scalar> LocalQuadraticFit<'a, S> {
    pub fn new(space: &'a GroundSpace<S>, potential: &'a Potential<S>) -> Self {
        LocalQuadraticFit { space, potential, neighbours: 12 }
    }

    /// Coefficients (a, b, H) of a + bᵀu + ½ uᵀ H u fitted around y.
    pub fn fit(&self, y: &[S]) -> Result<(S, Vec<S>, Mat<S>)> {
        let frame = self.space.tangent_basis(y);
        let k = frame.len();
        let n_coef = 1 + k + k * (k + 1) / 2;
        let kk = self.neighbours.max(n_coef);
        let mut near: Vec<(S, usize)> = self
            .potential
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| (self.space.distance_unchecked(y, p), i))
            .collect();
        near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        near.truncate(kk);
        if near.len() < n_coef {
            return Err(Error::Numerical("not enough grid points for a quadratic fit".into()));
        }
        let radius = near.last().unwrap().0 * lit(1.01) + S::epsilon();
        let mut ata = Mat::zeros(n_coef, n_coef);
        let mut atb = vec![S::zero(); n_coef];
        for (d, i) in &near {
            let v = self.space.log(y, &self.potential.points()[*i])?;
            let u: Vec<S> = frame.iter().map(|f| dot(f, &v)).collect();
            let mut row = vec![S::one()];
            row.extend_from_slice(&u);
            for a in 0..k {
                for b in a..k {
                    let f = if a == b { lit(0.5) } else { S::one() };
                    row.push(f * u[a] * u[b]);
                }
            }
            let r = *d / radius;
            let w = (S::one() - r * r * r).powi(3);
            for a in 0..n_coef {
                atb[a] = atb[a] + w * row[a] * self.potential.values()[*i];
                for b in 0..n_coef {
                    ata[(a, b)] = ata[(a, b)] + w * row[a] * row[b];
                }
            }
        }
        let coef = ata.solve(&atb)?;
        let mut h = Mat::zeros(k, k);
        let mut idx = 1 + k;
        for a in 0..k {
            for b in a..k {
                h[(a, b)] = coef[idx];
                h[(b, a)] = coef[idx];
                idx += 1;
            }
        }
        Ok((coef[0], coef[1..1 + k].to_vec(), h))
    }
}

impl<'a, S: Scalar> SmoothPotential<S> for LocalQuadraticFit<'a, S> {
    fn value(&self, y: &[S]) -> S {
        self.fit(y).map(|f| f.0).unwrap_or(S::nan())
    }

    fn hessian(&self, _space: &GroundSpace<S>, y: &[S], _h: S) -> Result<Mat<S>> {
        Ok(self.fit(y)?.2)
    }
}

/// Smallest eigenvalue of D²yy c(x,y) − D²ψ(y) over the given pairs.
pub fn check_differential_criterion<S: Scalar>(
    model: &CostModel<S>,
    psi: &dyn SmoothPotential<S>,
    pairs: &[(Vec<S>, Vec<S>)],
    fd_step: S,
) -> Result<S> {
    if pairs.is_empty() {
        return invalid("no pairs supplied");
    }
    let space = model.space();
    let mut lambda = S::infinity();
    for (x, y) in pairs {
        let hc = model.hessian_yy(x, y, fd_step)?;
        let hp = psi.hessian(space, y, fd_step)?;
        let ev = hc.sub(&hp).sym_eigenvalues();
        lambda = lambda.min(ev[0]);
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofConstants<S> {
    /// inf over D_eps and unit u of ‖(D²xy c)^{-1} u‖² = 1/σ_max².
    pub c1: S,
    /// inf of ‖∇x c(x,y) − ∇x c(x,z)‖² / d(y,z)², including the local limit σ_min².
    pub c2: S,
}

/// Sampled estimates of the two infima entering the modulus constant.
pub fn proof_constants<S: Scalar>(model: &CostModel<S>, eps: S, n_samples: usize, seed: u64) -> Result<ProofConstants<S>> {
    if n_samples == 0 {
        return invalid("need at least one sample");
    }
    let space = model.space();
    let per: Vec<Result<(S, S)>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let (x, y) = crate::c_geometry::sample_domain_pair(model, eps, &mut rng);
            let sv = model.cross_hessian(&x, &y)?.singular_values();
            let (smin, smax) = (sv[0], *sv.last().unwrap());
            let c1 = S::one() / (smax * smax);
            let z = crate::c_geometry::sample_partner(model, &x, eps, &mut rng);
            let d = space.distance_unchecked(&y, &z);
            let mut c2 = smin * smin;
            if d > lit(1e-6) {
                let g = sub(&model.grad_x(&x, &y)?, &model.grad_x(&x, &z)?);
                c2 = c2.min(dot(&g, &g) / (d * d));
            }
            Ok((c1, c2))
        })
        .collect();
    let mut out = ProofConstants { c1: S::infinity(), c2: S::infinity() };
    for r in per {
        let (a, b) = r?;
        out.c1 = out.c1.min(a);
        out.c2 = out.c2.min(b);
    }
    if !(out.c1 > S::zero() && out.c2 > S::zero()) {
        return Err(Error::Twist(format!("nonpositive proof constants C1 = {}, C2 = {}", out.c1, out.c2)));
    }
    Ok(out)
}

fn check_modulus_inputs<S: Scalar>(lambda: S, c1: S, c2: S, mtw_c: S) -> Result<()> {
    if !(lambda > S::zero() && c1 > S::zero() && c2 > S::zero()) {
        return invalid("lambda, C1 and C2 must be positive");
    }
    if !(mtw_c >= S::zero()) {
        return invalid("the MTW constant must be nonnegative");
    }
    Ok(())
}

/// λ · C1 · C2 · e^{−C}.
pub fn modulus_constant<S: Scalar>(lambda: S, c1: S, c2: S, mtw_c: S) -> Result<S> {
    check_modulus_inputs(lambda, c1, c2, mtw_c)?;
    Ok(lambda * c1 * c2 * (-mtw_c).exp())
}

/// λ · C1 · C2 · (C − 1 + e^{−C}) / C², the constant obtained by integrating the
/// differential inequality twice along the c-segment (tends to λ C1 C2 / 2 as C → 0).
pub fn integrated_modulus_constant<S: Scalar>(lambda: S, c1: S, c2: S, mtw_c: S) -> Result<S> {
    check_modulus_inputs(lambda, c1, c2, mtw_c)?;
    let c = mtw_c;
    let factor = if c < lit(1e-4) {
        lit::<S>(0.5) - c / lit(6.0) + c * c / lit(24.0)
    } else {
        (c - S::one() + (-c).exp()) / (c * c)
    };
    Ok(lambda * c1 * c2 * factor)
}

/// Potential on `ys` inducing a given assignment with the largest certified modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpPotential<S> {
    pub potential: Potential<S>,
    /// Largest C (up to bisection accuracy) for which the difference constraints are feasible.
    pub constant: S,
}

/// Finds ψ on `ys` maximizing C subject to
/// ψ(z) − c(x,z) ≤ ψ(T x) − c(x,T x) − C d(T x, z)² for every source x and target z,
/// where T x = ys[assignment[x]]. Solved by bisection on C with Bellman–Ford feasibility.
/// With `eps`, only pairs (x, z) in D_eps are constrained.
pub fn sharpest_potential<S: Scalar>(
    model: &CostModel<S>,
    xs: &[Vec<S>],
    assignment: &[usize],
    ys: &[Vec<S>],
    eps: Option<S>,
) -> Result<SharpPotential<S>> {
    if xs.len() != assignment.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: assignment.len() });
    }
    if ys.is_empty() {
        return invalid("no target points");
    }
    if let Some(&bad) = assignment.iter().find(|&&a| a >= ys.len()) {
        return invalid(format!("assignment index {bad} out of range"));
    }
    let space = model.space();
    let m = ys.len();
    let mut image: Vec<usize> = assignment.to_vec();
    image.sort_unstable();
    image.dedup();
    let pos: Vec<Option<usize>> = {
        let mut p = vec![None; m];
        for (k, &a) in image.iter().enumerate() {
            p[a] = Some(k);
        }
        p
    };
    // g[k][b] = min over x with T x = image[k] of c(x, b) − c(x, T x)
    let mut g: Vec<Vec<Option<S>>> = vec![vec![None; m]; image.len()];
    for (x, &a) in xs.iter().zip(assignment) {
        let ca = model.cost_finite(x, &ys[a])?;
        let k = pos[a].unwrap();
        for b in 0..m {
            if b == a || eps.is_some_and(|e| !model.in_domain(x, &ys[b], e)) {
                continue;
            }
            if let Some(cb) = model.cost(x, &ys[b]).finite() {
                let v = cb - ca;
                g[k][b] = Some(g[k][b].map_or(v, |old: S| old.min(v)));
            }
        }
    }
    let d2 = |a: usize, b: usize| {
        let d = space.distance_unchecked(&ys[a], &ys[b]);
        d * d
    };
    let n_img = image.len();
    let scale_tol = lit::<S>(1e-12);
    // dense arc weights between image points; None marks a missing arc
    let mut arcs: Vec<Vec<(usize, S, S)>> = vec![Vec::new(); n_img];
    for (ka, row) in arcs.iter_mut().enumerate() {
        for (kb, &b) in image.iter().enumerate() {
            if ka != kb {
                if let Some(w) = g[ka][b] {
                    row.push((kb, w, d2(image[ka], b)));
                }
            }
        }
    }
    // queue-based Bellman–Ford from a virtual source; a node relaxed n times lies on a negative cycle
    let bellman_ford = |c: S| -> Option<Vec<S>> {
        let mut dist = vec![S::zero(); n_img];
        let mut count = vec![0usize; n_img];
        let mut queued = vec![true; n_img];
        let mut queue: std::collections::VecDeque<usize> = (0..n_img).collect();
        while let Some(ka) = queue.pop_front() {
            queued[ka] = false;
            for &(kb, w, dd) in &arcs[ka] {
                let cand = dist[ka] + w - c * dd;
                if cand < dist[kb] - scale_tol * (S::one() + dist[kb].abs()) {
                    dist[kb] = cand;
                    if !queued[kb] {
                        count[kb] += 1;
                        if count[kb] > n_img {
                            return None;
                        }
                        queued[kb] = true;
                        queue.push_back(kb);
                    }
                }
            }
        }
        Some(dist)
    };
    if bellman_ford(S::zero()).is_none() {
        return Err(Error::Certificate("assignment is not c-cyclically monotone".into()));
    }
    let mut hi = lit::<S>(1e6);
    for (ka, &a) in image.iter().enumerate() {
        for (kb, &b) in image.iter().enumerate() {
            if ka < kb {
                if let (Some(w1), Some(w2)) = (g[ka][b], g[kb][a]) {
                    hi = hi.min((w1 + w2) / (lit::<S>(2.0) * d2(a, b)));
                }
            }
        }
    }
    let mut lo = S::zero();
    hi = hi.max(S::zero());
    if bellman_ford(hi).is_some() {
        lo = hi;
    } else {
        for _ in 0..80 {
            if hi - lo <= lit::<S>(1e-12) * (S::one() + hi) {
                break;
            }
            let mid = (lo + hi) * lit(0.5);
            if bellman_ford(mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let dist = bellman_ford(lo).expect("feasible at the lower end");
    let mut values = vec![S::zero(); m];
    for b in 0..m {
        values[b] = match pos[b] {
            Some(k) => dist[k],
            None => {
                let mut best: Option<S> = None;
                for (ka, &a) in image.iter().enumerate() {
                    if let Some(w) = g[ka][b] {
                        let v = dist[ka] + w - lo * d2(a, b);
                        best = Some(best.map_or(v, |o: S| o.min(v)));
                    }
                }
                best.ok_or_else(|| Error::Certificate(format!("target {b} is unreachable from every source")))?
            }
        };
    }
    let shift = values[0];
    values.iter_mut().for_each(|v| *v = *v - shift);
    Ok(SharpPotential { potential: Potential::new(ys.to_vec(), values)?, constant: lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostKind;
    use crate::sphere::fibonacci_points;
    use std::f64::consts::LN_2;

    fn box_grid(n: usize) -> Vec<Vec<f64>> {
        let mut g = Vec::new();
        for i in 0..n {
            for j in 0..n {
                g.push(vec![i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64]);
            }
        }
        g
    }

    #[test]
    fn transform_of_zero_and_shift() {
        let c = CostModel::<f64>::standard(CostKind::Reflector, 3).unwrap();
        let ys = fibonacci_points::<f64>(50).unwrap();
        let xs: Vec<Vec<f64>> = ys.iter().map(|y| y.iter().map(|v| -v).collect()).collect();
        let psi = Potential::constant(ys.clone(), 0.0).unwrap();
        let t = c_transform(&c, &psi, &xs).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let m = ys.iter().filter_map(|y| c.cost(x, y).finite()).fold(f64::INFINITY, f64::min);
            assert_eq!(t.potential.values()[i], m);
        }
        // the Fibonacci grid is not antipodally symmetric, so only the grid minimum is exact;
        // on a symmetric pair the antipode gives −ln 2
        let sym = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]];
        let p = Potential::constant(sym.clone(), 0.0).unwrap();
        let t2 = c_transform(&c, &p, &sym).unwrap();
        assert!((t2.potential.values()[0] + LN_2).abs() < 1e-15);
        let shifted = c_transform(&c, &psi.shifted(0.7), &xs).unwrap();
        for (a, b) in shifted.potential.values().iter().zip(t.potential.values()) {
            assert!((a - (b - 0.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn raised_value_has_empty_superdifferential() {
        let c = CostModel::<f64>::standard(CostKind::Quadratic, 2).unwrap();
        let g = box_grid(6);
        let mut vals: Vec<f64> = g.iter().map(|y| -dot(y, y)).collect();
        let psi = Potential::new(g.clone(), vals.clone()).unwrap();
        let cc = c_concavify(&c, &psi, &g).unwrap();
        for j in 0..g.len() {
            assert!(!c_superdifferential(&c, &cc, j, &g, 1e-9).unwrap().is_empty());
        }
        vals[7] -= 10.0;
        let lowered = Potential::new(g.clone(), vals).unwrap();
        assert!(c_superdifferential(&c, &lowered, 7, &g, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn double_transform_dominates_and_is_idempotent() {
        let c = CostModel::<f64>::standard(CostKind::Reflector, 3).unwrap();
        let ys = fibonacci_points::<f64>(40).unwrap();
        let xs = crate::sphere::uniform_sample(c.space(), 30, 3);
        let vals: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 * 0.05).collect();
        let psi = Potential::new(ys.clone(), vals).unwrap();
        let cc = c_concavify(&c, &psi, &xs).unwrap();
        for (a, b) in cc.values().iter().zip(psi.values()) {
            assert!(*a >= *b - 1e-12);
        }
        let phi = c_transform(&c, &psi, &xs).unwrap().potential;
        let phi3 = c_transform(&c, &cc, &xs).unwrap().potential;
        for (a, b) in phi.values().iter().zip(phi3.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_potential_has_no_strict_modulus() {
        let c = CostModel::<f64>::standard(CostKind::NegInner, 2).unwrap();
        let g = box_grid(8);
        let x0 = vec![0.3, 0.6];
        let psi = Potential::from_fn(g.clone(), |y| c.cost_finite(&x0, y).unwrap()).unwrap();
        let cert = certify_strong_c_concavity(&c, &psi, 0.0, &[x0.clone()], 1e-9).unwrap();
        assert!(cert.strong_constant_c <= 1e-12);
    }

    #[test]
    fn lipschitz_of_distance_function() {
        let s = GroundSpace::<f64>::sphere(3).unwrap();
        let g = fibonacci_points::<f64>(300).unwrap();
        let y0 = g[17].clone();
        let p = Potential::from_fn(g.clone(), |y| s.distance(y, &y0).unwrap()).unwrap();
        let l = p.lipschitz_constant(&s).unwrap();
        assert!(l <= 1.0 + 1e-9 && l > 0.99);
        assert_eq!(Potential::constant(g, 2.0).unwrap().lipschitz_constant(&s).unwrap(), 0.0);
    }

    #[test]
    fn modulus_formulas() {
        assert_eq!(modulus_constant(1.0, 1.0, 1.0, 0.0).unwrap(), 1.0);
        assert!((modulus_constant(2.0f64, 1.0, 1.0, LN_2).unwrap() - 1.0).abs() < 1e-15);
        assert!(modulus_constant(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(modulus_constant(1.0, 1.0, 1.0, -0.1).is_err());
        assert!((integrated_modulus_constant(2.0f64, 1.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let a = integrated_modulus_constant(1.0f64, 1.0, 1.0, 0.99e-4).unwrap();
        let b = integrated_modulus_constant(1.0, 1.0, 1.0, 1.01e-4).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn local_fit_recovers_quadratic_hessian() {
        let s = GroundSpace::<f64>::unit_box(2).unwrap();
        let g = box_grid(15);
        let psi = Potential::from_fn(g.clone(), |y| -dot(y, y) + 0.3 * y[0] * y[1]).unwrap();
        let fit = LocalQuadraticFit::new(&s, &psi);
        let h = fit.hessian(&s, &[0.5, 0.5], 1e-3).unwrap();
        assert!((h[(0, 0)] + 2.0).abs() < 1e-9 && (h[(0, 1)] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn sharp_potential_induces_assignment() {
        let c = CostModel::<f64>::standard(CostKind::Reflector, 3).unwrap();
        let xs = fibonacci_points::<f64>(30).unwrap();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| -v).collect()).collect();
        let assignment: Vec<usize> = (0..30).collect();
        let sp = sharpest_potential(&c, &xs, &assignment, &ys, None).unwrap();
        assert!(sp.constant > 0.0);
        let t = c_transform(&c, &sp.potential, &xs).unwrap();
        assert_eq!(t.argmin, assignment);
        let cert = certify_strong_c_concavity(&c, &sp.potential, 0.0, &xs, 1e-9).unwrap();
        assert!(cert.strong_constant_c >= sp.constant * (1.0 - 1e-6));
    }
}
