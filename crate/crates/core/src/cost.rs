//! The four cost functions with their first-order calculus and c-exponentials.

use crate::error::{invalid, Error, Result};
use crate::linalg::Mat;
use crate::scalar::{lit, vecops::*, Scalar};
use crate::sphere::GroundSpace;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    /// −ln(1 − ⟨x,y⟩) on the sphere, +∞ on the diagonal.
    Reflector,
    /// −ln⟨x,n⟩ on the sphere, +∞ where ⟨x,n⟩ ≤ 0.
    Gauss,
    /// −⟨x,y⟩ on a box.
    NegInner,
    /// ‖x − y‖² on a box.
    Quadratic,
}

impl CostKind {
    pub fn needs_sphere(self) -> bool {
        matches!(self, CostKind::Reflector | CostKind::Gauss)
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::Reflector => "reflector",
            CostKind::Gauss => "gauss",
            CostKind::NegInner => "neg-inner",
            CostKind::Quadratic => "quadratic",
        })
    }
}

impl FromStr for CostKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "reflector" => Ok(CostKind::Reflector),
            "gauss" => Ok(CostKind::Gauss),
            "neg-inner" => Ok(CostKind::NegInner),
            "quadratic" => Ok(CostKind::Quadratic),
            other => invalid(format!("unknown cost '{other}' (expected reflector, gauss, neg-inner, quadratic)")),
        }
    }
}

/// A real number or +∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal<S> {
    Finite(S),
    PosInfinity,
}

impl<S: Scalar> ExtendedReal<S> {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<S> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }
}

/// Strictly decreasing profile h(t) = −ln(1 − cos t) of the reflector cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct HProfile;

impl HProfile {
    pub fn h<S: Scalar>(&self, t: S) -> S {
        let s = (t * lit(0.5)).sin();
        -(lit::<S>(2.0) * s * s).ln()
    }

    /// Inverse on [−ln 2, ∞), values in (0, π].
    pub fn h_inv<S: Scalar>(&self, v: S) -> Result<S> {
        let q = (-v).exp() * lit(0.5);
        let slack = lit::<S>(1e-12);
        if !v.is_finite() || q > S::one() + slack {
            return Err(Error::Domain(format!("h^-1 is defined for values >= -ln 2, got {v}")));
        }
        Ok(lit::<S>(2.0) * q.min(S::one()).sqrt().asin())
    }
}

/// Returns the profile of a reflector model.
pub fn h_profile<S: Scalar>(model: &CostModel<S>) -> Result<HProfile> {
    match model.kind {
        CostKind::Reflector => Ok(HProfile),
        k => invalid(format!("h profile is only defined for the reflector cost, not {k}")),
    }
}

/// A cost function bound to its ground space, optionally truncated to a Lipschitz version.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel<S> {
    kind: CostKind,
    space: GroundSpace<S>,
    truncation: Option<S>,
}

impl<S: Scalar> CostModel<S> {
    pub fn new(kind: CostKind, space: GroundSpace<S>) -> Result<Self> {
        if kind.needs_sphere() != space.is_sphere() {
            let want = if kind.needs_sphere() { "a sphere" } else { "a box" };
            return invalid(format!("the {kind} cost requires {want} ground space"));
        }
        Ok(CostModel { kind, space, truncation: None })
    }

    /// Convenience constructor on S^2 or the unit square/cube.
    pub fn standard(kind: CostKind, d: usize) -> Result<Self> {
        let space = if kind.needs_sphere() { GroundSpace::sphere(d)? } else { GroundSpace::unit_box(d)? };
        Self::new(kind, space)
    }

    /// Lipschitz truncation on the complement of D_eps: reflector uses h(max(d, eps)),
    /// gauss uses −ln cos(min(d, π/2 − eps)). Flat costs are unchanged.
    pub fn truncated(&self, eps: S) -> Result<Self> {
        if !(eps > S::zero()) {
            return invalid("truncation radius must be positive");
        }
        if self.kind == CostKind::Gauss && eps >= S::FRAC_PI_2() {
            return invalid("gauss truncation needs eps < π/2");
        }
        Ok(CostModel { truncation: Some(eps), ..self.clone() })
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn space(&self) -> &GroundSpace<S> {
        &self.space
    }

    pub fn truncation(&self) -> Option<S> {
        self.truncation
    }

    pub fn cost(&self, x: &[S], y: &[S]) -> ExtendedReal<S> {
        debug_assert_eq!(x.len(), y.len());
        let fin = ExtendedReal::Finite;
        match self.kind {
            CostKind::Reflector => {
                if let Some(eps) = self.truncation {
                    let d = self.space.distance_unchecked(x, y);
                    return fin(HProfile.h(d.max(eps)));
                }
                // 1 − ⟨x,y⟩ = ‖x − y‖²/2 on the unit sphere, without cancellation.
                let q = dot(&sub(x, y), &sub(x, y)) * lit(0.5);
                if q > S::zero() {
                    fin(-q.ln())
                } else {
                    ExtendedReal::PosInfinity
                }
            }
            CostKind::Gauss => {
                if let Some(eps) = self.truncation {
                    let d = self.space.distance_unchecked(x, y);
                    return fin(-d.min(S::FRAC_PI_2() - eps).cos().ln());
                }
                let s = dot(x, y);
                if s > S::zero() {
                    fin(-s.ln())
                } else {
                    ExtendedReal::PosInfinity
                }
            }
            CostKind::NegInner => fin(-dot(x, y)),
            CostKind::Quadratic => fin(dot(&sub(x, y), &sub(x, y))),
        }
    }

    /// Cost value, failing with a domain error on +∞.
    pub fn cost_finite(&self, x: &[S], y: &[S]) -> Result<S> {
        self.cost(x, y)
            .finite()
            .ok_or_else(|| Error::Domain(format!("{} cost is infinite at this pair", self.kind)))
    }

    fn check_pair(&self, x: &[S], y: &[S]) -> Result<()> {
        self.space.check_dim(x)?;
        self.space.check_dim(y)?;
        match self.kind {
            CostKind::Reflector if dot(&sub(x, y), &sub(x, y)) <= S::epsilon() * S::epsilon() => {
                Err(Error::Domain("reflector gradient undefined on the diagonal".into()))
            }
            CostKind::Gauss if dot(x, y) <= S::zero() => {
                Err(Error::Domain("gauss gradient undefined where ⟨x,n⟩ <= 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Gradient in the first argument (tangent at x for sphere costs).
    pub fn grad_x(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.check_pair(x, y)?;
        Ok(match self.kind {
            CostKind::Reflector => {
                let q = dot(&sub(x, y), &sub(x, y)) * lit(0.5);
                scale(&axpy(y, -dot(x, y), x), S::one() / q)
            }
            CostKind::Gauss => axpy(x, -S::one() / dot(x, y), y),
            CostKind::NegInner => scale(y, -S::one()),
            CostKind::Quadratic => scale(&sub(x, y), lit(2.0)),
        })
    }

    /// Gradient in the second argument. All four costs are symmetric.
    pub fn grad_y(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.grad_x(y, x)
    }

    /// c-exponential at x: the inverse of y ↦ −∇x c(x,y).
    pub fn cexp(&self, x: &[S], p: &[S]) -> Result<Vec<S>> {
        self.space.check_dim(x)?;
        self.space.check_dim(p)?;
        Ok(match self.kind {
            CostKind::Reflector => {
                let a = lit::<S>(2.0) / (S::one() + dot(p, p));
                let y = axpy(&scale(x, S::one() - a), -a, p);
                let n = norm(&y);
                scale(&y, S::one() / n)
            }
            CostKind::Gauss => {
                let y = add(p, x);
                let n = norm(&y);
                scale(&y, S::one() / n)
            }
            CostKind::NegInner => p.to_vec(),
            CostKind::Quadratic => axpy(x, lit(0.5), p),
        })
    }

    /// c-exponential based at a target point (inverse of x ↦ −∇y c(x,y)).
    pub fn cexp_y(&self, y: &[S], q: &[S]) -> Result<Vec<S>> {
        self.cexp(y, q)
    }

    /// Membership in D_eps.
    pub fn in_domain(&self, x: &[S], y: &[S], eps: S) -> bool {
        match self.kind {
            CostKind::Reflector => self.space.distance_unchecked(x, y) >= eps,
            CostKind::Gauss => self.space.distance_unchecked(x, y) <= S::FRAC_PI_2() - eps,
            CostKind::NegInner | CostKind::Quadratic => true,
        }
    }

    /// Default finite difference step for first derivatives of analytic gradients.
    pub fn default_fd_step() -> S {
        lit(1e-4f64.max(S::machine_eps().cbrt()))
    }

    /// Mixed Hessian D²xy c in the frames at x (rows) and y (columns).
    pub fn cross_hessian(&self, x: &[S], y: &[S]) -> Result<Mat<S>> {
        self.cross_hessian_with_step(x, y, Self::default_fd_step())
    }

    pub fn cross_hessian_with_step(&self, x: &[S], y: &[S], h: S) -> Result<Mat<S>> {
        self.check_pair(x, y)?;
        let fx = self.space.tangent_basis(x);
        let fy = self.space.tangent_basis(y);
        let mut a = Mat::zeros(fx.len(), fy.len());
        for (j, f) in fy.iter().enumerate() {
            let deriv = |step: S| -> Result<Vec<S>> {
                let yp = self.space.exp(y, &scale(f, step));
                let ym = self.space.exp(y, &scale(f, -step));
                let gp = self.grad_x(x, &yp).map_err(|e| step_error(e, step))?;
                let gm = self.grad_x(x, &ym).map_err(|e| step_error(e, step))?;
                Ok(scale(&sub(&gp, &gm), S::one() / (lit::<S>(2.0) * step)))
            };
            let d1 = deriv(h)?;
            let d2 = deriv(h * lit(0.5))?;
            let rich: Vec<S> = d1.iter().zip(&d2).map(|(a, b)| (lit::<S>(4.0) * *b - *a) / lit(3.0)).collect();
            for (i, e) in fx.iter().enumerate() {
                a[(i, j)] = dot(e, &rich);
            }
        }
        Ok(a)
    }

    /// Smallest singular value of the cross-Hessian.
    pub fn stwist_margin(&self, x: &[S], y: &[S]) -> Result<S> {
        let a = self.cross_hessian(x, y)?;
        Ok(a.singular_values()[0])
    }

    /// Fails with a twist error when the cross-Hessian is singular within 1e-8.
    pub fn check_stwist(&self, x: &[S], y: &[S]) -> Result<S> {
        let m = self.stwist_margin(x, y)?;
        if m < lit(1e-8) {
            return Err(Error::Twist(format!("smallest singular value {m} below 1e-8")));
        }
        Ok(m)
    }

    /// Riemannian Hessian of y ↦ c(x,y) in the frame at y, by differences of the analytic gradient.
    pub fn hessian_yy(&self, x: &[S], y: &[S], h: S) -> Result<Mat<S>> {
        self.check_pair(x, y)?;
        let frame = self.space.tangent_basis(y);
        let quad = |v: &[S]| -> Result<S> {
            let g = |t: S| -> Result<S> {
                let p = self.space.exp(y, &scale(v, t));
                let vel = self.space.geodesic_velocity(y, v, t);
                Ok(dot(&self.grad_y(x, &p).map_err(|e| step_error(e, t))?, &vel))
            };
            let d = |s: S| -> Result<S> { Ok((g(s)? - g(-s)?) / (lit::<S>(2.0) * s)) };
            Ok((lit::<S>(4.0) * d(h * lit(0.5))? - d(h)?) / lit(3.0))
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

    /// Lipschitz constant of the cost for the product metric d(x,x') + d(y,y').
    /// Sphere costs are only Lipschitz once truncated.
    pub fn lipschitz_constant(&self) -> Result<S> {
        match (self.kind, &self.space) {
            (CostKind::Reflector, _) => match self.truncation {
                Some(eps) => Ok(S::one() / (eps * lit(0.5)).tan()),
                None => Err(Error::Domain("the reflector cost is not Lipschitz; truncate it first".into())),
            },
            (CostKind::Gauss, _) => match self.truncation {
                Some(eps) => Ok(S::one() / eps.tan()),
                None => Err(Error::Domain("the gauss cost is not Lipschitz; truncate it first".into())),
            },
            (CostKind::NegInner, GroundSpace::Box { lower, upper }) => Ok(max_corner_norm(lower, upper)),
            (CostKind::Quadratic, GroundSpace::Box { .. }) => Ok(lit::<S>(2.0) * self.space.diameter()),
            _ => unreachable!("kind/space pairing checked at construction"),
        }
    }

    /// Infimum of the cost over the whole product space.
    pub fn min_value(&self) -> S {
        match (self.kind, &self.space) {
            (CostKind::Reflector, _) => -lit::<S>(2.0).ln(),
            (CostKind::Gauss, _) => S::zero(),
            (CostKind::NegInner, GroundSpace::Box { lower, upper }) => {
                let m = max_corner_norm(lower, upper);
                -m * m
            }
            _ => S::zero(),
        }
    }
}

fn max_corner_norm<S: Scalar>(lower: &[S], upper: &[S]) -> S {
    lower
        .iter()
        .zip(upper)
        .fold(S::zero(), |acc, (l, u)| {
            let m = l.abs().max(u.abs());
            acc + m * m
        })
        .sqrt()
}

fn step_error(e: Error, step: impl fmt::Display) -> Error {
    match e {
        Error::Domain(msg) => Error::Domain(format!("finite difference step {step} left the domain: {msg}")),
        other => other,
    }
}
