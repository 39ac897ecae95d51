//! Ground spaces: the unit sphere S^{d-1} and flat boxes.

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, vecops::*, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Tolerance on ‖x‖ = 1 accepted by the sphere membership test.
const UNIT_TOL: f64 = 1e-9;

/// A point on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector<S> {
    coords: Vec<S>,
}

impl<S: Scalar> UnitVector<S> {
    /// Normalizes `coords`; fails on zero vectors or d < 2.
    pub fn new(coords: Vec<S>) -> Result<Self> {
        if coords.len() < 2 {
            return invalid(format!("unit vectors need d >= 2, got {}", coords.len()));
        }
        let n = norm(&coords);
        if !(n > S::zero()) || !n.is_finite() {
            return invalid("cannot normalize a zero or non-finite vector");
        }
        Ok(UnitVector { coords: scale(&coords, S::one() / n) })
    }

    /// Canonical basis vector e_i in dimension d.
    pub fn axis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return invalid(format!("axis {i} out of range for d = {d}"));
        }
        let mut c = vec![S::zero(); d];
        c[i] = S::one();
        Self::new(c)
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<S> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn neg(&self) -> Self {
        UnitVector { coords: self.coords.iter().map(|v| -*v).collect() }
    }
}

/// A vector tangent to the sphere at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<S> {
    base: UnitVector<S>,
    vec: Vec<S>,
}

impl<S: Scalar> TangentVector<S> {
    /// Checks orthogonality to the base point.
    pub fn new(base: UnitVector<S>, vec: Vec<S>) -> Result<Self> {
        if vec.len() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), got: vec.len() });
        }
        let tol = lit::<S>(1e-10).max(lit::<S>(100.0) * S::epsilon());
        if dot(base.coords(), &vec).abs() > tol * (S::one() + norm(&vec)) {
            return invalid("tangent vector is not orthogonal to its base point");
        }
        Ok(TangentVector { base, vec })
    }

    /// Projects an arbitrary ambient vector onto the tangent space at `base`.
    pub fn project(base: UnitVector<S>, v: &[S]) -> Result<Self> {
        if v.len() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), got: v.len() });
        }
        let vec = project_tangent(base.coords(), v);
        Ok(TangentVector { base, vec })
    }

    pub fn base(&self) -> &UnitVector<S> {
        &self.base
    }

    pub fn vec(&self) -> &[S] {
        &self.vec
    }
}

/// The ground space hosting sources and targets.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundSpace<S> {
    Sphere { d: usize },
    Box { lower: Vec<S>, upper: Vec<S> },
}

impl<S: Scalar> GroundSpace<S> {
    pub fn sphere(d: usize) -> Result<Self> {
        if d < 2 {
            return invalid(format!("sphere needs d >= 2, got {d}"));
        }
        Ok(GroundSpace::Sphere { d })
    }

    pub fn new_box(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return invalid("box needs at least one coordinate");
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return invalid("box corners must satisfy lower < upper coordinate-wise");
        }
        Ok(GroundSpace::Box { lower, upper })
    }

    pub fn unit_box(d: usize) -> Result<Self> {
        Self::new_box(vec![S::zero(); d], vec![S::one(); d])
    }

    /// Ambient coordinate count.
    pub fn dim(&self) -> usize {
        match self {
            GroundSpace::Sphere { d } => *d,
            GroundSpace::Box { lower, .. } => lower.len(),
        }
    }

    /// Intrinsic dimension (size of a tangent frame).
    pub fn tangent_dim(&self) -> usize {
        match self {
            GroundSpace::Sphere { d } => d - 1,
            GroundSpace::Box { lower, .. } => lower.len(),
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, GroundSpace::Sphere { .. })
    }

    pub fn check_dim(&self, p: &[S]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        Ok(())
    }

    /// Membership test with slack `tol`.
    pub fn contains(&self, p: &[S], tol: S) -> bool {
        if p.len() != self.dim() || p.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            GroundSpace::Sphere { .. } => (norm(p) - S::one()).abs() <= tol.max(lit(UNIT_TOL)),
            GroundSpace::Box { lower, upper } => {
                p.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| *v >= *l - tol && *v <= *u + tol)
            }
        }
    }

    /// Largest possible distance between two points.
    pub fn diameter(&self) -> S {
        match self {
            GroundSpace::Sphere { .. } => S::PI(),
            GroundSpace::Box { lower, upper } => dist(lower, upper),
        }
    }

    /// Geodesic distance (sphere) or Euclidean distance (box).
    pub fn distance(&self, x: &[S], y: &[S]) -> Result<S> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &[S], y: &[S]) -> S {
        match self {
            GroundSpace::Sphere { .. } => {
                // 2 atan2(|x-y|, |x+y|) is accurate at both ends of [0, π].
                let a = dist(x, y);
                let b = norm(&add(x, y));
                lit::<S>(2.0) * a.atan2(b)
            }
            GroundSpace::Box { .. } => dist(x, y),
        }
    }

    /// Orthonormal basis of the tangent space at `x`.
    pub fn tangent_basis(&self, x: &[S]) -> Vec<Vec<S>> {
        match self {
            GroundSpace::Sphere { .. } => frame_vectors(x),
            GroundSpace::Box { lower, .. } => {
                let d = lower.len();
                (0..d)
                    .map(|i| {
                        let mut e = vec![S::zero(); d];
                        e[i] = S::one();
                        e
                    })
                    .collect()
            }
        }
    }

    /// Removes the normal component (sphere); identity on boxes.
    pub fn project_tangent(&self, x: &[S], v: &[S]) -> Vec<S> {
        match self {
            GroundSpace::Sphere { .. } => project_tangent(x, v),
            GroundSpace::Box { .. } => v.to_vec(),
        }
    }

    /// Geodesic from `x` with initial velocity `v`, evaluated at time 1.
    pub fn exp(&self, x: &[S], v: &[S]) -> Vec<S> {
        match self {
            GroundSpace::Sphere { .. } => {
                let n = norm(v);
                if n == S::zero() {
                    return x.to_vec();
                }
                let (s, c) = n.sin_cos();
                let mut out: Vec<S> = x.iter().zip(v).map(|(a, b)| *a * c + *b * (s / n)).collect();
                let r = norm(&out);
                out.iter_mut().for_each(|o| *o = *o / r);
                out
            }
            GroundSpace::Box { .. } => add(x, v),
        }
    }

    /// Velocity at time t of the geodesic t -> exp(x, t v).
    pub fn geodesic_velocity(&self, x: &[S], v: &[S], t: S) -> Vec<S> {
        match self {
            GroundSpace::Sphere { .. } => {
                let n = norm(v);
                if n == S::zero() {
                    return v.to_vec();
                }
                let (s, c) = (t * n).sin_cos();
                x.iter().zip(v).map(|(a, b)| -*a * n * s + *b * c).collect()
            }
            GroundSpace::Box { .. } => v.to_vec(),
        }
    }

    /// Inverse of `exp`; undefined at the cut locus (antipode).
    pub fn log(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        match self {
            GroundSpace::Sphere { .. } => {
                let theta = self.distance_unchecked(x, y);
                let w = project_tangent(x, y);
                let n = norm(&w);
                if theta == S::zero() {
                    return Ok(vec![S::zero(); x.len()]);
                }
                if n <= S::epsilon() {
                    return Err(Error::Domain("logarithm undefined at the antipode".into()));
                }
                Ok(scale(&w, theta / n))
            }
            GroundSpace::Box { .. } => Ok(sub(y, x)),
        }
    }

    /// Moves `x` a distance `t` along a uniformly random tangent direction.
    pub fn random_step<R: Rng>(&self, x: &[S], t: S, rng: &mut R) -> Vec<S> {
        let dir = self.random_unit_tangent(x, rng);
        self.exp(x, &scale(&dir, t))
    }

    /// Uniformly distributed unit tangent vector at `x`.
    pub fn random_unit_tangent<R: Rng>(&self, x: &[S], rng: &mut R) -> Vec<S> {
        let basis = self.tangent_basis(x);
        loop {
            let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
            let n: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n < 1e-12 {
                continue;
            }
            let mut v = vec![S::zero(); x.len()];
            for (c, b) in coeffs.iter().zip(&basis) {
                v = axpy(&v, lit(c / n), b);
            }
            return v;
        }
    }

    /// Draws one point, uniform on the space.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Vec<S> {
        match self {
            GroundSpace::Sphere { d } => loop {
                let g: Vec<f64> = (0..*d).map(|_| rng.sample(StandardNormal)).collect();
                let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 1e-12 {
                    return g.iter().map(|v| lit(v / n)).collect();
                }
            },
            GroundSpace::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| *l + (*u - *l) * lit::<S>(rng.gen::<f64>()))
                .collect(),
        }
    }
}

pub(crate) fn project_tangent<S: Scalar>(x: &[S], v: &[S]) -> Vec<S> {
    let p = dot(x, v);
    axpy(v, -p, x)
}

/// Gram-Schmidt over canonical axes ordered by increasing |x_i| (ties by index).
fn frame_vectors<S: Scalar>(x: &[S]) -> Vec<Vec<S>> {
    let d = x.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap().then(a.cmp(&b)));
    let mut frame: Vec<Vec<S>> = Vec::with_capacity(d - 1);
    for &k in &order {
        if frame.len() == d - 1 {
            break;
        }
        let mut v = vec![S::zero(); d];
        v[k] = S::one();
        for _ in 0..2 {
            v = axpy(&v, -dot(&v, x), x);
            for f in &frame {
                v = axpy(&v, -dot(&v, f), f);
            }
        }
        let n = norm(&v);
        if n > lit(1e-6) {
            frame.push(scale(&v, S::one() / n));
        }
    }
    frame
}

/// Geodesic distance between two points of `space`.
pub fn geodesic_distance<S: Scalar>(space: &GroundSpace<S>, x: &[S], y: &[S]) -> Result<S> {
    space.distance(x, y)
}

/// Deterministic orthonormal frame of the tangent space at `x`.
pub fn tangent_frame<S: Scalar>(x: &UnitVector<S>) -> Vec<TangentVector<S>> {
    frame_vectors(x.coords())
        .into_iter()
        .map(|v| TangentVector { base: x.clone(), vec: v })
        .collect()
}

/// Spherical Fibonacci lattice with `n` points on S^2.
pub fn fibonacci_grid<S: Scalar>(d: usize, n: usize) -> Result<Vec<UnitVector<S>>> {
    if d != 3 {
        return Err(Error::Unsupported(format!("Fibonacci grids exist only for d = 3, got {d}")));
    }
    if n == 0 {
        return invalid("grid needs at least one point");
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            UnitVector::new(vec![lit(r * phi.cos()), lit(r * phi.sin()), lit(z)])
        })
        .collect()
}

/// Fibonacci grid as raw coordinate vectors.
pub fn fibonacci_points<S: Scalar>(n: usize) -> Result<Vec<Vec<S>>> {
    Ok(fibonacci_grid::<S>(3, n)?.into_iter().map(UnitVector::into_coords).collect())
}

/// Seeded i.i.d. uniform points (normalized Gaussians on spheres, ChaCha8 stream).
pub fn uniform_sample<S: Scalar>(space: &GroundSpace<S>, n: usize, seed: u64) -> Vec<Vec<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| space.sample_point(&mut rng)).collect()
}

/// Rotation matrix in R^3.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation3<S> {
    m: [[S; 3]; 3],
}

impl<S: Scalar> Rotation3<S> {
    /// Rotation by `angle` about `axis` (Rodrigues).
    pub fn axis_angle(axis: &[S], angle: S) -> Result<Self> {
        if axis.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: axis.len() });
        }
        let k = UnitVector::new(axis.to_vec())?;
        let k = k.coords();
        let (s, c) = angle.sin_cos();
        let t = S::one() - c;
        let m = [
            [c + k[0] * k[0] * t, k[0] * k[1] * t - k[2] * s, k[0] * k[2] * t + k[1] * s],
            [k[1] * k[0] * t + k[2] * s, c + k[1] * k[1] * t, k[1] * k[2] * t - k[0] * s],
            [k[2] * k[0] * t - k[1] * s, k[2] * k[1] * t + k[0] * s, c + k[2] * k[2] * t],
        ];
        Ok(Rotation3 { m })
    }

    /// Uniformly random rotation from a seeded unit quaternion.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = loop {
            let g: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-12 {
                break g.iter().map(|v| v / n).collect();
            }
        };
        let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
        let m = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ];
        Rotation3 { m: m.map(|r| r.map(lit)) }
    }

    pub fn apply(&self, p: &[S]) -> Vec<S> {
        (0..3).map(|i| self.m[i][0] * p[0] + self.m[i][1] * p[1] + self.m[i][2] * p[2]).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut m = self.m;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[j][i];
            }
        }
        Rotation3 { m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn e(i: usize) -> Vec<f64> {
        UnitVector::<f64>::axis(3, i).unwrap().into_coords()
    }

    #[test]
    fn distances_of_axes() {
        let s = GroundSpace::<f64>::sphere(3).unwrap();
        assert_eq!(s.distance(&e(0), &e(0)).unwrap(), 0.0);
        assert!((s.distance(&e(0), &e(1)).unwrap() - PI / 2.0).abs() < 1e-15);
        let m: Vec<f64> = e(0).iter().map(|v| -v).collect();
        assert!((s.distance(&e(0), &m).unwrap() - PI).abs() < 1e-15);
        assert!(s.distance(&e(0), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn frame_of_first_axis() {
        let f = tangent_frame(&UnitVector::<f64>::axis(3, 0).unwrap());
        assert_eq!(f[0].vec(), &e(1)[..]);
        assert_eq!(f[1].vec(), &e(2)[..]);
    }

    #[test]
    fn fibonacci_grid_is_balanced() {
        let g = fibonacci_points::<f64>(2000).unwrap();
        for k in 0..3 {
            let m: f64 = g.iter().map(|p| p[k]).sum::<f64>() / 2000.0;
            assert!(m.abs() < 0.05);
        }
        let up = g.iter().filter(|p| p[2] > 0.0).count() as f64 / 2000.0;
        assert!((up - 0.5).abs() < 0.03);
        assert_eq!(fibonacci_points::<f64>(1).unwrap().len(), 1);
        assert!(fibonacci_grid::<f64>(4, 10).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let s = GroundSpace::<f64>::sphere(3).unwrap();
        assert_eq!(uniform_sample(&s, 1, 7), uniform_sample(&s, 1, 7));
        let pts = uniform_sample(&s, 5000, 3);
        let mean: Vec<f64> = (0..3).map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / 5000.0).collect();
        assert!(norm(&mean) <= 0.05);
        let b = GroundSpace::<f64>::unit_box(2).unwrap();
        assert!(uniform_sample(&b, 200, 1).iter().all(|p| b.contains(p, 0.0)));
    }

    #[test]
    fn exp_and_log_are_inverse() {
        let s = GroundSpace::<f64>::sphere(3).unwrap();
        let pts = uniform_sample(&s, 50, 11);
        for w in pts.windows(2) {
            let v = s.log(&w[0], &w[1]).unwrap();
            let y = s.exp(&w[0], &v);
            assert!(dist(&y, &w[1]) < 1e-12);
        }
    }

    #[test]
    fn frames_work_in_single_precision() {
        let x = UnitVector::<f32>::new(vec![0.3, -0.4, 0.8]).unwrap();
        let f = tangent_frame(&x);
        assert_eq!(f.len(), 2);
        assert!(dot(f[0].vec(), f[1].vec()).abs() < 1e-6);
        assert!(dot(f[0].vec(), x.coords()).abs() < 1e-6);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let r = Rotation3::<f64>::random(5);
        let p = vec![0.2, -0.3, 0.9];
        assert!((norm(&r.apply(&p)) - norm(&p)).abs() < 1e-14);
        assert!(dist(&r.inverse().apply(&r.apply(&p)), &p) < 1e-14);
    }

    fn unit3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 3)
            .prop_filter("nonzero", |v| norm(v) > 1e-3)
            .prop_map(|v| scale(&v, 1.0 / norm(&v)))
    }

    proptest! {
        #[test]
        fn triangle_inequality(x in unit3(), y in unit3(), z in unit3()) {
            let s = GroundSpace::<f64>::sphere(3).unwrap();
            let dxz = s.distance(&x, &z).unwrap();
            let dxy = s.distance(&x, &y).unwrap();
            let dyz = s.distance(&y, &z).unwrap();
            prop_assert!(dxz <= dxy + dyz + 1e-9);
            prop_assert!((0.0..=PI).contains(&dxy));
            prop_assert!((dxy - s.distance(&y, &x).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn frame_is_orthonormal_and_complete(x in unit3(), v in prop::collection::vec(-2.0f64..2.0, 3)) {
            let u = UnitVector::new(x.clone()).unwrap();
            let f = tangent_frame(&u);
            prop_assert_eq!(f.len(), 2);
            for i in 0..2 {
                prop_assert!(dot(f[i].vec(), u.coords()).abs() < 1e-10);
                for j in 0..2 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot(f[i].vec(), f[j].vec()) - expect).abs() < 1e-10);
                }
            }
            let mut rec = scale(u.coords(), dot(&v, u.coords()));
            for t in &f {
                rec = axpy(&rec, dot(&v, t.vec()), t.vec());
            }
            prop_assert!(dist(&rec, &v) < 1e-9);
            prop_assert_eq!(tangent_frame(&u), f);
        }
    }
}
