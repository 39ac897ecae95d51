use crate::error::{invalid, Error, Result};
use crate::hull::{convex_hull, Facet};
use crate::scalar::vecops::*;
use crate::sphere::{fibonacci_points, uniform_sample, GroundSpace, Rotation3, UnitVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Required clearance between the origin and every facet plane.
const INTERIOR_MARGIN: f64 = 1e-9;

/// A polytope given by its vertices, with the origin in its interior.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
}

/// Radii with B(0, r) ⊆ K ⊆ B(0, R).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyRadii {
    pub r: f64,
    pub big_r: f64,
}

impl AnisotropyRadii {
    /// The support radius π/2 − arccos(r/R).
    pub fn support_epsilon(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 - (self.r / self.big_r).acos()
    }

    /// Whether K ∈ K(lo, hi).
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.r >= lo && self.big_r <= hi
    }
}

/// Image of a normal under the inverse Gauss map.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussImage {
    pub direction: UnitVector<f64>,
    pub vertex: usize,
    /// Another vertex attains the same support value.
    pub tie: bool,
}

impl ConvexBody {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let facets = convex_hull(&vertices)?;
        let scale = vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
        if let Some(f) = facets.iter().find(|f| f.offset <= INTERIOR_MARGIN * scale.max(1.0)) {
            return Err(Error::Domain(format!(
                "origin is not strictly inside the body (facet offset {})",
                f.offset
            )));
        }
        Ok(ConvexBody { vertices, facets })
    }

    /// Polytope inscribed in the unit ball with `n` near-uniform vertices.
    pub fn ball(d: usize, n: usize) -> Result<Self> {
        match d {
            2 => Self::new(
                (0..n)
                    .map(|k| {
                        let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        vec![a.cos(), a.sin()]
                    })
                    .collect(),
            ),
            3 => Self::new(fibonacci_points(n)?),
            _ => Err(Error::Unsupported(format!("bodies are implemented for d = 2, 3 (got {d})"))),
        }
    }

    /// The cube [−1, 1]^d.
    pub fn cube(d: usize) -> Result<Self> {
        if !(2..=3).contains(&d) {
            return Err(Error::Unsupported(format!("bodies are implemented for d = 2, 3 (got {d})")));
        }
        Self::new(
            (0..1usize << d).map(|m| (0..d).map(|k| if m >> k & 1 == 1 { 1.0 } else { -1.0 }).collect()).collect(),
        )
    }

    /// Convex hull of `n` random points with uniform directions and norms in [r_min, 1].
    pub fn random_polytope(d: usize, n: usize, seed: u64, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min <= 1.0) {
            return invalid("r_min must lie in (0, 1]");
        }
        let dirs = uniform_sample(&GroundSpace::sphere(d)?, n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0b0d);
        Self::new(dirs.into_iter().map(|v| scale(&v, r_min + (1.0 - r_min) * rng.gen::<f64>())).collect())
    }

    /// Image under the linear map diag(factors).
    pub fn scaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.dim() || factors.iter().any(|f| !(*f > 0.0)) {
            return invalid("one positive factor per coordinate is required");
        }
        Self::new(self.vertices.iter().map(|v| v.iter().zip(factors).map(|(a, b)| a * b).collect()).collect())
    }

    pub fn rotated(&self, rot: &Rotation3<f64>) -> Result<Self> {
        if self.dim() != 3 {
            return Err(Error::Unsupported("rotations are implemented in d = 3".into()));
        }
        Self::new(self.vertices.iter().map(|v| rot.apply(v)).collect())
    }

    /// Vertices scaled radially by f(v/‖v‖).
    pub fn radially_perturbed(&self, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(
            self.vertices
                .iter()
                .map(|v| {
                    let u = scale(v, 1.0 / norm(v));
                    scale(v, f(&u))
                })
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    fn check(&self, x: &UnitVector<f64>) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// ρ_K(x) = sup { r : r x ∈ K }.
    pub fn radial_function(&self, x: &UnitVector<f64>) -> Result<f64> {
        self.check(x)?;
        let g = self.facets.iter().map(|f| dot(&f.normal, x.coords()) / f.offset).fold(f64::NEG_INFINITY, f64::max);
        Ok(1.0 / g)
    }

    /// h_K(n) = max over vertices of ⟨n, v⟩.
    pub fn support_function(&self, n: &UnitVector<f64>) -> Result<f64> {
        self.check(n)?;
        Ok(self.vertices.iter().map(|v| dot(v, n.coords())).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Direction of the vertex maximizing ⟨n, v⟩; ties go to the lowest index.
    pub fn gauss_map_inverse(&self, n: &UnitVector<f64>) -> Result<GaussImage> {
        self.check(n)?;
        let (vertex, best) = self.argmax(n.coords());
        let tol = 1e-12 * (1.0 + best.abs());
        let tie = self.vertices.iter().enumerate().any(|(k, v)| k != vertex && dot(v, n.coords()) >= best - tol);
        Ok(GaussImage { direction: UnitVector::new(self.vertices[vertex].clone())?, vertex, tie })
    }

    pub(crate) fn argmax(&self, n: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, v) in self.vertices.iter().enumerate() {
            let s = dot(v, n);
            if s > best.1 {
                best = (k, s);
            }
        }
        best
    }

    /// Inradius about the origin (nearest facet plane) and circumradius (farthest vertex).
    pub fn radii(&self) -> AnisotropyRadii {
        AnisotropyRadii {
            r: self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min),
            big_r: self.vertices.iter().map(|v| norm(v)).fold(0.0, f64::max),
        }
    }
}
