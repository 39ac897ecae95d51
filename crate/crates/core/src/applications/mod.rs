//! Sphere applications: reflector maps and Gauss curvature measures of polytopes.

mod body;
mod gauss;
mod reflector;

pub use body::{AnisotropyRadii, ConvexBody, GaussImage};
pub use gauss::{cap_area, dual_potentials, gauss_curvature_measure, verify_aleksandrov_caps, CapReport};
pub use reflector::{grid_map, reflector_map, GridMap};
