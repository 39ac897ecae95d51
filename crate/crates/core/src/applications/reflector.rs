use crate::concavity::{c_transform, Potential};
use crate::cost::{CostKind, CostModel};
use crate::error::{invalid, Result};

/// Index map x ↦ argmin_y c(x, y) − ψ(y) over the grid of ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub indices: Vec<usize>,
    /// Several grid points attain the minimum; the lowest index was kept.
    pub ties: Vec<bool>,
}

/// Reflector map induced by a potential on the target grid.
pub fn reflector_map(model: &CostModel<f64>, psi: &Potential<f64>, xs: &[Vec<f64>]) -> Result<GridMap> {
    if model.kind() != CostKind::Reflector {
        return invalid("the reflector map needs the reflector cost");
    }
    grid_map(model, psi, xs)
}

/// Same construction for any cost.
pub fn grid_map(model: &CostModel<f64>, psi: &Potential<f64>, xs: &[Vec<f64>]) -> Result<GridMap> {
    let t = c_transform(model, psi, xs)?;
    Ok(GridMap { indices: t.argmin, ties: t.ties })
}
