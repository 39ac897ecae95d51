//! JSON files for measures, plans and convex bodies.

use crate::applications::ConvexBody;
use crate::error::{invalid, Error, Result};
use crate::ot::{DiscreteMeasure, SolveResult};
use crate::sphere::GroundSpace;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    /// "sphere" or "box".
    pub kind: String,
    /// Ambient coordinate count.
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub space: SpaceFile,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub entries: Vec<(usize, usize, f64)>,
    pub primal_value: f64,
    pub dual_phi: Vec<f64>,
    pub dual_psi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub vertices: Vec<Vec<f64>>,
}

impl SpaceFile {
    pub fn from_space(space: &GroundSpace<f64>) -> Self {
        match space {
            GroundSpace::Sphere { d } => SpaceFile { kind: "sphere".into(), d: *d, bounds: None },
            GroundSpace::Box { lower, upper } => SpaceFile {
                kind: "box".into(),
                d: lower.len(),
                bounds: Some(BoundsFile { lower: lower.clone(), upper: upper.clone() }),
            },
        }
    }

    pub fn to_space(&self) -> Result<GroundSpace<f64>> {
        match self.kind.as_str() {
            "sphere" => {
                if self.bounds.is_some() {
                    return invalid("a sphere takes no bounds");
                }
                GroundSpace::sphere(self.d)
            }
            "box" => {
                let space = match &self.bounds {
                    Some(b) => GroundSpace::new_box(b.lower.clone(), b.upper.clone())?,
                    None => GroundSpace::unit_box(self.d)?,
                };
                if space.dim() != self.d {
                    return Err(Error::DimensionMismatch { expected: self.d, got: space.dim() });
                }
                Ok(space)
            }
            other => invalid(format!("unknown space kind '{other}' (expected sphere or box)")),
        }
    }
}

impl MeasureFile {
    pub fn from_measure(m: &DiscreteMeasure<f64>) -> Self {
        MeasureFile {
            space: SpaceFile::from_space(m.space()),
            points: m.points().to_vec(),
            weights: m.weights().to_vec(),
        }
    }

    /// Sphere points within 1e−6 of unit norm are renormalized; others are rejected.
    pub fn to_measure(&self) -> Result<DiscreteMeasure<f64>> {
        let space = self.space.to_space()?;
        let mut points = self.points.clone();
        for (i, p) in points.iter_mut().enumerate() {
            space.check_dim(p)?;
            if space.is_sphere() {
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (r - 1.0).abs() > 1e-6 {
                    return Err(Error::Domain(format!("point {i} has norm {r}, expected 1")));
                }
                p.iter_mut().for_each(|v| *v /= r);
            }
        }
        DiscreteMeasure::new(space, points, self.weights.clone())
    }
}

impl PlanFile {
    pub fn from_solution(sol: &SolveResult<f64>) -> Self {
        PlanFile {
            entries: sol.plan.entries().to_vec(),
            primal_value: sol.primal_value,
            dual_phi: sol.dual_phi.values().to_vec(),
            dual_psi: sol.dual_psi.values().to_vec(),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure<f64>> {
    read_json::<MeasureFile>(path)?.to_measure()
}

pub fn write_measure(path: &Path, m: &DiscreteMeasure<f64>) -> Result<()> {
    write_json(path, &MeasureFile::from_measure(m))
}

pub fn write_plan(path: &Path, sol: &SolveResult<f64>) -> Result<()> {
    write_json(path, &PlanFile::from_solution(sol))
}

pub fn read_plan(path: &Path) -> Result<PlanFile> {
    read_json(path)
}

pub fn read_body(path: &Path) -> Result<ConvexBody> {
    ConvexBody::new(read_json::<BodyFile>(path)?.vertices)
}

pub fn write_body(path: &Path, body: &ConvexBody) -> Result<()> {
    write_json(path, &BodyFile { vertices: body.vertices().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostKind, CostModel};
    use crate::ot::solve_discrete_ot;

    #[test]
    fn measure_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let s = GroundSpace::new_box(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        let m = DiscreteMeasure::new(s, vec![vec![0.5, 0.0], vec![1.0, 0.25]], vec![0.25, 0.75]).unwrap();
        write_measure(&path, &m).unwrap();
        assert_eq!(read_measure(&path).unwrap(), m);
    }

    #[test]
    fn sphere_points_are_checked() {
        let file: MeasureFile = serde_json::from_str(
            r#"{"space": {"kind": "sphere", "d": 3}, "points": [[0.6, 0.8, 0.0000001]], "weights": [1.0]}"#,
        )
        .unwrap();
        let m = file.to_measure().unwrap();
        assert!((m.points()[0].iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
        let bad: MeasureFile =
            serde_json::from_str(r#"{"space": {"kind": "sphere", "d": 3}, "points": [[1, 1, 0]], "weights": [1]}"#)
                .unwrap();
        assert!(bad.to_measure().is_err());
        assert!(serde_json::from_str::<MeasureFile>(r#"{"space": {"kind": "sphere", "d": 3}}"#).is_err());
    }

    #[test]
    fn plan_file_layout() {
        let model = CostModel::standard(CostKind::Quadratic, 1).unwrap();
        let s = model.space().clone();
        let mu = DiscreteMeasure::uniform(s.clone(), vec![vec![0.0], vec![1.0]]).unwrap();
        let sol = solve_discrete_ot(&model, &mu, &mu).unwrap();
        let v: serde_json::Value = serde_json::to_value(PlanFile::from_solution(&sol)).unwrap();
        assert_eq!(v["entries"].as_array().unwrap().len(), 2);
        assert_eq!(v["entries"][0].as_array().unwrap().len(), 3);
        assert_eq!(v["primal_value"], 0.0);
        assert_eq!(v["dual_psi"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn body_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.json");
        let cube = ConvexBody::cube(3).unwrap();
        write_body(&path, &cube).unwrap();
        assert_eq!(read_body(&path).unwrap().vertices(), cube.vertices());
    }
}
