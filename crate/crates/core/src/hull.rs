//! Facet representation of the convex hull of a point set in 2 or 3 dimensions.

use crate::error::{invalid, Error, Result};
use crate::scalar::vecops::*;
use std::collections::HashMap;

/// Supporting half-space {p : ⟨normal, p⟩ ≤ offset} with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Facets of conv(points); coplanar triangles are kept separately.
pub fn convex_hull(points: &[Vec<f64>]) -> Result<Vec<Facet>> {
    let d = points.first().map_or(0, |p| p.len());
    if points.iter().any(|p| p.len() != d) {
        return invalid("points must share one dimension");
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return invalid("points must be finite");
    }
    match d {
        2 => hull_2d(points),
        3 => hull_3d(points),
        _ => Err(Error::Unsupported(format!("convex hulls are implemented for d = 2, 3 (got {d})"))),
    }
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn hull_2d(points: &[Vec<f64>]) -> Result<Vec<Facet>> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap());
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return Err(Error::Domain("need three distinct points for a planar hull".into()));
    }
    let mut chain: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = chain.len();
        let iter: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &i in iter {
            while chain.len() >= start + 2
                && cross2(&points[chain[chain.len() - 2]], &points[chain[chain.len() - 1]], &points[i]) <= 0.0
            {
                chain.pop();
            }
            chain.push(i);
        }
        chain.pop();
    }
    if chain.len() < 3 {
        return Err(Error::Domain("points are collinear".into()));
    }
    let k = chain.len();
    Ok((0..k)
        .map(|e| {
            let (p, q) = (&points[chain[e]], &points[chain[(e + 1) % k]]);
            let n = [q[1] - p[1], p[0] - q[0]];
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            let normal = vec![n[0] / len, n[1] / len];
            let offset = dot(&normal, p);
            Facet { normal, offset }
        })
        .collect())
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

struct Face {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
    alive: bool,
}

fn make_face(points: &[Vec<f64>], v: [usize; 3]) -> Face {
    let (a, b, c) = (&points[v[0]], &points[v[1]], &points[v[2]]);
    let n = cross3(&sub(b, a), &sub(c, a));
    let len = norm(&n);
    let normal = [n[0] / len, n[1] / len, n[2] / len];
    let offset = dot(&normal, a);
    Face { v, normal, offset, alive: true }
}

fn hull_3d(points: &[Vec<f64>]) -> Result<Vec<Facet>> {
    let n = points.len();
    let scale = points.iter().map(|p| norm(p)).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-10 * scale;
    let degenerate = || Error::Domain("points do not span three dimensions".into());
    if n < 4 {
        return Err(degenerate());
    }
    // initial simplex from extreme points
    let i0 = (0..n).min_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap()).unwrap();
    let i1 = (0..n)
        .max_by(|&a, &b| dist(&points[a], &points[i0]).total_cmp(&dist(&points[b], &points[i0])))
        .unwrap();
    let line = sub(&points[i1], &points[i0]);
    let off_line = |p: &[f64]| norm(&cross3(&line, &sub(p, &points[i0])));
    let i2 = (0..n).max_by(|&a, &b| off_line(&points[a]).total_cmp(&off_line(&points[b]))).unwrap();
    if off_line(&points[i2]) <= tol * norm(&line) {
        return Err(degenerate());
    }
    let plane = cross3(&line, &sub(&points[i2], &points[i0]));
    let height = |p: &[f64]| dot(&plane, &sub(p, &points[i0])) / norm(&plane);
    let i3 = (0..n).max_by(|&a, &b| height(&points[a]).abs().total_cmp(&height(&points[b]).abs())).unwrap();
    if height(&points[i3]).abs() <= tol {
        return Err(degenerate());
    }
    let simplex = [i0, i1, i2, i3];
    let centroid: Vec<f64> = (0..3).map(|k| simplex.iter().map(|&i| points[i][k]).sum::<f64>() / 4.0).collect();
    let mut faces: Vec<Face> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let add_face = |faces: &mut Vec<Face>, edges: &mut HashMap<(usize, usize), usize>, v: [usize; 3]| {
        let id = faces.len();
        for k in 0..3 {
            edges.insert((v[k], v[(k + 1) % 3]), id);
        }
        faces.push(make_face(points, v));
    };
    for skip in 0..4 {
        let mut v: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| simplex[k]).collect();
        let f = make_face(points, [v[0], v[1], v[2]]);
        if dot(&f.normal, &centroid) > f.offset {
            v.swap(1, 2);
        }
        add_face(&mut faces, &mut edges, [v[0], v[1], v[2]]);
    }
    for p in 0..n {
        if simplex.contains(&p) {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| faces[f].alive && dot(&faces[f].normal, &points[p]) - faces[f].offset > tol)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut horizon = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let other = edges[&(b, a)];
                if !visible.contains(&other) {
                    horizon.push((a, b));
                }
            }
        }
        for &f in &visible {
            faces[f].alive = false;
            let v = faces[f].v;
            for k in 0..3 {
                edges.remove(&(v[k], v[(k + 1) % 3]));
            }
        }
        for (a, b) in horizon {
            add_face(&mut faces, &mut edges, [a, b, p]);
        }
    }
    Ok(faces
        .into_iter()
        .filter(|f| f.alive)
        .map(|f| Facet { normal: f.normal.to_vec(), offset: f.offset })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::fibonacci_points;

    fn contains_all(points: &[Vec<f64>], facets: &[Facet]) -> bool {
        points.iter().all(|p| facets.iter().all(|f| dot(&f.normal, p) <= f.offset + 1e-9))
    }

    #[test]
    fn cube_hull_has_six_planes() {
        let mut pts = Vec::new();
        for m in 0..8 {
            pts.push((0..3).map(|k| if m >> k & 1 == 1 { 1.0 } else { -1.0 }).collect::<Vec<f64>>());
        }
        pts.push(vec![0.1, 0.2, 0.3]);
        let f = convex_hull(&pts).unwrap();
        assert_eq!(f.len(), 12);
        assert!(contains_all(&pts, &f));
        for fa in &f {
            assert!((fa.offset - 1.0).abs() < 1e-12);
            assert!((fa.normal.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_points_are_all_on_the_hull() {
        let pts: Vec<Vec<f64>> = fibonacci_points(300).unwrap();
        let f = convex_hull(&pts).unwrap();
        // Euler: a triangulated sphere with V vertices has 2V − 4 faces
        assert_eq!(f.len(), 2 * 300 - 4);
        assert!(contains_all(&pts, &f));
    }

    #[test]
    fn square_hull() {
        let pts = vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![0.0, 0.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 0.0]];
        let f = convex_hull(&pts).unwrap();
        assert_eq!(f.len(), 4);
        assert!(contains_all(&pts, &f));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(convex_hull(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]]).is_err());
        assert!(convex_hull(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).is_err());
        assert!(convex_hull(&vec![vec![0.0; 4]; 5]).is_err());
    }
}
