//! Small dense matrices: enough for (d-1)x(d-1) Hessians and Jacobians.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat<S>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(S::zero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }

    pub fn sub(&self, other: &Mat<S>) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn symmetrized(&self) -> Self {
        let mut m = self.clone();
        let half = lit::<S>(0.5);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = half * (self[(i, j)] + self[(j, i)]);
            }
        }
        m
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> S {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[(i, c)].abs().partial_cmp(&a[(j, c)].abs()).unwrap()).unwrap();
            if a[(p, c)] == S::zero() {
                return S::zero();
            }
            if p != c {
                for j in 0..n {
                    let t = a[(c, j)];
                    a[(c, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                det = -det;
            }
            let piv = a[(c, c)];
            det = det * piv;
            for i in c + 1..n {
                let f = a[(i, c)] / piv;
                for j in c..n {
                    a[(i, j)] = a[(i, j)] - f * a[(c, j)];
                }
            }
        }
        det
    }

    /// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
    pub fn sym_eigenvalues(&self) -> Vec<S> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.symmetrized();
        let two = lit::<S>(2.0);
        for _sweep in 0..100 {
            let mut off = S::zero();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off = off + a[(i, j)] * a[(i, j)];
                    }
                }
            }
            if off <= S::epsilon() * S::epsilon() * (S::one() + a.max_abs() * a.max_abs()) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)] == S::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (two * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                    let c = S::one() / (t * t + S::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<S> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    /// Solves A x = b by partial-pivot elimination.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        let scale = self.max_abs();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[(i, c)].abs().partial_cmp(&a[(j, c)].abs()).unwrap()).unwrap();
            if a[(p, c)].abs() <= scale * S::epsilon() * lit(n as f64) {
                return Err(Error::Numerical("singular linear system".into()));
            }
            if p != c {
                for j in 0..n {
                    let t = a[(c, j)];
                    a[(c, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                x.swap(c, p);
            }
            for i in c + 1..n {
                let f = a[(i, c)] / a[(c, c)];
                for j in c..n {
                    a[(i, j)] = a[(i, j)] - f * a[(c, j)];
                }
                x[i] = x[i] - f * x[c];
            }
        }
        for c in (0..n).rev() {
            let mut s = x[c];
            for j in c + 1..n {
                s = s - a[(c, j)] * x[j];
            }
            x[c] = s / a[(c, c)];
        }
        Ok(x)
    }

    /// Singular values, ascending.
    pub fn singular_values(&self) -> Vec<S> {
        let ata = self.transpose().mul(self).expect("square product");
        ata.sym_eigenvalues().into_iter().map(|v| v.max(S::zero()).sqrt()).collect()
    }
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_known_matrix() {
        let m: Mat<f64> = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = m.sym_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_and_singular_values() {
        let m: Mat<f64> = Mat::from_rows(&[vec![0.0, 2.0, 0.0], vec![3.0, 0.0, 0.0], vec![0.0, 0.0, -1.0]]).unwrap();
        assert!((m.det() - 6.0).abs() < 1e-14);
        let sv = m.singular_values();
        assert!((sv[0] - 1.0).abs() < 1e-12 && (sv[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solves_linear_system() {
        let m: Mat<f64> = Mat::from_rows(&[vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let x = m.solve(&[4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let z: Mat<f64> = Mat::zeros(2, 2);
        assert!(z.solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let m: Mat<f32> = Mat::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.sym_eigenvalues(), vec![1.0, 4.0]);
    }
}
