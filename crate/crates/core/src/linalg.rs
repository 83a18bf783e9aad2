//! Dense LU factorization with a 1-norm condition estimate.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

/// Pivot ratio below which a factorization is treated as singular.
const PIVOT_FLOOR: f64 = 1e-14;

pub struct Factorization {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    norm1: f64,
    dim: usize,
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl Factorization {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Solver { msg: "matrix is not square".into(), condition: f64::NAN });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver { msg: "matrix has non-finite entries".into(), condition: f64::NAN });
        }
        let dim = a.nrows();
        let norm1 = norm1(&a);
        let lu = a.lu();
        let u = lu.u();
        let diag = u.diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        if dim > 0 && !(lo > PIVOT_FLOOR * hi) {
            return Err(Error::Solver {
                msg: "singular matrix".into(),
                condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
            });
        }
        Ok(Factorization { lu, norm1, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(b).expect("factorization checked non-singular")
    }

    pub fn solve_slice(&self, b: &[f64]) -> Vec<f64> {
        self.solve(&DVector::from_column_slice(b)).as_slice().to_vec()
    }

    /// Solves `A^T x = b` using `P A = L U`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let l = self.lu.l();
        let u = self.lu.u();
        let z = u.tr_solve_upper_triangular(b).expect("non-singular");
        let mut y = l.tr_solve_lower_triangular(&z).expect("unit diagonal");
        self.lu.p().inv_permute_rows(&mut y);
        y
    }

    /// Hager's estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return 1.0;
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |(bj, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
            if zmax <= z.dot(&x) {
                break;
            }
            x.fill(0.0);
            x[j] = 1.0;
        }
        est * self.norm1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_transposes() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0]);
        let f = Factorization::new(a.clone()).unwrap();
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert!((&a * f.solve(&b) - &b).norm() < 1e-14);
        assert!((a.transpose() * f.solve_transpose(&b) - &b).norm() < 1e-14);
    }

    #[test]
    fn condition_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0, 0.01]));
        let c = Factorization::new(a).unwrap().condition_estimate();
        assert!((c - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn singular_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Factorization::new(a), Err(Error::Solver { .. })));
    }
}
