//! Polynomials in three variables, used for boundary data and exact fields.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// A scalar field with first and second derivatives.
pub trait ScalarField: Sync {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Point;
    fn hessian(&self, x: Point) -> [[f64; 3]; 3];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: [u32; 3],
}

/// `sum_k coeff_k x1^a x2^b x3^c`; serialized as the list of monomials.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

fn ipow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Polynomial { terms }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![Monomial { coeff: c, powers: [0, 0, 0] }])
    }

    /// The coordinate function `x_{k+1}`.
    pub fn coordinate(k: usize) -> Self {
        let mut powers = [0; 3];
        powers[k] = 1;
        Polynomial::new(vec![Monomial { coeff: 1.0, powers }])
    }

    pub fn term(coeff: f64, powers: [u32; 3]) -> Monomial {
        Monomial { coeff, powers }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|m| m.powers.iter().sum()).max().unwrap_or(0)
    }

    pub fn plus(&self, other: &Polynomial) -> Polynomial {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Polynomial::new(terms)
    }

    pub fn scaled(&self, s: f64) -> Polynomial {
        Polynomial::new(
            self.terms.iter().map(|m| Monomial { coeff: s * m.coeff, powers: m.powers }).collect(),
        )
    }

    /// Partial derivative in direction `k`.
    pub fn derivative(&self, k: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|m| m.powers[k] > 0)
            .map(|m| {
                let mut p = m.powers;
                p[k] -= 1;
                Monomial { coeff: m.coeff * m.powers[k] as f64, powers: p }
            })
            .collect();
        Polynomial::new(terms)
    }

    /// Like terms merged and zero terms dropped.
    pub fn simplified(&self) -> Polynomial {
        let mut out: Vec<Monomial> = Vec::new();
        for m in &self.terms {
            match out.iter_mut().find(|o| o.powers == m.powers) {
                Some(o) => o.coeff += m.coeff,
                None => out.push(m.clone()),
            }
        }
        out.retain(|m| m.coeff != 0.0);
        Polynomial::new(out)
    }

    pub fn laplacian(&self) -> Polynomial {
        (0..3)
            .map(|k| self.derivative(k).derivative(k))
            .fold(Polynomial::default(), |a, b| a.plus(&b))
            .simplified()
    }

    /// Whether every coefficient of the Laplacian is below `tol` in magnitude.
    pub fn is_harmonic(&self, tol: f64) -> bool {
        self.laplacian().terms.iter().all(|m| m.coeff.abs() <= tol)
    }
}

impl ScalarField for Polynomial {
    fn value(&self, x: Point) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coeff * ipow(x[0], m.powers[0]) * ipow(x[1], m.powers[1]) * ipow(x[2], m.powers[2]))
            .sum()
    }

    fn gradient(&self, x: Point) -> Point {
        let mut g = [0.0; 3];
        for m in &self.terms {
            for k in 0..3 {
                if m.powers[k] == 0 {
                    continue;
                }
                let mut t = m.coeff * m.powers[k] as f64;
                for j in 0..3 {
                    let p = if j == k { m.powers[j] - 1 } else { m.powers[j] };
                    t *= ipow(x[j], p);
                }
                g[k] += t;
            }
        }
        g
    }

    fn hessian(&self, x: Point) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for a in 0..3 {
            let da = self.derivative(a);
            for b in a..3 {
                let v = da.derivative(b).value(x);
                h[a][b] = v;
                h[b][a] = v;
            }
        }
        h
    }
}

/// Polynomial in one variable, `sum_k c_k s^k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Univariate {
    pub coeffs: Vec<f64>,
}

impl Univariate {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Univariate { coeffs }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Univariate::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}
