//! Nonlinear transmission data `F(eps, t, zeta)`, `G(eps, t, zeta)` on the
//! inclusion boundary, superposition operators and Taylor remainders.

use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::{dot, Point, SurfacePoint};
use crate::poly::{Polynomial, ScalarField, Univariate};
use crate::sph::gauss_legendre_on;

/// Transmission data with the partial derivatives used by the solvers.
/// `t` is a point of the unscaled inclusion boundary.
pub trait TransmissionData: Send + Sync {
    /// The constant `zeta^i` with `F(0, t, zeta^i)` equal to the background value at 0.
    fn zeta_i(&self) -> f64;
    fn f(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
    fn f_eps(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
    fn f_zeta(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
    fn f_eps_eps(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
    fn f_eps_zeta(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
    fn f_zeta_zeta(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
    fn g(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
    fn g_zeta(&self, eps: f64, t: &SurfacePoint, zeta: f64) -> f64;
}

/// Selects one evaluator of [`TransmissionData`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluator {
    F,
    FEps,
    FZeta,
    FEpsEps,
    FEpsZeta,
    FZetaZeta,
    G,
    GZeta,
}

pub fn evaluate(data: &dyn TransmissionData, which: Evaluator, eps: f64, t: &SurfacePoint, zeta: f64) -> f64 {
    match which {
        Evaluator::F => data.f(eps, t, zeta),
        Evaluator::FEps => data.f_eps(eps, t, zeta),
        Evaluator::FZeta => data.f_zeta(eps, t, zeta),
        Evaluator::FEpsEps => data.f_eps_eps(eps, t, zeta),
        Evaluator::FEpsZeta => data.f_eps_zeta(eps, t, zeta),
        Evaluator::FZetaZeta => data.f_zeta_zeta(eps, t, zeta),
        Evaluator::G => data.g(eps, t, zeta),
        Evaluator::GZeta => data.g_zeta(eps, t, zeta),
    }
}

/// Superposition `t -> H(eps, t, v(t))` at the nodes.
pub fn nemytskii_apply(
    h: impl Fn(f64, &SurfacePoint, f64) -> f64,
    eps: f64,
    v: &[f64],
    points: &[SurfacePoint],
) -> Result<Vec<f64>> {
    if v.len() != points.len() {
        return Err(Error::Data("function does not match the node set".into()));
    }
    v.iter()
        .zip(points)
        .enumerate()
        .map(|(node, (vi, t))| {
            let y = h(eps, t, *vi);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Evaluator { node, msg: format!("non-finite value at zeta = {vi}") })
            }
        })
        .collect()
}

/// Directional derivative `d_zeta H(eps, t, vbar(t)) * vtilde(t)` of the superposition.
pub fn dv_nemytskii(
    h_zeta: impl Fn(f64, &SurfacePoint, f64) -> f64,
    eps: f64,
    vbar: &[f64],
    vtilde: &[f64],
    points: &[SurfacePoint],
) -> Result<Vec<f64>> {
    if vtilde.len() != vbar.len() {
        return Err(Error::Data("direction does not match the base point".into()));
    }
    let slope = nemytskii_apply(h_zeta, eps, vbar, points)?;
    Ok(slope.iter().zip(vtilde).map(|(s, d)| s * d).collect())
}

fn unit_gauss() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_on(8, 0.0, 1.0))
}

/// `F~(eps, t, a, b) = int_0^1 (1 - tau) {F_ee + 2 b F_ez + b^2 F_zz}(tau eps, t, a + tau eps b) dtau`,
/// so that `F(eps, t, a + eps b) = F(0, t, a) + eps F_e(0, t, a) + eps b F_z(0, t, a) + eps^2 F~`.
pub fn taylor_remainder_f(data: &dyn TransmissionData, eps: f64, t: &SurfacePoint, a: f64, b: f64) -> f64 {
    let (x, w) = unit_gauss();
    x.iter()
        .zip(w)
        .map(|(tau, wt)| {
            let (e, z) = (tau * eps, a + tau * eps * b);
            let inner = data.f_eps_eps(e, t, z) + 2.0 * b * data.f_eps_zeta(e, t, z) + b * b * data.f_zeta_zeta(e, t, z);
            wt * (1.0 - tau) * inner
        })
        .sum()
}

/// `d_b F~(eps, t, a, b) = int_0^1 {F_ez + b F_zz}(tau eps, t, a + tau eps b) dtau`.
pub fn taylor_remainder_f_db(data: &dyn TransmissionData, eps: f64, t: &SurfacePoint, a: f64, b: f64) -> f64 {
    let (x, w) = unit_gauss();
    x.iter()
        .zip(w)
        .map(|(tau, wt)| {
            let (e, z) = (tau * eps, a + tau * eps * b);
            wt * (data.f_eps_zeta(e, t, z) + b * data.f_zeta_zeta(e, t, z))
        })
        .sum()
}

/// Default switch between the difference and the Hessian-integral forms of `u~`.
pub const TAYLOR_THRESHOLD: f64 = 1e-3;

/// `u~(eps, t) = int_0^1 (1 - tau) t^T Hess u(tau eps t) t dtau`, i.e.
/// `u(eps t) = u(0) + eps t . grad u(0) + eps^2 u~(eps, t)`. Uses the
/// difference quotient when `|eps| >= threshold`.
pub fn taylor_remainder_u(field: &dyn ScalarField, eps: f64, t: Point, threshold: f64) -> f64 {
    if eps.abs() >= threshold {
        let x = [eps * t[0], eps * t[1], eps * t[2]];
        (field.value(x) - field.value([0.0; 3]) - eps * dot(t, field.gradient([0.0; 3]))) / (eps * eps)
    } else {
        taylor_remainder_u_hessian(field, eps, t)
    }
}

pub fn taylor_remainder_u_hessian(field: &dyn ScalarField, eps: f64, t: Point) -> f64 {
    let (x, w) = unit_gauss();
    x.iter()
        .zip(w)
        .map(|(tau, wt)| {
            let h = field.hessian([tau * eps * t[0], tau * eps * t[1], tau * eps * t[2]]);
            let q: f64 = (0..3).map(|i| t[i] * dot(h[i], t)).sum();
            wt * (1.0 - tau) * q
        })
        .sum()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdmissibilityTolerances {
    pub constancy: f64,
    pub positivity: f64,
}

impl Default for AdmissibilityTolerances {
    fn default() -> Self {
        AdmissibilityTolerances { constancy: 1e-10, positivity: 1e-8 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `max_t |F(0, t, zeta^i) - u(0)|`.
    pub max_f_deviation: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    /// `(max - min) / |mean|` of `F_zeta(0, t, zeta^i)`.
    pub slope_variation: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks that `F(0, ., zeta^i)` equals the background value at the origin and
/// that `F_zeta(0, ., zeta^i)` is constant and positive on the nodes.
pub fn check_admissibility(
    data: &dyn TransmissionData,
    background_at_origin: f64,
    points: &[SurfacePoint],
    tol: &AdmissibilityTolerances,
) -> AdmissibilityReport {
    let z = data.zeta_i();
    let mut dev: f64 = 0.0;
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for t in points {
        let f = data.f(0.0, t, z);
        dev = dev.max(if f.is_finite() { (f - background_at_origin).abs() } else { f64::INFINITY });
        let s = data.f_zeta(0.0, t, z);
        lo = lo.min(s);
        hi = hi.max(s);
        sum += s;
    }
    let mean = sum / points.len().max(1) as f64;
    let variation = if mean != 0.0 { (hi - lo) / mean.abs() } else { f64::INFINITY };
    let mut failures = Vec::new();
    if !(dev < tol.constancy) {
        failures.push(format!("F(0, t, zeta_i) deviates from the background value at 0 by {dev:.3e}"));
    }
    if !(variation < tol.constancy) {
        failures.push(format!("d_zeta F(0, t, zeta_i) is not constant (relative variation {variation:.3e})"));
    }
    if !(lo > tol.positivity) {
        failures.push(format!("d_zeta F(0, t, zeta_i) is not positive (minimum {lo:.3e})"));
    }
    AdmissibilityReport {
        max_f_deviation: dev,
        slope_min: lo,
        slope_max: hi,
        slope_variation: variation,
        passed: failures.is_empty(),
        failures,
    }
}

/// `F = a + b zeta`, `G = c`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub zeta_i: f64,
}

impl TransmissionData for Affine {
    fn zeta_i(&self) -> f64 {
        self.zeta_i
    }
    fn f(&self, _: f64, _: &SurfacePoint, zeta: f64) -> f64 {
        self.a + self.b * zeta
    }
    fn f_eps(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        0.0
    }
    fn f_zeta(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        self.b
    }
    fn f_eps_eps(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        0.0
    }
    fn f_eps_zeta(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        0.0
    }
    fn f_zeta_zeta(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        0.0
    }
    fn g(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        self.c
    }
    fn g_zeta(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        0.0
    }
}

/// One term `(coeff + t_coeff . t) eps^eps_power (zeta - center)^zeta_power`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub eps_power: u32,
    pub zeta_power: u32,
    pub coeff: f64,
    #[serde(default)]
    pub t_coeff: [f64; 3],
}

fn falling(p: u32, k: u32) -> f64 {
    (0..k).map(|j| p as f64 - j as f64).product()
}

fn power(x: f64, p: u32, k: u32) -> f64 {
    if k > p {
        0.0
    } else {
        falling(p, k) * x.powi((p - k) as i32)
    }
}

/// Polynomial data in `(eps, zeta)` with coefficients affine in `t`.
#[derive(Clone, Debug)]
pub struct PolynomialData {
    pub f_terms: Vec<Term>,
    pub g_terms: Vec<Term>,
    pub center: f64,
    pub zeta_i: f64,
}

impl PolynomialData {
    fn sum(&self, terms: &[Term], de: u32, dz: u32, eps: f64, t: &SurfacePoint, zeta: f64) -> f64 {
        terms
            .iter()
            .map(|m| {
                (m.coeff + dot(m.t_coeff, t.x)) * power(eps, m.eps_power, de) * power(zeta - self.center, m.zeta_power, dz)
            })
            .sum()
    }
}

impl TransmissionData for PolynomialData {
    fn zeta_i(&self) -> f64 {
        self.zeta_i
    }
    fn f(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.f_terms, 0, 0, e, t, z)
    }
    fn f_eps(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.f_terms, 1, 0, e, t, z)
    }
    fn f_zeta(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.f_terms, 0, 1, e, t, z)
    }
    fn f_eps_eps(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.f_terms, 2, 0, e, t, z)
    }
    fn f_eps_zeta(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.f_terms, 1, 1, e, t, z)
    }
    fn f_zeta_zeta(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.f_terms, 0, 2, e, t, z)
    }
    fn g(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.g_terms, 0, 0, e, t, z)
    }
    fn g_zeta(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.sum(&self.g_terms, 0, 1, e, t, z)
    }
}

/// Data built from harmonic polynomials `p_o`, `p_i` so that `p_o` in the
/// perforated domain and `p_i` in the inclusion solve the transmission problem:
/// `F = p_o(eps t) + zeta - p_i(eps t)`,
/// `G = nu(t) . (grad p_o - grad p_i)(eps t) + coupling(zeta - p_i(eps t))`.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub p_outer: Polynomial,
    pub p_inner: Polynomial,
    pub coupling: Univariate,
}

fn scaled(eps: f64, t: &SurfacePoint) -> Point {
    [eps * t.x[0], eps * t.x[1], eps * t.x[2]]
}

fn quad(h: [[f64; 3]; 3], t: Point) -> f64 {
    (0..3).map(|i| t[i] * dot(h[i], t)).sum()
}

impl TransmissionData for Manufactured {
    fn zeta_i(&self) -> f64 {
        self.p_inner.value([0.0; 3])
    }
    fn f(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        let x = scaled(e, t);
        self.p_outer.value(x) + z - self.p_inner.value(x)
    }
    fn f_eps(&self, e: f64, t: &SurfacePoint, _: f64) -> f64 {
        let x = scaled(e, t);
        dot(t.x, self.p_outer.gradient(x)) - dot(t.x, self.p_inner.gradient(x))
    }
    fn f_zeta(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        1.0
    }
    fn f_eps_eps(&self, e: f64, t: &SurfacePoint, _: f64) -> f64 {
        let x = scaled(e, t);
        quad(self.p_outer.hessian(x), t.x) - quad(self.p_inner.hessian(x), t.x)
    }
    fn f_eps_zeta(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        0.0
    }
    fn f_zeta_zeta(&self, _: f64, _: &SurfacePoint, _: f64) -> f64 {
        0.0
    }
    fn g(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        let x = scaled(e, t);
        let flux = dot(t.normal, self.p_outer.gradient(x)) - dot(t.normal, self.p_inner.gradient(x));
        flux + self.coupling.value(z - self.p_inner.value(x))
    }
    fn g_zeta(&self, e: f64, t: &SurfacePoint, z: f64) -> f64 {
        self.coupling.derivative(z - self.p_inner.value(scaled(e, t)))
    }
}

/// Exact fields of manufactured data: `u^o = p_outer`, `u^i = p_inner`.
#[derive(Clone, Debug)]
pub struct ExactFields {
    pub outer: Polynomial,
    pub inner: Polynomial,
}

pub fn make_manufactured(
    p_outer: Polynomial,
    p_inner: Polynomial,
    coupling: Univariate,
) -> Result<(Manufactured, ExactFields)> {
    if coupling.value(0.0) != 0.0 {
        return Err(Error::Config(format!("coupling must vanish at 0, got {}", coupling.value(0.0))));
    }
    for (name, p) in [("p_outer", &p_outer), ("p_inner", &p_inner)] {
        let scale = p.terms.iter().map(|m| m.coeff.abs()).fold(1.0, f64::max);
        if !p.is_harmonic(1e-12 * scale) {
            return Err(Error::Config(format!("{name} is not harmonic")));
        }
    }
    let exact = ExactFields { outer: p_outer.clone(), inner: p_inner.clone() };
    Ok((Manufactured { p_outer, p_inner, coupling }, exact))
}

fn one() -> f64 {
    1.0
}

/// Builtin data families as configured in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyConfig {
    /// `F = a + b zeta`, `G = c`; a missing `a` or `zeta_i` is derived from
    /// the background value at the origin.
    Affine {
        #[serde(default)]
        a: Option<f64>,
        #[serde(default = "one")]
        b: f64,
        #[serde(default)]
        c: f64,
        #[serde(default)]
        zeta_i: Option<f64>,
    },
    /// Sums of [`Term`]s in `(eps, zeta - center)`; `center` defaults to
    /// `zeta_i`, and a missing `zeta_i` solves `F(0, t, zeta_i) = u(0)`.
    Polynomial {
        f_terms: Vec<Term>,
        #[serde(default)]
        g_terms: Vec<Term>,
        #[serde(default)]
        center: Option<f64>,
        #[serde(default)]
        zeta_i: Option<f64>,
    },
    Manufactured {
        p_outer: Polynomial,
        p_inner: Polynomial,
        #[serde(default)]
        coupling: Univariate,
    },
}

impl FamilyConfig {
    /// Whether the data are affine in `zeta` with no `eps`-dependence.
    pub fn is_affine(&self) -> bool {
        matches!(self, FamilyConfig::Affine { .. })
    }

    /// Outer boundary data forced by the family (manufactured data).
    pub fn forced_boundary_data(&self) -> Option<Polynomial> {
        match self {
            FamilyConfig::Manufactured { p_outer, .. } => Some(p_outer.clone()),
            _ => None,
        }
    }

    pub fn exact_fields(&self) -> Option<ExactFields> {
        match self {
            FamilyConfig::Manufactured { p_outer, p_inner, .. } => {
                Some(ExactFields { outer: p_outer.clone(), inner: p_inner.clone() })
            }
            _ => None,
        }
    }

    /// Builds the data given the background value `u(0)`.
    pub fn build(&self, background_at_origin: f64) -> Result<Arc<dyn TransmissionData>> {
        let u0 = background_at_origin;
        match self {
            FamilyConfig::Affine { a, b, c, zeta_i } => {
                if !(*b > 0.0) {
                    return Err(Error::Config(format!("affine slope b must be positive, got {b}")));
                }
                let (a, z) = match (a, zeta_i) {
                    (Some(a), Some(z)) => (*a, *z),
                    (Some(a), None) => (*a, (u0 - a) / b),
                    (None, Some(z)) => (u0 - b * z, *z),
                    (None, None) => (0.0, u0 / b),
                };
                Ok(Arc::new(Affine { a, b: *b, c: *c, zeta_i: z }))
            }
            FamilyConfig::Polynomial { f_terms, g_terms, center, zeta_i } => {
                let mut data = PolynomialData {
                    f_terms: f_terms.clone(),
                    g_terms: g_terms.clone(),
                    center: center.or(*zeta_i).unwrap_or(0.0),
                    zeta_i: zeta_i.unwrap_or(0.0),
                };
                if zeta_i.is_none() {
                    data.zeta_i = solve_zeta_i(&data, u0)?;
                }
                Ok(Arc::new(data))
            }
            FamilyConfig::Manufactured { p_outer, p_inner, coupling } => {
                let (m, _) = make_manufactured(p_outer.clone(), p_inner.clone(), coupling.clone())?;
                Ok(Arc::new(m))
            }
        }
    }
}

/// Newton's method for `F(0, t_ref, z) = u0`.
fn solve_zeta_i(data: &dyn TransmissionData, u0: f64) -> Result<f64> {
    let t = SurfacePoint { x: [0.0, 0.0, 1.0], normal: [0.0, 0.0, 1.0], jacobian: 1.0 };
    let mut z = u0;
    for _ in 0..100 {
        let r = data.f(0.0, &t, z) - u0;
        if r.abs() < 1e-15 * (1.0 + u0.abs()) {
            return Ok(z);
        }
        let s = data.f_zeta(0.0, &t, z);
        if s == 0.0 || !s.is_finite() {
            break;
        }
        z -= r / s;
    }
    let r = data.f(0.0, &t, z) - u0;
    if r.abs() < 1e-12 * (1.0 + u0.abs()) {
        Ok(z)
    } else {
        Err(Error::Config(format!("could not determine zeta_i (residual {r:.3e})")))
    }
}

/// Names accepted by [`builtin_family`].
pub const BUILTIN_FAMILIES: [&str; 3] = ["affine", "polynomial", "manufactured"];

fn term(eps_power: u32, zeta_power: u32, coeff: f64, t_coeff: [f64; 3]) -> Term {
    Term { eps_power, zeta_power, coeff, t_coeff }
}

/// Outer boundary data and family for the builtin test problems.
///
/// * `affine`: `F = zeta`, `G = 0`, `f^o = x1`.
/// * `polynomial`: `F = zeta + eps (0.5 + 0.1 t1) zeta^2 + 0.3 eps t2`,
///   `G = 0.4 zeta^2 + 0.2 t3`, `f^o = x1 + 1`.
/// * `manufactured`: exact fields `0.5 + x1 + 0.5 x1 x2` and
///   `0.2 - 0.7 x3 + x1^2 - x2^2`, coupling `s^2`.
pub fn builtin_family(name: &str) -> Option<(Polynomial, FamilyConfig)> {
    match name {
        "affine" => Some((
            Polynomial::coordinate(0),
            FamilyConfig::Affine { a: Some(0.0), b: 1.0, c: 0.0, zeta_i: None },
        )),
        "polynomial" => Some((
            Polynomial::coordinate(0).plus(&Polynomial::constant(1.0)),
            FamilyConfig::Polynomial {
                f_terms: vec![
                    term(0, 1, 1.0, [0.0; 3]),
                    term(1, 2, 0.5, [0.1, 0.0, 0.0]),
                    term(1, 0, 0.0, [0.0, 0.3, 0.0]),
                ],
                g_terms: vec![term(0, 2, 0.4, [0.0; 3]), term(0, 0, 0.0, [0.0, 0.0, 0.2])],
                center: Some(0.0),
                zeta_i: None,
            },
        )),
        "manufactured" => {
            let po = Polynomial::new(vec![
                Polynomial::term(0.5, [0, 0, 0]),
                Polynomial::term(1.0, [1, 0, 0]),
                Polynomial::term(0.5, [1, 1, 0]),
            ]);
            let pi = Polynomial::new(vec![
                Polynomial::term(0.2, [0, 0, 0]),
                Polynomial::term(-0.7, [0, 0, 1]),
                Polynomial::term(1.0, [2, 0, 0]),
                Polynomial::term(-1.0, [0, 2, 0]),
            ]);
            Some((
                po.clone(),
                FamilyConfig::Manufactured { p_outer: po, p_inner: pi, coupling: Univariate::new(vec![0.0, 0.0, 1.0]) },
            ))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_quadrature, SurfaceSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(x: Point) -> SurfacePoint {
        let r = crate::geometry::norm(x);
        SurfacePoint { x, normal: [x[0] / r, x[1] / r, x[2] / r], jacobian: 1.0 }
    }

    fn nonlinear() -> PolynomialData {
        PolynomialData {
            f_terms: vec![
                Term { eps_power: 0, zeta_power: 1, coeff: 1.0, t_coeff: [0.0; 3] },
                Term { eps_power: 1, zeta_power: 2, coeff: 0.7, t_coeff: [0.2, 0.0, -0.1] },
                Term { eps_power: 2, zeta_power: 3, coeff: -0.3, t_coeff: [0.0; 3] },
                Term { eps_power: 1, zeta_power: 0, coeff: 0.4, t_coeff: [0.0, 0.5, 0.0] },
            ],
            g_terms: vec![
                Term { eps_power: 0, zeta_power: 2, coeff: 0.5, t_coeff: [0.1, 0.0, 0.0] },
                Term { eps_power: 1, zeta_power: 1, coeff: 1.0, t_coeff: [0.0; 3] },
            ],
            center: 0.3,
            zeta_i: 0.3,
        }
    }

    #[test]
    fn superposition_examples() {
        let q = build_quadrature(&SurfaceSpec::UnitSphere, 6).unwrap();
        let pts = q.surface_points();
        let v: Vec<f64> = q.nodes.iter().map(|x| x[0]).collect();
        assert_eq!(nemytskii_apply(|_, _, z| z, 0.1, &v, &pts).unwrap(), v);
        let sq = nemytskii_apply(|_, _, z| z * z, 0.1, &v, &pts).unwrap();
        assert!(sq.iter().zip(&v).all(|(a, b)| *a == b * b));
        let aff = Affine { a: 1.0, b: 2.5, c: 0.0, zeta_i: 0.0 };
        let s = nemytskii_apply(|e, t, z| aff.f_zeta(e, t, z), 0.1, &v, &pts).unwrap();
        assert!(s.iter().all(|x| *x == 2.5));
        let d = dv_nemytskii(|_, _, z| 2.0 * z, 0.0, &v, &sq, &pts).unwrap();
        assert!(d.iter().zip(&v).zip(&sq).all(|((d, a), b)| (d - 2.0 * a * b).abs() < 1e-15));
        let err = nemytskii_apply(|_, _, z| 1.0 / (z - v[3]), 0.0, &v, &pts).unwrap_err();
        assert!(matches!(err, Error::Evaluator { node: 3, .. }));
    }

    #[test]
    fn superposition_derivative_is_first_order_accurate() {
        let data = nonlinear();
        let q = build_quadrature(&SurfaceSpec::UnitSphere, 6).unwrap();
        let pts = q.surface_points();
        let vbar: Vec<f64> = q.nodes.iter().map(|x| 0.3 + 0.2 * x[1]).collect();
        let dir: Vec<f64> = q.nodes.iter().map(|x| x[0] * x[2]).collect();
        let dv = dv_nemytskii(|e, t, z| data.g_zeta(e, t, z), 0.1, &vbar, &dir, &pts).unwrap();
        let base = nemytskii_apply(|e, t, z| data.g(e, t, z), 0.1, &vbar, &pts).unwrap();
        let mut errs = Vec::new();
        for h in [1e-2, 1e-3] {
            let moved: Vec<f64> = vbar.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
            let g = nemytskii_apply(|e, t, z| data.g(e, t, z), 0.1, &moved, &pts).unwrap();
            let e = (0..g.len()).map(|i| ((g[i] - base[i]) / h - dv[i]).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[1] < 0.2 * errs[0] && errs[1] < 1e-3, "{errs:?}");
    }

    #[test]
    fn derivatives_match_central_differences() {
        let data = nonlinear();
        let m = make_manufactured(
            Polynomial::new(vec![Polynomial::term(1.0, [1, 1, 0]), Polynomial::term(0.5, [0, 0, 1])]),
            Polynomial::new(vec![Polynomial::term(1.0, [2, 0, 0]), Polynomial::term(-1.0, [0, 2, 0])]),
            Univariate::new(vec![0.0, 0.5, 1.0]),
        )
        .unwrap()
        .0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let families: [&dyn TransmissionData; 2] = [&data, &m];
        for d in families {
            for _ in 0..10 {
                let t = point([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.0)]);
                let (e, z) = (rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0));
                let mut errs = Vec::new();
                for h in [1e-2, 5e-3] {
                    let de = |f: &dyn Fn(f64, f64) -> f64| (f(e + h, z) - f(e - h, z)) / (2.0 * h);
                    let dz = |f: &dyn Fn(f64, f64) -> f64| (f(e, z + h) - f(e, z - h)) / (2.0 * h);
                    let pairs = [
                        (de(&|e, z| d.f(e, &t, z)), d.f_eps(e, &t, z)),
                        (dz(&|e, z| d.f(e, &t, z)), d.f_zeta(e, &t, z)),
                        (de(&|e, z| d.f_eps(e, &t, z)), d.f_eps_eps(e, &t, z)),
                        (dz(&|e, z| d.f_eps(e, &t, z)), d.f_eps_zeta(e, &t, z)),
                        (dz(&|e, z| d.f_zeta(e, &t, z)), d.f_zeta_zeta(e, &t, z)),
                        (dz(&|e, z| d.g(e, &t, z)), d.g_zeta(e, &t, z)),
                    ];
                    errs.push(pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
                }
                // second order: halving h divides the error by about 4
                assert!(errs[1] <= 0.3 * errs[0] + 1e-9, "{errs:?}");
            }
        }
    }

    #[test]
    fn taylor_remainder_examples() {
        let t = point([0.0, 0.0, 1.0]);
        let aff = Affine { a: 0.0, b: 1.0, c: 0.0, zeta_i: 0.0 };
        assert_eq!(taylor_remainder_f(&aff, 0.3, &t, 0.2, -1.0), 0.0);
        // F = zeta + eps zeta^2
        let f = PolynomialData {
            f_terms: vec![
                Term { eps_power: 0, zeta_power: 1, coeff: 1.0, t_coeff: [0.0; 3] },
                Term { eps_power: 1, zeta_power: 2, coeff: 1.0, t_coeff: [0.0; 3] },
            ],
            g_terms: vec![],
            center: 0.0,
            zeta_i: 0.0,
        };
        for (e, a, b) in [(0.1, 0.5, -2.0), (-0.3, 1.5, 0.7), (0.0, 2.0, 3.0)] {
            let exact = 2.0 * a * b + e * b * b;
            assert!((taylor_remainder_f(&f, e, &t, a, b) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn taylor_identity_and_b_derivative() {
        let data = nonlinear();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let t = point([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.5]);
            let (e, a, b) = (rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0));
            let lhs = data.f(e, &t, a + e * b);
            let rhs = data.f(0.0, &t, a)
                + e * data.f_eps(0.0, &t, a)
                + e * b * data.f_zeta(0.0, &t, a)
                + e * e * taylor_remainder_f(&data, e, &t, a, b);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} {rhs}");
            let h = 1e-5;
            let fd = (taylor_remainder_f(&data, e, &t, a, b + h) - taylor_remainder_f(&data, e, &t, a, b - h)) / (2.0 * h);
            assert!((fd - taylor_remainder_f_db(&data, e, &t, a, b)).abs() < 1e-8);
        }
    }

    #[test]
    fn background_remainder_paths() {
        let x1 = Polynomial::coordinate(0);
        assert_eq!(taylor_remainder_u(&x1, 0.1, [0.3, 0.2, 0.9], TAYLOR_THRESHOLD), 0.0);
        let q = Polynomial::new(vec![Polynomial::term(1.0, [2, 0, 0]), Polynomial::term(-1.0, [0, 0, 2])]);
        let t = [0.6, -0.2, 0.7];
        for e in [1e-4, 0.01, 0.2] {
            let v = taylor_remainder_u(&q, e, t, TAYLOR_THRESHOLD);
            assert!((v - (t[0] * t[0] - t[2] * t[2])).abs() < 1e-9);
        }
        let cubic = Polynomial::new(vec![Polynomial::term(1.0, [1, 1, 1]), Polynomial::term(2.0, [3, 0, 0]), Polynomial::term(-6.0, [1, 2, 0])]);
        let direct = taylor_remainder_u(&cubic, 1e-3, t, TAYLOR_THRESHOLD);
        let hess = taylor_remainder_u_hessian(&cubic, 1e-3, t);
        assert!((direct - hess).abs() < 1e-8);
    }

    #[test]
    fn admissibility_examples() {
        let q = build_quadrature(&SurfaceSpec::UnitSphere, 6).unwrap();
        let pts = q.surface_points();
        let tol = AdmissibilityTolerances::default();
        let u0 = 0.7;
        let aff = FamilyConfig::Affine { a: None, b: 2.0, c: 0.0, zeta_i: Some(0.1) }.build(u0).unwrap();
        assert!(check_admissibility(aff.as_ref(), u0, &pts, &tol).passed);
        let ident = FamilyConfig::Affine { a: Some(0.0), b: 1.0, c: 0.0, zeta_i: None }.build(u0).unwrap();
        let r = check_admissibility(ident.as_ref(), u0, &pts, &tol);
        assert!(r.passed && (r.slope_min - 1.0).abs() < 1e-15);
        let zi = u0;
        let quadratic = FamilyConfig::Polynomial {
            f_terms: vec![
                Term { eps_power: 0, zeta_power: 1, coeff: 1.0, t_coeff: [0.0; 3] },
                Term { eps_power: 0, zeta_power: 0, coeff: zi, t_coeff: [0.0; 3] },
                Term { eps_power: 0, zeta_power: 2, coeff: 0.0, t_coeff: [1.0, 0.0, 0.0] },
            ],
            g_terms: vec![],
            center: None,
            zeta_i: Some(zi),
        };
        // F = zeta + x1 (zeta - zeta_i)^2 written about the center zeta_i
        assert!(check_admissibility(quadratic.build(u0).unwrap().as_ref(), u0, &pts, &tol).passed);
        let linear = FamilyConfig::Polynomial {
            f_terms: vec![
                Term { eps_power: 0, zeta_power: 1, coeff: 1.0, t_coeff: [0.0; 3] },
                Term { eps_power: 0, zeta_power: 0, coeff: zi, t_coeff: [0.0; 3] },
                Term { eps_power: 0, zeta_power: 1, coeff: 0.0, t_coeff: [1.0, 0.0, 0.0] },
            ],
            g_terms: vec![],
            center: None,
            zeta_i: Some(zi),
        };
        let r = check_admissibility(linear.build(u0).unwrap().as_ref(), u0, &pts, &tol);
        assert!(!r.passed && r.slope_variation > 1.0);
    }

    #[test]
    fn solved_zeta_i() {
        let cfg = FamilyConfig::Polynomial {
            f_terms: vec![
                Term { eps_power: 0, zeta_power: 1, coeff: 1.0, t_coeff: [0.0; 3] },
                Term { eps_power: 0, zeta_power: 3, coeff: 1.0, t_coeff: [0.0; 3] },
            ],
            g_terms: vec![],
            center: Some(0.0),
            zeta_i: None,
        };
        let d = cfg.build(2.0).unwrap();
        assert!((d.zeta_i() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn manufactured_examples() {
        let x1 = Polynomial::coordinate(0);
        let (m, exact) = make_manufactured(x1.clone(), x1.clone(), Univariate::new(vec![0.0, 0.0, 1.0])).unwrap();
        let t = point([0.6, 0.0, 0.8]);
        for e in [0.0, 0.1] {
            let ui = exact.inner.value([e * t.x[0], e * t.x[1], e * t.x[2]]);
            assert!((m.f(e, &t, ui) - ui).abs() < 1e-15);
            assert!(m.g(e, &t, ui).abs() < 1e-15);
        }
        let shifted = x1.plus(&Polynomial::constant(1.0));
        let (m, _) = make_manufactured(x1.clone(), shifted, Univariate::default()).unwrap();
        assert!((m.f(0.1, &t, 2.0) - 1.0).abs() < 1e-15);
        assert!(make_manufactured(x1.clone(), x1.clone(), Univariate::new(vec![0.1])).is_err());
        let not_harmonic = Polynomial::new(vec![Polynomial::term(1.0, [2, 0, 0])]);
        assert!(make_manufactured(not_harmonic, x1, Univariate::default()).is_err());
    }

    #[test]
    fn family_json() {
        let s = r#"{"family":"manufactured","p_outer":[{"coeff":1.0,"powers":[1,0,0]}],
                    "p_inner":[{"coeff":1.0,"powers":[1,0,0]}],"coupling":[0.0,0.0,1.0]}"#;
        let cfg: FamilyConfig = serde_json::from_str(s).unwrap();
        assert!(cfg.forced_boundary_data().is_some());
        let s = r#"{"family":"affine"}"#;
        let cfg: FamilyConfig = serde_json::from_str(s).unwrap();
        assert_eq!(cfg, FamilyConfig::Affine { a: None, b: 1.0, c: 0.0, zeta_i: None });
    }
}
