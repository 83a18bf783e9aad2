//! Fundamental solution of the Laplacian, double layer potentials, the boundary
//! operator `W`, its normal derivative and the interior Dirichlet solver.
//!
//! The double layer potential of a density `mu` on a surface `G` is
//! `w[mu](x) = -int_G nu(y) . grad S(x - y) mu(y) dsigma(y)`; in R^3,
//! `S(x) = -1 / (4 pi |x|)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{
    add, dot, norm, rotate_z, scale, sub, tangent_frame, Point, PolarRule, SurfacePoint,
    SurfaceQuadrature,
};
use crate::linalg::Factorization;
use crate::sph::{eval_sh, rotate_z as rotate_harmonics, sh_degree};

/// (n-1)-dimensional measure of the unit sphere in R^n.
pub fn sphere_measure(n: usize) -> f64 {
    let (mut s, mut k) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while k < n {
        s *= 2.0 * PI / k as f64;
        k += 2;
    }
    s
}

fn check_point(x: &[f64], n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension must be at least 3, got {n}")));
    }
    if x.len() != n {
        return Err(Error::Domain(format!("point has {} coordinates, expected {n}", x.len())));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Domain("fundamental solution is singular at the origin".into()));
    }
    Ok(r)
}

/// `S_n(x) = |x|^(2-n) / ((2-n) s_n)`.
pub fn fundamental_solution(x: &[f64], n: usize) -> Result<f64> {
    let r = check_point(x, n)?;
    let e = 2.0 - n as f64;
    Ok(r.powf(e) / (e * sphere_measure(n)))
}

/// `grad S_n(x) = x |x|^(-n) / s_n`.
pub fn grad_fundamental_solution(x: &[f64], n: usize) -> Result<Vec<f64>> {
    let r = check_point(x, n)?;
    let c = r.powi(-(n as i32)) / sphere_measure(n);
    Ok(x.iter().map(|v| v * c).collect())
}

const FOUR_PI: f64 = 4.0 * PI;

#[inline]
pub fn s3(z: Point) -> f64 {
    -1.0 / (FOUR_PI * norm(z))
}

#[inline]
pub fn grad_s3(z: Point) -> Point {
    let r = norm(z);
    scale(1.0 / (FOUR_PI * r * r * r), z)
}

#[inline]
pub fn hess_s3(z: Point) -> [[f64; 3]; 3] {
    let r2 = dot(z, z);
    let c = 1.0 / (FOUR_PI * r2 * r2 * r2.sqrt());
    let mut h = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let d = if i == j { r2 } else { 0.0 };
            h[i][j] = c * (d - 3.0 * z[i] * z[j]);
        }
    }
    h
}

/// Third derivatives `d_k d_i d_j S_3`, symmetric in all indices.
#[inline]
pub fn third_s3(z: Point) -> [[[f64; 3]; 3]; 3] {
    let r2 = dot(z, z);
    let r = r2.sqrt();
    let c5 = -3.0 / (FOUR_PI * r2 * r2 * r);
    let c7 = 15.0 / (FOUR_PI * r2 * r2 * r2 * r);
    let mut t = [[[0.0; 3]; 3]; 3];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                t[i][j][k] = c5 * (delta(i, j) * z[k] + delta(i, k) * z[j] + delta(j, k) * z[i])
                    + c7 * z[i] * z[j] * z[k];
            }
        }
    }
    t
}

/// Double layer kernel `K(x, y) = -nu(y) . grad S(x - y)`.
#[inline]
pub fn dl_kernel(x: Point, y: Point, nu: Point) -> f64 {
    -dot(nu, grad_s3(sub(x, y)))
}

/// `grad_x K(x, y) = -Hess S(x - y) nu(y)`.
#[inline]
pub fn dl_kernel_grad(x: Point, y: Point, nu: Point) -> Point {
    let h = hess_s3(sub(x, y));
    [-dot(h[0], nu), -dot(h[1], nu), -dot(h[2], nu)]
}

fn check_density(rule: &SurfaceQuadrature, mu: &[f64]) -> Result<()> {
    if mu.len() != rule.len() {
        return Err(Error::Data(format!(
            "density has {} values, surface has {} nodes",
            mu.len(),
            rule.len()
        )));
    }
    Ok(())
}

/// Plain quadrature is used at distance above this many node spacings.
pub const PLAIN_FACTOR: f64 = 2.0;
/// The evaluators switch to the close rule below this many node spacings.
const CLOSE_FACTOR: f64 = 4.0;
const CLOSE_PANEL_POINTS: usize = 10;

/// Distance from `x` to the closest node of the rule.
pub fn min_node_distance(rule: &SurfaceQuadrature, x: Point) -> f64 {
    rule.nodes.iter().map(|y| norm(sub(x, *y))).fold(f64::INFINITY, f64::min)
}

/// Double layer potential evaluated by the plain rule; requires `x` to be
/// well separated from the surface.
pub fn double_layer_offsurface(rule: &SurfaceQuadrature, mu: &[f64], x: Point) -> Result<f64> {
    check_density(rule, mu)?;
    let d = min_node_distance(rule, x);
    let h = rule.node_spacing();
    if d <= PLAIN_FACTOR * h {
        return Err(Error::Accuracy(format!(
            "point at distance {d:.3e} is within {PLAIN_FACTOR} node spacings ({h:.3e}); use the jump relations or the close evaluator"
        )));
    }
    Ok(plain_value(rule, mu, x))
}

fn plain_value(rule: &SurfaceQuadrature, mu: &[f64], x: Point) -> f64 {
    let mut s = 0.0;
    for j in 0..rule.len() {
        s += rule.weights[j] * mu[j] * dl_kernel(x, rule.nodes[j], rule.normals[j]);
    }
    s
}

fn plain_gradient(rule: &SurfaceQuadrature, mu: &[f64], x: Point) -> Point {
    let mut g = [0.0; 3];
    for j in 0..rule.len() {
        let k = dl_kernel_grad(x, rule.nodes[j], rule.normals[j]);
        g = add(g, scale(rule.weights[j] * mu[j], k));
    }
    g
}

/// Graded polar rule for integrands peaked at relative angular scale `a`.
fn close_rule(order: usize, a: f64) -> PolarRule {
    PolarRule::graded(a.max(1e-9), 12.0 / order as f64, CLOSE_PANEL_POINTS, 2 * order + 16)
}

/// A density on a surface together with its harmonic interpolant, ready for
/// evaluation of the potential anywhere off the surface.
pub struct DoubleLayer<'a> {
    rule: &'a SurfaceQuadrature,
    density: Vec<f64>,
    coeffs: Vec<f64>,
    spacing: f64,
}

impl<'a> DoubleLayer<'a> {
    pub fn new(rule: &'a SurfaceQuadrature, mu: &[f64]) -> Result<Self> {
        check_density(rule, mu)?;
        Ok(DoubleLayer {
            rule,
            density: mu.to_vec(),
            coeffs: rule.analysis(mu),
            spacing: rule.node_spacing(),
        })
    }

    pub fn rule(&self) -> &SurfaceQuadrature {
        self.rule
    }

    fn is_far(&self, x: Point) -> bool {
        min_node_distance(self.rule, x) > CLOSE_FACTOR * self.spacing
    }

    pub fn value(&self, x: Point) -> f64 {
        if self.is_far(x) {
            plain_value(self.rule, &self.density, x)
        } else {
            self.close(x).0
        }
    }

    pub fn gradient(&self, x: Point) -> Point {
        if self.is_far(x) {
            plain_gradient(self.rule, &self.density, x)
        } else {
            self.close(x).1
        }
    }

    pub fn value_and_gradient(&self, x: Point) -> (f64, Point) {
        if self.is_far(x) {
            (plain_value(self.rule, &self.density, x), plain_gradient(self.rule, &self.density, x))
        } else {
            self.close(x)
        }
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn value_plain(&self, x: Point) -> f64 {
        plain_value(self.rule, &self.density, x)
    }

    pub fn gradient_plain(&self, x: Point) -> Point {
        plain_gradient(self.rule, &self.density, x)
    }

    /// Hessian by the plain rule (interior points far from the surface).
    pub fn hessian_plain(&self, x: Point) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for j in 0..self.rule.len() {
            let t = third_s3(sub(x, self.rule.nodes[j]));
            let nu = self.rule.normals[j];
            let c = -self.rule.weights[j] * self.density[j];
            for a in 0..3 {
                for b in 0..3 {
                    h[a][b] += c * dot(t[a][b], nu);
                }
            }
        }
        h
    }

    /// Value and gradient by a rule graded around the nearest surface point,
    /// after subtracting the density value there.
    pub fn close(&self, x: Point) -> (f64, Point) {
        let spec = &self.rule.spec;
        let (p, foot) = spec.foot_point(x);
        let d = norm(sub(x, foot.x));
        let polar = close_rule(self.rule.order, d / norm(foot.x));
        let (e1, e2) = tangent_frame(p);
        let nb = self.rule.band();
        let mut y = vec![0.0; nb];
        eval_sh(self.rule.order, p, &mut y);
        let mu_star: f64 = y.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        let mut value = if spec.contains(x) { mu_star } else { 0.0 };
        let mut grad = [0.0; 3];
        for (q, w) in polar.points(p, e1, e2) {
            eval_sh(self.rule.order, q, &mut y);
            let mu: f64 = y.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
            let sp = spec.point(q);
            let c = w * sp.jacobian * (mu - mu_star);
            value += c * dl_kernel(x, sp.x, sp.normal);
            grad = add(grad, scale(c, dl_kernel_grad(x, sp.x, sp.normal)));
        }
        (value, grad)
    }
}

/// Matrix of the plain double layer map from densities on `rule` to values at `targets`.
pub fn double_layer_matrix(rule: &SurfaceQuadrature, targets: &[Point]) -> Result<DMatrix<f64>> {
    check_far(rule, targets)?;
    Ok(DMatrix::from_fn(targets.len(), rule.len(), |t, j| {
        rule.weights[j] * dl_kernel(targets[t], rule.nodes[j], rule.normals[j])
    }))
}

/// Matrix of `dirs[t] . grad w[mu](targets[t])` by the plain rule.
pub fn double_layer_gradient_matrix(
    rule: &SurfaceQuadrature,
    targets: &[Point],
    dirs: &[Point],
) -> Result<DMatrix<f64>> {
    check_far(rule, targets)?;
    Ok(DMatrix::from_fn(targets.len(), rule.len(), |t, j| {
        rule.weights[j] * dot(dirs[t], dl_kernel_grad(targets[t], rule.nodes[j], rule.normals[j]))
    }))
}

fn check_far(rule: &SurfaceQuadrature, targets: &[Point]) -> Result<()> {
    let h = rule.node_spacing();
    for x in targets {
        let d = min_node_distance(rule, *x);
        if d <= PLAIN_FACTOR * h {
            return Err(Error::Accuracy(format!(
                "evaluation point at distance {d:.3e} from the surface (node spacing {h:.3e})"
            )));
        }
    }
    Ok(())
}

/// Harmonic basis matrix `B` (nodes x order^2).
pub fn basis_matrix(rule: &SurfaceQuadrature) -> DMatrix<f64> {
    let nb = rule.band();
    DMatrix::from_fn(rule.len(), nb, |i, k| rule.basis_row(i)[k])
}

/// Analysis matrix `B^T diag(param weights)` mapping nodal values to coefficients.
pub fn analysis_matrix(rule: &SurfaceQuadrature) -> DMatrix<f64> {
    let nb = rule.band();
    DMatrix::from_fn(nb, rule.len(), |k, j| rule.basis_row(j)[k] * rule.param_weights[j])
}

/// For every node `i`, integrates `M` kernels against the harmonic basis with
/// the polar rule centred at node `i`: returns, per kernel, the rows
/// `sum_q g(i, q) Y(q)` (nodes x order^2) and the sums `sum_q g(i, q)`.
///
/// When `equivariant` is set the kernel must be invariant under rotations
/// about the z axis (spheres centred at the origin) and each ring is computed once.
fn node_centred_rows<const M: usize, K>(
    rule: &SurfaceQuadrature,
    polar: &PolarRule,
    equivariant: bool,
    kernel: K,
) -> Vec<(DMatrix<f64>, Vec<f64>)>
where
    K: Fn(usize, &SurfacePoint) -> [f64; M] + Sync,
{
    let nb = rule.band();
    let order = rule.order;
    let n_phi = rule.n_phi;
    let rings: Vec<Vec<(Vec<f64>, [f64; M])>> = (0..rule.n_theta)
        .into_par_iter()
        .map(|it| {
            let (st, ct) = rule.ring_theta[it].sin_cos();
            let pts = polar.points([st, 0.0, ct], [ct, 0.0, -st], [0.0, 1.0, 0.0]);
            let mut table = vec![0.0; pts.len() * nb];
            for (k, (q, _)) in pts.iter().enumerate() {
                eval_sh(order, *q, &mut table[k * nb..(k + 1) * nb]);
            }
            let mut out = Vec::with_capacity(n_phi);
            let mut base: Option<(Vec<f64>, [f64; M])> = None;
            for j in 0..n_phi {
                let alpha = 2.0 * PI * j as f64 / n_phi as f64;
                let i = it * n_phi + j;
                let (mut acc, sums) = match (&base, equivariant) {
                    (Some(b), true) => b.clone(),
                    _ => {
                        let mut acc = vec![0.0; M * nb];
                        let mut sums = [0.0; M];
                        for (k, (q, w)) in pts.iter().enumerate() {
                            let sp = rule.spec.point(rotate_z(*q, alpha));
                            let g = kernel(i, &sp);
                            let yk = &table[k * nb..(k + 1) * nb];
                            for m in 0..M {
                                let gm = g[m] * w;
                                sums[m] += gm;
                                for (a, y) in acc[m * nb..(m + 1) * nb].iter_mut().zip(yk) {
                                    *a += gm * y;
                                }
                            }
                        }
                        if equivariant {
                            base = Some((acc.clone(), sums));
                        }
                        (acc, sums)
                    }
                };
                for m in 0..M {
                    rotate_harmonics(&mut acc[m * nb..(m + 1) * nb], order, alpha);
                }
                out.push((acc, sums));
            }
            out
        })
        .collect();

    (0..M)
        .map(|m| {
            let n = rule.len();
            let mut rows = DMatrix::zeros(n, nb);
            let mut sums = vec![0.0; n];
            for (it, ring) in rings.iter().enumerate() {
                for (j, (acc, s)) in ring.iter().enumerate() {
                    let i = it * n_phi + j;
                    for k in 0..nb {
                        rows[(i, k)] = acc[m * nb + k];
                    }
                    sums[i] = s[m];
                }
            }
            (rows, sums)
        })
        .collect()
}

fn check_distinct_nodes(rule: &SurfaceQuadrature) -> Result<()> {
    let tol = 1e-12 * rule.node_spacing();
    for i in 0..rule.len() {
        for j in 0..i {
            if rule.distance(i, j) <= tol {
                return Err(Error::Assembly(format!("nodes {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

/// Nystrom matrix of `W`, `W mu(t) = int K(t, y) mu(y) dsigma(y)` on the surface.
///
/// Row `i` integrates `K(t_i, .)(mu - mu(t_i))` with a product rule in polar
/// coordinates centred at `t_i` (where the kernel times the area element is
/// smooth), the density being carried by its harmonic interpolant; the
/// subtracted part is restored through `W[1] = 1/2`.
pub fn assemble_w(rule: &SurfaceQuadrature) -> Result<DMatrix<f64>> {
    check_distinct_nodes(rule)?;
    let polar = PolarRule::gauss(rule.order + 8, 2 * rule.order + 8);
    let equivariant = rule.spec.sphere_radius().is_some();
    let mut parts = node_centred_rows::<1, _>(rule, &polar, equivariant, |i, sp| {
        [sp.jacobian * dl_kernel(rule.nodes[i], sp.x, sp.normal)]
    });
    let (rows, sums) = parts.pop().expect("one kernel");
    let mut w = rows * analysis_matrix(rule);
    for i in 0..rule.len() {
        w[(i, i)] += 0.5 - sums[i];
    }
    Ok(w)
}

/// `W + s I` for the jump relations: `s = 1/2` gives the interior trace,
/// `s = -1/2` the exterior one.
pub fn shifted(w: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let mut a = w.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += s;
    }
    a
}

/// How the normal derivative of the double layer is computed on the surface.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum NormalDerivativeMode {
    /// Harmonic diagonalization; spheres centred at the origin only.
    Spectral,
    /// One-sided values at `offset * k`, `k = 1..=points`, along the normal,
    /// extrapolated to the surface.
    Offset { offset: f64, points: usize },
}

impl NormalDerivativeMode {
    /// Offset mode with settings matched to the rule resolution.
    pub fn default_offset(rule: &SurfaceQuadrature) -> Self {
        NormalDerivativeMode::Offset { offset: 0.05 * rule.node_spacing(), points: 5 }
    }
}

/// Offsets below this fraction of the node spacing are rejected.
pub const MIN_OFFSET_FRACTION: f64 = 0.01;

/// Matrix of `nu . grad w[mu]` on the surface. In offset mode the matrices of
/// both one-sided limits are kept; `matrix` is their average.
pub struct HypersingularOperator {
    pub matrix: DMatrix<f64>,
    pub inside: Option<DMatrix<f64>>,
    pub outside: Option<DMatrix<f64>>,
}

/// Weights of the polynomial through `(k h, f_k)`, `k = 1..=p`, evaluated at 0.
pub fn extrapolation_weights(p: usize) -> Vec<f64> {
    (1..=p)
        .map(|s| {
            (1..=p)
                .filter(|&m| m != s)
                .map(|m| m as f64 / (m as f64 - s as f64))
                .product()
        })
        .collect()
}

pub fn hypersingular_operator(
    rule: &SurfaceQuadrature,
    mode: NormalDerivativeMode,
) -> Result<HypersingularOperator> {
    match mode {
        NormalDerivativeMode::Spectral => {
            let radius = rule.spec.sphere_radius().ok_or_else(|| {
                Error::Config("spectral normal derivative requires a sphere".into())
            })?;
            let b = basis_matrix(rule);
            let mut p = analysis_matrix(rule);
            for k in 0..rule.band() {
                let l = sh_degree(k) as f64;
                let lambda = l * (l + 1.0) / ((2.0 * l + 1.0) * radius);
                p.row_mut(k).scale_mut(lambda);
            }
            let mut matrix = b * p;
            complete_unresolved(rule, &mut matrix);
            Ok(HypersingularOperator { matrix, inside: None, outside: None })
        }
        NormalDerivativeMode::Offset { offset, points } => {
            let spacing = rule.node_spacing();
            let (rmin, rmax) = rule.spec.radial_extent(rule.order.max(16));
            if !(offset >= MIN_OFFSET_FRACTION * spacing) {
                return Err(Error::Accuracy(format!(
                    "offset {offset:.3e} is below {MIN_OFFSET_FRACTION} node spacings ({spacing:.3e})"
                )));
            }
            if points == 0 || points > 8 || offset * points as f64 > 0.5 * rmin {
                return Err(Error::Config(format!(
                    "offset extrapolation with {points} points of size {offset:.3e} does not fit the surface"
                )));
            }
            let lambda = extrapolation_weights(points);
            let polar = close_rule(rule.order, offset / rmax);
            let equivariant = rule.spec.sphere_radius().is_some();
            let mut parts = node_centred_rows::<2, _>(rule, &polar, equivariant, |i, sp| {
                let (t, nu) = (rule.nodes[i], rule.normals[i]);
                let (mut gin, mut gout) = (0.0, 0.0);
                for (s, l) in lambda.iter().enumerate() {
                    let h = offset * (s + 1) as f64;
                    gin += l * dot(nu, dl_kernel_grad(sub(t, scale(h, nu)), sp.x, sp.normal));
                    gout += l * dot(nu, dl_kernel_grad(add(t, scale(h, nu)), sp.x, sp.normal));
                }
                [sp.jacobian * gin, sp.jacobian * gout]
            });
            let p = analysis_matrix(rule);
            let (rows_out, sums_out) = parts.pop().expect("two kernels");
            let (rows_in, sums_in) = parts.pop().expect("two kernels");
            let mut din = rows_in * &p;
            let mut dout = rows_out * &p;
            for i in 0..rule.len() {
                din[(i, i)] -= sums_in[i];
                dout[(i, i)] -= sums_out[i];
            }
            complete_unresolved(rule, &mut din);
            complete_unresolved(rule, &mut dout);
            let matrix = (&din + &dout) * 0.5;
            Ok(HypersingularOperator { matrix, inside: Some(din), outside: Some(dout) })
        }
    }
}

/// Adds `lambda_L (I - B P)`: nodal vectors outside the band-limited space are
/// annihilated by the projected operator, so they get the eigenvalue of the
/// first unresolved degree on a sphere of the mean radius.
fn complete_unresolved(rule: &SurfaceQuadrature, matrix: &mut DMatrix<f64>) {
    let (rmin, rmax) = rule.spec.radial_extent(rule.order.max(16));
    let l = rule.order as f64;
    let lambda = l * (l + 1.0) / ((2.0 * l + 1.0) * 0.5 * (rmin + rmax));
    let proj = basis_matrix(rule) * analysis_matrix(rule);
    *matrix -= proj * lambda;
    for i in 0..rule.len() {
        matrix[(i, i)] += lambda;
    }
}

/// `nu . grad w[mu]` at the nodes, with one-sided values in offset mode.
#[derive(Clone, Debug)]
pub struct NormalDerivative {
    pub values: Vec<f64>,
    pub inside: Option<Vec<f64>>,
    pub outside: Option<Vec<f64>>,
    /// Largest difference between the one-sided values (zero in spectral mode).
    pub mismatch: f64,
}

pub fn normal_derivative_double_layer(
    rule: &SurfaceQuadrature,
    mu: &[f64],
    mode: NormalDerivativeMode,
) -> Result<NormalDerivative> {
    check_density(rule, mu)?;
    let op = hypersingular_operator(rule, mode)?;
    let v = DVector::from_column_slice(mu);
    let apply = |m: &DMatrix<f64>| (m * &v).as_slice().to_vec();
    let values = apply(&op.matrix);
    let inside = op.inside.as_ref().map(apply);
    let outside = op.outside.as_ref().map(apply);
    let mismatch = match (&inside, &outside) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        _ => 0.0,
    };
    Ok(NormalDerivative { values, inside, outside, mismatch })
}

/// Factorized `1/2 I + W` for repeated interior Dirichlet solves.
pub struct InteriorDirichlet {
    factorization: Factorization,
}

impl InteriorDirichlet {
    pub fn new(w: &DMatrix<f64>) -> Result<Self> {
        Ok(InteriorDirichlet { factorization: Factorization::new(shifted(w, 0.5))? })
    }

    /// Density `mu` with `(1/2 + W) mu = f`; `w+[mu]` is the harmonic extension of `f`.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.factorization.dim() {
            return Err(Error::Data("boundary data length does not match the surface".into()));
        }
        Ok(self.factorization.solve_slice(f))
    }

    pub fn condition_estimate(&self) -> f64 {
        self.factorization.condition_estimate()
    }
}

pub fn solve_interior_dirichlet(rule: &SurfaceQuadrature, f: &[f64]) -> Result<Vec<f64>> {
    check_density(rule, f)?;
    InteriorDirichlet::new(&assemble_w(rule)?)?.solve(f)
}
