//! The discretized transmission system: background field, the block operators
//! `J`, `Lambda`, `M`, `N`, `S`, the limit, Picard and Newton solvers and the
//! reconstruction of the fields from a solved state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{
    check_admissibility, nemytskii_apply, taylor_remainder_f, taylor_remainder_f_db, taylor_remainder_u_hessian,
    AdmissibilityReport, AdmissibilityTolerances, ExactFields, TransmissionData, TAYLOR_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::geometry::{
    add, build_quadrature, check_inclusion, dot, scale, sub, Point, SurfacePoint, SurfaceQuadrature, SurfaceSpec,
};
use crate::linalg::Factorization;
use crate::poly::ScalarField;
use crate::potential::{
    assemble_w, double_layer_gradient_matrix, double_layer_matrix, extrapolation_weights, grad_s3,
    hypersingular_operator, s3, shifted, DoubleLayer, InteriorDirichlet, NormalDerivativeMode,
};

/// Space dimension; powers of `eps` in the operators are written in terms of it.
pub const DIM: i32 = 3;

/// Tolerance on the weighted mean of `phi_i` after a solve.
const ZERO_MEAN_TOL: f64 = 1e-12;

/// The harmonic extension of the outer boundary data into the outer domain.
pub struct BackgroundField<'a> {
    layer: DoubleLayer<'a>,
    pub value_at_origin: f64,
    pub gradient_at_origin: Point,
    pub hessian_at_origin: [[f64; 3]; 3],
    /// Largest nodal deviation of the interior trace from the boundary data.
    pub trace_error: f64,
}

impl<'a> BackgroundField<'a> {
    pub fn new(
        rule: &'a SurfaceQuadrature,
        w: &DMatrix<f64>,
        dirichlet: &InteriorDirichlet,
        f_o: &[f64],
    ) -> Result<Self> {
        if !rule.spec.contains([0.0; 3]) {
            return Err(Error::Domain("the origin must lie inside the outer surface".into()));
        }
        let mu = dirichlet.solve(f_o)?;
        let trace = shifted(w, 0.5) * DVector::from_column_slice(&mu);
        let trace_error = trace.iter().zip(f_o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let layer = DoubleLayer::new(rule, &mu)?;
        let o = [0.0; 3];
        Ok(BackgroundField {
            value_at_origin: layer.value(o),
            gradient_at_origin: layer.gradient(o),
            hessian_at_origin: layer.hessian_plain(o),
            layer,
            trace_error,
        })
    }

    pub fn density(&self) -> &[f64] {
        self.layer.density()
    }

    pub fn layer(&self) -> &DoubleLayer<'a> {
        &self.layer
    }
}

impl ScalarField for BackgroundField<'_> {
    fn value(&self, x: Point) -> f64 {
        if x == [0.0; 3] {
            return self.value_at_origin;
        }
        self.layer.value(x)
    }
    fn gradient(&self, x: Point) -> Point {
        if x == [0.0; 3] {
            return self.gradient_at_origin;
        }
        self.layer.gradient(x)
    }
    fn hessian(&self, x: Point) -> [[f64; 3]; 3] {
        self.layer.hessian_plain(x)
    }
}

/// Solves the interior Dirichlet problem for `f_o` sampled at the outer nodes.
pub fn compute_background<'a>(rule: &'a SurfaceQuadrature, f_o: &[f64]) -> Result<BackgroundField<'a>> {
    let w = assemble_w(rule)?;
    BackgroundField::new(rule, &w, &InteriorDirichlet::new(&w)?, f_o)
}

/// Operators that do not depend on `eps`.
pub struct SharedOperators<'a> {
    pub outer: &'a SurfaceQuadrature,
    pub inner: &'a SurfaceQuadrature,
    pub inner_points: Vec<SurfacePoint>,
    pub w_outer: DMatrix<f64>,
    pub w_inner: DMatrix<f64>,
    /// `1/2 I + W` on the outer surface.
    pub plus_outer: DMatrix<f64>,
    /// `1/2 I + W` on the inner surface.
    pub plus_inner: DMatrix<f64>,
    /// `-1/2 I + W` on the inner surface.
    pub minus_inner: DMatrix<f64>,
    /// `nu . grad w[mu]` on the inner surface.
    pub hypersingular: DMatrix<f64>,
    pub mode: NormalDerivativeMode,
    /// `S_n(t)` and `nu(t) . grad S_n(t)` at the inner nodes.
    pub s_inner: Vec<f64>,
    pub ds_inner: Vec<f64>,
    dirichlet: InteriorDirichlet,
    j_factor: Factorization,
}

impl<'a> SharedOperators<'a> {
    /// `mode` defaults to the spectral rule on spheres and the offset rule otherwise.
    pub fn new(
        outer: &'a SurfaceQuadrature,
        inner: &'a SurfaceQuadrature,
        mode: Option<NormalDerivativeMode>,
    ) -> Result<Self> {
        if !inner.spec.contains([0.0; 3]) {
            return Err(Error::Geometry("the origin must lie inside the inner surface".into()));
        }
        let mode = mode.unwrap_or(if inner.spec.sphere_radius().is_some() {
            NormalDerivativeMode::Spectral
        } else {
            NormalDerivativeMode::default_offset(inner)
        });
        let w_outer = assemble_w(outer)?;
        let w_inner = if inner.spec == outer.spec && inner.order == outer.order {
            w_outer.clone()
        } else {
            assemble_w(inner)?
        };
        let hypersingular = hypersingular_operator(inner, mode)?.matrix;
        let s_inner: Vec<f64> = inner.nodes.iter().map(|t| s3(*t)).collect();
        let ds_inner: Vec<f64> = (0..inner.len()).map(|i| dot(inner.normals[i], grad_s3(inner.nodes[i]))).collect();
        let minus_inner = shifted(&w_inner, -0.5);
        let ni = inner.len();
        let mut j = DMatrix::zeros(ni + 1, ni + 1);
        j.view_mut((0, 0), (ni, ni)).copy_from(&minus_inner);
        for i in 0..ni {
            j[(i, ni)] = s_inner[i];
            j[(ni, i)] = inner.weights[i];
        }
        Ok(SharedOperators {
            outer,
            inner,
            inner_points: inner.surface_points(),
            plus_outer: shifted(&w_outer, 0.5),
            plus_inner: shifted(&w_inner, 0.5),
            minus_inner,
            dirichlet: InteriorDirichlet::new(&w_outer)?,
            j_factor: Factorization::new(j)?,
            w_outer,
            w_inner,
            hypersingular,
            mode,
            s_inner,
            ds_inner,
        })
    }

    pub fn background(&self, f_o: &[f64]) -> Result<BackgroundField<'a>> {
        BackgroundField::new(self.outer, &self.w_outer, &self.dirichlet, f_o)
    }

    /// `J[mu, xi] = (-1/2 I + W) mu + xi S_n` on the inner surface.
    pub fn apply_j(&self, mu: &[f64], xi: f64) -> Result<Vec<f64>> {
        let q = self.inner;
        if mu.len() != q.len() {
            return Err(Error::Data("density does not match the inner surface".into()));
        }
        let mean = q.integrate(mu);
        let size = mu.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if mean.abs() > 1e-10 * size * q.area() {
            return Err(Error::Data(format!("density must have zero mean, integral is {mean:.3e}")));
        }
        let v = &self.minus_inner * DVector::from_column_slice(mu);
        Ok(v.iter().zip(&self.s_inner).map(|(a, s)| a + xi * s).collect())
    }

    /// Inverse of [`SharedOperators::apply_j`]: the zero-mean `mu` and `xi` with `J[mu, xi] = f`.
    pub fn solve_j(&self, f: &[f64]) -> Result<(Vec<f64>, f64)> {
        let ni = self.inner.len();
        if f.len() != ni {
            return Err(Error::Data("data do not match the inner surface".into()));
        }
        let mut rhs = f.to_vec();
        rhs.push(0.0);
        let mut x = self.j_factor.solve_slice(&rhs);
        let xi = x.pop().expect("nonempty");
        Ok((x, xi))
    }

    pub fn j_condition(&self) -> f64 {
        self.j_factor.condition_estimate()
    }

    fn no(&self) -> usize {
        self.outer.len()
    }

    fn ni(&self) -> usize {
        self.inner.len()
    }

    /// Size of the bordered system on `(phi_o, phi_i, zeta, psi_i)`.
    pub fn dim(&self) -> usize {
        self.no() + 2 * self.ni() + 1
    }
}

/// The unknowns `(phi_o, phi_i, zeta, psi_i)` sampled at the nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnknownState {
    pub phi_o: Vec<f64>,
    pub phi_i: Vec<f64>,
    pub zeta: f64,
    pub psi_i: Vec<f64>,
}

impl UnknownState {
    pub fn zeros(ops: &SharedOperators) -> Self {
        UnknownState { phi_o: vec![0.0; ops.no()], phi_i: vec![0.0; ops.ni()], zeta: 0.0, psi_i: vec![0.0; ops.ni()] }
    }

    /// Stacked as `[phi_o; phi_i; zeta; psi_i]`.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.phi_o.len() + 2 * self.phi_i.len() + 1);
        v.extend_from_slice(&self.phi_o);
        v.extend_from_slice(&self.phi_i);
        v.push(self.zeta);
        v.extend_from_slice(&self.psi_i);
        DVector::from_vec(v)
    }

    pub fn from_slice(x: &[f64], ops: &SharedOperators) -> Self {
        let (no, ni) = (ops.no(), ops.ni());
        UnknownState {
            phi_o: x[..no].to_vec(),
            phi_i: x[no..no + ni].to_vec(),
            zeta: x[no + ni],
            psi_i: x[no + ni + 1..no + 2 * ni + 1].to_vec(),
        }
    }

    pub fn phi_i_mean(&self, ops: &SharedOperators) -> f64 {
        ops.inner.integrate(&self.phi_i)
    }

    /// Weighted l2 distance over all four components.
    pub fn distance(&self, other: &UnknownState, ops: &SharedOperators) -> f64 {
        let sq = |a: &[f64], b: &[f64], w: &[f64]| -> f64 {
            a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x - y) * (x - y)).sum()
        };
        (sq(&self.phi_o, &other.phi_o, &ops.outer.weights)
            + sq(&self.phi_i, &other.phi_i, &ops.inner.weights)
            + (self.zeta - other.zeta).powi(2)
            + sq(&self.psi_i, &other.psi_i, &ops.inner.weights))
        .sqrt()
    }

    pub fn norm(&self, ops: &SharedOperators) -> f64 {
        self.distance(&UnknownState::zeros(ops), ops)
    }
}

/// Values of `M` at the nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualTriple {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
    /// Weighted mean of `phi_i`.
    pub constraint: f64,
    /// Weighted l2 magnitude of all components.
    pub magnitude: f64,
}

impl ResidualTriple {
    fn new(r1: Vec<f64>, r2: Vec<f64>, r3: Vec<f64>, constraint: f64, ops: &SharedOperators) -> Self {
        let sq = |r: &[f64], w: &[f64]| -> f64 { r.iter().zip(w).map(|(a, w)| w * a * a).sum() };
        let magnitude = (sq(&r1, &ops.outer.weights)
            + sq(&r2, &ops.inner.weights)
            + sq(&r3, &ops.inner.weights)
            + constraint * constraint)
            .sqrt();
        ResidualTriple { r1, r2, r3, constraint, magnitude }
    }

    /// Stacked in the row order of the bordered system.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = self.r1.clone();
        v.extend_from_slice(&self.r2);
        v.extend_from_slice(&self.r3);
        v.push(self.constraint);
        DVector::from_vec(v)
    }

    pub fn max_abs(&self) -> f64 {
        self.r1.iter().chain(&self.r2).chain(&self.r3).fold(self.constraint.abs(), |a, b| a.max(b.abs()))
    }
}

/// Background field, transmission data and the shared operators.
#[derive(Clone, Copy)]
pub struct Problem<'p> {
    pub ops: &'p SharedOperators<'p>,
    pub background: &'p BackgroundField<'p>,
    pub data: &'p dyn TransmissionData,
}

impl<'p> Problem<'p> {
    pub fn admissibility(&self, tol: &AdmissibilityTolerances) -> AdmissibilityReport {
        check_admissibility(self.data, self.background.value_at_origin, &self.ops.inner_points, tol)
    }
}

/// `eps`-dependent blocks coupling the two surfaces.
struct CrossBlocks {
    /// `w_y nu(y) . grad S_n(x - eps y)`, outer rows by inner columns.
    cross: DMatrix<f64>,
    s_outer: Vec<f64>,
    /// `w+[.](eps t)` of the outer surface.
    outer_value: DMatrix<f64>,
    /// `nu(t) . grad w+[.](eps t)` of the outer surface.
    outer_flux: DMatrix<f64>,
}

fn check_epsilon(ops: &SharedOperators, eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !check_inclusion(&ops.outer.spec, &ops.inner.spec, eps) {
        return Err(Error::Domain(format!("epsilon = {eps} is outside the admissible window")));
    }
    Ok(())
}

impl CrossBlocks {
    fn new(ops: &SharedOperators, eps: f64) -> Result<Self> {
        check_epsilon(ops, eps)?;
        let (outer, inner) = (ops.outer, ops.inner);
        let targets: Vec<Point> = inner.nodes.iter().map(|t| scale(eps, *t)).collect();
        let cross = DMatrix::from_fn(outer.len(), inner.len(), |k, j| {
            inner.weights[j] * dot(inner.normals[j], grad_s3(sub(outer.nodes[k], scale(eps, inner.nodes[j]))))
        });
        Ok(CrossBlocks {
            cross,
            s_outer: outer.nodes.iter().map(|x| s3(*x)).collect(),
            outer_value: double_layer_matrix(outer, &targets)?,
            outer_flux: double_layer_gradient_matrix(outer, &targets, &inner.normals)?,
        })
    }
}

/// `Lambda(eps)` on `(phi_o, phi_i, zeta)` with the zero-mean row appended.
pub struct LambdaOperator {
    pub epsilon: f64,
    pub matrix: DMatrix<f64>,
    factor: Factorization,
    no: usize,
    ni: usize,
}

impl LambdaOperator {
    pub fn condition_estimate(&self) -> f64 {
        self.factor.condition_estimate()
    }

    /// Solves `Lambda (phi_o, phi_i, zeta) = (g1, g2)` with zero-mean `phi_i`.
    pub fn solve(&self, g1: &[f64], g2: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let mut rhs = g1.to_vec();
        rhs.extend_from_slice(g2);
        rhs.push(0.0);
        let x = self.factor.solve_slice(&rhs);
        (x[..self.no].to_vec(), x[self.no..self.no + self.ni].to_vec(), x[self.no + self.ni])
    }
}

pub fn assemble_lambda(eps: f64, ops: &SharedOperators) -> Result<LambdaOperator> {
    let blocks = CrossBlocks::new(ops, eps)?;
    let (no, ni) = (ops.no(), ops.ni());
    let mut a = DMatrix::zeros(no + ni + 1, no + ni + 1);
    a.view_mut((0, 0), (no, no)).copy_from(&ops.plus_outer);
    a.view_mut((0, no), (no, ni)).copy_from(&(&blocks.cross * -eps.powi(DIM - 1)));
    a.view_mut((no, 0), (ni, no)).copy_from(&blocks.outer_value);
    a.view_mut((no, no), (ni, ni)).copy_from(&ops.minus_inner);
    for k in 0..no {
        a[(k, no + ni)] = eps.powi(DIM - 2) * blocks.s_outer[k];
    }
    for i in 0..ni {
        a[(no + i, no + ni)] = ops.s_inner[i];
        a[(no + ni, no + i)] = ops.inner.weights[i];
    }
    let factor = Factorization::new(a.clone())?;
    Ok(LambdaOperator { epsilon: eps, matrix: a, factor, no, ni })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-11, max_iter: 30 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub epsilon: f64,
    /// Residual magnitude before each Newton step and at the end.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub zeta: f64,
    pub condition_n: f64,
    pub zero_mean: f64,
}

/// Everything needed to evaluate `M`, `N` and `S` at one `eps`.
pub struct OperatorCache<'p> {
    pub epsilon: f64,
    problem: Problem<'p>,
    blocks: CrossBlocks,
    /// `t . grad u(0)`.
    grad_term: Vec<f64>,
    /// `eps u~(eps, t)`.
    remainder_term: Vec<f64>,
    /// `d_eps F(0, t, zeta_i)` and `d_zeta F(0, t, zeta_i)`.
    f_eps0: Vec<f64>,
    f_zeta0: Vec<f64>,
    /// `nu(t) . grad u(eps t)`.
    background_flux: Vec<f64>,
    pub n_matrix: DMatrix<f64>,
    n_factor: Factorization,
}

impl<'p> OperatorCache<'p> {
    pub fn new(eps: f64, problem: Problem<'p>) -> Result<Self> {
        let ops = problem.ops;
        let blocks = CrossBlocks::new(ops, eps)?;
        let bg = problem.background;
        let data = problem.data;
        let zi = data.zeta_i();
        let pts = &ops.inner_points;
        let grad_term: Vec<f64> = pts.iter().map(|t| dot(t.x, bg.gradient_at_origin)).collect();
        let mut remainder_term = vec![0.0; pts.len()];
        let mut background_flux = vec![0.0; pts.len()];
        for (k, t) in pts.iter().enumerate() {
            if eps < TAYLOR_THRESHOLD {
                if eps > 0.0 {
                    remainder_term[k] = eps * taylor_remainder_u_hessian(bg, eps, t.x);
                }
                background_flux[k] = dot(t.normal, bg.gradient(scale(eps, t.x)));
            } else {
                let (v, g) = bg.layer().value_and_gradient(scale(eps, t.x));
                remainder_term[k] = (v - bg.value_at_origin - eps * grad_term[k]) / eps;
                background_flux[k] = dot(t.normal, g);
            }
        }
        let f_eps0 = nemytskii_apply(|e, t, z| data.f_eps(e, t, z), 0.0, &vec![zi; pts.len()], pts)?;
        let f_zeta0 = nemytskii_apply(|e, t, z| data.f_zeta(e, t, z), 0.0, &vec![zi; pts.len()], pts)?;
        let n_matrix = assemble_n(eps, ops, &blocks, &f_zeta0);
        let n_factor = Factorization::new(n_matrix.clone())?;
        Ok(OperatorCache {
            epsilon: eps,
            problem,
            blocks,
            grad_term,
            remainder_term,
            f_eps0,
            f_zeta0,
            background_flux,
            n_matrix,
            n_factor,
        })
    }

    pub fn problem(&self) -> Problem<'p> {
        self.problem
    }

    pub fn ops(&self) -> &'p SharedOperators<'p> {
        self.problem.ops
    }

    /// The assembled `N(eps)`.
    pub fn n_matrix(&self) -> &DMatrix<f64> {
        &self.n_matrix
    }

    pub fn condition_n(&self) -> f64 {
        self.n_factor.condition_estimate()
    }

    fn ranges(&self) -> (usize, usize) {
        (self.ops().no(), self.ops().ni())
    }

    /// `(1/2 I + W) psi` on the inner surface.
    fn inner_trace(&self, psi: &[f64]) -> Vec<f64> {
        (&self.ops().plus_inner * DVector::from_column_slice(psi)).as_slice().to_vec()
    }

    /// `S(eps, psi)` stacked like the rows of `N`, with zero in the constraint row.
    pub fn eval_s(&self, psi: &[f64]) -> Result<DVector<f64>> {
        let ops = self.ops();
        let (no, ni) = self.ranges();
        if psi.len() != ni {
            return Err(Error::Data("psi does not match the inner surface".into()));
        }
        let eps = self.epsilon;
        let data = self.problem.data;
        let zi = data.zeta_i();
        let b = self.inner_trace(psi);
        let ftilde = nemytskii_apply(|e, t, b| taylor_remainder_f(data, e, t, zi, b), eps, &b, &ops.inner_points)?;
        let arg: Vec<f64> = b.iter().map(|b| eps * b + zi).collect();
        let g = nemytskii_apply(|e, t, z| data.g(e, t, z), eps, &arg, &ops.inner_points)?;
        let mut s = DVector::zeros(ops.dim());
        for i in 0..ni {
            s[no + i] = -self.grad_term[i] - self.remainder_term[i] + self.f_eps0[i] + eps * ftilde[i];
            s[no + ni + i] = -self.background_flux[i] + g[i];
        }
        Ok(s)
    }

    /// `M(eps, state)`, term by term.
    pub fn eval_m(&self, state: &UnknownState) -> Result<ResidualTriple> {
        let ops = self.ops();
        let (no, ni) = self.ranges();
        if state.phi_o.len() != no || state.phi_i.len() != ni || state.psi_i.len() != ni {
            return Err(Error::Data("state does not match the surfaces".into()));
        }
        let eps = self.epsilon;
        let data = self.problem.data;
        let zi = data.zeta_i();
        let phi_o = DVector::from_column_slice(&state.phi_o);
        let phi_i = DVector::from_column_slice(&state.phi_i);
        let psi = DVector::from_column_slice(&state.psi_i);
        let zeta = state.zeta;

        let mut r1 = &ops.plus_outer * &phi_o - (&self.blocks.cross * &phi_i) * eps.powi(DIM - 1);
        for k in 0..no {
            r1[k] += eps.powi(DIM - 2) * self.blocks.s_outer[k] * zeta;
        }

        let b = (&ops.plus_inner * &psi).as_slice().to_vec();
        let ftilde = nemytskii_apply(|e, t, b| taylor_remainder_f(data, e, t, zi, b), eps, &b, &ops.inner_points)?;
        let inner_layer = &ops.minus_inner * &phi_i;
        let outer_at = &self.blocks.outer_value * &phi_o;
        let r2: Vec<f64> = (0..ni)
            .map(|i| {
                self.grad_term[i] + self.remainder_term[i] + inner_layer[i] + zeta * ops.s_inner[i] + outer_at[i]
                    - self.f_eps0[i]
                    - self.f_zeta0[i] * b[i]
                    - eps * ftilde[i]
            })
            .collect();

        let arg: Vec<f64> = b.iter().map(|b| eps * b + zi).collect();
        let g = nemytskii_apply(|e, t, z| data.g(e, t, z), eps, &arg, &ops.inner_points)?;
        let flux_outer = &self.blocks.outer_flux * &phi_o;
        let flux_phi = &ops.hypersingular * &phi_i;
        let flux_psi = &ops.hypersingular * &psi;
        let r3: Vec<f64> = (0..ni)
            .map(|i| {
                self.background_flux[i] + eps * flux_outer[i] + flux_phi[i] + ops.ds_inner[i] * zeta
                    - flux_psi[i]
                    - g[i]
            })
            .collect();
        Ok(ResidualTriple::new(r1.as_slice().to_vec(), r2, r3, state.phi_i_mean(ops), ops))
    }

    /// `N(eps) state`, with the weighted mean of `phi_i` in the last row.
    pub fn apply_n(&self, state: &UnknownState) -> DVector<f64> {
        &self.n_matrix * state.to_vector()
    }

    /// `N(eps)^{-1} rhs` with the zero-mean constraint enforced.
    pub fn solve_n(&self, rhs: &DVector<f64>) -> Result<UnknownState> {
        let s = UnknownState::from_slice(self.n_factor.solve(rhs).as_slice(), self.ops());
        self.check_zero_mean(&s)?;
        Ok(s)
    }

    fn check_zero_mean(&self, s: &UnknownState) -> Result<()> {
        let ops = self.ops();
        let mean = s.phi_i_mean(ops);
        let size = s.phi_i.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if mean.abs() > ZERO_MEAN_TOL * size * ops.inner.area() {
            return Err(Error::Solver {
                msg: format!("zero-mean constraint violated by {mean:.3e}"),
                condition: self.condition_n(),
            });
        }
        Ok(())
    }

    /// Jacobian of `M` in the state: `N` minus the `psi`-derivative of `S`.
    pub fn jacobian(&self, state: &UnknownState) -> Result<DMatrix<f64>> {
        let ops = self.ops();
        let (no, ni) = self.ranges();
        let eps = self.epsilon;
        let data = self.problem.data;
        let zi = data.zeta_i();
        let mut j = self.n_matrix.clone();
        if eps == 0.0 {
            return Ok(j);
        }
        let b = self.inner_trace(&state.psi_i);
        let dft = nemytskii_apply(|e, t, b| taylor_remainder_f_db(data, e, t, zi, b), eps, &b, &ops.inner_points)?;
        let arg: Vec<f64> = b.iter().map(|b| eps * b + zi).collect();
        let gz = nemytskii_apply(|e, t, z| data.g_zeta(e, t, z), eps, &arg, &ops.inner_points)?;
        let c = no + ni + 1;
        for i in 0..ni {
            for k in 0..ni {
                let p = ops.plus_inner[(i, k)];
                j[(no + i, c + k)] -= eps * dft[i] * p;
                j[(no + ni + i, c + k)] -= eps * gz[i] * p;
            }
        }
        Ok(j)
    }

    /// One fixed-point step `state -> N^{-1} S(eps, psi_i)`.
    pub fn picard_step(&self, state: &UnknownState) -> Result<UnknownState> {
        self.solve_n(&self.eval_s(&state.psi_i)?)
    }

    /// The solution of the linear problem `M(0, .) = 0`; only meaningful at `eps = 0`,
    /// where `S` does not depend on `psi_i`.
    pub fn solve_limit(&self) -> Result<UnknownState> {
        if self.epsilon != 0.0 {
            return Err(Error::Config("the limit problem lives at epsilon = 0".into()));
        }
        self.solve_n(&self.eval_s(&vec![0.0; self.ops().ni()])?)
    }

    pub fn newton_solve(&self, initial: &UnknownState, opts: &SolverOptions) -> Result<(UnknownState, SolveReport)> {
        let mut x = initial.clone();
        let mut residuals = Vec::new();
        for it in 0..=opts.max_iter {
            let m = self.eval_m(&x)?;
            residuals.push(m.magnitude);
            if m.magnitude <= opts.tol {
                self.check_zero_mean(&x)?;
                let report = SolveReport {
                    epsilon: self.epsilon,
                    iterations: it,
                    residuals,
                    zeta: x.zeta,
                    condition_n: self.condition_n(),
                    zero_mean: x.phi_i_mean(self.ops()),
                };
                return Ok((x, report));
            }
            if !m.magnitude.is_finite() || m.magnitude > 1e8 || it == opts.max_iter {
                break;
            }
            let f = Factorization::new(self.jacobian(&x)?)?;
            let dx = f.solve(&(-m.to_vector()));
            x = UnknownState::from_slice((x.to_vector() + dx).as_slice(), self.ops());
        }
        Err(Error::NoConvergence {
            iterations: residuals.len() - 1,
            residual: *residuals.last().expect("at least one residual"),
        })
    }
}

fn assemble_n(eps: f64, ops: &SharedOperators, blocks: &CrossBlocks, f_zeta0: &[f64]) -> DMatrix<f64> {
    let (no, ni) = (ops.no(), ops.ni());
    let (cz, cp) = (no + ni, no + ni + 1);
    let mut n = DMatrix::zeros(ops.dim(), ops.dim());
    // first row: outer surface
    n.view_mut((0, 0), (no, no)).copy_from(&ops.plus_outer);
    n.view_mut((0, no), (no, ni)).copy_from(&(&blocks.cross * -eps.powi(DIM - 1)));
    for k in 0..no {
        n[(k, cz)] = eps.powi(DIM - 2) * blocks.s_outer[k];
    }
    // second row: values on the inner surface
    n.view_mut((no, 0), (ni, no)).copy_from(&blocks.outer_value);
    n.view_mut((no, no), (ni, ni)).copy_from(&ops.minus_inner);
    for i in 0..ni {
        n[(no + i, cz)] = ops.s_inner[i];
        for k in 0..ni {
            n[(no + i, cp + k)] = -f_zeta0[i] * ops.plus_inner[(i, k)];
        }
    }
    // third row: fluxes on the inner surface
    n.view_mut((no + ni, 0), (ni, no)).copy_from(&(&blocks.outer_flux * eps));
    n.view_mut((no + ni, no), (ni, ni)).copy_from(&ops.hypersingular);
    n.view_mut((no + ni, cp), (ni, ni)).copy_from(&(&ops.hypersingular * -1.0));
    for i in 0..ni {
        n[(no + ni + i, cz)] = ops.ds_inner[i];
        n[(no + 2 * ni, no + i)] = ops.inner.weights[i];
    }
    n
}

/// Solves `M(0, .) = 0`.
pub fn solve_limit(problem: Problem) -> Result<UnknownState> {
    OperatorCache::new(0.0, problem)?.solve_limit()
}

/// Values and gradients of a pair of fields `(u^o, u^i)`.
pub trait TransmissionFields {
    /// `u^o` and its gradient in the perforated domain.
    fn outer(&self, x: Point) -> Result<(f64, Point)>;
    /// `u^i` and its gradient in the inclusion.
    fn inner(&self, x: Point) -> Result<(f64, Point)>;
}

impl TransmissionFields for ExactFields {
    fn outer(&self, x: Point) -> Result<(f64, Point)> {
        Ok((self.outer.value(x), self.outer.gradient(x)))
    }
    fn inner(&self, x: Point) -> Result<(f64, Point)> {
        Ok((self.inner.value(x), self.inner.gradient(x)))
    }
}

/// Fields represented by a state: `u^o = u + eps w+[phi_o] + eps w[phi_i](./eps) + eps^(n-1) zeta S_n`
/// and `u^i = eps w[psi_i](./eps) + zeta_i`.
pub struct ReconstructedFields<'p> {
    pub epsilon: f64,
    background: &'p BackgroundField<'p>,
    outer_spec: &'p SurfaceSpec,
    inner_spec: &'p SurfaceSpec,
    outer_layer: DoubleLayer<'p>,
    phi_layer: DoubleLayer<'p>,
    psi_layer: DoubleLayer<'p>,
    zeta: f64,
    zeta_i: f64,
}

pub fn reconstruct_fields<'p>(eps: f64, state: &UnknownState, problem: Problem<'p>) -> Result<ReconstructedFields<'p>> {
    let ops = problem.ops;
    check_epsilon(ops, eps)?;
    if eps == 0.0 {
        return Err(Error::Domain("fields are defined for positive epsilon".into()));
    }
    Ok(ReconstructedFields {
        epsilon: eps,
        background: problem.background,
        outer_spec: &ops.outer.spec,
        inner_spec: &ops.inner.spec,
        outer_layer: DoubleLayer::new(ops.outer, &state.phi_o)?,
        phi_layer: DoubleLayer::new(ops.inner, &state.phi_i)?,
        psi_layer: DoubleLayer::new(ops.inner, &state.psi_i)?,
        zeta: state.zeta,
        zeta_i: problem.data.zeta_i(),
    })
}

impl TransmissionFields for ReconstructedFields<'_> {
    fn outer(&self, x: Point) -> Result<(f64, Point)> {
        let eps = self.epsilon;
        let y = scale(1.0 / eps, x);
        if !self.outer_spec.contains(x) || self.inner_spec.contains(y) {
            return Err(Error::Domain(format!("{x:?} is not in the perforated domain")));
        }
        let (u, du) = self.background.layer().value_and_gradient(x);
        let (w, dw) = self.outer_layer.value_and_gradient(x);
        let (v, dv) = self.phi_layer.value_and_gradient(y);
        let c = eps.powi(DIM - 1) * self.zeta;
        let value = u + eps * w + eps * v + c * s3(x);
        let grad = add(add(du, scale(eps, dw)), add(dv, scale(c, grad_s3(x))));
        Ok((value, grad))
    }

    fn inner(&self, x: Point) -> Result<(f64, Point)> {
        let y = scale(1.0 / self.epsilon, x);
        if !self.inner_spec.contains(y) {
            return Err(Error::Domain(format!("{x:?} is not in the inclusion")));
        }
        let (v, dv) = self.psi_layer.value_and_gradient(y);
        Ok((self.epsilon * v + self.zeta_i, dv))
    }
}

/// Largest violations of the five conditions of the transmission problem.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct PdeResidualReport {
    /// Mean-value defect of `u^o` on test spheres.
    pub harmonic_outer: f64,
    /// Mean-value defect of `u^i` on test spheres.
    pub harmonic_inner: f64,
    /// `|u^o - f^o|` on the outer surface.
    pub dirichlet: f64,
    /// `|u^o - F(eps, t, u^i)|` on the inner interface.
    pub transmission_value: f64,
    /// `|nu . grad u^o - nu . grad u^i - G(eps, t, u^i)|` on the inner interface.
    pub transmission_flux: f64,
    pub nodes_checked: usize,
}

impl PdeResidualReport {
    pub fn max(&self) -> f64 {
        [self.harmonic_outer, self.harmonic_inner, self.dirichlet, self.transmission_value, self.transmission_flux]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdeCheckOptions {
    /// Offset step as a fraction of the node spacing.
    pub offset_fraction: f64,
    pub points: usize,
    /// Nodes per surface at which the boundary conditions are checked (evenly strided).
    pub max_nodes: usize,
}

impl Default for PdeCheckOptions {
    fn default() -> Self {
        PdeCheckOptions { offset_fraction: 0.05, points: 5, max_nodes: 64 }
    }
}

fn strided(n: usize, max: usize) -> Vec<usize> {
    if n <= max || max == 0 {
        return (0..n).collect();
    }
    (0..max).map(|k| k * n / max).collect()
}

fn sphere_mean(
    f: &dyn Fn(Point) -> Result<(f64, Point)>,
    center: Point,
    radius: f64,
    probe: &SurfaceQuadrature,
) -> Result<f64> {
    let mut s = 0.0;
    for (d, w) in probe.dirs.iter().zip(&probe.param_weights) {
        s += w * f(add(center, scale(radius, *d)))?.0;
    }
    Ok(s / (4.0 * std::f64::consts::PI))
}

/// Checks the transmission problem at a subset of the nodes: the boundary
/// conditions through one-sided limits extrapolated from points along the
/// normals, harmonicity by the mean-value property on small spheres.
pub fn residual_check_pde(
    eps: f64,
    fields: &dyn TransmissionFields,
    data: &dyn TransmissionData,
    outer: &SurfaceQuadrature,
    inner: &SurfaceQuadrature,
    f_o: &[f64],
    opts: &PdeCheckOptions,
) -> Result<PdeResidualReport> {
    if f_o.len() != outer.len() {
        return Err(Error::Data("boundary data do not match the outer surface".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain("the PDE check needs a positive epsilon".into()));
    }
    let lambda = extrapolation_weights(opts.points);
    let mut report = PdeResidualReport::default();

    let h = opts.offset_fraction * outer.node_spacing();
    for i in strided(outer.len(), opts.max_nodes) {
        let (x, nu) = (outer.nodes[i], outer.normals[i]);
        let mut u = 0.0;
        for (s, l) in lambda.iter().enumerate() {
            u += l * fields.outer(sub(x, scale(h * (s + 1) as f64, nu)))?.0;
        }
        report.dirichlet = report.dirichlet.max((u - f_o[i]).abs());
        report.nodes_checked += 1;
    }

    let h = opts.offset_fraction * inner.node_spacing();
    for i in strided(inner.len(), opts.max_nodes) {
        let sp = SurfacePoint { x: inner.nodes[i], normal: inner.normals[i], jacobian: inner.jacobians[i] };
        let (mut uo, mut ui, mut fo, mut fi) = (0.0, 0.0, 0.0, 0.0);
        for (s, l) in lambda.iter().enumerate() {
            let d = h * (s + 1) as f64;
            let (a, ga) = fields.outer(scale(eps, add(sp.x, scale(d, sp.normal))))?;
            let (b, gb) = fields.inner(scale(eps, sub(sp.x, scale(d, sp.normal))))?;
            uo += l * a;
            fo += l * dot(sp.normal, ga);
            ui += l * b;
            fi += l * dot(sp.normal, gb);
        }
        report.transmission_value = report.transmission_value.max((uo - data.f(eps, &sp, ui)).abs());
        report.transmission_flux = report.transmission_flux.max((fo - fi - data.g(eps, &sp, ui)).abs());
        report.nodes_checked += 1;
    }

    let probe = build_quadrature(&SurfaceSpec::UnitSphere, 12)?;
    let (ro, _) = outer.spec.radial_extent(outer.order.max(16));
    let (ri, rimax) = inner.spec.radial_extent(inner.order.max(16));
    let gap = ro - eps * rimax;
    if gap > 0.0 {
        let c = 0.5 * (ro + eps * rimax);
        let outer_fn = |x: Point| fields.outer(x);
        for d in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
            let center = scale(c, d);
            let mean = sphere_mean(&outer_fn, center, 0.1 * gap, &probe)?;
            report.harmonic_outer = report.harmonic_outer.max((mean - fields.outer(center)?.0).abs());
        }
    }
    let inner_fn = |x: Point| fields.inner(x);
    for c in [[0.0; 3], [0.3 * eps * ri, 0.0, 0.0]] {
        let radius = 0.2 * eps * ri;
        let mean = sphere_mean(&inner_fn, c, radius, &probe)?;
        report.harmonic_inner = report.harmonic_inner.max((mean - fields.inner(c)?.0).abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FamilyConfig, Term};
    use crate::poly::{Polynomial, Univariate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ORDER: usize = 10;

    fn spheres(order: usize) -> (SurfaceQuadrature, SurfaceQuadrature) {
        let q = build_quadrature(&SurfaceSpec::UnitSphere, order).unwrap();
        (q.clone(), q)
    }

    fn samples(rule: &SurfaceQuadrature, p: &Polynomial) -> Vec<f64> {
        rule.nodes.iter().map(|x| p.value(*x)).collect()
    }

    fn x1() -> Polynomial {
        Polynomial::coordinate(0)
    }

    fn affine() -> FamilyConfig {
        FamilyConfig::Affine { a: Some(0.0), b: 1.0, c: 0.0, zeta_i: None }
    }

    fn nonlinear() -> FamilyConfig {
        FamilyConfig::Polynomial {
            f_terms: vec![
                Term { eps_power: 0, zeta_power: 1, coeff: 1.0, t_coeff: [0.0; 3] },
                Term { eps_power: 1, zeta_power: 2, coeff: 0.5, t_coeff: [0.1, 0.0, 0.0] },
                Term { eps_power: 1, zeta_power: 0, coeff: 0.0, t_coeff: [0.0, 0.3, 0.0] },
            ],
            g_terms: vec![
                Term { eps_power: 0, zeta_power: 2, coeff: 0.4, t_coeff: [0.0; 3] },
                Term { eps_power: 0, zeta_power: 0, coeff: 0.0, t_coeff: [0.0, 0.0, 0.2] },
            ],
            center: Some(0.0),
            zeta_i: None,
        }
    }

    fn manufactured() -> (Polynomial, FamilyConfig) {
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
        let cfg = FamilyConfig::Manufactured {
            p_outer: po.clone(),
            p_inner: pi,
            coupling: Univariate::new(vec![0.0, 0.0, 1.0]),
        };
        (po, cfg)
    }

    #[test]
    fn background_examples() {
        let (outer, _) = spheres(14);
        let one = compute_background(&outer, &vec![1.0; outer.len()]).unwrap();
        assert!((one.value_at_origin - 1.0).abs() < 1e-12);
        assert!(one.gradient_at_origin.iter().all(|g| g.abs() < 1e-12));
        let b = compute_background(&outer, &samples(&outer, &x1())).unwrap();
        assert!(b.value_at_origin.abs() < 1e-8);
        assert!((b.gradient_at_origin[0] - 1.0).abs() < 1e-8);
        assert!(b.gradient_at_origin[1].abs() < 1e-8 && b.gradient_at_origin[2].abs() < 1e-8);
        let q = Polynomial::new(vec![Polynomial::term(1.0, [2, 0, 0]), Polynomial::term(-1.0, [0, 0, 2])]);
        let b = compute_background(&outer, &samples(&outer, &q)).unwrap();
        let h = b.hessian_at_origin;
        let exact = [[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[i][j] - exact[i][j]).abs() < 1e-6);
            }
        }
        assert!(b.trace_error < 1e-12);
    }

    #[test]
    fn j_examples() {
        let (outer, inner) = spheres(ORDER);
        let ops = SharedOperators::new(&outer, &inner, None).unwrap();
        let zero = vec![0.0; inner.len()];
        assert_eq!(ops.apply_j(&zero, 1.0).unwrap(), ops.s_inner);
        let y1: Vec<f64> = inner.nodes.iter().map(|t| t[0]).collect();
        let j = ops.apply_j(&y1, 0.0).unwrap();
        assert!(j.iter().zip(&y1).all(|(a, b)| (a + b / 3.0).abs() < 1e-8));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut mu: Vec<f64> = (0..inner.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = inner.integrate(&mu) / inner.area();
        mu.iter_mut().for_each(|m| *m -= mean);
        let xi = 0.37;
        let (back, xb) = ops.solve_j(&ops.apply_j(&mu, xi).unwrap()).unwrap();
        assert!((xb - xi).abs() < 1e-10);
        assert!(back.iter().zip(&mu).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(ops.apply_j(&vec![1.0; inner.len()], 0.0).is_err());
    }

    #[test]
    fn lambda_structure_and_conditioning() {
        let (outer, inner) = spheres(ORDER);
        let ops = SharedOperators::new(&outer, &inner, None).unwrap();
        let l0 = assemble_lambda(0.0, &ops).unwrap();
        let no = outer.len();
        let ni = inner.len();
        assert_eq!(l0.matrix.view((0, 0), (no, no)).clone_owned(), ops.plus_outer);
        assert!(l0.matrix.view((0, no), (no, ni + 1)).iter().all(|v| *v == 0.0));
        let conds: Vec<f64> =
            [0.0, 0.05, 0.1].iter().map(|e| assemble_lambda(*e, &ops).unwrap().condition_estimate()).collect();
        let (lo, hi) = conds.iter().fold((f64::INFINITY, 0.0f64), |(a, b), c| (a.min(*c), b.max(*c)));
        assert!(hi < 2.0 * lo, "{conds:?}");
        // block substitution: phi_o from the outer Dirichlet problem, (phi_i, zeta) from J
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g1: Vec<f64> = (0..no).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = (0..ni).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (po, pi, z) = l0.solve(&g1, &g2);
        let phi_o = ops.dirichlet.solve(&g1).unwrap();
        let w0 = double_layer_matrix(&outer, &[[0.0; 3]]).unwrap();
        let shift: f64 = (w0 * DVector::from_column_slice(&phi_o))[0];
        let rhs: Vec<f64> = g2.iter().map(|g| g - shift).collect();
        let (phi_i, zeta) = ops.solve_j(&rhs).unwrap();
        assert!(po.iter().zip(&phi_o).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(pi.iter().zip(&phi_i).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!((z - zeta).abs() < 1e-10);
    }

    fn random_state(ops: &SharedOperators, rng: &mut ChaCha8Rng) -> UnknownState {
        let mut s = UnknownState::zeros(ops);
        s.phi_o.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        s.phi_i.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        s.psi_i.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
        s.zeta = rng.gen_range(-1.0..1.0);
        let mean = ops.inner.integrate(&s.phi_i) / ops.inner.area();
        s.phi_i.iter_mut().for_each(|v| *v -= mean);
        s
    }

    #[test]
    fn m_equals_n_minus_s() {
        let (outer, inner) = spheres(ORDER);
        let ops = SharedOperators::new(&outer, &inner, None).unwrap();
        let bg = ops.background(&samples(&outer, &x1().plus(&Polynomial::constant(0.3)))).unwrap();
        let data = nonlinear().build(bg.value_at_origin).unwrap();
        let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
        assert!(problem.admissibility(&AdmissibilityTolerances::default()).passed);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for eps in [0.0, 0.02, 0.1] {
            let cache = OperatorCache::new(eps, problem).unwrap();
            for _ in 0..3 {
                let s = random_state(&ops, &mut rng);
                let m = cache.eval_m(&s).unwrap().to_vector();
                let ns = cache.apply_n(&s) - cache.eval_s(&s.psi_i).unwrap();
                assert!((m - ns).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn n0_is_the_jacobian_at_the_limit() {
        let (outer, inner) = spheres(8);
        let ops = SharedOperators::new(&outer, &inner, None).unwrap();
        let bg = ops.background(&samples(&outer, &x1())).unwrap();
        let data = nonlinear().build(bg.value_at_origin).unwrap();
        let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
        let cache = OperatorCache::new(0.0, problem).unwrap();
        let x0 = cache.solve_limit().unwrap();
        assert!(cache.eval_m(&x0).unwrap().magnitude < 1e-10);
        let base = x0.to_vector();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for c in 0..base.len() {
            let mut a = base.clone();
            let mut b = base.clone();
            a[c] += h;
            b[c] -= h;
            let ma = cache.eval_m(&UnknownState::from_slice(a.as_slice(), &ops)).unwrap().to_vector();
            let mb = cache.eval_m(&UnknownState::from_slice(b.as_slice(), &ops)).unwrap().to_vector();
            let col = (ma - mb) / (2.0 * h);
            worst = worst.max((col - cache.n_matrix.column(c)).amax());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn affine_exact_state_and_one_step_picard() {
        let (outer, inner) = spheres(ORDER);
        let ops = SharedOperators::new(&outer, &inner, None).unwrap();
        let bg = ops.background(&samples(&outer, &x1())).unwrap();
        let data = affine().build(bg.value_at_origin).unwrap();
        let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
        // u^o = u^i = x1: zero outer densities, psi = (1/2 I + W)^{-1} t1
        let t1: Vec<f64> = inner.nodes.iter().map(|t| t[0]).collect();
        let mut exact = UnknownState::zeros(&ops);
        exact.psi_i = InteriorDirichlet::new(&ops.w_inner).unwrap().solve(&t1).unwrap();
        for eps in [0.05, 0.1, 0.2] {
            let cache = OperatorCache::new(eps, problem).unwrap();
            assert!(cache.eval_m(&exact).unwrap().magnitude < 1e-8);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let start = random_state(&ops, &mut rng);
            let s1 = cache.picard_step(&start).unwrap();
            assert!(cache.eval_m(&s1).unwrap().magnitude < 1e-10);
            assert!(s1.distance(&cache.picard_step(&s1).unwrap(), &ops) < 1e-12);
            let (sol, report) = cache.newton_solve(&start, &SolverOptions::default()).unwrap();
            assert!(report.iterations <= 2);
            let fields = reconstruct_fields(eps, &sol, problem).unwrap();
            for x in [[0.5, 0.1, -0.2], [-0.3, 0.6, 0.4], [0.0, 0.0, 0.7]] {
                assert!((fields.outer(x).unwrap().0 - x[0]).abs() < 1e-6);
            }
            let xi = [0.3 * eps, -0.2 * eps, 0.1 * eps];
            assert!((fields.inner(xi).unwrap().0 - xi[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn limit_solution_for_constant_data_vanishes() {
        let (outer, inner) = spheres(8);
        let ops = SharedOperators::new(&outer, &inner, None).unwrap();
        let bg = ops.background(&vec![2.0; outer.len()]).unwrap();
        let data = affine().build(bg.value_at_origin).unwrap();
        assert!((data.zeta_i() - 2.0).abs() < 1e-12);
        let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
        let x0 = solve_limit(problem).unwrap();
        assert!(x0.norm(&ops) < 1e-10);
    }

    #[test]
    fn manufactured_newton_and_pde_check() {
        let (outer, inner) = spheres(ORDER);
        let ops = SharedOperators::new(&outer, &inner, None).unwrap();
        let (po, cfg) = manufactured();
        let fo = samples(&outer, &po);
        let bg = ops.background(&fo).unwrap();
        let data = cfg.build(bg.value_at_origin).unwrap();
        let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
        assert!(problem.admissibility(&AdmissibilityTolerances::default()).passed);
        let exact = cfg.exact_fields().unwrap();
        let mut state = solve_limit(problem).unwrap();
        for eps in [0.05, 0.1] {
            let cache = OperatorCache::new(eps, problem).unwrap();
            let (sol, report) = cache.newton_solve(&state, &SolverOptions::default()).unwrap();
            assert!(*report.residuals.last().unwrap() < 1e-10, "{:?}", report.residuals);
            let fields = reconstruct_fields(eps, &sol, problem).unwrap();
            for x in [[0.5, 0.1, -0.2], [-0.3, 0.6, 0.4]] {
                assert!((fields.outer(x).unwrap().0 - exact.outer.value(x)).abs() < 1e-6);
            }
            let xi = [0.3 * eps, -0.2 * eps, 0.1 * eps];
            assert!((fields.inner(xi).unwrap().0 - exact.inner.value(xi)).abs() < 1e-6);
            let opts = PdeCheckOptions { max_nodes: 16, ..Default::default() };
            let pde = residual_check_pde(eps, &fields, data.as_ref(), &outer, &inner, &fo, &opts).unwrap();
            assert!(pde.max() < 1e-6, "{pde:?}");
            let ex = residual_check_pde(eps, &exact, data.as_ref(), &outer, &inner, &fo, &opts).unwrap();
            assert!(ex.max() < 1e-10, "{ex:?}");
            state = sol;
        }
    }
}
