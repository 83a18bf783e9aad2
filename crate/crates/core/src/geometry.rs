//! Star-shaped closed surfaces in R^3, their product quadrature rules, and
//! the admissible window of inclusion scalings.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sph::{eval_sh, eval_sh_grad, gauss_legendre};

pub type Point = [f64; 3];

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(s: f64, a: Point) -> Point {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn normalize(a: Point) -> Point {
    scale(1.0 / norm(a), a)
}

/// Rotation of `p` about the z axis by `alpha`.
#[inline]
pub fn rotate_z(p: Point, alpha: f64) -> Point {
    let (s, c) = alpha.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

/// Closed surface given as a radial graph over the unit sphere.
///
/// For `star-shaped`, the radial function is
/// `r(p) = radius + sum_k coefficients[k] * Y_k(p)` in the real harmonic basis
/// of [`crate::sph`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurfaceSpec {
    UnitSphere,
    ScaledSphere { radius: f64 },
    StarShaped { radius: f64, coefficients: Vec<f64> },
}

/// Geometry of one surface point: position, outward unit normal and the
/// area element relative to the parameter sphere.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub x: Point,
    pub normal: Point,
    pub jacobian: f64,
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SurfaceSpec::UnitSphere => Ok(()),
            SurfaceSpec::ScaledSphere { radius } => {
                if radius.is_finite() && *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Geometry(format!("sphere radius must be positive, got {radius}")))
                }
            }
            SurfaceSpec::StarShaped { radius, coefficients } => {
                if !radius.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Geometry("non-finite radial coefficients".into()));
                }
                let (rmin, _) = self.radial_extent(48);
                if rmin <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "radial function is not positive (minimum {rmin:.3e})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Radius when the surface is a sphere centred at the origin.
    pub fn sphere_radius(&self) -> Option<f64> {
        match self {
            SurfaceSpec::UnitSphere => Some(1.0),
            SurfaceSpec::ScaledSphere { radius } => Some(*radius),
            SurfaceSpec::StarShaped { radius, coefficients } => {
                if coefficients.iter().skip(1).all(|c| *c == 0.0) {
                    let c0 = coefficients.first().copied().unwrap_or(0.0);
                    Some(radius + c0 / (4.0 * PI).sqrt())
                } else {
                    None
                }
            }
        }
    }

    fn harmonic_degrees(coefficients: &[f64]) -> usize {
        let mut d = 0;
        while d * d < coefficients.len() {
            d += 1;
        }
        d
    }

    /// Radial function and its surface gradient on the parameter sphere.
    pub fn radial(&self, p: Point) -> (f64, Point) {
        match self {
            SurfaceSpec::UnitSphere => (1.0, [0.0; 3]),
            SurfaceSpec::ScaledSphere { radius } => (*radius, [0.0; 3]),
            SurfaceSpec::StarShaped { radius, coefficients } => {
                let degrees = Self::harmonic_degrees(coefficients);
                let n = degrees * degrees;
                let mut vals = vec![0.0; n];
                let mut grads = vec![[0.0; 3]; n];
                eval_sh_grad(degrees, p, &mut vals, &mut grads);
                let mut r = *radius;
                let mut g = [0.0; 3];
                for (k, c) in coefficients.iter().enumerate() {
                    r += c * vals[k];
                    for d in 0..3 {
                        g[d] += c * grads[k][d];
                    }
                }
                (r, g)
            }
        }
    }

    /// Maps a direction of the parameter sphere to the surface.
    pub fn point(&self, p: Point) -> SurfacePoint {
        let (r, g) = self.radial(p);
        let n = sub(scale(r, p), g);
        let len = norm(n);
        SurfacePoint { x: scale(r, p), normal: scale(1.0 / len, n), jacobian: r * len }
    }

    /// Minimum and maximum of the radial function on a Gauss grid of the given order.
    pub fn radial_extent(&self, order: usize) -> (f64, f64) {
        if let Some(r) = self.sphere_radius() {
            return (r, r);
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in direction_grid(order) {
            let (r, _) = self.radial(p);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    /// Nearest surface point to `x`: parameter direction and surface data.
    /// Gauss–Newton in local tangent coordinates, started from the radial projection.
    pub fn foot_point(&self, x: Point) -> (Point, SurfacePoint) {
        let r = norm(x);
        let mut p = if r > 0.0 { scale(1.0 / r, x) } else { [0.0, 0.0, 1.0] };
        if self.sphere_radius().is_some() {
            return (p, self.point(p));
        }
        for _ in 0..30 {
            let (rad, g) = self.radial(p);
            let (e1, e2) = tangent_frame(p);
            let t1 = add(scale(dot(g, e1), p), scale(rad, e1));
            let t2 = add(scale(dot(g, e2), p), scale(rad, e2));
            let res = sub(x, scale(rad, p));
            let (m11, m12, m22) = (dot(t1, t1), dot(t1, t2), dot(t2, t2));
            let (b1, b2) = (dot(t1, res), dot(t2, res));
            let det = m11 * m22 - m12 * m12;
            let u = (m22 * b1 - m12 * b2) / det;
            let v = (m11 * b2 - m12 * b1) / det;
            p = normalize(add(p, add(scale(u, e1), scale(v, e2))));
            if u.abs() + v.abs() < 1e-15 {
                break;
            }
        }
        (p, self.point(p))
    }

    /// Whether `x` lies strictly inside the surface.
    pub fn contains(&self, x: Point) -> bool {
        let r = norm(x);
        if r == 0.0 {
            return true;
        }
        r < self.radial(scale(1.0 / r, x)).0
    }
}

/// Unit directions of the product grid of the given order.
fn direction_grid(order: usize) -> Vec<Point> {
    let (xs, _) = gauss_legendre(order);
    let nphi = 2 * order;
    let mut out = Vec::with_capacity(order * nphi);
    for &x in &xs {
        let s = (1.0 - x * x).sqrt();
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            out.push([s * phi.cos(), s * phi.sin(), x]);
        }
    }
    out
}

/// Product Gauss–Legendre (in cos theta) by trapezoid (in phi) rule on a surface.
///
/// Nodes are ordered ring by ring: node `i * n_phi + j` sits on latitude ring
/// `i` at azimuth `2 pi j / n_phi`.
#[derive(Clone, Debug)]
pub struct SurfaceQuadrature {
    pub spec: SurfaceSpec,
    pub order: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Parameter directions on the unit sphere.
    pub dirs: Vec<Point>,
    /// Weights of the rule on the parameter sphere (sum 4 pi).
    pub param_weights: Vec<f64>,
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    pub jacobians: Vec<f64>,
    /// Area weights `param_weight * jacobian`.
    pub weights: Vec<f64>,
    pub ring_theta: Vec<f64>,
    /// Harmonics of degree `< order` at `dirs`, row-major `len x order^2`.
    basis: Vec<f64>,
}

pub fn build_quadrature(spec: &SurfaceSpec, order: usize) -> Result<SurfaceQuadrature> {
    if order < 4 {
        return Err(Error::Geometry(format!("quadrature order must be >= 4, got {order}")));
    }
    spec.validate()?;
    let (xs, ws) = gauss_legendre(order);
    let n_phi = 2 * order;
    let dphi = 2.0 * PI / n_phi as f64;
    let n = order * n_phi;
    let nb = order * order;
    let mut q = SurfaceQuadrature {
        spec: spec.clone(),
        order,
        n_theta: order,
        n_phi,
        dirs: Vec::with_capacity(n),
        param_weights: Vec::with_capacity(n),
        nodes: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        jacobians: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        ring_theta: xs.iter().map(|x| x.acos()).collect(),
        basis: vec![0.0; n * nb],
    };
    for (i, &x) in xs.iter().enumerate() {
        let s = (1.0 - x * x).sqrt();
        for j in 0..n_phi {
            let phi = dphi * j as f64;
            let p = [s * phi.cos(), s * phi.sin(), x];
            let sp = spec.point(p);
            if !(sp.jacobian > 0.0) || !sp.jacobian.is_finite() {
                return Err(Error::Geometry("degenerate area element".into()));
            }
            let k = q.dirs.len();
            eval_sh(order, p, &mut q.basis[k * nb..(k + 1) * nb]);
            q.dirs.push(p);
            q.param_weights.push(ws[i] * dphi);
            q.nodes.push(sp.x);
            q.normals.push(sp.normal);
            q.jacobians.push(sp.jacobian);
            q.weights.push(ws[i] * dphi * sp.jacobian);
        }
    }
    Ok(q)
}

impl SurfaceQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of harmonics resolved by the rule (`order^2`).
    pub fn band(&self) -> usize {
        self.order * self.order
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Characteristic distance between neighbouring nodes.
    pub fn node_spacing(&self) -> f64 {
        let (_, rmax) = self.spec.radial_extent(self.order.max(16));
        PI * rmax / self.order as f64
    }

    /// Harmonic values at node `k`.
    pub fn basis_row(&self, k: usize) -> &[f64] {
        let nb = self.band();
        &self.basis[k * nb..(k + 1) * nb]
    }

    /// Coefficients of the band-limited interpolant of nodal values, with
    /// respect to the parameter sphere.
    pub fn analysis(&self, values: &[f64]) -> Vec<f64> {
        let nb = self.band();
        let mut c = vec![0.0; nb];
        for (k, (&v, &w)) in values.iter().zip(&self.param_weights).enumerate() {
            let f = v * w;
            if f == 0.0 {
                continue;
            }
            for (ci, yi) in c.iter_mut().zip(self.basis_row(k)) {
                *ci += f * yi;
            }
        }
        c
    }

    /// Nodal values of a harmonic expansion.
    pub fn synthesis(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.basis_row(k).iter().zip(coeffs).map(|(y, c)| y * c).sum())
            .collect()
    }

    /// Value of a harmonic expansion at an arbitrary parameter direction.
    pub fn interpolate(&self, coeffs: &[f64], p: Point) -> f64 {
        let mut y = vec![0.0; self.band()];
        eval_sh(self.order, p, &mut y);
        y.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    /// Surface gradient (Cartesian components, tangent to the surface) of the
    /// band-limited interpolant of `values`.
    pub fn tangential_gradient(&self, values: &[f64]) -> Vec<Point> {
        let coeffs = self.analysis(values);
        let nb = self.band();
        let mut vals = vec![0.0; nb];
        let mut grads = vec![[0.0; 3]; nb];
        let sphere = self.spec.sphere_radius();
        self.dirs
            .iter()
            .map(|&p| {
                eval_sh_grad(self.order, p, &mut vals, &mut grads);
                let mut g = [0.0; 3];
                for (c, gr) in coeffs.iter().zip(&grads) {
                    for d in 0..3 {
                        g[d] += c * gr[d];
                    }
                }
                match sphere {
                    Some(r) => scale(1.0 / r, g),
                    None => self.pushforward_gradient(p, g),
                }
            })
            .collect()
    }

    /// Converts a gradient on the parameter sphere into the surface gradient
    /// on the physical surface (chain rule through the radial map).
    fn pushforward_gradient(&self, p: Point, g: Point) -> Point {
        let (r, rg) = self.spec.radial(p);
        let e1 = tangent_frame(p).0;
        let e2 = cross(p, e1);
        let t1 = add(scale(dot(rg, e1), p), scale(r, e1));
        let t2 = add(scale(dot(rg, e2), p), scale(r, e2));
        let (m11, m12, m22) = (dot(t1, t1), dot(t1, t2), dot(t2, t2));
        let (b1, b2) = (dot(g, e1), dot(g, e2));
        let det = m11 * m22 - m12 * m12;
        let c1 = (m22 * b1 - m12 * b2) / det;
        let c2 = (m11 * b2 - m12 * b1) / det;
        add(scale(c1, t1), scale(c2, t2))
    }

    /// Node data as surface points.
    pub fn surface_points(&self) -> Vec<SurfacePoint> {
        (0..self.len())
            .map(|i| SurfacePoint { x: self.nodes[i], normal: self.normals[i], jacobian: self.jacobians[i] })
            .collect()
    }

    /// Euclidean (chordal) distance between nodes `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        norm(sub(self.nodes[i], self.nodes[j]))
    }
}

/// Orthonormal tangent frame `(e1, e2)` at a unit vector `p`, with `e1` the
/// polar direction whenever `p` is not at a pole.
pub fn tangent_frame(p: Point) -> (Point, Point) {
    let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let e1 = if rho > 1e-12 {
        [p[2] * p[0] / rho, p[2] * p[1] / rho, -rho]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e2 = cross(p, e1);
    (e1, e2)
}

/// Product rule in local polar coordinates `(theta', phi')` around a pole on
/// the parameter sphere. `theta_weights` already contain the `sin theta'` factor.
#[derive(Clone, Debug)]
pub struct PolarRule {
    pub theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub n_phi: usize,
}

impl PolarRule {
    /// Gauss–Legendre in `theta'` on `[0, pi]` and trapezoid in `phi'`.
    pub fn gauss(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|t| 0.5 * PI * (t + 1.0)).collect();
        let theta_weights = theta.iter().zip(&w).map(|(t, w)| 0.5 * PI * w * t.sin()).collect();
        PolarRule { theta, theta_weights, n_phi }
    }

    /// Composite Gauss rule in `theta'` on panels growing geometrically from
    /// `first_panel` (doubling) up to width `max_panel`, then uniform up to `pi`.
    /// Used for integrands peaked at angular scale `first_panel`.
    pub fn graded(first_panel: f64, max_panel: f64, points_per_panel: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(points_per_panel);
        let max_panel = max_panel.min(PI);
        let mut edges = vec![0.0];
        let mut width = first_panel.min(max_panel);
        while *edges.last().unwrap() < PI {
            let last = *edges.last().unwrap();
            let mut next = (last + width).min(PI);
            // avoid a sliver panel at the end
            if PI - next < 0.5 * width {
                next = PI;
            }
            edges.push(next);
            width = (2.0 * width).min(max_panel);
        }
        let mut theta = Vec::new();
        let mut theta_weights = Vec::new();
        for win in edges.windows(2) {
            let (a, b) = (win[0], win[1]);
            for (t, wt) in x.iter().zip(&w) {
                let th = 0.5 * (a + b) + 0.5 * (b - a) * t;
                theta.push(th);
                theta_weights.push(0.5 * (b - a) * wt * th.sin());
            }
        }
        PolarRule { theta, theta_weights, n_phi }
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points (unit vectors) and weights of the rule with pole `p` and
    /// tangent frame `(e1, e2)`.
    pub fn points(&self, p: Point, e1: Point, e2: Point) -> Vec<(Point, f64)> {
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut out = Vec::with_capacity(self.len());
        for (&t, &wt) in self.theta.iter().zip(&self.theta_weights) {
            let (st, ct) = t.sin_cos();
            for j in 0..self.n_phi {
                let (sp, cp) = (dphi * j as f64).sin_cos();
                let q = [
                    st * cp * e1[0] + st * sp * e2[0] + ct * p[0],
                    st * cp * e1[1] + st * sp * e2[1] + ct * p[1],
                    st * cp * e1[2] + st * sp * e2[2] + ct * p[2],
                ];
                out.push((q, wt * dphi));
            }
        }
        out
    }
}

/// Whether `epsilon * (inner surface)` lies strictly inside the outer surface,
/// tested radially on a dense angular grid. Negative `epsilon` reflects the
/// inclusion through the origin.
pub fn check_inclusion(outer: &SurfaceSpec, inner: &SurfaceSpec, epsilon: f64) -> bool {
    if epsilon == 0.0 {
        return true;
    }
    direction_grid(64).into_iter().all(|p| {
        let (ri, _) = inner.radial(p);
        let dir = if epsilon > 0.0 { p } else { scale(-1.0, p) };
        let (ro, _) = outer.radial(dir);
        epsilon.abs() * ri < ro
    })
}

/// Largest admissible scaling: `sup { e : e * closure(inner) inside outer for |eps| < e }`.
pub fn epsilon0(outer: &SurfaceSpec, inner: &SurfaceSpec) -> f64 {
    direction_grid(64)
        .into_iter()
        .map(|p| {
            let (ri, _) = inner.radial(p);
            let (ro_plus, _) = outer.radial(p);
            let (ro_minus, _) = outer.radial(scale(-1.0, p));
            (ro_plus / ri).min(ro_minus / ri)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Sorted grid of inclusion scalings, all inside `(0, epsilon0)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsilonWindow {
    pub epsilon0: f64,
    pub grid: Vec<f64>,
}

impl EpsilonWindow {
    pub fn new(outer: &SurfaceSpec, inner: &SurfaceSpec, mut grid: Vec<f64>) -> Result<Self> {
        let e0 = epsilon0(outer, inner);
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite epsilon"));
        for &e in &grid {
            if !(e > 0.0 && e < e0) || !check_inclusion(outer, inner, e) {
                return Err(Error::Geometry(format!(
                    "epsilon {e} is outside the admissible window (0, {e0:.6})"
                )));
            }
        }
        Ok(EpsilonWindow { epsilon0: e0, grid })
    }

    /// Geometric grid of `count` points between `first` and `last`.
    pub fn geometric(
        outer: &SurfaceSpec,
        inner: &SurfaceSpec,
        first: f64,
        last: f64,
        count: usize,
    ) -> Result<Self> {
        if count == 0 || first <= 0.0 || last < first {
            return Err(Error::Config("invalid geometric epsilon grid".into()));
        }
        let grid = if count == 1 {
            vec![first]
        } else {
            let ratio = (last / first).powf(1.0 / (count - 1) as f64);
            (0..count).map(|k| first * ratio.powi(k as i32)).collect()
        };
        Self::new(outer, inner, grid)
    }
}
