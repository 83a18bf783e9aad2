//! Discrete Hölder norms on surface node sets and numerical checks of the
//! product and composition inequalities.
//!
//! `|f|_alpha` is the largest quotient `|f_i - f_j| / |x_i - x_j|^alpha` over a
//! set of node pairs (chordal distance). `||f||_{0,alpha} = max |f| + |f|_alpha`
//! and `||f||_{1,alpha} = ||f||_{0,alpha} + sum_k ||g_k||_{0,alpha}` where `g`
//! is the Cartesian tangential gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, SurfaceQuadrature};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderConfig {
    pub alpha: f64,
    /// Largest number of node pairs used for quotients; all pairs below it.
    pub pair_budget: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig { alpha: 0.5, pair_budget: 2_000_000, seed: 0 }
    }
}

impl HolderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.pair_budget == 0 {
            return Err(Error::Config("pair budget must be positive".into()));
        }
        Ok(())
    }
}

/// Node pairs with their weights `1 / dist^alpha`.
#[derive(Clone, Debug)]
pub struct HolderMetric {
    len: usize,
    pairs: Vec<(u32, u32)>,
    inv_dist: Vec<f64>,
}

impl HolderMetric {
    /// Pairs over `len` points with distance `dist(i, j)`. Uses every pair when
    /// their number fits the budget, otherwise the first `budget` pairs of a
    /// stream seeded by `cfg.seed`, so a larger budget always uses a superset.
    pub fn from_distance(len: usize, cfg: &HolderConfig, dist: impl Fn(usize, usize) -> f64) -> Result<Self> {
        cfg.validate()?;
        if len == 0 {
            return Err(Error::Data("empty node set".into()));
        }
        let total = len * (len - 1) / 2;
        let mut pairs = Vec::with_capacity(total.min(cfg.pair_budget));
        if total <= cfg.pair_budget {
            for i in 0..len {
                for j in 0..i {
                    pairs.push((i as u32, j as u32));
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            while pairs.len() < cfg.pair_budget {
                let i = rng.gen_range(0..len);
                let j = rng.gen_range(0..len);
                if i != j {
                    pairs.push((i as u32, j as u32));
                }
            }
        }
        let mut inv_dist = Vec::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            let d = dist(i as usize, j as usize);
            if !(d > 0.0) {
                return Err(Error::Data(format!("points {i} and {j} coincide")));
            }
            inv_dist.push(d.powf(-cfg.alpha));
        }
        Ok(HolderMetric { len, pairs, inv_dist })
    }

    pub fn for_points(points: &[Point], cfg: &HolderConfig) -> Result<Self> {
        Self::from_distance(points.len(), cfg, |i, j| {
            let d = crate::geometry::sub(points[i], points[j]);
            crate::geometry::norm(d)
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Largest Hölder quotient over the pair set.
    pub fn quotient(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len);
        self.pairs
            .iter()
            .zip(&self.inv_dist)
            .map(|(&(i, j), w)| (f[i as usize] - f[j as usize]).abs() * w)
            .fold(0.0, f64::max)
    }

    pub fn c0alpha(&self, f: &[f64]) -> f64 {
        sup(f) + self.quotient(f)
    }
}

pub fn sup(f: &[f64]) -> f64 {
    f.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Discrete norms on the nodes of one surface rule.
pub struct SurfaceNorms<'a> {
    rule: &'a SurfaceQuadrature,
    metric: HolderMetric,
}

impl<'a> SurfaceNorms<'a> {
    pub fn new(rule: &'a SurfaceQuadrature, cfg: &HolderConfig) -> Result<Self> {
        Ok(SurfaceNorms { rule, metric: HolderMetric::for_points(&rule.nodes, cfg)? })
    }

    pub fn rule(&self) -> &SurfaceQuadrature {
        self.rule
    }

    pub fn metric(&self) -> &HolderMetric {
        &self.metric
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.rule.len() {
            return Err(Error::Data(format!(
                "function has {} values, surface has {} nodes",
                f.len(),
                self.rule.len()
            )));
        }
        Ok(())
    }

    pub fn c0alpha(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(self.metric.c0alpha(f))
    }

    /// `||f||_{0,alpha} + sum_k ||g_k||_{0,alpha}` with a given gradient.
    pub fn c1alpha_with_gradient(&self, f: &[f64], grad: &[Point]) -> f64 {
        let mut total = self.metric.c0alpha(f);
        let mut comp = vec![0.0; f.len()];
        for k in 0..3 {
            for (c, g) in comp.iter_mut().zip(grad) {
                *c = g[k];
            }
            total += self.metric.c0alpha(&comp);
        }
        total
    }

    pub fn c1alpha(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        let grad = self.rule.tangential_gradient(f);
        if grad.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Data("tangential gradient is not finite".into()));
        }
        Ok(self.c1alpha_with_gradient(f, &grad))
    }
}

pub fn c0alpha_norm(f: &[f64], rule: &SurfaceQuadrature, cfg: &HolderConfig) -> Result<f64> {
    SurfaceNorms::new(rule, cfg)?.c0alpha(f)
}

pub fn c1alpha_norm(f: &[f64], rule: &SurfaceQuadrature, cfg: &HolderConfig) -> Result<f64> {
    SurfaceNorms::new(rule, cfg)?.c1alpha(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormOrder {
    C0Alpha,
    C1Alpha,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub bound: f64,
    pub violated: bool,
}

/// `||uv|| <= ||u|| ||v||` (C^{0,alpha}) or `<= 2 ||u|| ||v||` (C^{1,alpha}).
pub fn check_product_inequality(
    u: &[f64],
    v: &[f64],
    norms: &SurfaceNorms,
    order: NormOrder,
) -> Result<InequalityReport> {
    let uv: Vec<f64> = u.iter().zip(v).map(|(a, b)| a * b).collect();
    let (lhs, bound) = match order {
        NormOrder::C0Alpha => (norms.c0alpha(&uv)?, norms.c0alpha(u)? * norms.c0alpha(v)?),
        NormOrder::C1Alpha => (norms.c1alpha(&uv)?, 2.0 * norms.c1alpha(u)? * norms.c1alpha(v)?),
    };
    Ok(InequalityReport { lhs, bound, violated: lhs > bound * (1.0 + 1e-12) })
}

/// A function `u(x, s)` on `surface x [-R, R]` with its `s`-derivative.
pub struct SlicedFunction<'f> {
    pub value: &'f dyn Fn(Point, f64) -> f64,
    pub ds: &'f dyn Fn(Point, f64) -> f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompositionReport {
    /// `||u(., v)||_{0,alpha}`.
    pub c0_lhs: f64,
    /// `||u||_{0,alpha} (1 + ||v||_{1,alpha}^alpha)`.
    pub c0_rhs: f64,
    pub c0_ratio: f64,
    /// `||u(., v)||_{1,alpha}`.
    pub c1_lhs: f64,
    /// `||u||_{1,alpha} (1 + ||v||_{1,alpha})^2`.
    pub c1_rhs: f64,
    pub c1_ratio: f64,
}

/// Measures the composition ratios for `u(x, v(x))`. The product-space norms
/// of `u` are taken on the grid `nodes x {s_a}` with `slices` equispaced values
/// in `[-R, R]`; the gradient of the composition uses the chain rule with the
/// tangential gradient of `u` interpolated linearly in `s`.
pub fn check_composition_inequality(
    u: &SlicedFunction,
    v: &[f64],
    radius: f64,
    slices: usize,
    norms: &SurfaceNorms,
    cfg: &HolderConfig,
) -> Result<CompositionReport> {
    let rule = norms.rule();
    let n = rule.len();
    if v.len() != n {
        return Err(Error::Data("v does not match the surface".into()));
    }
    if let Some(bad) = v.iter().find(|x| x.abs() > radius) {
        return Err(Error::Domain(format!("v takes the value {bad} outside [-{radius}, {radius}]")));
    }
    if slices < 2 {
        return Err(Error::Config("at least two s-slices are required".into()));
    }
    let s_grid: Vec<f64> =
        (0..slices).map(|a| -radius + 2.0 * radius * a as f64 / (slices - 1) as f64).collect();

    // product-space samples, slice-major
    let mut vals = Vec::with_capacity(n * slices);
    let mut dsv = Vec::with_capacity(n * slices);
    let mut tgrad: Vec<Point> = Vec::with_capacity(n * slices);
    for &s in &s_grid {
        let slice: Vec<f64> = rule.nodes.iter().map(|x| (u.value)(*x, s)).collect();
        tgrad.extend(rule.tangential_gradient(&slice));
        dsv.extend(rule.nodes.iter().map(|x| (u.ds)(*x, s)));
        vals.extend(slice);
    }
    let product = HolderMetric::from_distance(n * slices, cfg, |p, q| {
        let (a, i) = (p / n, p % n);
        let (b, j) = (q / n, q % n);
        let d = rule.distance(i, j);
        let ds = s_grid[a] - s_grid[b];
        (d * d + ds * ds).sqrt()
    })?;
    let u_c0 = product.c0alpha(&vals);
    let mut u_c1 = u_c0 + product.c0alpha(&dsv);
    let mut comp = vec![0.0; n * slices];
    for k in 0..3 {
        for (c, g) in comp.iter_mut().zip(&tgrad) {
            *c = g[k];
        }
        u_c1 += product.c0alpha(&comp);
    }

    // composition and its chain-rule gradient
    let w: Vec<f64> = rule.nodes.iter().zip(v).map(|(x, s)| (u.value)(*x, *s)).collect();
    let vgrad = rule.tangential_gradient(v);
    let h = s_grid[1] - s_grid[0];
    let wgrad: Vec<Point> = (0..n)
        .map(|i| {
            let pos = ((v[i] + radius) / h).clamp(0.0, (slices - 1) as f64);
            let a = (pos.floor() as usize).min(slices - 2);
            let theta = pos - a as f64;
            let g0 = tgrad[a * n + i];
            let g1 = tgrad[(a + 1) * n + i];
            let dus = (u.ds)(rule.nodes[i], v[i]);
            let mut g = [0.0; 3];
            for k in 0..3 {
                g[k] = (1.0 - theta) * g0[k] + theta * g1[k] + dus * vgrad[i][k];
            }
            g
        })
        .collect();
    let v_c1 = norms.c1alpha_with_gradient(v, &vgrad);
    let c0_lhs = norms.metric().c0alpha(&w);
    let c1_lhs = norms.c1alpha_with_gradient(&w, &wgrad);
    let c0_rhs = u_c0 * (1.0 + v_c1.powf(cfg.alpha));
    let c1_rhs = u_c1 * (1.0 + v_c1).powi(2);
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(CompositionReport {
        c0_lhs,
        c0_rhs,
        c0_ratio: ratio(c0_lhs, c0_rhs),
        c1_lhs,
        c1_rhs,
        c1_ratio: ratio(c1_lhs, c1_rhs),
    })
}

/// Random real harmonic expansion of degree `<= degree` sampled on the rule,
/// with coefficients uniform in `[-1, 1]` scaled by `scale`.
pub fn random_band_limited(rule: &SurfaceQuadrature, degree: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    let nb = ((degree + 1) * (degree + 1)).min(rule.band());
    let c: Vec<f64> = (0..nb).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    (0..rule.len())
        .map(|i| rule.basis_row(i)[..nb].iter().zip(&c).map(|(a, b)| a * b).sum())
        .collect()
}

/// Outcome of the seeded random battery for the product and composition inequalities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatteryReport {
    pub draws: usize,
    pub product_violations: usize,
    /// Largest `lhs / bound` of the product inequality over both orders.
    pub product_ratio: f64,
    /// Largest composition ratios over the battery, the empirical constants.
    pub c0_hat: f64,
    pub c1_hat: f64,
}

/// Random band-limited pairs of degree `<= degree` on a sphere rule. The
/// composition uses `u(x, s) = a(x) + b(x) s + c(x) s^2` with `v` scaled into `[-0.9, 0.9]`.
pub fn inequality_battery(
    rule: &SurfaceQuadrature,
    cfg: &HolderConfig,
    draws: usize,
    degree: usize,
    seed: u64,
) -> Result<BatteryReport> {
    if rule.spec.sphere_radius().is_none() {
        return Err(Error::Config("the inequality battery runs on spheres".into()));
    }
    let norms = SurfaceNorms::new(rule, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BatteryReport { draws, product_violations: 0, product_ratio: 0.0, c0_hat: 0.0, c1_hat: 0.0 };
    let dir = |x: Point| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        [x[0] / r, x[1] / r, x[2] / r]
    };
    for _ in 0..draws {
        let u = random_band_limited(rule, degree, 1.0, &mut rng);
        let v = random_band_limited(rule, degree, 1.0, &mut rng);
        for order in [NormOrder::C0Alpha, NormOrder::C1Alpha] {
            let r = check_product_inequality(&u, &v, &norms, order)?;
            report.product_violations += r.violated as usize;
            if r.bound > 0.0 {
                report.product_ratio = report.product_ratio.max(r.lhs / r.bound);
            }
        }
        let coeffs: Vec<Vec<f64>> =
            (0..3).map(|_| rule.analysis(&random_band_limited(rule, degree, 1.0, &mut rng))).collect();
        let peak = sup(&v).max(f64::MIN_POSITIVE);
        let vs: Vec<f64> = v.iter().map(|x| 0.9 * x / peak).collect();
        let value = |x: Point, s: f64| {
            let p = dir(x);
            rule.interpolate(&coeffs[0], p) + s * rule.interpolate(&coeffs[1], p) + s * s * rule.interpolate(&coeffs[2], p)
        };
        let ds = |x: Point, s: f64| {
            let p = dir(x);
            rule.interpolate(&coeffs[1], p) + 2.0 * s * rule.interpolate(&coeffs[2], p)
        };
        let f = SlicedFunction { value: &value, ds: &ds };
        let c = check_composition_inequality(&f, &vs, 1.0, 9, &norms, cfg)?;
        report.c0_hat = report.c0_hat.max(c.c0_ratio);
        report.c1_hat = report.c1_hat.max(c.c1_ratio);
    }
    Ok(report)
}
