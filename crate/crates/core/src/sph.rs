//! Real orthonormal spherical harmonics and Gauss–Legendre rules.
//!
//! Harmonics are indexed by `l * l + l + m` with `-l <= m <= l`; a band of
//! `degrees = L` holds the `L * L` functions of degree `0..L`. The real basis
//! uses `sqrt(2) P_l^m cos(m phi)` for `m > 0` and `sqrt(2) P_l^|m| sin(|m| phi)`
//! for `m < 0`, without the Condon–Shortley phase.

use std::f64::consts::PI;

#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Degree of the harmonic stored at `index`.
#[inline]
pub fn sh_degree(index: usize) -> usize {
    (index as f64).sqrt().floor() as usize
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|t| half * t).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Spherical angles helper: (cos theta, sin theta, cos phi, sin phi) of a unit vector.
#[inline]
fn angles(p: [f64; 3]) -> (f64, f64, f64, f64) {
    let x = p[2].clamp(-1.0, 1.0);
    let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let s = rho;
    if rho > 0.0 {
        (x, s, p[0] / rho, p[1] / rho)
    } else {
        (x, 0.0, 1.0, 0.0)
    }
}

/// Normalised associated Legendre table `P[l][m]` (stored `l*(l+1)/2 + m`) and,
/// when requested, `Q[l][m] = P[l][m] / sin(theta)` for `m >= 1`.
fn legendre_tables(degrees: usize, x: f64, s: f64, p: &mut [f64], q: Option<&mut [f64]>) {
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    let mut qmm = 0.0;
    let mut q = q;
    for m in 0..degrees {
        if m > 0 {
            let c = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            qmm = pmm * c;
            pmm = qmm * s;
        }
        p[tri(m, m)] = pmm;
        if let Some(q) = q.as_deref_mut() {
            q[tri(m, m)] = qmm;
        }
        if m + 1 < degrees {
            let c = ((2 * m + 3) as f64).sqrt() * x;
            p[tri(m + 1, m)] = c * pmm;
            if let Some(q) = q.as_deref_mut() {
                q[tri(m + 1, m)] = c * qmm;
            }
        }
        for l in (m + 2)..degrees {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
            if let Some(q) = q.as_deref_mut() {
                q[tri(l, m)] = a * (x * q[tri(l - 1, m)] - b * q[tri(l - 2, m)]);
            }
        }
    }
}

/// Evaluates the `degrees * degrees` real harmonics at the unit vector `p`.
pub fn eval_sh(degrees: usize, p: [f64; 3], out: &mut [f64]) {
    debug_assert!(out.len() >= degrees * degrees);
    if degrees == 0 {
        return;
    }
    let (x, s, cp, sp) = angles(p);
    let mut table = vec![0.0; degrees * (degrees + 1) / 2];
    legendre_tables(degrees, x, s, &mut table, None);
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let sqrt2 = std::f64::consts::SQRT_2;
    let (mut cm, mut sm) = (1.0, 0.0);
    for m in 0..degrees {
        if m > 0 {
            let c = cm * cp - sm * sp;
            sm = sm * cp + cm * sp;
            cm = c;
        }
        for l in m..degrees {
            let v = table[tri(l, m)];
            if m == 0 {
                out[l * l + l] = v;
            } else {
                out[l * l + l + m] = sqrt2 * v * cm;
                out[l * l + l - m] = sqrt2 * v * sm;
            }
        }
    }
}

/// Harmonic values and Cartesian surface gradients at the unit vector `p`.
pub fn eval_sh_grad(degrees: usize, p: [f64; 3], vals: &mut [f64], grads: &mut [[f64; 3]]) {
    if degrees == 0 {
        return;
    }
    let (x, s, cp, sp) = angles(p);
    // one extra degree so that P[l][m+1] exists for every l < degrees
    let ext = degrees + 1;
    let mut pt = vec![0.0; ext * (ext + 1) / 2];
    let mut qt = vec![0.0; ext * (ext + 1) / 2];
    legendre_tables(ext, x, s, &mut pt, Some(&mut qt));
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let theta_hat = [x * cp, x * sp, -s];
    let phi_hat = [-sp, cp, 0.0];
    let sqrt2 = std::f64::consts::SQRT_2;
    let (mut cm, mut sm) = (1.0, 0.0);
    for m in 0..degrees {
        if m > 0 {
            let c = cm * cp - sm * sp;
            sm = sm * cp + cm * sp;
            cm = c;
        }
        let mf = m as f64;
        for l in m..degrees {
            let lf = l as f64;
            let v = pt[tri(l, m)];
            let upper = if m < l { pt[tri(l, m + 1)] } else { 0.0 };
            let dtheta_p = if m == 0 {
                -(lf * (lf + 1.0)).sqrt() * upper
            } else {
                mf * x * qt[tri(l, m)] - ((lf - mf) * (lf + mf + 1.0)).sqrt() * upper
            };
            if m == 0 {
                let i = l * l + l;
                vals[i] = v;
                grads[i] = [
                    theta_hat[0] * dtheta_p,
                    theta_hat[1] * dtheta_p,
                    theta_hat[2] * dtheta_p,
                ];
            } else {
                let q = qt[tri(l, m)];
                let ic = l * l + l + m;
                let is = l * l + l - m;
                vals[ic] = sqrt2 * v * cm;
                vals[is] = sqrt2 * v * sm;
                // d/dtheta and (1/sin theta) d/dphi of each basis function
                let (dt_c, dp_c) = (sqrt2 * dtheta_p * cm, -sqrt2 * mf * q * sm);
                let (dt_s, dp_s) = (sqrt2 * dtheta_p * sm, sqrt2 * mf * q * cm);
                for k in 0..3 {
                    grads[ic][k] = theta_hat[k] * dt_c + phi_hat[k] * dp_c;
                    grads[is][k] = theta_hat[k] * dt_s + phi_hat[k] * dp_s;
                }
            }
        }
    }
}

/// Applies the change of basis `Y(R_z(alpha) q) = T(alpha) Y(q)` to a vector of
/// harmonic samples (or accumulated sums of them). Coefficient vectors are
/// rotated with `alpha -> -alpha`.
pub fn rotate_z(v: &mut [f64], degrees: usize, alpha: f64) {
    for m in 1..degrees {
        let (s, c) = (m as f64 * alpha).sin_cos();
        for l in m..degrees {
            let ic = l * l + l + m;
            let is = l * l + l - m;
            let a = v[ic];
            let b = v[is];
            v[ic] = c * a - s * b;
            v[is] = c * b + s * a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(theta: f64, phi: f64) -> [f64; 3] {
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // x^18 integrates to 2/19 exactly
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn low_degree_closed_forms() {
        let p = unit(0.7, 1.3);
        let mut y = vec![0.0; 9];
        eval_sh(3, p, &mut y);
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert!((y[0] - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((y[sh_index(1, 0)] - c1 * p[2]).abs() < 1e-14);
        assert!((y[sh_index(1, 1)] - c1 * p[0]).abs() < 1e-14);
        assert!((y[sh_index(1, -1)] - c1 * p[1]).abs() < 1e-14);
        let c2 = (15.0 / (4.0 * PI)).sqrt();
        assert!((y[sh_index(2, -2)] - c2 * p[0] * p[1]).abs() < 1e-14);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let degrees = 7;
        let n = degrees * degrees;
        for &(t, ph) in &[(0.3, 0.4), (1.9, 4.0), (2.9, 2.2)] {
            let p = unit(t, ph);
            let mut v = vec![0.0; n];
            let mut g = vec![[0.0; 3]; n];
            eval_sh_grad(degrees, p, &mut v, &mut g);
            // directional derivative along a tangent vector
            let tangent = {
                let a = [0.3, -0.5, 0.8];
                let d = a[0] * p[0] + a[1] * p[1] + a[2] * p[2];
                [a[0] - d * p[0], a[1] - d * p[1], a[2] - d * p[2]]
            };
            let h = 1e-6;
            let shift = |sgn: f64| {
                let q = [
                    p[0] + sgn * h * tangent[0],
                    p[1] + sgn * h * tangent[1],
                    p[2] + sgn * h * tangent[2],
                ];
                let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                let mut out = vec![0.0; n];
                eval_sh(degrees, [q[0] / r, q[1] / r, q[2] / r], &mut out);
                out
            };
            let (fp, fm) = (shift(1.0), shift(-1.0));
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                let an: f64 = (0..3).map(|k| g[i][k] * tangent[k]).sum();
                assert!((fd - an).abs() < 1e-6, "index {i}: fd {fd} analytic {an}");
                let radial: f64 = (0..3).map(|k| g[i][k] * p[k]).sum();
                assert!(radial.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn z_rotation_matches_direct_evaluation() {
        let degrees = 6;
        let n = degrees * degrees;
        let q = unit(1.1, 0.35);
        let alpha = 0.83;
        let rq = unit(1.1, 0.35 + alpha);
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        eval_sh(degrees, q, &mut a);
        eval_sh(degrees, rq, &mut b);
        rotate_z(&mut a, degrees, alpha);
        for i in 0..n {
            assert!((a[i] - b[i]).abs() < 1e-13);
        }
    }
}
