//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any of them fails.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use transmission_core::cli::commands::{cmd_probe, FIT_NOISE_FLOOR};
use transmission_core::cli::config::{GridConfig, ProbeSettings, RunConfig};
use transmission_core::cli::validate::{harmonic_battery, jump_defect};
use transmission_core::continuation::*;
use transmission_core::data::*;
use transmission_core::geometry::*;
use transmission_core::holder::{inequality_battery, random_band_limited, HolderConfig};
use transmission_core::poly::{Polynomial, ScalarField};
use transmission_core::potential::*;
use transmission_core::sph::sh_index;
use transmission_core::system::*;

type Outcome = (bool, String);

fn wobbly() -> SurfaceSpec {
    let mut c = vec![0.0; 9];
    c[sh_index(2, 0)] = 0.1;
    c[sh_index(1, -1)] = 0.05;
    c[sh_index(2, 1)] = 0.04;
    SurfaceSpec::StarShaped { radius: 1.0, coefficients: c }
}

fn sphere(order: usize) -> SurfaceQuadrature {
    build_quadrature(&SurfaceSpec::UnitSphere, order).unwrap()
}

fn samples(rule: &SurfaceQuadrature, p: &Polynomial) -> Vec<f64> {
    rule.nodes.iter().map(|x| p.value(*x)).collect()
}

fn harmonic(rule: &SurfaceQuadrature, l: usize, m: i64) -> DVector<f64> {
    DVector::from_iterator(rule.len(), (0..rule.len()).map(|i| rule.basis_row(i)[sh_index(l, m)]))
}

fn directions() -> Vec<Point> {
    [[0.3, 0.5, -0.6], [-0.8, 0.1, 0.2], [0.1, -0.4, 0.9], [0.5, 0.5, 0.5], [0.0, -1.0, 0.1]]
        .into_iter()
        .map(normalize)
        .collect()
}

fn criterion_1() -> Outcome {
    let mut gauss: f64 = 0.0;
    for spec in [SurfaceSpec::UnitSphere, SurfaceSpec::ScaledSphere { radius: 0.3 }, wobbly()] {
        let q = build_quadrature(&spec, 16).unwrap();
        let w = assemble_w(&q).unwrap();
        let r = &w * DVector::from_element(q.len(), 1.0);
        gauss = gauss.max(r.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max));
    }
    let q = sphere(24);
    let w = assemble_w(&q).unwrap();
    let spectral = hypersingular_operator(&q, NormalDerivativeMode::Spectral).unwrap();
    let offset = hypersingular_operator(&q, NormalDerivativeMode::default_offset(&q)).unwrap();
    let (mut eig, mut hs, mut ho) = (0.0f64, 0.0f64, 0.0f64);
    for l in 0..=3usize {
        for m in -(l as i64)..=(l as i64) {
            let y = harmonic(&q, l, m);
            let lam = 1.0 / (2.0 * (2 * l + 1) as f64);
            let mu = (l * (l + 1)) as f64 / (2 * l + 1) as f64;
            eig = eig.max((&w * &y - &y * lam).amax());
            hs = hs.max((&spectral.matrix * &y - &y * mu).amax());
            ho = ho.max((&offset.matrix * &y - &y * mu).amax());
        }
    }
    let mut jump: f64 = 0.0;
    for spec in [SurfaceSpec::UnitSphere, wobbly()] {
        let q = build_quadrature(&spec, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mu = random_band_limited(&q, 5, 1.0, &mut rng);
        jump = jump.max(jump_defect(&q, &mu).unwrap());
    }
    let pass = gauss < 1e-9 && eig < 1e-6 && jump < 1e-5 && ho < 1e-4 && hs < 1e-10;
    (pass, format!("W[1] {gauss:.1e}, W eigen {eig:.1e}, jump {jump:.1e}, hypersingular offset {ho:.1e} spectral {hs:.1e}"))
}

fn criterion_2() -> Outcome {
    let (mut values, mut origin) = (0.0f64, 0.0f64);
    for spec in [SurfaceSpec::UnitSphere, wobbly()] {
        let q = build_quadrature(&spec, 16).unwrap();
        for p in harmonic_battery() {
            let bg = compute_background(&q, &samples(&q, &p)).unwrap();
            for d in directions() {
                let (r, _) = spec.radial(d);
                for f in [0.1, 0.4, 0.7, 0.9] {
                    let x = scale(f * r, d);
                    values = values.max((bg.value(x) - p.value(x)).abs());
                }
            }
            let o = [0.0; 3];
            let (g, h) = (p.gradient(o), p.hessian(o));
            for i in 0..3 {
                origin = origin.max((bg.gradient_at_origin[i] - g[i]).abs());
                for j in 0..3 {
                    origin = origin.max((bg.hessian_at_origin[i][j] - h[i][j]).abs());
                }
            }
        }
    }
    (values < 1e-7 && origin < 1e-6, format!("interior values {values:.1e}, origin derivatives {origin:.1e}"))
}

fn criterion_3() -> Outcome {
    let (_, fam) = builtin_family("polynomial").unwrap();
    let data = fam.build(1.0).unwrap();
    let q = sphere(10);
    let pts = q.surface_points();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut two_sided: f64 = 0.0;
    for _ in 0..200 {
        let t = &pts[rng.gen_range(0..pts.len())];
        let eps = rng.gen_range(0.0..0.3);
        let a = data.zeta_i() + rng.gen_range(-1.0..1.0);
        let b = rng.gen_range(-2.0..2.0);
        let lhs = data.f(eps, t, a + eps * b);
        let rhs = data.f(0.0, t, a)
            + eps * data.f_eps(0.0, t, a)
            + eps * b * data.f_zeta(0.0, t, a)
            + eps * eps * taylor_remainder_f(data.as_ref(), eps, t, a, b);
        two_sided = two_sided.max((lhs - rhs).abs());
    }
    let outer = sphere(12);
    let p = &harmonic_battery()[3];
    let bg = compute_background(&outer, &samples(&outer, p)).unwrap();
    let mut dual: f64 = 0.0;
    for t in pts.iter().step_by(7) {
        let a = taylor_remainder_u(&bg, 1e-3, t.x, 0.0);
        let b = taylor_remainder_u_hessian(&bg, 1e-3, t.x);
        dual = dual.max((a - b).abs());
    }
    (two_sided < 1e-12 && dual < 1e-8, format!("F~ identity {two_sided:.1e}, u~ paths at eps 1e-3 {dual:.1e}"))
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

fn criterion_4() -> Outcome {
    let q = sphere(8);
    let ops = SharedOperators::new(&q, &q, None).unwrap();
    let (fo, fam) = builtin_family("polynomial").unwrap();
    let bg = ops.background(&samples(&q, &fo)).unwrap();
    let data = fam.build(bg.value_at_origin).unwrap();
    let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
    let grid = EpsilonWindow::geometric(&SurfaceSpec::UnitSphere, &SurfaceSpec::UnitSphere, 1e-3, 0.2, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut identity: f64 = 0.0;
    for k in 0..50 {
        let eps = grid.grid[k % grid.grid.len()];
        let cache = OperatorCache::new(eps, problem).unwrap();
        let s = random_state(&ops, &mut rng);
        let m = cache.eval_m(&s).unwrap().to_vector();
        let ns = cache.apply_n(&s) - cache.eval_s(&s.psi_i).unwrap();
        identity = identity.max((m - ns).amax());
    }
    let cache = OperatorCache::new(0.0, problem).unwrap();
    let x0 = cache.solve_limit().unwrap();
    let base = x0.to_vector();
    let h = 1e-6;
    let mut jac: f64 = 0.0;
    for c in 0..base.len() {
        let (mut a, mut b) = (base.clone(), base.clone());
        a[c] += h;
        b[c] -= h;
        let ma = cache.eval_m(&UnknownState::from_slice(a.as_slice(), &ops)).unwrap().to_vector();
        let mb = cache.eval_m(&UnknownState::from_slice(b.as_slice(), &ops)).unwrap().to_vector();
        jac = jac.max(((ma - mb) / (2.0 * h) - cache.n_matrix().column(c)).amax());
    }
    (identity < 1e-10 && jac < 1e-6, format!("M - (N x - S) {identity:.1e} over 50 states, N(0) vs FD Jacobian {jac:.1e}"))
}

fn field_error(fields: &dyn TransmissionFields, exact: &ExactFields, eps: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for d in directions() {
        for r in [0.3, 0.6, 0.9] {
            let x = scale(r * eps, d);
            worst = worst.max((fields.inner(x).unwrap().0 - exact.inner.value(x)).abs());
        }
        for r in [1.5 * eps, 0.3, 0.6, 0.9] {
            let x = scale(r, d);
            worst = worst.max((fields.outer(x).unwrap().0 - exact.outer.value(x)).abs());
        }
    }
    worst
}

fn criterion_5() -> Outcome {
    let q = sphere(10);
    let ops = SharedOperators::new(&q, &q, None).unwrap();
    let (fo, fam) = builtin_family("affine").unwrap();
    let bg = ops.background(&samples(&q, &fo)).unwrap();
    let data = fam.build(bg.value_at_origin).unwrap();
    let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
    let exact = ExactFields { outer: Polynomial::coordinate(0), inner: Polynomial::coordinate(0) };
    let limit = OperatorCache::new(0.0, problem).unwrap().solve_limit().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut err, mut one_step, mut second) = (0.0f64, 0.0f64, 0.0f64);
    for eps in [0.05, 0.1, 0.2] {
        let cache = OperatorCache::new(eps, problem).unwrap();
        let (sol, _) = cache.newton_solve(&limit, &SolverOptions::default()).unwrap();
        err = err.max(field_error(&reconstruct_fields(eps, &sol, problem).unwrap(), &exact, eps));
        let p1 = cache.picard_step(&random_state(&ops, &mut rng)).unwrap();
        one_step = one_step.max(cache.eval_m(&p1).unwrap().magnitude);
        second = second.max(cache.picard_step(&p1).unwrap().distance(&p1, &ops));
    }
    let pass = err < 1e-6 && one_step < 1e-10 && second < 1e-12;
    (pass, format!("field error {err:.1e}, residual after one Picard step {one_step:.1e}, second step moves {second:.1e}"))
}

fn criterion_6() -> Outcome {
    let q = sphere(10);
    let ops = SharedOperators::new(&q, &q, None).unwrap();
    let (fo, fam) = builtin_family("manufactured").unwrap();
    let f = samples(&q, &fo);
    let bg = ops.background(&f).unwrap();
    let data = fam.build(bg.value_at_origin).unwrap();
    let exact = fam.exact_fields().unwrap();
    let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
    let grid = EpsilonWindow::geometric(&SurfaceSpec::UnitSphere, &SurfaceSpec::UnitSphere, 1e-2, 0.2, 6).unwrap();
    let rec = continue_family(problem, &grid, &ContinuationOptions::default()).unwrap();
    let (mut err, mut res, mut pde) = (0.0f64, 0.0f64, 0.0f64);
    let mut reports: Vec<Vec<f64>> = Vec::new();
    for e in &rec.entries {
        let fields = reconstruct_fields(e.epsilon, &e.state, problem).unwrap();
        err = err.max(field_error(&fields, &exact, e.epsilon));
        res = res.max(*e.report.residuals.last().unwrap());
        let r = residual_check_pde(e.epsilon, &fields, problem.data, &q, &q, &f, &PdeCheckOptions::default()).unwrap();
        pde = pde.max(r.max());
        reports.push(e.report.residuals.clone());
    }
    // cold start from the limit at eps = 0.1 for a longer residual sequence
    let limit = OperatorCache::new(0.0, problem).unwrap().solve_limit().unwrap();
    let (_, cold) = OperatorCache::new(0.1, problem).unwrap().newton_solve(&limit, &SolverOptions::default()).unwrap();
    reports.push(cold.residuals);
    let mut orders = Vec::new();
    for r in &reports {
        for w in r.windows(2) {
            if w[0] < 1e-2 && w[1] > 1e-13 {
                orders.push(w[1].ln() / w[0].ln());
            }
        }
    }
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = rec.truncated.is_none() && err < 1e-6 && res < 1e-10 && pde < 1e-6 && !orders.is_empty() && min_order >= 1.8;
    (
        pass,
        format!("field error {err:.1e}, final residual {res:.1e}, pde {pde:.1e}, Newton order >= {min_order:.2} over {} steps", orders.len()),
    )
}

struct Family {
    q: SurfaceQuadrature,
    name: &'static str,
}

impl Family {
    fn new(name: &'static str) -> Self {
        Family { q: sphere(10), name }
    }
}

fn default_grid() -> EpsilonWindow {
    EpsilonWindow::geometric(&SurfaceSpec::UnitSphere, &SurfaceSpec::UnitSphere, 1e-3, 0.2, 12).unwrap()
}

/// Fixture floor for the certified radius, pinned from the first run at order 10, seed 0.
const DELTA_HAT_FLOOR: f64 = 10.0;

fn criteria_7_to_9() -> (Outcome, Outcome, Outcome) {
    let mut c7 = (true, String::new());
    let mut c8 = (true, String::new());
    let mut c9 = (true, String::new());
    let mut total = 0;
    let mut distinct = 0;
    for fam in [Family::new("polynomial"), Family::new("manufactured")] {
        let ops = SharedOperators::new(&fam.q, &fam.q, None).unwrap();
        let (fo, cfg) = builtin_family(fam.name).unwrap();
        let bg = ops.background(&samples(&fam.q, &fo)).unwrap();
        let data = cfg.build(bg.value_at_origin).unwrap();
        let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
        let mut rec = continue_family(problem, &default_grid(), &ContinuationOptions::default()).unwrap();
        if fam.name == "polynomial" {
            let slope = limit_slope(&rec).unwrap_or(f64::NAN);
            let fit = fit_analytic(&rec, &ops, 8).unwrap();
            let zd = FitReport::decays(&fit.zeta_residuals, 10.0, FIT_NOISE_FLOOR);
            let md = FitReport::decays(&fit.moment_residuals, 10.0, FIT_NOISE_FLOOR);
            let ratios = |r: &[f64]| r.windows(2).filter(|w| w[1] > FIT_NOISE_FLOOR).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
            c7.0 = (slope - 1.0).abs() <= 0.1 && zd && md && rec.truncated.is_none();
            c7.1 = format!(
                "slope {slope:.3}, smallest fit drop per degree zeta {:.0}x moments {:.0}x",
                ratios(&fit.zeta_residuals),
                ratios(&fit.moment_residuals)
            );
        }
        let opts = ProbeOptions::default();
        let certs = certify_family(problem, &mut rec, &opts).unwrap();
        let mut ok = rec.truncated.is_none();
        let mut est: f64 = 0.0;
        for c in &certs {
            total += c.probe.records.len();
            distinct += c.probe.distinct_fixed_points;
            ok &= c.delta_hat >= DELTA_HAT_FLOOR;
            ok &= c.probe.records.iter().filter(|r| r.delta <= c.delta_hat).all(|r| {
                r.outcome == ProbeOutcome::Returned && r.final_distance < 1e-8
            });
            if c.lipschitz > LIPSCHITZ_NOISE {
                est = est.max((c.lipschitz - c.lipschitz_derivative).abs() / c.lipschitz.max(c.lipschitz_derivative));
            }
        }
        let threshold = contraction_threshold(&certs);
        let slope = lipschitz_slope(&certs).unwrap_or(f64::NAN);
        let smallest = certs.first().map_or(f64::NAN, |c| c.lipschitz);
        let largest = certs.last().map_or(f64::NAN, |c| c.lipschitz);
        ok &= certs.iter().filter(|c| c.epsilon <= threshold).all(|c| c.lipschitz < 1.0);
        ok &= threshold > 0.0 && slope > 0.0 && smallest < largest && est <= 0.2;
        c8.0 &= ok;
        c8.1 += &format!(
            "{}: L {smallest:.1e}..{largest:.1e} slope {slope:.2}, L<1 up to {threshold:.3}, estimators within {:.0}%, delta_hat >= {DELTA_HAT_FLOOR}; ",
            fam.name,
            100.0 * est
        );
        let sched = family_uniqueness_check(problem, &rec, &ScheduleOptions::default(), &opts).unwrap();
        let merged = sched.entries.iter().filter(|e| e.epsilon <= sched.eps_star).all(|e| e.returned_fraction == 1.0);
        let control: Vec<String> = sched.entries.iter().map(|e| format!("{:.2}", e.control_returned_fraction)).collect();
        c9.0 &= merged && sched.eps_star >= default_grid().grid[0];
        c9.1 += &format!("{}: eps_* {:.3}, control returns [{}]; ", fam.name, sched.eps_star, control.join(" "));
    }
    c8.0 &= distinct == 0 && total >= 500;
    c8.1 = format!("{total} probes, {distinct} distinct fixed points; {}", c8.1.trim_end_matches("; "));
    c9.1 = c9.1.trim_end_matches("; ").to_string();
    (c7, c8, c9)
}

fn criterion_10() -> Outcome {
    let q = sphere(8);
    let r = inequality_battery(&q, &HolderConfig::default(), 100, 4, 0).unwrap();
    let pass = r.product_violations == 0 && r.c0_hat <= 1.0 && r.c1_hat <= 1.0;
    (
        pass,
        format!(
            "{} draws: product violations {}, worst product ratio {:.3}, composition constants {:.3} / {:.4}",
            r.draws, r.product_violations, r.product_ratio, r.c0_hat, r.c1_hat
        ),
    )
}

fn criterion_11() -> Outcome {
    let cfg = RunConfig {
        order: 8,
        epsilon_grid: GridConfig::List { values: vec![0.01, 0.05, 0.1] },
        probe: ProbeSettings { ladder: vec![0.1, 1.0, 10.0], samples: 3, ..ProbeSettings::default() },
        ..RunConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        cmd_probe(&cfg, 42, &out).unwrap();
        csv.push(std::fs::read(out.join("probe.csv")).unwrap());
    }
    (csv[0] == csv[1] && !csv[0].is_empty(), format!("two probe runs with seed 42: {} CSV bytes, identical {}", csv[0].len(), csv[0] == csv[1]))
}

fn main() {
    let mut all = true;
    let mut report = |k: usize, start: Instant, (pass, detail): Outcome| {
        all &= pass;
        println!(
            "criterion {k:>2}: {} ({:.1} s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    let t = Instant::now();
    report(1, t, criterion_1());
    let t = Instant::now();
    report(2, t, criterion_2());
    let t = Instant::now();
    report(3, t, criterion_3());
    let t = Instant::now();
    report(4, t, criterion_4());
    let t = Instant::now();
    report(5, t, criterion_5());
    let t = Instant::now();
    report(6, t, criterion_6());
    let t = Instant::now();
    let (c7, c8, c9) = criteria_7_to_9();
    report(7, t, c7);
    report(8, t, c8);
    report(9, t, c9);
    let t = Instant::now();
    report(10, t, criterion_10());
    let t = Instant::now();
    report(11, t, criterion_11());
    if !all {
        std::process::exit(1);
    }
}
