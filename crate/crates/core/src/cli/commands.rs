//! `solve`, `continue` and `probe`.

use std::path::Path;

use serde::Serialize;

use crate::cli::config::RunConfig;
use crate::cli::output::{write_json, Csv, Header};
use crate::continuation::{
    certify_family, continue_family, contraction_threshold, family_uniqueness_check, fit_analytic, limit_slope,
    lipschitz_slope, ContinuationOptions, ContractionCertificate, FamilyRecord, FamilyUniquenessReport, FitReport,
    ProbeOutcome,
};
use crate::data::{AdmissibilityReport, AdmissibilityTolerances, ExactFields, FamilyConfig};
use crate::error::{Error, Result};
use crate::geometry::{build_quadrature, normalize, scale, EpsilonWindow, Point, SurfaceQuadrature};
use crate::poly::{Polynomial, ScalarField};
use crate::system::{
    reconstruct_fields, residual_check_pde, PdeResidualReport, Problem, SharedOperators, SolveReport,
    TransmissionFields,
};

/// Fit residuals below this are treated as noise.
pub const FIT_NOISE_FLOOR: f64 = 1e-20;

struct Context {
    f_samples: Vec<f64>,
    exact: Option<ExactFields>,
}

/// Exact fields when the family has them: manufactured data, or `F = zeta`,
/// `G = 0`, where `u^o = u^i = f^o` solves the problem.
pub fn exact_solution(f_outer: &Polynomial, family: &FamilyConfig) -> Option<ExactFields> {
    match family {
        FamilyConfig::Affine { a, b, c, .. } if a.unwrap_or(0.0) == 0.0 && *b == 1.0 && *c == 0.0 => {
            Some(ExactFields { outer: f_outer.clone(), inner: f_outer.clone() })
        }
        _ => family.exact_fields(),
    }
}

fn with_problem<R>(
    cfg: &RunConfig,
    body: impl FnOnce(Problem, &Context, &AdmissibilityReport) -> Result<R>,
) -> Result<R> {
    let (f_outer, family) = cfg.problem()?;
    let outer = build_quadrature(&cfg.outer, cfg.order)?;
    let inner = build_quadrature(&cfg.inner, cfg.order)?;
    let ops = SharedOperators::new(&outer, &inner, cfg.normal_derivative)?;
    let f_samples: Vec<f64> = outer.nodes.iter().map(|x| f_outer.value(*x)).collect();
    let bg = ops.background(&f_samples)?;
    let data = family.build(bg.value_at_origin)?;
    let problem = Problem { ops: &ops, background: &bg, data: data.as_ref() };
    let adm = problem.admissibility(&AdmissibilityTolerances::default());
    if !adm.passed {
        return Err(Error::Data(format!("family is not admissible: {}", adm.failures.join("; "))));
    }
    let exact = exact_solution(&f_outer, &family);
    body(problem, &Context { f_samples, exact }, &adm)
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldSample {
    pub location: &'static str,
    pub region: &'static str,
    pub x: Point,
    pub value: f64,
    pub exact: Option<f64>,
}

fn sample_fields(
    fields: &dyn TransmissionFields,
    eps: f64,
    outer: &SurfaceQuadrature,
    inner: &SurfaceQuadrature,
    exact: Option<&ExactFields>,
) -> Result<Vec<FieldSample>> {
    let mut out = Vec::new();
    let mut push = |location: &'static str, x: Point| -> Result<()> {
        let in_inclusion = inner.spec.contains(scale(1.0 / eps, x));
        let (region, value, ex) = if in_inclusion {
            ("inner", fields.inner(x)?.0, exact.map(|e| e.inner.value(x)))
        } else {
            ("outer", fields.outer(x)?.0, exact.map(|e| e.outer.value(x)))
        };
        out.push(FieldSample { location, region, x, value, exact: ex });
        Ok(())
    };
    let d = normalize([1.0, 0.5, 0.25]);
    let (r, _) = outer.spec.radial(d);
    for k in 0..=40 {
        let s = -0.95 + 1.9 * k as f64 / 40.0;
        push("line", scale(s * r, d))?;
    }
    let stride = |n: usize| (n / 12).max(1);
    for i in (0..outer.len()).step_by(stride(outer.len())) {
        push("outer-interface", scale(0.99, outer.nodes[i]))?;
    }
    for i in (0..inner.len()).step_by(stride(inner.len())) {
        push("inclusion-interface", scale(1.01 * eps, inner.nodes[i]))?;
        push("inclusion-interface", scale(0.99 * eps, inner.nodes[i]))?;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SolvePayload {
    pub epsilon: f64,
    pub iterations: Vec<f64>,
    pub zeta: f64,
    pub report: SolveReport,
    pub field_samples: usize,
    pub max_field_error: Option<f64>,
    pub pde_residuals: PdeResidualReport,
    pub condition_numbers: Conditions,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Conditions {
    pub n: f64,
    pub j: f64,
}

pub fn cmd_solve(cfg: &RunConfig, epsilon: f64, out: &Path) -> Result<SolvePayload> {
    EpsilonWindow::new(&cfg.outer, &cfg.inner, vec![epsilon])?;
    let mut path: Vec<f64> = cfg.window()?.grid.into_iter().filter(|e| *e < epsilon).collect();
    path.push(epsilon);
    let window = EpsilonWindow::new(&cfg.outer, &cfg.inner, path)?;
    let opts = ContinuationOptions { solver: cfg.tolerances.solver, holder: cfg.holder() };
    let (payload, csv) = with_problem(cfg, |problem, ctx, _| {
        let record = continue_family(problem, &window, &opts)?;
        if let Some(msg) = &record.truncated {
            return Err(Error::Data(msg.clone()));
        }
        let entry = record.entries.last().expect("non-empty path");
        let fields = reconstruct_fields(epsilon, &entry.state, problem)?;
        let pde = residual_check_pde(
            epsilon,
            &fields,
            problem.data,
            problem.ops.outer,
            problem.ops.inner,
            &ctx.f_samples,
            &cfg.tolerances.pde_check,
        )?;
        let samples = sample_fields(&fields, epsilon, problem.ops.outer, problem.ops.inner, ctx.exact.as_ref())?;
        let max_field_error = ctx.exact.as_ref().map(|_| {
            samples.iter().map(|s| (s.value - s.exact.unwrap_or(s.value)).abs()).fold(0.0, f64::max)
        });
        let mut failures = Vec::new();
        let last = *entry.report.residuals.last().unwrap_or(&f64::INFINITY);
        if !(last <= cfg.tolerances.solver.tol) {
            failures.push(format!("final residual {last:.3e} above {:.3e}", cfg.tolerances.solver.tol));
        }
        if !(pde.max() <= cfg.tolerances.pde) {
            failures.push(format!("pde residual {:.3e} above {:.3e}", pde.max(), cfg.tolerances.pde));
        }
        if let Some(e) = max_field_error {
            if !(e <= cfg.tolerances.field) {
                failures.push(format!("field error {e:.3e} above {:.3e}", cfg.tolerances.field));
            }
        }
        let mut csv = Csv::new(&["location", "region", "x1", "x2", "x3", "value", "exact", "error"]);
        for s in &samples {
            csv.row(&[
                s.location.into(),
                s.region.into(),
                s.x[0].into(),
                s.x[1].into(),
                s.x[2].into(),
                s.value.into(),
                s.exact.into(),
                s.exact.map(|e| (s.value - e).abs()).into(),
            ]);
        }
        let payload = SolvePayload {
            epsilon,
            iterations: entry.report.residuals.clone(),
            zeta: entry.state.zeta,
            report: entry.report.clone(),
            field_samples: samples.len(),
            max_field_error,
            pde_residuals: pde,
            condition_numbers: Conditions { n: entry.report.condition_n, j: problem.ops.j_condition() },
            failures,
        };
        Ok((payload, csv))
    })?;
    std::fs::create_dir_all(out)?;
    write_json(&out.join("report.json"), &Header::new("solve"), &payload)?;
    csv.write(&out.join("fields.csv"))?;
    Ok(payload)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuePayload {
    pub family: FamilyRecord,
    pub limit_slope: Option<f64>,
    pub fit: Option<FitReport>,
    pub fit_zeta_decays: Option<bool>,
    pub fit_moments_decay: Option<bool>,
    pub failures: Vec<String>,
}

fn family_failures(record: &FamilyRecord, cfg: &RunConfig) -> Vec<String> {
    let mut failures = Vec::new();
    if let Some(msg) = &record.truncated {
        failures.push(msg.clone());
    }
    for e in &record.entries {
        let last = *e.report.residuals.last().unwrap_or(&f64::INFINITY);
        if !(last <= cfg.tolerances.solver.tol) {
            failures.push(format!("residual {last:.3e} at epsilon {}", e.epsilon));
        }
    }
    failures
}

fn family_csv(record: &FamilyRecord, returned: Option<&[f64]>) -> Csv {
    let mut csv = Csv::new(&["epsilon", "zeta", "residual", "L", "delta_hat", "returned_fraction"]);
    for (k, e) in record.entries.iter().enumerate() {
        csv.row(&[
            e.epsilon.into(),
            e.state.zeta.into(),
            e.report.residuals.last().copied().into(),
            e.lipschitz.into(),
            e.delta_hat.into(),
            returned.map(|r| r[k]).into(),
        ]);
    }
    csv
}

pub fn cmd_continue(cfg: &RunConfig, out: &Path) -> Result<ContinuePayload> {
    let window = cfg.window()?;
    let opts = ContinuationOptions { solver: cfg.tolerances.solver, holder: cfg.holder() };
    let payload = with_problem(cfg, |problem, _, _| {
        let record = continue_family(problem, &window, &opts)?;
        let degree = cfg.fit_degree.min((record.entries.len() + 1).saturating_sub(2));
        let fit = if record.entries.len() >= 2 { Some(fit_analytic(&record, problem.ops, degree)?) } else { None };
        let mut failures = family_failures(&record, cfg);
        if record.max_iteration_jump() > 2 {
            failures.push(format!("Newton iteration count jumped by {}", record.max_iteration_jump()));
        }
        Ok(ContinuePayload {
            limit_slope: limit_slope(&record),
            fit_zeta_decays: fit.as_ref().map(|f| FitReport::decays(&f.zeta_residuals, 10.0, FIT_NOISE_FLOOR)),
            fit_moments_decay: fit.as_ref().map(|f| FitReport::decays(&f.moment_residuals, 10.0, FIT_NOISE_FLOOR)),
            fit,
            family: record,
            failures,
        })
    })?;
    std::fs::create_dir_all(out)?;
    write_json(&out.join("family.json"), &Header::new("continue"), &payload)?;
    family_csv(&payload.family, None).write(&out.join("family.csv"))?;
    Ok(payload)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbePayload {
    pub seed: u64,
    pub family: FamilyRecord,
    pub certificates: Vec<ContractionCertificate>,
    pub lipschitz_slope: Option<f64>,
    pub contraction_threshold: f64,
    pub probes: usize,
    pub distinct_fixed_points: usize,
    pub returned_fraction: Vec<f64>,
    pub schedule: FamilyUniquenessReport,
    pub failures: Vec<String>,
}

pub fn cmd_probe(cfg: &RunConfig, seed: u64, out: &Path) -> Result<ProbePayload> {
    let window = cfg.window()?;
    let opts = ContinuationOptions { solver: cfg.tolerances.solver, holder: cfg.holder() };
    let probe = cfg.probe_options(seed);
    let payload = with_problem(cfg, |problem, _, _| {
        let mut record = continue_family(problem, &window, &opts)?;
        let certificates = certify_family(problem, &mut record, &probe)?;
        let schedule = family_uniqueness_check(problem, &record, &cfg.probe.schedule, &probe)?;
        let mut failures = family_failures(&record, cfg);
        let mut probes = 0;
        let mut distinct = 0;
        let mut returned_fraction = Vec::new();
        for c in &certificates {
            let recs = &c.probe.records;
            probes += recs.len();
            distinct += c.probe.distinct_fixed_points;
            let back = recs.iter().filter(|r| r.outcome == ProbeOutcome::Returned).count();
            returned_fraction.push(back as f64 / recs.len().max(1) as f64);
            let inside = recs.iter().filter(|r| r.delta <= c.delta_hat);
            if inside.clone().any(|r| r.outcome != ProbeOutcome::Returned) {
                failures.push(format!("a probe inside delta_hat did not return at epsilon {}", c.epsilon));
            }
        }
        if distinct > 0 {
            failures.push(format!("{distinct} probes ended at a distinct fixed point"));
        }
        Ok(ProbePayload {
            seed,
            lipschitz_slope: lipschitz_slope(&certificates),
            contraction_threshold: contraction_threshold(&certificates),
            probes,
            distinct_fixed_points: distinct,
            returned_fraction,
            certificates,
            schedule,
            family: record,
            failures,
        })
    })?;
    std::fs::create_dir_all(out)?;
    write_json(&out.join("probe.json"), &Header::new("probe"), &payload)?;
    family_csv(&payload.family, Some(&payload.returned_fraction)).write(&out.join("probe.csv"))?;
    Ok(payload)
}
