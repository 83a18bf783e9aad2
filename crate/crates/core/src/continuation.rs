//! Solution families over an `eps` grid, their smoothness in `eps`, and
//! sampled contraction and basin experiments around each family member.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::EpsilonWindow;
use crate::holder::{random_band_limited, HolderConfig, SurfaceNorms};
use crate::system::{OperatorCache, Problem, SharedOperators, SolveReport, SolverOptions, UnknownState};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    pub solver: SolverOptions,
    pub holder: HolderConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub epsilon: f64,
    pub state: UnknownState,
    pub report: SolveReport,
    /// Weighted l2 distance to the limit state.
    pub distance_to_limit: f64,
    /// Discrete C^{1,alpha} norm of `psi_i - psi_i(0)`.
    pub psi_distance: f64,
    /// Same for the inner trace `(1/2 I + W)(psi_i - psi_i(0))`.
    pub trace_distance: f64,
    pub lipschitz: Option<f64>,
    pub delta_hat: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub limit: UnknownState,
    pub entries: Vec<FamilyEntry>,
    /// Set when Newton failed at some `eps`; later grid points are dropped.
    pub truncated: Option<String>,
}

impl FamilyRecord {
    /// Largest change in Newton iteration count between neighbouring entries.
    pub fn max_iteration_jump(&self) -> i64 {
        self.entries
            .windows(2)
            .map(|w| w[1].report.iterations as i64 - w[0].report.iterations as i64)
            .max()
            .unwrap_or(0)
    }
}

/// Solves the limit problem and continues along the grid with warm-started Newton.
pub fn continue_family(problem: Problem, grid: &EpsilonWindow, opts: &ContinuationOptions) -> Result<FamilyRecord> {
    let ops = problem.ops;
    let norms = SurfaceNorms::new(ops.inner, &opts.holder)?;
    let limit = OperatorCache::new(0.0, problem)?.solve_limit()?;
    let mut entries: Vec<FamilyEntry> = Vec::new();
    let mut truncated = None;
    let mut current = limit.clone();
    for &eps in &grid.grid {
        let solved = OperatorCache::new(eps, problem).and_then(|c| c.newton_solve(&current, &opts.solver));
        match solved {
            Ok((state, report)) => {
                let dpsi: Vec<f64> = state.psi_i.iter().zip(&limit.psi_i).map(|(a, b)| a - b).collect();
                let trace = (&ops.plus_inner * DVector::from_column_slice(&dpsi)).as_slice().to_vec();
                entries.push(FamilyEntry {
                    epsilon: eps,
                    distance_to_limit: state.distance(&limit, ops),
                    psi_distance: norms.c1alpha(&dpsi)?,
                    trace_distance: norms.c1alpha(&trace)?,
                    state: state.clone(),
                    report,
                    lipschitz: None,
                    delta_hat: None,
                });
                current = state;
            }
            Err(e) => {
                truncated = Some(format!("continuation stopped at epsilon = {eps}: {e}"));
                break;
            }
        }
    }
    Ok(FamilyRecord { limit, entries, truncated })
}

/// Least-squares slope of `log distance_to_limit` against `log eps`.
pub fn limit_slope(record: &FamilyRecord) -> Option<f64> {
    let pts: Vec<(f64, f64)> = record
        .entries
        .iter()
        .filter(|e| e.distance_to_limit > 0.0)
        .map(|e| (e.epsilon.ln(), e.distance_to_limit.ln()))
        .collect();
    log_slope(&pts)
}

fn log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        Some(sxy / sxx)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub degrees: Vec<usize>,
    /// Mean squared residual of the fit of `zeta(eps)` per degree.
    pub zeta_residuals: Vec<f64>,
    /// Largest mean squared residual over the low-order moments of `psi_i`.
    pub moment_residuals: Vec<f64>,
    /// Highest degree reached before the Vandermonde matrix became ill-conditioned.
    pub degree_cap: usize,
}

impl FitReport {
    /// Whether each residual drops by `factor` per degree until it is below `floor`.
    pub fn decays(residuals: &[f64], factor: f64, floor: f64) -> bool {
        residuals.windows(2).all(|w| w[0] <= floor || w[1] <= floor || w[0] >= factor * w[1])
    }
}

fn moments(state: &UnknownState, ops: &SharedOperators) -> [f64; 4] {
    let q = ops.inner;
    let mut m = [0.0; 4];
    for j in 0..q.len() {
        let w = q.weights[j] * state.psi_i[j];
        m[0] += w;
        for k in 0..3 {
            m[k + 1] += w * q.nodes[j][k];
        }
    }
    m
}

/// Least-squares polynomial fits in `eps` of `zeta` and of the moments
/// `int psi`, `int t_k psi` over the limit state and the family.
pub fn fit_analytic(record: &FamilyRecord, ops: &SharedOperators, max_degree: usize) -> Result<FitReport> {
    let mut eps = vec![0.0];
    let mut zeta = vec![record.limit.zeta];
    let mut mom = vec![moments(&record.limit, ops)];
    for e in &record.entries {
        eps.push(e.epsilon);
        zeta.push(e.state.zeta);
        mom.push(moments(&e.state, ops));
    }
    let n = eps.len();
    if n < max_degree + 2 {
        return Err(Error::Config(format!("{n} samples are too few for a degree {max_degree} fit")));
    }
    let scale = eps.iter().fold(0.0f64, |a, b| a.max(*b)).max(f64::MIN_POSITIVE);
    let mut report = FitReport { degrees: Vec::new(), zeta_residuals: Vec::new(), moment_residuals: Vec::new(), degree_cap: max_degree };
    for d in 0..=max_degree {
        let v = DMatrix::from_fn(n, d + 1, |i, k| (eps[i] / scale).powi(k as i32));
        let svd = v.clone().svd(true, true);
        let (smax, smin) = svd.singular_values.iter().fold((0.0f64, f64::INFINITY), |(a, b), s| (a.max(*s), b.min(*s)));
        if smin < 1e-12 * smax {
            report.degree_cap = d.saturating_sub(1);
            break;
        }
        let mse = |y: &[f64]| -> Result<f64> {
            let b = DVector::from_column_slice(y);
            let c = svd.solve(&b, 0.0).map_err(|e| Error::Solver { msg: e.to_string(), condition: smax / smin })?;
            let r = &v * c - b;
            Ok(r.norm_squared() / n as f64)
        };
        report.degrees.push(d);
        report.zeta_residuals.push(mse(&zeta)?);
        let mut worst: f64 = 0.0;
        for k in 0..4 {
            let y: Vec<f64> = mom.iter().map(|m| m[k]).collect();
            worst = worst.max(mse(&y)?);
        }
        report.moment_residuals.push(worst);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    /// Perturbation sizes `delta`; the discrete C^{1,alpha} size is `eps * delta`.
    pub ladder: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub merge_tol: f64,
    pub max_picard: usize,
    /// Newton cross-checks per ladder rung.
    pub newton_checks: usize,
    pub holder: HolderConfig,
    pub solver: SolverOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            ladder: vec![0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0],
            samples: 6,
            seed: 0,
            merge_tol: 1e-8,
            max_picard: 200,
            newton_checks: 1,
            holder: HolderConfig::default(),
            solver: SolverOptions::default(),
        }
    }
}

/// Residual above which an iteration is declared divergent.
const DIVERGENCE: f64 = 1e3;
/// Residual below which a Picard limit counts as a fixed point.
const FIXED_POINT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeOutcome {
    Returned,
    Diverged,
    EscapedToDistinctFixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Only `psi_i` is perturbed.
    InnerDensity,
    /// All four components are perturbed.
    AllComponents,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub delta: f64,
    pub sample: usize,
    pub regime: Regime,
    pub outcome: ProbeOutcome,
    pub steps: usize,
    pub final_distance: f64,
    pub final_residual: f64,
    pub newton: Option<ProbeOutcome>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderSummary {
    pub delta: f64,
    pub radius: f64,
    pub returned_inner: f64,
    pub returned_all: f64,
    /// Largest sampled secant ratio of the Picard map in `psi_i`.
    pub lipschitz: f64,
    /// Largest sampled directional derivative norm at the pair midpoints.
    pub lipschitz_derivative: f64,
    /// Largest pairwise distance between returned final states.
    pub merged_spread: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasinProbeResult {
    pub epsilon: f64,
    pub ladder: Vec<LadderSummary>,
    pub records: Vec<ProbeRecord>,
    pub distinct_fixed_points: usize,
    /// Largest `delta` up to which every inner-density probe returned.
    pub delta_hat: f64,
}

fn probe_seed(seed: u64, parts: [u64; 3]) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for p in parts {
        h = (h ^ p).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

fn psi_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, w)| w * a * a).sum::<f64>().sqrt()
}

/// Band-limited perturbation of discrete C^{1,alpha} size `size`.
fn perturbation(norms: &SurfaceNorms, size: f64, rng: &mut ChaCha8Rng, zero_mean: bool) -> Result<Vec<f64>> {
    let rule = norms.rule();
    let mut v = random_band_limited(rule, (rule.order / 2).max(1), 1.0, rng);
    if zero_mean {
        let mean = rule.integrate(&v) / rule.area();
        v.iter_mut().for_each(|x| *x -= mean);
    }
    let n = norms.c1alpha(&v)?;
    Ok(v.into_iter().map(|x| x * size / n).collect())
}

struct Run {
    outcome: ProbeOutcome,
    steps: usize,
    distance: f64,
    residual: f64,
    state: UnknownState,
}

fn run_picard(cache: &OperatorCache, start: UnknownState, target: &UnknownState, opts: &ProbeOptions) -> Run {
    let ops = cache.ops();
    let mut x = start;
    let mut steps = 0;
    let mut settled = false;
    while steps < opts.max_picard {
        steps += 1;
        let next = match cache.picard_step(&x) {
            Ok(n) => n,
            Err(_) => break,
        };
        let step = next.distance(&x, ops);
        x = next;
        if !step.is_finite() || step > DIVERGENCE {
            break;
        }
        if step <= 1e-14 * (1.0 + x.norm(ops)) {
            settled = true;
            break;
        }
    }
    let residual = cache.eval_m(&x).map(|m| m.magnitude).unwrap_or(f64::INFINITY);
    let distance = x.distance(target, ops);
    let outcome = classify(distance, residual, settled || residual < FIXED_POINT_TOL, opts);
    Run { outcome, steps, distance, residual, state: x }
}

fn classify(distance: f64, residual: f64, settled: bool, opts: &ProbeOptions) -> ProbeOutcome {
    if distance < opts.merge_tol && residual < FIXED_POINT_TOL {
        ProbeOutcome::Returned
    } else if settled && residual < FIXED_POINT_TOL && distance.is_finite() {
        ProbeOutcome::EscapedToDistinctFixedPoint
    } else {
        ProbeOutcome::Diverged
    }
}

/// The `psi_i` part of the Picard map.
fn picard_psi(cache: &OperatorCache, psi: &[f64]) -> Result<Vec<f64>> {
    Ok(cache.solve_n(&cache.eval_s(psi)?)?.psi_i)
}

fn lipschitz_pair(cache: &OperatorCache, a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let w = &cache.ops().inner.weights;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let dn = psi_norm(&d, w);
    let pa = picard_psi(cache, a)?;
    let pb = picard_psi(cache, b)?;
    let diff: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
    let secant = psi_norm(&diff, w) / dn;
    let h = 0.05;
    let up: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y) + 0.5 * h * (x - y)).collect();
    let dn_: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y) - 0.5 * h * (x - y)).collect();
    let pu = picard_psi(cache, &up)?;
    let pd = picard_psi(cache, &dn_)?;
    let dd: Vec<f64> = pu.iter().zip(&pd).map(|(x, y)| x - y).collect();
    let derivative = psi_norm(&dd, w) / (h * dn);
    Ok((secant, derivative))
}

/// Perturbs the family solution at each ladder rung and classifies where
/// Picard (and, for a few samples, Newton) iterations end up.
pub fn probe_uniqueness(
    cache: &OperatorCache,
    solution: &UnknownState,
    eps_index: usize,
    opts: &ProbeOptions,
) -> Result<BasinProbeResult> {
    let ops = cache.ops();
    let eps = cache.epsilon;
    let inner_norms = SurfaceNorms::new(ops.inner, &opts.holder)?;
    let outer_norms = SurfaceNorms::new(ops.outer, &opts.holder)?;
    let jobs: Vec<(usize, usize)> =
        (0..opts.ladder.len()).flat_map(|d| (0..opts.samples).map(move |s| (d, s))).collect();
    let results: Vec<Result<(ProbeRecord, ProbeRecord, UnknownState, (f64, f64))>> = jobs
        .par_iter()
        .map(|&(di, s)| {
            let delta = opts.ladder[di];
            let size = eps * delta;
            let mut rng = ChaCha8Rng::seed_from_u64(probe_seed(opts.seed, [eps_index as u64, di as u64, s as u64]));
            let v = perturbation(&inner_norms, size, &mut rng, false)?;
            let mut start = solution.clone();
            start.psi_i.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
            let run = run_picard(cache, start.clone(), solution, opts);
            let newton = if s < opts.newton_checks {
                Some(match cache.newton_solve(&start, &opts.solver) {
                    Ok((x, _)) => classify(x.distance(solution, ops), 0.0, true, opts),
                    Err(_) => ProbeOutcome::Diverged,
                })
            } else {
                None
            };
            let inner = ProbeRecord {
                delta,
                sample: s,
                regime: Regime::InnerDensity,
                outcome: run.outcome,
                steps: run.steps,
                final_distance: run.distance,
                final_residual: run.residual,
                newton,
            };
            let mut all = solution.clone();
            let po = perturbation(&outer_norms, size, &mut rng, false)?;
            let pi = perturbation(&inner_norms, size, &mut rng, true)?;
            all.phi_o.iter_mut().zip(&po).for_each(|(a, b)| *a += b);
            all.phi_i.iter_mut().zip(&pi).for_each(|(a, b)| *a += b);
            all.zeta += size * rng.gen_range(-1.0..1.0);
            all.psi_i.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
            let run_all = run_picard(cache, all, solution, opts);
            let all_rec = ProbeRecord {
                regime: Regime::AllComponents,
                outcome: run_all.outcome,
                steps: run_all.steps,
                final_distance: run_all.distance,
                final_residual: run_all.residual,
                newton: None,
                ..inner.clone()
            };
            let w = perturbation(&inner_norms, size, &mut rng, false)?;
            let a: Vec<f64> = solution.psi_i.iter().zip(&v).map(|(x, y)| x + y).collect();
            let b: Vec<f64> = solution.psi_i.iter().zip(&w).map(|(x, y)| x + y).collect();
            let lip = lipschitz_pair(cache, &a, &b)?;
            Ok((inner, all_rec, run.state, lip))
        })
        .collect();
    let mut records = Vec::new();
    let mut ladder = Vec::new();
    let mut finals: Vec<Vec<UnknownState>> = vec![Vec::new(); opts.ladder.len()];
    let mut lips = vec![(0.0f64, 0.0f64); opts.ladder.len()];
    for (&(di, _), r) in jobs.iter().zip(results) {
        let (inner, all, state, (l, ld)) = r?;
        if inner.outcome == ProbeOutcome::Returned {
            finals[di].push(state);
        }
        lips[di] = (lips[di].0.max(l), lips[di].1.max(ld));
        records.push(inner);
        records.push(all);
    }
    let mut delta_hat = 0.0;
    let mut intact = true;
    for (di, &delta) in opts.ladder.iter().enumerate() {
        let rung: Vec<&ProbeRecord> = records.iter().filter(|r| r.delta == delta).collect();
        let frac = |reg: Regime| {
            let n = rung.iter().filter(|r| r.regime == reg).count().max(1);
            rung.iter().filter(|r| r.regime == reg && r.outcome == ProbeOutcome::Returned).count() as f64 / n as f64
        };
        let mut spread: f64 = 0.0;
        for (i, a) in finals[di].iter().enumerate() {
            for b in &finals[di][i + 1..] {
                spread = spread.max(a.distance(b, ops));
            }
        }
        let summary = LadderSummary {
            delta,
            radius: eps * delta,
            returned_inner: frac(Regime::InnerDensity),
            returned_all: frac(Regime::AllComponents),
            lipschitz: lips[di].0,
            lipschitz_derivative: lips[di].1,
            merged_spread: spread,
        };
        intact &= summary.returned_inner == 1.0;
        if intact {
            delta_hat = delta;
        }
        ladder.push(summary);
    }
    let distinct_fixed_points = records
        .iter()
        .filter(|r| r.outcome == ProbeOutcome::EscapedToDistinctFixedPoint || r.newton == Some(ProbeOutcome::EscapedToDistinctFixedPoint))
        .count();
    Ok(BasinProbeResult { epsilon: eps, ladder, records, distinct_fixed_points, delta_hat })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionCertificate {
    pub epsilon: f64,
    /// Sampled Lipschitz constant of the Picard map at the smallest rung.
    pub lipschitz: f64,
    pub lipschitz_derivative: f64,
    pub samples: usize,
    /// Largest `delta` such that every rung up to it has `L < 1` and full return.
    pub delta_hat: f64,
    pub probe: BasinProbeResult,
}

/// Empirical certificate: sampled contraction plus returned probes. Not a proof.
pub fn contraction_certificate(
    cache: &OperatorCache,
    solution: &UnknownState,
    eps_index: usize,
    opts: &ProbeOptions,
) -> Result<ContractionCertificate> {
    let probe = probe_uniqueness(cache, solution, eps_index, opts)?;
    let mut delta_hat = 0.0;
    for rung in &probe.ladder {
        if rung.lipschitz < 1.0 && rung.returned_inner == 1.0 && rung.returned_all == 1.0 {
            delta_hat = rung.delta;
        } else {
            break;
        }
    }
    let first = probe.ladder.first().ok_or_else(|| Error::Config("empty probe ladder".into()))?;
    Ok(ContractionCertificate {
        epsilon: cache.epsilon,
        lipschitz: first.lipschitz,
        lipschitz_derivative: first.lipschitz_derivative,
        samples: opts.samples,
        delta_hat,
        probe,
    })
}

/// Sampled constants below this are round-off.
pub const LIPSCHITZ_NOISE: f64 = 1e-9;

/// Least-squares slope of `log L` against `log eps` over constants above the noise level.
pub fn lipschitz_slope(certs: &[ContractionCertificate]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = certs
        .iter()
        .filter(|c| c.lipschitz > LIPSCHITZ_NOISE)
        .map(|c| (c.epsilon.ln(), c.lipschitz.ln()))
        .collect();
    log_slope(&pts)
}

/// Largest `eps` such that `L < 1` at it and at every smaller certified `eps`.
pub fn contraction_threshold(certs: &[ContractionCertificate]) -> f64 {
    let mut sorted: Vec<&ContractionCertificate> = certs.iter().collect();
    sorted.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    sorted.iter().take_while(|c| c.lipschitz < 1.0).last().map_or(0.0, |c| c.epsilon)
}

/// Certificates for every family entry; fills `lipschitz` and `delta_hat` in the record.
pub fn certify_family(
    problem: Problem,
    record: &mut FamilyRecord,
    opts: &ProbeOptions,
) -> Result<Vec<ContractionCertificate>> {
    let mut certs = Vec::with_capacity(record.entries.len());
    for (k, e) in record.entries.iter_mut().enumerate() {
        let cache = OperatorCache::new(e.epsilon, problem)?;
        let c = contraction_certificate(&cache, &e.state, k, opts)?;
        e.lipschitz = Some(c.lipschitz);
        e.delta_hat = Some(c.delta_hat);
        certs.push(c);
    }
    Ok(certs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleOptions {
    /// Competing starts at discrete C^{1,alpha} distance `c * eps^exponent`.
    pub c: f64,
    pub exponent: f64,
    /// Size of the negative-control starts, `control * c` independent of `eps`.
    pub control: f64,
    pub samples: usize,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions { c: 1.0, exponent: 1.5, control: 10.0, samples: 4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub epsilon: f64,
    pub distance: f64,
    pub returned_fraction: f64,
    pub control_distance: f64,
    pub control_returned_fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyUniquenessReport {
    pub entries: Vec<ScheduleEntry>,
    /// Largest grid `eps` up to which every competing start merged.
    pub eps_star: f64,
}

/// Competing starts at `o(eps)` distance from the family; reports the largest
/// `eps` below which all of them merge. The control starts are only reported.
pub fn family_uniqueness_check(
    problem: Problem,
    record: &FamilyRecord,
    schedule: &ScheduleOptions,
    opts: &ProbeOptions,
) -> Result<FamilyUniquenessReport> {
    let ops = problem.ops;
    let norms = SurfaceNorms::new(ops.inner, &opts.holder)?;
    let mut entries = Vec::new();
    for (k, e) in record.entries.iter().enumerate() {
        let cache = OperatorCache::new(e.epsilon, problem)?;
        let run = |size: f64, tag: u64| -> Result<f64> {
            let mut back = 0;
            for s in 0..schedule.samples {
                let mut rng = ChaCha8Rng::seed_from_u64(probe_seed(opts.seed ^ tag, [k as u64, 0, s as u64]));
                let v = perturbation(&norms, size, &mut rng, false)?;
                let mut start = e.state.clone();
                start.psi_i.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                if run_picard(&cache, start, &e.state, opts).outcome == ProbeOutcome::Returned {
                    back += 1;
                }
            }
            Ok(back as f64 / schedule.samples.max(1) as f64)
        };
        let distance = schedule.c * e.epsilon.powf(schedule.exponent);
        let control_distance = schedule.control * schedule.c;
        entries.push(ScheduleEntry {
            epsilon: e.epsilon,
            distance,
            returned_fraction: run(distance, 1)?,
            control_distance,
            control_returned_fraction: run(control_distance, 2)?,
        });
    }
    let mut eps_star = 0.0;
    for e in &entries {
        if e.returned_fraction == 1.0 {
            eps_star = e.epsilon;
        } else {
            break;
        }
    }
    Ok(FamilyUniquenessReport { entries, eps_star })
}
