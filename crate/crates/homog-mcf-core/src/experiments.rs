//! Experiment drivers: the homogenization-rate sweep, the expanding-cone
//! optimality example, exponent fitting, and the a priori monitor suite.
//!
//! Per-epsilon work is exposed as standalone functions ([`rate_record`],
//! [`cone_record`]) so a host with a worker pool can run them concurrently
//! and assemble reports in a fixed order; the sequential drivers here produce
//! identical results.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cell::EffectiveHamiltonianTable;
use crate::error::{CoreError, Result};
use crate::force::{CoercivityCertificate, ForcingField};
use crate::grid::{self, GridFunction, GridSpec};
use crate::hj::{solve_effective, EffectiveProblem, Hamiltonian};
use crate::parabolic::{evolve, solve_epsilon_problem, EvolutionTrace, ParabolicProblem};

/// Built-in initial profiles, sampled per grid so mollification can track
/// the local spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialData {
    /// `|x|`, mollified over one cell to `sqrt(|x|^2 + h^2)`.
    Cone,
    Flat,
    /// `amplitude * sum_k sin(2 pi mode x_k)`.
    Sine { amplitude: f64, mode: i32 },
}

impl InitialData {
    pub fn sample(&self, spec: &GridSpec) -> Result<GridFunction> {
        let n = spec.n();
        let h = spec.h();
        match *self {
            InitialData::Cone => GridFunction::from_fn(*spec, |x| {
                libm::sqrt(crate::linalg::norm_sq(n, x) + h * h)
            }),
            InitialData::Flat => Ok(GridFunction::constant(*spec, 0.0)),
            InitialData::Sine { amplitude, mode } => GridFunction::from_fn(*spec, |x| {
                let k = 2.0 * core::f64::consts::PI * mode as f64;
                x.iter().map(|&xi| amplitude * libm::sin(k * xi)).sum()
            }),
        }
    }

    /// Lipschitz constant of the unmollified profile.
    pub fn lipschitz_bound(&self, n: usize) -> f64 {
        match *self {
            InitialData::Cone => 1.0,
            InitialData::Flat => 0.0,
            InitialData::Sine { amplitude, mode } => {
                amplitude.abs() * 2.0 * core::f64::consts::PI * mode.abs() as f64 * libm::sqrt(n as f64)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExponentFit {
    /// Slope of log error against log eps.
    pub exponent: f64,
    /// The multiplicative constant, `exp` of the intercept.
    pub constant: f64,
    /// Per-record deviation of log error from the fitted line.
    pub residuals: Vec<f64>,
}

/// Ordinary least squares in log-log coordinates. Needs at least three
/// records with strictly positive errors.
pub fn fit_exponent(records: &[(f64, f64)]) -> Result<ExponentFit> {
    if records.len() < 3 {
        return Err(CoreError::DegenerateFit(String::from("need at least 3 records")));
    }
    if records.iter().any(|&(e, err)| !(e > 0.0) || !(err > 0.0)) {
        return Err(CoreError::DegenerateFit(String::from(
            "records must have positive eps and positive error",
        )));
    }
    let pts: Vec<(f64, f64)> =
        records.iter().map(|&(e, err)| (libm::log(e), libm::log(err))).collect();
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = k * sxx - sx * sx;
    if det.abs() < 1e-12 {
        return Err(CoreError::DegenerateFit(String::from("eps values are not distinct")));
    }
    let exponent = (k * sxy - sx * sy) / det;
    let intercept = (sy - exponent * sx) / k;
    let residuals = pts.iter().map(|p| p.1 - (intercept + exponent * p.0)).collect();
    Ok(ExponentFit { exponent, constant: libm::exp(intercept), residuals })
}

#[derive(Clone, Debug)]
pub struct RateRecord {
    pub eps: f64,
    pub error: f64,
    pub h: f64,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RateReport {
    pub records: Vec<RateRecord>,
    pub fit: Option<ExponentFit>,
    /// Set when the sweep carries no usable signal (for example zero error).
    pub degenerate: Option<String>,
    pub warnings: Vec<String>,
    /// Spread of `error / sqrt(eps)` across the sweep, largest over smallest.
    pub sqrt_eps_ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RateSweepParams {
    pub force: ForcingField,
    pub certificate: Option<CoercivityCertificate>,
    pub table: EffectiveHamiltonianTable,
    pub initial: InitialData,
    pub extent: f64,
    pub horizon: f64,
    pub eps_list: Vec<f64>,
    /// Halfwidth of the interior error window.
    pub window: f64,
    pub lipschitz_bound: f64,
    pub gradient_limit: Option<f64>,
    pub theta_pad: f64,
    pub safety: f64,
    /// The fast-scale rule `h <= eps / resolution_factor`; 16 unless a study
    /// needs more.
    pub resolution_factor: usize,
}

fn grid_for_eps(n: usize, extent: f64, eps: f64, factor: usize) -> Result<GridSpec> {
    let needed = 2.0 * extent * factor as f64 / eps;
    let mut points = libm::ceil(needed) as usize;
    if points % 2 == 1 {
        points += 1;
    }
    GridSpec::boxed(n, points.max(8), extent)
}

/// Checks a sweep's preconditions without running anything.
pub fn validate_rate_sweep(params: &RateSweepParams) -> Result<()> {
    if params.eps_list.is_empty() {
        return Err(CoreError::invalid("eps list must not be empty"));
    }
    if params.eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(CoreError::invalid("every eps must lie in (0, 1]"));
    }
    if params.eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CoreError::invalid("eps values must be strictly decreasing"));
    }
    if !params.force.is_zero() && params.certificate.is_none() {
        return Err(CoreError::invalid("a coercivity certificate is required for a nonzero force"));
    }
    if params.table.range() < params.lipschitz_bound + 1.0 - 1e-12 {
        return Err(CoreError::invalid("table coverage must reach the Lipschitz bound plus one"));
    }
    if !(params.window > 0.0 && params.window <= params.extent) {
        return Err(CoreError::invalid("error window must lie inside the box"));
    }
    if params.resolution_factor < 16 {
        return Err(CoreError::invalid("resolution factor below 16 under-resolves the fast scale"));
    }
    Ok(())
}

/// One epsilon of the rate sweep: solve the small-scale problem and the
/// effective equation on the same grid, then take the windowed sup error
/// over the quarter, half and full horizon.
pub fn rate_record(params: &RateSweepParams, eps: f64) -> Result<RateRecord> {
    let n = params.force.dim();
    let spec = grid_for_eps(n, params.extent, eps, params.resolution_factor)?;
    let u0 = params.initial.sample(&spec)?;
    let t = params.horizon;
    let times = vec![t / 4.0, t / 2.0, t];

    let eps_trace = solve_epsilon_problem(
        &params.force,
        params.certificate.as_ref(),
        u0.clone(),
        eps,
        t,
        params.lipschitz_bound,
        vec![t / 4.0, t / 2.0],
    )?;

    let mut problem = EffectiveProblem::new(
        Hamiltonian::Table(params.table.clone()),
        u0,
        params.lipschitz_bound,
        t,
    );
    problem.snapshot_times = vec![t / 4.0, t / 2.0];
    problem.theta_pad = params.theta_pad;
    problem.safety = params.safety;
    let eff_trace = solve_effective(&problem)?;

    let mut error = 0.0f64;
    for &s in &times {
        let a = eps_trace
            .snapshot_at(s)
            .ok_or_else(|| CoreError::invalid("missing snapshot in the small-scale trace"))?;
        let b = eff_trace
            .snapshot_at(s)
            .ok_or_else(|| CoreError::invalid("missing snapshot in the effective trace"))?;
        error = error.max(grid::windowed_sup_diff(a, b, params.window)?);
    }
    Ok(RateRecord { eps, error, h: spec.h(), times })
}

/// Assembles per-epsilon records into a report: exponent fit, constant
/// stability, degeneracy notes.
pub fn assemble_rate_report(
    records: Vec<RateRecord>,
    warnings: Vec<String>,
    horizon: f64,
) -> RateReport {
    let zero_threshold = 1e-10 * (1.0 + horizon);
    let max_err = records.iter().fold(0.0f64, |m, r| m.max(r.error));
    let mut report =
        RateReport { records, fit: None, degenerate: None, warnings, sqrt_eps_ratio: None };
    if report.records.is_empty() {
        report.degenerate = Some(String::from("degenerate: no usable records"));
        return report;
    }
    if max_err <= zero_threshold {
        report.degenerate = Some(String::from("degenerate: zero error"));
        return report;
    }
    let pairs: Vec<(f64, f64)> = report.records.iter().map(|r| (r.eps, r.error)).collect();
    match fit_exponent(&pairs) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.degenerate = Some(format!("degenerate: {e}")),
    }
    let ratios: Vec<f64> = report.records.iter().map(|r| r.error / libm::sqrt(r.eps)).collect();
    if ratios.iter().all(|r| *r > 0.0) {
        let lo = ratios.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let hi = ratios.iter().fold(0.0f64, |m, v| m.max(*v));
        report.sqrt_eps_ratio = Some(hi / lo);
    }
    report
}

/// Sequential rate sweep. Per-epsilon failures are recorded as warnings and
/// excluded from the fit.
pub fn run_rate_sweep(params: &RateSweepParams) -> Result<RateReport> {
    validate_rate_sweep(params)?;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for &eps in &params.eps_list {
        match rate_record(params, eps) {
            Ok(r) => records.push(r),
            Err(e) => warnings.push(format!("eps = {eps}: {e}")),
        }
    }
    Ok(assemble_rate_report(records, warnings, params.horizon))
}

#[derive(Clone, Debug)]
pub struct ConeParams {
    pub n: usize,
    pub eps_list: Vec<f64>,
    /// Grid for the unit-cell expander run.
    pub expander_points: usize,
    pub expander_extent: f64,
    /// Box for the per-epsilon runs.
    pub eps_extent: f64,
    pub resolution_factor: usize,
    /// Times checked against `w(0, t) = sqrt(t) w(0, 1)`.
    pub selfsim_times: Vec<f64>,
    pub safety: f64,
}

impl ConeParams {
    pub fn new(n: usize, eps_list: Vec<f64>) -> ConeParams {
        let selfsim_times = (0..=15).map(|i| 0.25 + 0.05 * i as f64).collect();
        ConeParams {
            n,
            eps_list,
            expander_points: 1024,
            expander_extent: 5.0,
            eps_extent: 2.0,
            resolution_factor: 16,
            selfsim_times,
            safety: 0.9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConeExample {
    /// `w(0, 1)` of the unforced flow from the cone.
    pub expander_constant: f64,
    /// `max_t |w(0, t) - sqrt(t) w(0, 1)|` over the requested times.
    pub self_similarity_residual: f64,
    /// Per-epsilon `u_eps(0, 1) - u(0, 1)`; the effective solution is the
    /// cone itself, so `u(0, 1) = 0`.
    pub records: Vec<RateRecord>,
    /// `|u_eps(0, 1) - sqrt(eps) w(0, 1)|` per epsilon.
    pub per_eps_consistency: Vec<f64>,
    pub fit: Option<ExponentFit>,
    pub warnings: Vec<String>,
}

/// The unit-cell expander run: zero force from the mollified cone.
pub fn cone_expander_run(params: &ConeParams) -> Result<(f64, f64, EvolutionTrace)> {
    let spec = GridSpec::boxed(params.n, params.expander_points, params.expander_extent)?;
    let u0 = InitialData::Cone.sample(&spec)?;
    let mut problem = ParabolicProblem::new(ForcingField::zero(params.n), u0, 1.0, 1.0);
    problem.snapshot_times = params.selfsim_times.clone();
    problem.safety = params.safety;
    let trace = evolve(&problem)?;
    let origin = spec.origin();
    let constant = trace.final_field().value(origin);
    if !(constant > 0.0) {
        return Err(CoreError::AprioriViolation {
            time: 1.0,
            quantity: String::from("expander constant w(0,1)"),
            value: constant,
            bound: 0.0,
        });
    }
    let mut residual = 0.0f64;
    for (t, snap) in &trace.snapshots {
        residual = residual.max((snap.value(origin) - libm::sqrt(*t) * constant).abs());
    }
    Ok((constant, residual, trace))
}

/// One epsilon of the cone example: the small-scale value at the origin at
/// unit time.
pub fn cone_record(params: &ConeParams, eps: f64) -> Result<RateRecord> {
    let spec = grid_for_eps(params.n, params.eps_extent, eps, params.resolution_factor)?;
    let u0 = InitialData::Cone.sample(&spec)?;
    let trace =
        solve_epsilon_problem(&ForcingField::zero(params.n), None, u0, eps, 1.0, 1.0, Vec::new())?;
    let value = trace.final_field().value(spec.origin());
    Ok(RateRecord { eps, error: value, h: spec.h(), times: vec![1.0] })
}

/// Full cone experiment: expander constant, self-similarity residual,
/// per-epsilon lower-bound values, and the fitted exponent.
pub fn cone_experiment(params: &ConeParams) -> Result<ConeExample> {
    if params.eps_list.is_empty() {
        return Err(CoreError::invalid("eps list must not be empty"));
    }
    if params.eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(CoreError::invalid("every eps must lie in (0, 1]"));
    }
    let (constant, residual, _) = cone_expander_run(params)?;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for &eps in &params.eps_list {
        match cone_record(params, eps) {
            Ok(r) => records.push(r),
            Err(e) => warnings.push(format!("eps = {eps}: {e}")),
        }
    }
    let per_eps_consistency = records
        .iter()
        .map(|r| (r.error - libm::sqrt(r.eps) * constant).abs())
        .collect();
    let pairs: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.error)).collect();
    let fit = fit_exponent(&pairs).ok();
    Ok(ConeExample {
        expander_constant: constant,
        self_similarity_residual: residual,
        records,
        per_eps_consistency,
        fit,
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct MonitorParams {
    pub force: ForcingField,
    pub certificate: Option<CoercivityCertificate>,
    pub initial: GridFunction,
    pub lipschitz_bound: f64,
    pub horizon: f64,
    pub gradient_limit: Option<f64>,
    pub safety: f64,
}

/// Constants extracted from the monitors of one run.
#[derive(Clone, Copy, Debug)]
pub struct AprioriEstimates {
    /// Declared Lipschitz bound of the initial data.
    pub lipschitz_bound: f64,
    /// Fitted constant in the short-time gradient growth bound.
    pub c1_proxy: f64,
    /// `1 / ((C1 + 1) sqrt(1 + N0^2))`, the certified short-time horizon.
    pub t_star: f64,
    /// Largest discrete Lipschitz constant observed after `tau`.
    pub m_emp: f64,
    pub tau: f64,
}

#[derive(Clone, Debug)]
pub struct MonitorReport {
    pub estimates: AprioriEstimates,
    /// `sup |w_t|` non-increasing after `tau` within 1e-3 relative slack.
    pub time_derivative_ok: bool,
    pub time_derivative_worst_ratio: f64,
    /// Gradient stays under `max(lip(tau), configured M)` with 5 percent
    /// slack (trivially true when no M is configured).
    pub gradient_ok: bool,
    /// Short-time growth respects `z <= z0 / (1 - (C1+1) z0 t)` on
    /// `[0, t_star / 2]` for the fitted proxy.
    pub short_time_ok: bool,
    pub failures: Vec<String>,
}

/// Runs the flow once and checks the three a priori monitors, reporting the
/// measured constants.
pub fn apriori_monitor_suite(params: &MonitorParams) -> Result<MonitorReport> {
    let mut problem = ParabolicProblem::new(
        params.force.clone(),
        params.initial.clone(),
        params.lipschitz_bound,
        params.horizon,
    );
    problem.certificate = params.certificate;
    problem.gradient_limit = params.gradient_limit;
    problem.safety = params.safety;
    let trace = evolve(&problem)?;
    let tau = trace.tau;
    let mut failures = Vec::new();

    // Time-derivative maximum principle after tau.
    let mut running_min = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    for m in trace.monitors.iter().filter(|m| m.t >= tau) {
        if running_min.is_finite() {
            worst_ratio = worst_ratio.max(m.sup_time_deriv / running_min);
        }
        running_min = running_min.min(m.sup_time_deriv);
    }
    let time_derivative_ok = worst_ratio <= 1.0 + 1e-3;
    if !time_derivative_ok {
        failures.push(format!("sup|w_t| grew by factor {worst_ratio:.6} after tau"));
    }

    // Long-time gradient bound.
    let lip_tau = trace
        .monitors
        .iter()
        .find(|m| m.t >= tau)
        .map(|m| m.lipschitz)
        .unwrap_or(params.lipschitz_bound);
    let m_emp = trace
        .monitors
        .iter()
        .filter(|m| m.t >= tau)
        .fold(0.0f64, |acc, m| acc.max(m.lipschitz));
    let gradient_ok = match params.gradient_limit {
        Some(mcfg) => {
            let bound = lip_tau.max(mcfg) * 1.05;
            let ok = m_emp <= bound;
            if !ok {
                failures
                    .push(format!("gradient {m_emp:.6} exceeded max(lip(tau), M) = {bound:.6}"));
            }
            ok
        }
        None => true,
    };

    // Short-time growth: fit the smallest proxy constant whose barrier
    // dominates z(t) on [0, t_star/2], then verify it explicitly.
    let z0 = libm::sqrt(1.0 + params.lipschitz_bound * params.lipschitz_bound);
    let samples: Vec<(f64, f64)> = trace
        .monitors
        .iter()
        .map(|m| (m.t, libm::sqrt(1.0 + m.lipschitz * m.lipschitz)))
        .collect();
    let b_req = |t: f64, z: f64| if z > z0 && t > 0.0 { (1.0 - z0 / z) / t } else { 0.0 };
    let mut b = samples.iter().fold(0.0f64, |m, &(t, z)| m.max(b_req(t, z)));
    for _ in 0..40 {
        let window = if b > 0.0 { 1.0 / (2.0 * b) } else { f64::INFINITY };
        let next = samples
            .iter()
            .filter(|&&(t, _)| t <= window)
            .fold(0.0f64, |m, &(t, z)| m.max(b_req(t, z)));
        if (next - b).abs() <= 1e-12 * (1.0 + b) {
            b = next;
            break;
        }
        b = b.max(next);
    }
    let c1_proxy = (b / z0 - 1.0).max(0.0);
    let t_star = 1.0 / ((c1_proxy + 1.0) * z0);
    let mut short_time_ok = true;
    for &(t, z) in samples.iter().filter(|&&(t, _)| t <= t_star / 2.0) {
        let barrier = z0 / (1.0 - (c1_proxy + 1.0) * z0 * t);
        if z > barrier * (1.0 + 1e-9) {
            short_time_ok = false;
            failures.push(format!(
                "short-time bound violated at t = {t:.6e}: z = {z:.6e} > {barrier:.6e}"
            ));
            break;
        }
    }

    Ok(MonitorReport {
        estimates: AprioriEstimates {
            lipschitz_bound: params.lipschitz_bound,
            c1_proxy,
            t_star,
            m_emp,
            tau,
        },
        time_derivative_ok,
        time_derivative_worst_ratio: worst_ratio,
        gradient_ok,
        short_time_ok,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::check_coercivity;
    use homog_mcf_testkit::rng::SplitMix64;

    #[test]
    fn fit_exponent_exact_geometric_data() {
        let fit = fit_exponent(&[(0.25, 0.5), (0.0625, 0.25), (0.015625, 0.125)]).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        for r in &fit.residuals {
            assert!(r.abs() < 1e-12);
        }

        let fit = fit_exponent(&[(0.5, 0.5), (0.25, 0.25), (0.125, 0.125)]).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert!((fit.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_exponent_recovers_half_under_noise() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..20 {
            let records: alloc::vec::Vec<(f64, f64)> = (2..10)
                .map(|k| {
                    let eps = 0.5f64.powi(k);
                    let noise = 1.0 + 0.01 * (2.0 * rng.next_f64() - 1.0);
                    (eps, libm::sqrt(eps) * noise)
                })
                .collect();
            let fit = fit_exponent(&records).unwrap();
            assert!((fit.exponent - 0.5).abs() < 0.02, "exponent {}", fit.exponent);
        }
    }

    #[test]
    fn fit_exponent_degenerate_inputs() {
        assert!(matches!(
            fit_exponent(&[(0.5, 1.0), (0.25, 0.5)]),
            Err(CoreError::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_exponent(&[(0.5, 1.0), (0.25, 0.0), (0.125, 0.2)]),
            Err(CoreError::DegenerateFit(_))
        ));
    }

    #[test]
    fn zero_error_sweep_is_degenerate() {
        let records = vec![
            RateRecord { eps: 0.5, error: 1e-14, h: 0.01, times: vec![1.0] },
            RateRecord { eps: 0.25, error: 2e-14, h: 0.005, times: vec![1.0] },
            RateRecord { eps: 0.125, error: 0.0, h: 0.0025, times: vec![1.0] },
        ];
        let report = assemble_rate_report(records, Vec::new(), 1.0);
        assert_eq!(report.degenerate.as_deref(), Some("degenerate: zero error"));
        assert!(report.fit.is_none());
    }

    #[test]
    fn initial_data_profiles() {
        let spec = GridSpec::boxed(1, 64, 2.0).unwrap();
        let cone = InitialData::Cone.sample(&spec).unwrap();
        // Mollified over one cell: value h at the origin, close to |x| away.
        assert!((cone.value(spec.origin()) - spec.h()).abs() < 1e-15);
        let far = cone.value(0);
        assert!((far - 2.0).abs() < spec.h());
        assert!(grid::discrete_lipschitz(&cone) <= 1.0 + 1e-12);

        let sine = InitialData::Sine { amplitude: 0.25, mode: 1 };
        assert!((sine.lipschitz_bound(1) - 0.5 * core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn monitor_suite_constant_force_flat_start() {
        let force = ForcingField::constant(1, 1.0).unwrap();
        let cert = check_coercivity(&force, 0.5, 1.0 / 64.0).unwrap();
        let spec = GridSpec::torus(1, 64).unwrap();
        let params = MonitorParams {
            force,
            certificate: Some(cert),
            initial: GridFunction::constant(spec, 0.0),
            lipschitz_bound: 0.0,
            horizon: 0.5,
            gradient_limit: Some(1.0),
            safety: 0.9,
        };
        let report = apriori_monitor_suite(&params).unwrap();
        assert!(report.time_derivative_ok);
        assert!(report.gradient_ok);
        assert!(report.short_time_ok);
        assert_eq!(report.estimates.m_emp, 0.0);
        assert_eq!(report.estimates.c1_proxy, 0.0);
        assert!((report.estimates.t_star - 1.0).abs() < 1e-12);
        assert!(report.failures.is_empty());
    }

    #[test]
    fn cone_experiment_small_scale_sanity() {
        // Coarse, fast version of the optimality example; the acceptance
        // suite runs the full-resolution one.
        let mut params = ConeParams::new(1, vec![0.25, 0.125]);
        params.expander_points = 256;
        params.expander_extent = 4.0;
        params.eps_extent = 1.0;
        let cone = cone_experiment(&params).unwrap();
        assert!(cone.expander_constant > 0.9 && cone.expander_constant < 1.2);
        assert!(cone.self_similarity_residual < 5e-3);
        for r in &cone.records {
            assert!(r.error > 0.0, "lower bound value not positive at eps {}", r.eps);
        }
        for (r, c) in cone.records.iter().zip(&cone.per_eps_consistency) {
            assert!(
                *c < 0.05 * libm::sqrt(r.eps) * cone.expander_constant,
                "consistency {c} too loose at eps {}",
                r.eps
            );
        }
    }

    #[test]
    fn rate_sweep_degenerate_for_constant_force() {
        // Constant force: no oscillation, no homogenization error.
        let force = ForcingField::constant(1, 1.0).unwrap();
        let cert = check_coercivity(&force, 0.5, 1.0 / 64.0).unwrap();
        let nodes = 9;
        let values: Vec<f64> = (0..nodes)
            .map(|i| {
                let p = -2.0 + i as f64 * 0.5;
                -libm::sqrt(1.0 + p * p)
            })
            .collect();
        let table =
            EffectiveHamiltonianTable::from_raw(1, 2.0, nodes, values, vec![0.0; nodes]).unwrap();
        let params = RateSweepParams {
            force,
            certificate: Some(cert),
            table,
            initial: InitialData::Flat,
            extent: 1.0,
            horizon: 0.5,
            eps_list: vec![0.5, 0.25],
            window: 0.5,
            lipschitz_bound: 0.0,
            gradient_limit: None,
            theta_pad: 1.2,
            safety: 0.9,
            resolution_factor: 16,
        };
        let report = run_rate_sweep(&params).unwrap();
        assert_eq!(report.degenerate.as_deref(), Some("degenerate: zero error"));
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn sweep_validation_errors() {
        let force = ForcingField::zero(1);
        let nodes = 5;
        let table =
            EffectiveHamiltonianTable::from_raw(1, 2.0, nodes, vec![0.0; nodes], vec![0.0; nodes])
                .unwrap();
        let base = RateSweepParams {
            force,
            certificate: None,
            table,
            initial: InitialData::Flat,
            extent: 1.0,
            horizon: 0.5,
            eps_list: vec![0.5, 0.25],
            window: 0.5,
            lipschitz_bound: 0.0,
            gradient_limit: None,
            theta_pad: 1.2,
            safety: 0.9,
            resolution_factor: 16,
        };
        let mut bad = base.clone();
        bad.eps_list = vec![1.5];
        assert!(run_rate_sweep(&bad).is_err());
        let mut bad = base.clone();
        bad.eps_list = vec![0.25, 0.5];
        assert!(run_rate_sweep(&bad).is_err());
        let mut bad = base.clone();
        bad.window = 2.0;
        assert!(run_rate_sweep(&bad).is_err());
        let mut bad = base;
        bad.lipschitz_bound = 3.0;
        assert!(run_rate_sweep(&bad).is_err());
    }
}
