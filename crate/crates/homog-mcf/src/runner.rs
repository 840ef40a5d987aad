//! Subcommand implementations: wiring configurations into the core solvers
//! and writing their outputs under the run's output directory.

use std::path::{Path, PathBuf};

use homog_mcf_core::cell::{
    assemble_table, corrector_bound_report, effective_value, table_entry, table_nodes, CellOptions,
    EffectiveHamiltonianTable, TableDiagnostics,
};
use homog_mcf_core::experiments::{
    apriori_monitor_suite, assemble_rate_report, cone_expander_run, cone_record, fit_exponent,
    ConeExample, ConeParams, InitialData, MonitorParams, RateSweepParams,
};
use homog_mcf_core::force::{
    build_modified_force, check_coercivity, CoercivityCertificate, ForcingField, ModifiedForce,
};
use homog_mcf_core::grid::{GridFunction, GridSpec};
use homog_mcf_core::hj::{solve_effective, EffectiveProblem, Hamiltonian};
use homog_mcf_core::parabolic::{evolve, ParabolicProblem};

use crate::config::{InitialKind, RunConfig, TopologyKind};
use crate::formats;
use crate::pool::par_map;
use crate::report::{emit_report, ExperimentReport, ScenarioInfo};
use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Check,
    Evolve,
    Cell,
    Table,
    Effective,
    Rate,
    Cone,
    Monitors,
}

pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl Ctx {
    fn certificate(&self, force: &ForcingField) -> CliResult<Option<CoercivityCertificate>> {
        if force.is_zero() {
            return Ok(None);
        }
        Ok(Some(check_coercivity(force, self.config.delta, self.config.check_resolution)?))
    }

    fn modified_force(&self, force: &ForcingField) -> CliResult<(ModifiedForce, CoercivityCertificate)> {
        let cert = self.certificate(force)?.ok_or_else(|| {
            CliError::Validation("this subcommand needs a nonzero force".to_string())
        })?;
        let fm = build_modified_force(force, self.config.gradient_bound, &cert)?;
        Ok((fm, cert))
    }

    fn cell_spec(&self) -> CliResult<GridSpec> {
        Ok(GridSpec::torus(self.config.dimension, self.config.cell_points)?)
    }

    fn main_spec(&self) -> CliResult<GridSpec> {
        let cfg = &self.config;
        Ok(match cfg.topology {
            TopologyKind::Torus => GridSpec::torus(cfg.dimension, cfg.points_per_axis)?,
            TopologyKind::Box => GridSpec::boxed(cfg.dimension, cfg.points_per_axis, cfg.extent)?,
        })
    }

    fn initial_data(&self) -> InitialData {
        let cfg = &self.config;
        match cfg.initial {
            InitialKind::Cone => InitialData::Cone,
            InitialKind::Flat => InitialData::Flat,
            InitialKind::Sine => {
                InitialData::Sine { amplitude: cfg.initial_amplitude, mode: cfg.initial_mode }
            }
        }
    }

    fn initial_field(&self, spec: &GridSpec) -> CliResult<GridFunction> {
        Ok(self.initial_data().sample(spec)?)
    }

    fn cell_options(&self) -> CellOptions {
        CellOptions {
            stop_tol: self.config.stop_tol,
            max_steps: self.config.max_steps,
            safety: self.config.safety,
        }
    }

    fn force_descriptor(&self, force: &ForcingField) -> String {
        format!("{:?}", force.family())
    }

    fn scenario_info(&self, force: &ForcingField) -> ScenarioInfo {
        ScenarioInfo {
            name: self.config.name.clone(),
            dimension: self.config.dimension,
            force: self.force_descriptor(force),
            horizon: self.config.horizon,
            window: Some(self.config.window),
            eps: self.config.eps_list.clone(),
            config: self.config.to_text(),
        }
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        std::fs::write(self.out_dir.join(name), contents)?;
        Ok(())
    }
}

pub fn run(cmd: Subcommand, ctx: &Ctx) -> CliResult<()> {
    match cmd {
        Subcommand::Check => run_check(ctx),
        Subcommand::Evolve => run_evolve(ctx),
        Subcommand::Cell => run_cell(ctx),
        Subcommand::Table => run_table(ctx),
        Subcommand::Effective => run_effective(ctx),
        Subcommand::Rate => run_rate(ctx),
        Subcommand::Cone => run_cone(ctx),
        Subcommand::Monitors => run_monitors(ctx),
    }
}

fn run_check(ctx: &Ctx) -> CliResult<()> {
    let force = ctx.config.force()?;
    let cert = check_coercivity(&force, ctx.config.delta, ctx.config.check_resolution)?;
    println!(
        "coercivity margin {:.6} > delta {:.6} (sample resolution {:.6e})",
        cert.min_margin, cert.delta, cert.sample_resolution
    );
    Ok(())
}

fn run_evolve(ctx: &Ctx) -> CliResult<()> {
    let cfg = &ctx.config;
    let force = cfg.force()?;
    let cert = ctx.certificate(&force)?;
    let spec = ctx.main_spec()?;
    let initial = ctx.initial_field(&spec)?;
    let mut problem = ParabolicProblem::new(force, initial, cfg.lipschitz_bound, cfg.horizon);
    problem.certificate = cert;
    problem.snapshot_times = cfg.snapshot_times.clone();
    problem.gradient_limit = Some(cfg.gradient_bound);
    problem.safety = cfg.safety;
    problem.monitor_stride = cfg.monitor_stride;
    let trace = evolve(&problem)?;
    let files = formats::export_trace(&trace, &ctx.out_dir, "w")?;
    println!(
        "evolved to t = {:.6} in {} steps; wrote {} files to {}",
        trace.final_time(),
        trace.steps(),
        files.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

fn run_cell(ctx: &Ctx) -> CliResult<()> {
    let cfg = &ctx.config;
    let force = cfg.force()?;
    let (fm, _) = ctx.modified_force(&force)?;
    let spec = ctx.cell_spec()?;
    let p = &cfg.slope[..cfg.dimension];
    let (ev, sol) = effective_value(p, &fm, &spec, &cfg.lambdas, &ctx.cell_options())?;
    println!(
        "Fbar({p:?}) = {:.8} (uncertainty {:.2e}{})",
        ev.value,
        ev.uncertainty,
        if ev.ill_conditioned { ", ill-conditioned extrapolation" } else { "" }
    );
    for (lambda, value) in &ev.per_lambda {
        println!("  lambda = {lambda:.4e}: -lambda v = {value:.8}");
    }
    println!(
        "corrector: residual {:.2e}, sup|v| {:.3e}, sup|Dv| {:.3e}, sup|D2v| {:.3e}",
        sol.residual, sol.bounds.sup_value, sol.bounds.sup_gradient, sol.bounds.sup_hessian
    );
    ctx.write("corrector.csv", &formats::grid_function_csv(&sol.corrector))?;
    Ok(())
}

fn build_table_parallel(
    ctx: &Ctx,
    fm: &ModifiedForce,
) -> CliResult<(EffectiveHamiltonianTable, TableDiagnostics)> {
    let cfg = &ctx.config;
    let spec = ctx.cell_spec()?;
    let opts = ctx.cell_options();
    let nodes = table_nodes(cfg.dimension, cfg.table_range, cfg.table_samples);
    let entries = par_map(ctx.jobs, &nodes, |p| {
        table_entry(&p[..cfg.dimension], fm, &spec, &cfg.lambdas, &opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_table(fm, &spec, cfg.table_range, cfg.table_samples, entries)?)
}

fn load_table(path: &str) -> CliResult<EffectiveHamiltonianTable> {
    let text = std::fs::read_to_string(Path::new(path))
        .map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    formats::parse_table_csv(&text, path)
}

fn obtain_table(ctx: &Ctx, force: &ForcingField) -> CliResult<EffectiveHamiltonianTable> {
    if let Some(path) = &ctx.config.table_file {
        return load_table(path);
    }
    let (fm, _) = ctx.modified_force(force)?;
    let (table, diag) = build_table_parallel(ctx, &fm)?;
    ctx.write("table.csv", &formats::table_csv(&table, &ctx.force_descriptor(force)))?;
    ctx.write("table_diagnostics.csv", &formats::table_diagnostics_csv(&diag))?;
    Ok(table)
}

fn run_table(ctx: &Ctx) -> CliResult<()> {
    let force = ctx.config.force()?;
    let (fm, _) = ctx.modified_force(&force)?;
    let (table, diag) = build_table_parallel(ctx, &fm)?;
    ctx.write("table.csv", &formats::table_csv(&table, &ctx.force_descriptor(&force)))?;
    ctx.write("table_diagnostics.csv", &formats::table_diagnostics_csv(&diag))?;
    let bounds = corrector_bound_report(&diag);
    println!(
        "table over [-{range}, {range}]^{n} with {s} samples per axis",
        range = table.range(),
        n = table.n(),
        s = table.samples_per_axis()
    );
    println!(
        "corrector bounds: sup|v| {:.4e}, sup|Dv| {:.4e}, sup|D2v| {:.4e}",
        bounds.sup_value, bounds.sup_gradient, bounds.sup_hessian
    );
    println!("parity deviation |Fbar(p) - Fbar(-p)|: {:.4e}", diag.parity_deviation);
    Ok(())
}

fn run_effective(ctx: &Ctx) -> CliResult<()> {
    let cfg = &ctx.config;
    let force = cfg.force()?;
    let table = obtain_table(ctx, &force)?;
    let spec = ctx.main_spec()?;
    let initial = ctx.initial_field(&spec)?;
    let mut problem = EffectiveProblem::new(
        Hamiltonian::Table(table),
        initial,
        cfg.lipschitz_bound,
        cfg.horizon,
    );
    problem.snapshot_times = cfg.snapshot_times.clone();
    problem.theta_pad = cfg.theta_pad;
    problem.safety = cfg.safety;
    let trace = solve_effective(&problem)?;
    let files = formats::export_trace(&trace, &ctx.out_dir, "u")?;
    println!(
        "effective solve to t = {:.6} in {} steps; wrote {} files to {}",
        trace.final_time(),
        trace.steps(),
        files.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

fn run_rate(ctx: &Ctx) -> CliResult<()> {
    let cfg = &ctx.config;
    let force = cfg.force()?;
    let certificate = ctx.certificate(&force)?;
    let table = obtain_table(ctx, &force)?;
    let params = RateSweepParams {
        force: force.clone(),
        certificate,
        table,
        initial: ctx.initial_data(),
        extent: cfg.extent,
        horizon: cfg.horizon,
        eps_list: cfg.eps_list.clone(),
        window: cfg.window,
        lipschitz_bound: cfg.lipschitz_bound,
        gradient_limit: Some(cfg.gradient_bound),
        theta_pad: cfg.theta_pad,
        safety: cfg.safety,
        resolution_factor: cfg.resolution_factor,
    };
    // Validate eagerly, then fan the per-epsilon solves across the pool.
    homog_mcf_core::experiments::validate_rate_sweep(&params)?;
    let outcomes = par_map(ctx.jobs, &cfg.eps_list, |&eps| {
        (eps, homog_mcf_core::experiments::rate_record(&params, eps))
    });
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (eps, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => warnings.push(format!("eps = {eps}: {e}")),
        }
    }
    let report = assemble_rate_report(records, warnings, cfg.horizon);
    for r in &report.records {
        println!("eps = {:>9.6}  error = {:.6e}  h = {:.6e}", r.eps, r.error, r.h);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match (&report.fit, &report.degenerate) {
        (Some(fit), _) => println!(
            "fitted exponent {:.4} (constant {:.4e}); error/sqrt(eps) spread {:.3}",
            fit.exponent,
            fit.constant,
            report.sqrt_eps_ratio.unwrap_or(f64::NAN)
        ),
        (None, Some(note)) => println!("{note}"),
        (None, None) => {}
    }
    emit_report(&ExperimentReport::Rate(report), &ctx.scenario_info(&force), &ctx.out_dir)?;
    println!("report written to {}", ctx.out_dir.display());
    Ok(())
}

fn cone_params(ctx: &Ctx) -> ConeParams {
    let cfg = &ctx.config;
    let mut params = ConeParams::new(cfg.dimension, cfg.eps_list.clone());
    params.expander_points = cfg.points_per_axis;
    params.expander_extent = cfg.extent;
    params.eps_extent = cfg.extent;
    params.resolution_factor = cfg.resolution_factor;
    params.safety = cfg.safety;
    if !cfg.snapshot_times.is_empty() {
        params.selfsim_times = cfg.snapshot_times.clone();
    }
    params
}

fn run_cone(ctx: &Ctx) -> CliResult<()> {
    let cfg = &ctx.config;
    if cfg.force_family != crate::config::ForceKind::Zero {
        return Err(CliError::Validation(
            "the cone experiment is defined for the zero force".to_string(),
        ));
    }
    let params = cone_params(ctx);
    let (constant, residual, _) = cone_expander_run(&params)?;
    let outcomes = par_map(ctx.jobs, &params.eps_list, |&eps| (eps, cone_record(&params, eps)));
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (eps, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => warnings.push(format!("eps = {eps}: {e}")),
        }
    }
    let per_eps_consistency: Vec<f64> =
        records.iter().map(|r| (r.error - r.eps.sqrt() * constant).abs()).collect();
    let pairs: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.error)).collect();
    let fit = fit_exponent(&pairs).ok();
    let cone = ConeExample {
        expander_constant: constant,
        self_similarity_residual: residual,
        records,
        per_eps_consistency,
        fit,
        warnings,
    };
    println!("expander constant w(0,1) = {:.6}", cone.expander_constant);
    println!("self-similarity residual = {:.3e}", cone.self_similarity_residual);
    for r in &cone.records {
        println!("eps = {:>9.6}  u_eps(0,1) = {:.6e}  h = {:.6e}", r.eps, r.error, r.h);
    }
    if let Some(fit) = &cone.fit {
        println!("fitted exponent {:.4}", fit.exponent);
    }
    for w in &cone.warnings {
        eprintln!("warning: {w}");
    }
    let force = ForcingField::zero(cfg.dimension);
    emit_report(&ExperimentReport::Cone(cone), &ctx.scenario_info(&force), &ctx.out_dir)?;
    println!("report written to {}", ctx.out_dir.display());
    Ok(())
}

fn run_monitors(ctx: &Ctx) -> CliResult<()> {
    let cfg = &ctx.config;
    let force = cfg.force()?;
    let certificate = ctx.certificate(&force)?;
    let spec = ctx.main_spec()?;
    let initial = ctx.initial_field(&spec)?;
    let params = MonitorParams {
        force: force.clone(),
        certificate,
        initial: initial.clone(),
        lipschitz_bound: cfg.lipschitz_bound,
        horizon: cfg.horizon,
        gradient_limit: Some(cfg.gradient_bound),
        safety: cfg.safety,
    };
    let report = apriori_monitor_suite(&params)?;

    // Keep the raw monitor trail next to the verdicts.
    let mut problem = ParabolicProblem::new(force, initial, cfg.lipschitz_bound, cfg.horizon);
    problem.certificate = params.certificate;
    problem.gradient_limit = params.gradient_limit;
    problem.safety = cfg.safety;
    let trace = evolve(&problem)?;
    ctx.write("monitors.csv", &formats::monitors_csv(&trace))?;

    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    println!("time-derivative monitor: {}", verdict(report.time_derivative_ok));
    println!("gradient monitor:        {}", verdict(report.gradient_ok));
    println!("short-time monitor:      {}", verdict(report.short_time_ok));
    println!(
        "N0 = {:.4}, C1_proxy = {:.4}, T* = {:.6}, M_emp = {:.6}, tau = {:.3e}",
        report.estimates.lipschitz_bound,
        report.estimates.c1_proxy,
        report.estimates.t_star,
        report.estimates.m_emp,
        report.estimates.tau
    );
    if !report.time_derivative_ok || !report.gradient_ok || !report.short_time_ok {
        return Err(CliError::Numerical(format!(
            "monitor violations: {}",
            report.failures.join("; ")
        )));
    }
    Ok(())
}
