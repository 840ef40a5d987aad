//! Explicit monotone finite differences for the forced graph flow
//!
//! ```text
//! w_t = tr{a(Dw) D^2 w} + c(x) sqrt(1 + |Dw|^2)
//! ```
//!
//! and, with the curvature term weighted by `eps` and the force sampled at
//! `x / eps`, for the small-scale problem it rescales to. Forward Euler with
//! central stencils: the CFL limit keeps the update monotone, which is what
//! carries the comparison principle to the discrete level; dedicated
//! ordered-pair runs measure exactly that.
//!
//! Every accepted step records `sup |w_t|`, the discrete Lipschitz constant
//! and the largest Hessian norm, so the a priori estimates of the continuum
//! theory can be monitored at runtime.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::force::{CoercivityCertificate, ForcingField};
use crate::grid::{self, ExtensionRule, GridFunction, GridSpec, Topology};

/// Which scaling of the flow is integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowScale {
    /// The unit-cell flow: curvature weight 1, force sampled at `x`.
    Rescaled,
    /// The small-scale problem: curvature weight `eps`, force at `x / eps`.
    Epsilon { eps: f64 },
}

impl FlowScale {
    fn curvature_coeff(&self) -> f64 {
        match self {
            FlowScale::Rescaled => 1.0,
            FlowScale::Epsilon { eps } => *eps,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParabolicProblem {
    pub force: ForcingField,
    /// Required whenever the force is not identically zero.
    pub certificate: Option<CoercivityCertificate>,
    pub initial: GridFunction,
    /// Lipschitz bound of the initial data; also clamps boundary ghosts.
    pub lipschitz_bound: f64,
    pub horizon: f64,
    pub scale: FlowScale,
    /// Extra snapshot times; the final time is always included.
    pub snapshot_times: Vec<f64>,
    /// Configured long-time gradient bound; the run aborts if the measured
    /// Lipschitz constant exceeds ten times `max(lipschitz_bound, this)`.
    pub gradient_limit: Option<f64>,
    /// CFL safety factor on the diffusion cap.
    pub safety: f64,
    /// Record every k-th step monitor (1 = every accepted step). Stability
    /// and a priori checks still run on every step; only storage thins out.
    pub monitor_stride: usize,
}

impl ParabolicProblem {
    pub fn new(force: ForcingField, initial: GridFunction, lipschitz_bound: f64, horizon: f64) -> Self {
        ParabolicProblem {
            force,
            certificate: None,
            initial,
            lipschitz_bound,
            horizon,
            scale: FlowScale::Rescaled,
            snapshot_times: Vec::new(),
            gradient_limit: None,
            safety: 0.9,
            monitor_stride: 1,
        }
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct StepMonitor {
    pub t: f64,
    pub dt: f64,
    /// `sup |w_t|`, measured as the sup norm of the discrete right-hand side.
    pub sup_time_deriv: f64,
    pub lipschitz: f64,
    pub max_hessian_norm: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionTrace {
    /// Requested snapshots plus the final state, in time order.
    pub snapshots: Vec<(f64, GridFunction)>,
    /// First accepted time step.
    pub dt0: f64,
    /// Monitor start time, ten initial steps in.
    pub tau: f64,
    /// Accepted steps taken; equals `monitors.len()` at stride 1.
    pub total_steps: usize,
    pub monitors: Vec<StepMonitor>,
}

impl EvolutionTrace {
    pub fn final_field(&self) -> &GridFunction {
        &self.snapshots.last().expect("trace always holds the final state").1
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().expect("trace always holds the final state").0
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&GridFunction> {
        self.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .map(|(_, f)| f)
    }

    pub fn steps(&self) -> usize {
        self.total_steps
    }
}

/// Reductions collected while evaluating the right-hand side once.
struct RhsStats {
    sup_rhs: f64,
    lipschitz_sq: f64,
    max_hessian_sq: f64,
}

/// One full-grid evaluation of the flow's right-hand side. `coeff` weighs the
/// curvature term, `cvals` holds the force at every node.
fn flow_rhs(
    w: &GridFunction,
    cvals: &[f64],
    coeff: f64,
    ext: &ExtensionRule,
    rhs: &mut [f64],
) -> RhsStats {
    let spec = *w.spec();
    let h = spec.h();
    let inv2h = 1.0 / (2.0 * h);
    let invh2 = 1.0 / (h * h);
    let m = spec.points_per_axis();
    let mut stats = RhsStats { sup_rhs: 0.0, lipschitz_sq: 0.0, max_hessian_sq: 0.0 };
    let values = w.values();
    let torus = matches!(spec.topology(), Topology::Torus);

    match spec.n() {
        1 => {
            for i in 0..m {
                let center = values[i];
                let (vm, vp) = if i > 0 && i < m - 1 {
                    (values[i - 1], values[i + 1])
                } else if torus {
                    (values[(i + m - 1) % m], values[(i + 1) % m])
                } else {
                    let ii = i as isize;
                    (w.sample_i([ii - 1, 0], ext), w.sample_i([ii + 1, 0], ext))
                };
                let g = (vp - vm) * inv2h;
                let hxx = (vp - 2.0 * center + vm) * invh2;
                let s2 = 1.0 + g * g;
                let r = coeff * hxx / s2 + cvals[i] * libm::sqrt(s2);
                rhs[i] = r;
                stats.sup_rhs = stats.sup_rhs.max(r.abs());
                stats.lipschitz_sq = stats.lipschitz_sq.max(g * g);
                stats.max_hessian_sq = stats.max_hessian_sq.max(hxx * hxx);
            }
        }
        _ => {
            for iy in 0..m {
                for ix in 0..m {
                    let flat = ix + m * iy;
                    let center = values[flat];
                    let interior = ix > 0 && ix < m - 1 && iy > 0 && iy < m - 1;
                    let (vxm, vxp, vym, vyp, vpp, vpm, vmp, vmm) = if interior {
                        (
                            values[flat - 1],
                            values[flat + 1],
                            values[flat - m],
                            values[flat + m],
                            values[flat + 1 + m],
                            values[flat + 1 - m],
                            values[flat - 1 + m],
                            values[flat - 1 - m],
                        )
                    } else {
                        let (jx, jy) = (ix as isize, iy as isize);
                        (
                            w.sample_i([jx - 1, jy], ext),
                            w.sample_i([jx + 1, jy], ext),
                            w.sample_i([jx, jy - 1], ext),
                            w.sample_i([jx, jy + 1], ext),
                            w.sample_i([jx + 1, jy + 1], ext),
                            w.sample_i([jx + 1, jy - 1], ext),
                            w.sample_i([jx - 1, jy + 1], ext),
                            w.sample_i([jx - 1, jy - 1], ext),
                        )
                    };
                    let gx = (vxp - vxm) * inv2h;
                    let gy = (vyp - vym) * inv2h;
                    let hxx = (vxp - 2.0 * center + vxm) * invh2;
                    let hyy = (vyp - 2.0 * center + vym) * invh2;
                    let hxy = (vpp - vpm - vmp + vmm) * invh2 * 0.25;
                    let s2 = 1.0 + gx * gx + gy * gy;
                    let quad = gx * gx * hxx + 2.0 * gx * gy * hxy + gy * gy * hyy;
                    let tr_term = hxx + hyy - quad / s2;
                    let r = coeff * tr_term + cvals[flat] * libm::sqrt(s2);
                    rhs[flat] = r;
                    stats.sup_rhs = stats.sup_rhs.max(r.abs());
                    stats.lipschitz_sq = stats.lipschitz_sq.max(gx * gx + gy * gy);
                    stats.max_hessian_sq =
                        stats.max_hessian_sq.max(hxx * hxx + hyy * hyy + 2.0 * hxy * hxy);
                }
            }
        }
    }
    stats
}

fn sample_force(force: &ForcingField, spec: &GridSpec, scale: FlowScale) -> Vec<f64> {
    let n = spec.n();
    let mut cvals = vec![0.0; spec.node_count()];
    if force.is_zero() {
        return cvals;
    }
    let inv_eps = match scale {
        FlowScale::Rescaled => 1.0,
        FlowScale::Epsilon { eps } => 1.0 / eps,
    };
    for (i, c) in cvals.iter_mut().enumerate() {
        let mut x = spec.point(i);
        for xk in x.iter_mut().take(n) {
            *xk *= inv_eps;
        }
        *c = force.value(&x[..n]);
    }
    cvals
}

fn stability_limit(h: f64, n: usize, coeff: f64, sup_c: f64, lipschitz: f64, safety: f64) -> f64 {
    // a(Dw) has eigenvalues at most 1, so the diffusion cap is h^2/(2 n coeff);
    // the forcing transport is bounded through max|c| sqrt(1 + L^2).
    let diffusion = safety * h * h / (2.0 * n as f64 * coeff.max(f64::MIN_POSITIVE));
    let transport = h / (sup_c * libm::sqrt(1.0 + lipschitz * lipschitz) + 1.0);
    diffusion.min(transport)
}

/// Largest stable step for the current field.
pub fn cfl_limit(w: &GridFunction, force: &ForcingField, scale: FlowScale) -> f64 {
    let spec = w.spec();
    let cvals = sample_force(force, spec, scale);
    let sup_c = cvals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lip = grid::discrete_lipschitz(w);
    stability_limit(spec.h(), spec.n(), scale.curvature_coeff(), sup_c, lip, 0.9)
}

/// A single forward-Euler step. Rejects `dt` beyond the stability limit.
pub fn step(w: &GridFunction, dt: f64, force: &ForcingField, scale: FlowScale) -> Result<GridFunction> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CoreError::invalid("dt must be positive"));
    }
    let limit = cfl_limit(w, force, scale);
    if dt > limit * (1.0 + 1e-12) {
        return Err(CoreError::CflViolation { dt, limit });
    }
    let spec = *w.spec();
    let cvals = sample_force(force, &spec, scale);
    let ext = ExtensionRule::unbounded();
    let mut rhs = vec![0.0; spec.node_count()];
    flow_rhs(w, &cvals, scale.curvature_coeff(), &ext, &mut rhs);
    let mut out = w.clone();
    for (v, r) in out.values_mut().iter_mut().zip(&rhs) {
        *v += dt * r;
        if !v.is_finite() {
            return Err(CoreError::Divergence { time: dt, detail: String::from("non-finite update") });
        }
    }
    Ok(out)
}

struct Integrator {
    cvals: Vec<f64>,
    sup_c: f64,
    ext: ExtensionRule,
    amplitude_bound: f64,
    gradient_abort: f64,
    events: Vec<f64>,
}

fn validate(problem: &ParabolicProblem) -> Result<Integrator> {
    let spec = problem.initial.spec();
    if problem.force.dim() != spec.n() {
        return Err(CoreError::invalid("force and grid disagree on the dimension"));
    }
    if !(problem.horizon > 0.0 && problem.horizon.is_finite()) {
        return Err(CoreError::invalid("horizon must be positive"));
    }
    if !(problem.safety > 0.0 && problem.safety <= 1.0) {
        return Err(CoreError::invalid("CFL safety factor must lie in (0, 1]"));
    }
    if let FlowScale::Epsilon { eps } = problem.scale {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(CoreError::invalid("eps must lie in (0, 1]"));
        }
    }
    if !problem.force.is_zero() && problem.certificate.is_none() {
        return Err(CoreError::invalid(
            "a coercivity certificate is required for a nonzero force",
        ));
    }
    let n0 = problem.lipschitz_bound;
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(CoreError::invalid("lipschitz bound must be finite and nonnegative"));
    }
    let lip0 = grid::discrete_lipschitz(&problem.initial);
    let slack = 10.0 * spec.h() * (1.0 + n0) + 1e-9;
    if lip0 > n0 + slack {
        return Err(CoreError::invalid("initial data exceeds the declared Lipschitz bound"));
    }
    let mut events = problem.snapshot_times.clone();
    for &t in &events {
        if !(t > 0.0 && t <= problem.horizon * (1.0 + 1e-12)) {
            return Err(CoreError::invalid("snapshot times must lie in (0, horizon]"));
        }
    }
    events.push(problem.horizon);
    events.sort_by(|a, b| a.partial_cmp(b).expect("snapshot times are finite"));
    events.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    let cvals = sample_force(&problem.force, spec, problem.scale);
    let sup_c = cvals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amplitude_bound = grid::sup_norm(&problem.initial) + (sup_c + 1.0) * problem.horizon + 10.0;
    let gradient_abort = 10.0
        * match problem.gradient_limit {
            Some(m) => n0.max(m),
            None => n0.max(1.0),
        };
    Ok(Integrator {
        cvals,
        sup_c,
        ext: ExtensionRule { slope_bound: n0 },
        amplitude_bound,
        gradient_abort,
        events,
    })
}

/// Integrates the problem to its horizon with adaptive steps inside the
/// stability limit, recording monitors at every accepted step. The final
/// state lands on the horizon exactly (last partial step).
pub fn evolve(problem: &ParabolicProblem) -> Result<EvolutionTrace> {
    let ctx = validate(problem)?;
    let spec = *problem.initial.spec();
    let coeff = problem.scale.curvature_coeff();
    let h = spec.h();
    let n = spec.n();

    let mut w = problem.initial.clone();
    let mut rhs = vec![0.0; spec.node_count()];
    let mut t = 0.0;
    let mut dt0 = 0.0;
    let mut steps = 0usize;
    let stride = problem.monitor_stride.max(1);
    let mut monitors: Vec<StepMonitor> = Vec::new();
    let mut snapshots: Vec<(f64, GridFunction)> = Vec::new();

    for &target in &ctx.events {
        while t < target {
            let stats = flow_rhs(&w, &ctx.cvals, coeff, &ctx.ext, &mut rhs);
            let lip = libm::sqrt(stats.lipschitz_sq);
            let limit = stability_limit(h, n, coeff, ctx.sup_c, lip, problem.safety);
            let remaining = target - t;
            let (dt, landed) = if remaining <= limit { (remaining, true) } else { (limit, false) };
            for (v, r) in w.values_mut().iter_mut().zip(&rhs) {
                *v += dt * r;
            }
            t = if landed { target } else { t + dt };
            steps += 1;
            if dt0 == 0.0 {
                dt0 = dt;
            }
            if steps % stride == 0 || landed {
                monitors.push(StepMonitor {
                    t,
                    dt,
                    sup_time_deriv: stats.sup_rhs,
                    lipschitz: lip,
                    max_hessian_norm: libm::sqrt(stats.max_hessian_sq),
                });
            }

            let amp = w.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !amp.is_finite() {
                return Err(CoreError::Divergence { time: t, detail: String::from("non-finite values") });
            }
            if amp > ctx.amplitude_bound {
                return Err(CoreError::Divergence {
                    time: t,
                    detail: format!("amplitude {amp:.3e} beyond barrier {:.3e}", ctx.amplitude_bound),
                });
            }
            if lip > ctx.gradient_abort {
                return Err(CoreError::AprioriViolation {
                    time: t,
                    quantity: String::from("discrete Lipschitz constant"),
                    value: lip,
                    bound: ctx.gradient_abort,
                });
            }
        }
        snapshots.push((target, w.clone()));
    }

    let tau = 10.0 * dt0;
    Ok(EvolutionTrace { snapshots, dt0, tau, total_steps: steps, monitors })
}

/// Solves the small-scale problem directly in its own coordinates. The grid
/// must resolve the fast scale: `h <= eps / 16`.
pub fn solve_epsilon_problem(
    force: &ForcingField,
    certificate: Option<&CoercivityCertificate>,
    initial: GridFunction,
    eps: f64,
    horizon: f64,
    lipschitz_bound: f64,
    snapshot_times: Vec<f64>,
) -> Result<EvolutionTrace> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CoreError::invalid("eps must lie in (0, 1]"));
    }
    let h = initial.spec().h();
    if h > eps / 16.0 * (1.0 + 1e-9) {
        return Err(CoreError::Resolution { h, eps });
    }
    let mut problem = ParabolicProblem::new(force.clone(), initial, lipschitz_bound, horizon);
    problem.certificate = certificate.copied();
    problem.scale = FlowScale::Epsilon { eps };
    problem.snapshot_times = snapshot_times;
    evolve(&problem)
}

/// The same problem integrated in unit-cell coordinates through
/// `u(x, t) = eps w(x / eps, t / eps)` and mapped back. Agrees with the
/// direct route up to rounding in the coordinate change.
pub fn solve_epsilon_by_rescaling(
    force: &ForcingField,
    certificate: Option<&CoercivityCertificate>,
    initial: GridFunction,
    eps: f64,
    horizon: f64,
    lipschitz_bound: f64,
    snapshot_times: Vec<f64>,
) -> Result<EvolutionTrace> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CoreError::invalid("eps must lie in (0, 1]"));
    }
    let u_spec = *initial.spec();
    if u_spec.h() > eps / 16.0 * (1.0 + 1e-9) {
        return Err(CoreError::Resolution { h: u_spec.h(), eps });
    }
    let Topology::Box { extent } = u_spec.topology() else {
        return Err(CoreError::invalid("the rescaling route expects a box grid"));
    };
    let w_spec = GridSpec::boxed(u_spec.n(), u_spec.points_per_axis(), extent / eps)?;
    let w_values: Vec<f64> = initial.values().iter().map(|v| v / eps).collect();
    let w0 = GridFunction::from_values(w_spec, w_values)?;

    let mut problem = ParabolicProblem::new(force.clone(), w0, lipschitz_bound, horizon / eps);
    problem.certificate = certificate.copied();
    problem.snapshot_times = snapshot_times.iter().map(|t| t / eps).collect();
    let trace = evolve(&problem)?;

    let snapshots = trace
        .snapshots
        .into_iter()
        .map(|(t, f)| {
            let vals: Vec<f64> = f.values().iter().map(|v| v * eps).collect();
            Ok((t * eps, GridFunction::from_values(u_spec, vals)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let monitors = trace
        .monitors
        .into_iter()
        .map(|mo| StepMonitor {
            t: mo.t * eps,
            dt: mo.dt * eps,
            sup_time_deriv: mo.sup_time_deriv,
            lipschitz: mo.lipschitz,
            max_hessian_norm: mo.max_hessian_norm / eps,
        })
        .collect();
    Ok(EvolutionTrace {
        snapshots,
        dt0: trace.dt0 * eps,
        tau: trace.tau * eps,
        total_steps: trace.total_steps,
        monitors,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ComparisonOutcome {
    pub ordered: bool,
    pub worst_violation: f64,
    pub at_time: f64,
    pub tolerance: f64,
}

/// Verifies that two traces with a shared step schedule kept their initial
/// ordering (`low <= high`) at every stored snapshot.
pub fn comparison_check(low: &EvolutionTrace, high: &EvolutionTrace) -> Result<ComparisonOutcome> {
    if low.monitors.len() != high.monitors.len()
        || low.monitors.iter().zip(&high.monitors).any(|(a, b)| a.dt != b.dt || a.t != b.t)
    {
        return Err(CoreError::invalid("traces do not share a step schedule"));
    }
    if low.snapshots.len() != high.snapshots.len() {
        return Err(CoreError::invalid("traces do not share snapshot times"));
    }
    if low.total_steps != high.total_steps {
        return Err(CoreError::invalid("traces do not share a step schedule"));
    }
    let tolerance = 1e-12 * low.total_steps as f64;
    let mut worst = f64::NEG_INFINITY;
    let mut at_time = 0.0;
    for ((ta, fa), (tb, fb)) in low.snapshots.iter().zip(&high.snapshots) {
        if ta != tb {
            return Err(CoreError::invalid("traces do not share snapshot times"));
        }
        if fa.spec() != fb.spec() {
            return Err(CoreError::invalid("traces do not share a grid"));
        }
        for (a, b) in fa.values().iter().zip(fb.values()) {
            let v = a - b;
            if v > worst {
                worst = v;
                at_time = *ta;
            }
        }
    }
    Ok(ComparisonOutcome { ordered: worst <= tolerance, worst_violation: worst.max(0.0), at_time, tolerance })
}

#[derive(Clone, Copy, Debug)]
pub struct PairOutcome {
    pub worst_violation: f64,
    pub at_time: f64,
    pub steps: usize,
    /// `1e-12` per step, the scheme-rounding allowance.
    pub tolerance: f64,
}

/// Evolves two initial conditions of the same problem in lockstep (shared
/// adaptive schedule) and measures the worst violation of `low <= high`
/// after every step: the discrete embodiment of the comparison principle.
pub fn evolve_ordered_pair(
    problem: &ParabolicProblem,
    high_initial: &GridFunction,
) -> Result<(EvolutionTrace, EvolutionTrace, PairOutcome)> {
    if high_initial.spec() != problem.initial.spec() {
        return Err(CoreError::invalid("ordered pair must share a grid"));
    }
    let ctx = validate(problem)?;
    let high_problem = ParabolicProblem { initial: high_initial.clone(), ..problem.clone() };
    validate(&high_problem)?;
    let spec = *problem.initial.spec();
    let coeff = problem.scale.curvature_coeff();
    let h = spec.h();
    let n = spec.n();

    let mut lo = problem.initial.clone();
    let mut hi = high_initial.clone();
    let mut rhs_lo = vec![0.0; spec.node_count()];
    let mut rhs_hi = vec![0.0; spec.node_count()];
    let mut t = 0.0;
    let mut dt0 = 0.0;
    let mut mon_lo = Vec::new();
    let mut mon_hi = Vec::new();
    let mut snaps_lo = Vec::new();
    let mut snaps_hi = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut at_time = 0.0;

    for &target in &ctx.events {
        while t < target {
            let stats_lo = flow_rhs(&lo, &ctx.cvals, coeff, &ctx.ext, &mut rhs_lo);
            let stats_hi = flow_rhs(&hi, &ctx.cvals, coeff, &ctx.ext, &mut rhs_hi);
            let lip_lo = libm::sqrt(stats_lo.lipschitz_sq);
            let lip_hi = libm::sqrt(stats_hi.lipschitz_sq);
            let limit = stability_limit(h, n, coeff, ctx.sup_c, lip_lo, problem.safety)
                .min(stability_limit(h, n, coeff, ctx.sup_c, lip_hi, problem.safety));
            let remaining = target - t;
            let (dt, landed) = if remaining <= limit { (remaining, true) } else { (limit, false) };
            for (v, r) in lo.values_mut().iter_mut().zip(&rhs_lo) {
                *v += dt * r;
            }
            for (v, r) in hi.values_mut().iter_mut().zip(&rhs_hi) {
                *v += dt * r;
            }
            t = if landed { target } else { t + dt };
            if dt0 == 0.0 {
                dt0 = dt;
            }
            mon_lo.push(StepMonitor {
                t,
                dt,
                sup_time_deriv: stats_lo.sup_rhs,
                lipschitz: lip_lo,
                max_hessian_norm: libm::sqrt(stats_lo.max_hessian_sq),
            });
            mon_hi.push(StepMonitor {
                t,
                dt,
                sup_time_deriv: stats_hi.sup_rhs,
                lipschitz: lip_hi,
                max_hessian_norm: libm::sqrt(stats_hi.max_hessian_sq),
            });
            for (a, b) in lo.values().iter().zip(hi.values()) {
                let v = a - b;
                if v > worst {
                    worst = v;
                    at_time = t;
                }
            }
            if !grid::sup_norm(&lo).is_finite() || !grid::sup_norm(&hi).is_finite() {
                return Err(CoreError::Divergence { time: t, detail: String::from("non-finite values") });
            }
        }
        snaps_lo.push((target, lo.clone()));
        snaps_hi.push((target, hi.clone()));
    }

    let steps = mon_lo.len();
    let tau = 10.0 * dt0;
    let outcome = PairOutcome {
        worst_violation: worst.max(0.0),
        at_time,
        steps,
        tolerance: 1e-12 * steps as f64,
    };
    Ok((
        EvolutionTrace { snapshots: snaps_lo, dt0, tau, total_steps: steps, monitors: mon_lo },
        EvolutionTrace { snapshots: snaps_hi, dt0, tau, total_steps: steps, monitors: mon_hi },
        outcome,
    ))
}
