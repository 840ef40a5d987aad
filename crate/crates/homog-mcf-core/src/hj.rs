//! Lax-Friedrichs solver for the effective first-order equation
//! `u_t + Fbar(Du) = 0`.
//!
//! The numerical Hamiltonian takes the centered slope and subtracts
//! `theta_k/2 (D+_k u - D-_k u)` per axis; with `theta` at or above the
//! Hamiltonian's slope bound the update is monotone, which is all the
//! tabulated `Fbar` (no convexity guarantees) allows us to lean on. Slope
//! bounds come from the table's own finite differences, padded by a
//! configurable factor for interpolation corners.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::cell::{ClampStats, EffectiveHamiltonianTable};
use crate::error::{CoreError, Result};
use crate::grid::{ExtensionRule, GridFunction};
use crate::linalg::{self, MAX_DIM};
use crate::parabolic::{EvolutionTrace, StepMonitor};

/// Closed-form effective Hamiltonian with sampled slope bounds.
#[derive(Clone)]
pub struct ClosedFormHamiltonian {
    n: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    coverage: f64,
    slope_bounds: [f64; MAX_DIM],
}

impl core::fmt::Debug for ClosedFormHamiltonian {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "ClosedFormHamiltonian(n={}, coverage={})", self.n, self.coverage)
    }
}

/// Either a tabulated or a closed-form `Fbar`.
#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Table(EffectiveHamiltonianTable),
    ClosedForm(ClosedFormHamiltonian),
}

impl Hamiltonian {
    pub fn table(table: EffectiveHamiltonianTable) -> Hamiltonian {
        Hamiltonian::Table(table)
    }

    /// Wraps a closed form, estimating per-axis slope bounds by dense
    /// finite differences over `[-coverage, coverage]^n`.
    pub fn closed_form(
        n: usize,
        f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        coverage: f64,
    ) -> Result<Hamiltonian> {
        linalg::check_dim(n)?;
        if !(coverage > 0.0 && coverage.is_finite()) {
            return Err(CoreError::invalid("coverage must be positive"));
        }
        let samples: usize = if n == 1 { 4096 } else { 128 };
        let dp = 2.0 * coverage / samples as f64;
        let mut slope_bounds = [0.0f64; MAX_DIM];
        let total = (samples + 1).pow(n as u32);
        let mut p = [0.0f64; MAX_DIM];
        for flat in 0..total {
            p[0] = -coverage + (flat % (samples + 1)) as f64 * dp;
            if n == 2 {
                p[1] = -coverage + (flat / (samples + 1)) as f64 * dp;
            }
            for k in 0..n {
                let mut q = p;
                q[k] += dp;
                if q[k] <= coverage + 1e-12 {
                    let s = (f(&q[..n]) - f(&p[..n])).abs() / dp;
                    slope_bounds[k] = slope_bounds[k].max(s);
                }
            }
        }
        Ok(Hamiltonian::ClosedForm(ClosedFormHamiltonian { n, f, coverage, slope_bounds }))
    }

    pub fn n(&self) -> usize {
        match self {
            Hamiltonian::Table(t) => t.n(),
            Hamiltonian::ClosedForm(c) => c.n,
        }
    }

    /// Largest slope magnitude the Hamiltonian is certified for.
    pub fn coverage(&self) -> f64 {
        match self {
            Hamiltonian::Table(t) => t.range(),
            Hamiltonian::ClosedForm(c) => c.coverage,
        }
    }

    pub fn slope_bound(&self, axis: usize) -> f64 {
        match self {
            Hamiltonian::Table(t) => t.slope_bound(axis),
            Hamiltonian::ClosedForm(c) => c.slope_bounds[axis],
        }
    }

    pub fn eval(&self, p: &[f64], stats: &mut ClampStats) -> f64 {
        match self {
            Hamiltonian::Table(t) => t.eval(p, stats),
            Hamiltonian::ClosedForm(c) => {
                stats.total += 1;
                (c.f)(p)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct EffectiveProblem {
    pub hamiltonian: Hamiltonian,
    pub initial: GridFunction,
    pub lipschitz_bound: f64,
    pub horizon: f64,
    pub snapshot_times: Vec<f64>,
    /// Dissipation pad over the measured slope bound.
    pub theta_pad: f64,
    /// CFL safety factor.
    pub safety: f64,
}

impl EffectiveProblem {
    pub fn new(hamiltonian: Hamiltonian, initial: GridFunction, lipschitz_bound: f64, horizon: f64) -> Self {
        EffectiveProblem {
            hamiltonian,
            initial,
            lipschitz_bound,
            horizon,
            snapshot_times: Vec::new(),
            theta_pad: 1.2,
            safety: 0.9,
        }
    }
}

struct LfStats {
    sup_rhs: f64,
    lipschitz_sq: f64,
}

/// One Lax-Friedrichs sweep writing `-[H(pbar) - sum theta/2 (D+ - D-)]`
/// into `rhs`.
fn lf_rhs(
    u: &GridFunction,
    ham: &Hamiltonian,
    theta: &[f64],
    ext: &ExtensionRule,
    stats: &mut ClampStats,
    rhs: &mut [f64],
) -> LfStats {
    let spec = *u.spec();
    let n = spec.n();
    let h = spec.h();
    let values = u.values();
    let mut out = LfStats { sup_rhs: 0.0, lipschitz_sq: 0.0 };
    let mut pbar = [0.0f64; MAX_DIM];

    for flat in 0..spec.node_count() {
        let idx = spec.unflat(flat);
        let center = values[flat];
        let mut dissipation = 0.0;
        let mut lip_sq = 0.0;
        for k in 0..n {
            let mut ip = [idx[0] as isize, idx[1] as isize];
            let mut im = ip;
            ip[k] += 1;
            im[k] -= 1;
            let (vp, vm) = (u.sample_i(ip, ext), u.sample_i(im, ext));
            let fwd = (vp - center) / h;
            let bwd = (center - vm) / h;
            pbar[k] = 0.5 * (fwd + bwd);
            dissipation += 0.5 * theta[k] * (fwd - bwd);
            lip_sq += pbar[k] * pbar[k];
        }
        let r = -(ham.eval(&pbar[..n], stats) - dissipation);
        rhs[flat] = r;
        out.sup_rhs = out.sup_rhs.max(r.abs());
        out.lipschitz_sq = out.lipschitz_sq.max(lip_sq);
    }
    out
}

fn check_theta(ham: &Hamiltonian, theta: &[f64]) -> Result<()> {
    let n = ham.n();
    if theta.len() != n {
        return Err(CoreError::invalid("theta must provide one entry per axis"));
    }
    for (axis, &th) in theta.iter().enumerate() {
        let slope = ham.slope_bound(axis);
        if th < slope {
            return Err(CoreError::MonotonicityViolation { theta: th, slope, axis });
        }
    }
    Ok(())
}

fn lf_limit(h: f64, n: usize, theta: &[f64], safety: f64) -> f64 {
    let theta_max = theta.iter().fold(0.0f64, |m, v| m.max(*v));
    safety * h / (n as f64 * theta_max.max(1e-300))
}

/// One explicit Lax-Friedrichs step with user-supplied dissipation.
pub fn lax_friedrichs_step(
    u: &GridFunction,
    dt: f64,
    ham: &Hamiltonian,
    theta: &[f64],
    stats: &mut ClampStats,
) -> Result<GridFunction> {
    check_theta(ham, theta)?;
    let spec = *u.spec();
    if ham.n() != spec.n() {
        return Err(CoreError::invalid("Hamiltonian and grid disagree on the dimension"));
    }
    let limit = lf_limit(spec.h(), spec.n(), theta, 0.9);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(CoreError::CflViolation { dt, limit });
    }
    let ext = ExtensionRule::unbounded();
    let mut rhs = vec![0.0; spec.node_count()];
    lf_rhs(u, ham, theta, &ext, stats, &mut rhs);
    let mut outv = u.clone();
    for (v, r) in outv.values_mut().iter_mut().zip(&rhs) {
        *v += dt * r;
    }
    Ok(outv)
}

/// Integrates the effective equation to its horizon. Errors if the
/// Hamiltonian does not cover the declared Lipschitz range plus one, and if
/// more than 0.1 percent of its queries had to clamp.
pub fn solve_effective(problem: &EffectiveProblem) -> Result<EvolutionTrace> {
    let spec = *problem.initial.spec();
    let ham = &problem.hamiltonian;
    if ham.n() != spec.n() {
        return Err(CoreError::invalid("Hamiltonian and grid disagree on the dimension"));
    }
    if !(problem.horizon > 0.0 && problem.horizon.is_finite()) {
        return Err(CoreError::invalid("horizon must be positive"));
    }
    if problem.theta_pad < 1.0 {
        return Err(CoreError::invalid("theta pad below 1 breaks monotonicity"));
    }
    if ham.coverage() < problem.lipschitz_bound + 1.0 - 1e-12 {
        return Err(CoreError::invalid(
            "Hamiltonian coverage must reach the Lipschitz bound plus one; rebuild with larger range",
        ));
    }
    let n = spec.n();
    let mut theta = [0.0f64; MAX_DIM];
    for k in 0..n {
        theta[k] = problem.theta_pad * ham.slope_bound(k);
    }
    check_theta(ham, &theta[..n])?;

    let mut events = problem.snapshot_times.clone();
    for &t in &events {
        if !(t > 0.0 && t <= problem.horizon * (1.0 + 1e-12)) {
            return Err(CoreError::invalid("snapshot times must lie in (0, horizon]"));
        }
    }
    events.push(problem.horizon);
    events.sort_by(|a, b| a.partial_cmp(b).expect("snapshot times are finite"));
    events.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    let ext = ExtensionRule { slope_bound: problem.lipschitz_bound };
    let mut u = problem.initial.clone();
    let mut rhs = vec![0.0; spec.node_count()];
    let mut stats = ClampStats::default();
    let mut monitors: Vec<StepMonitor> = Vec::new();
    let mut snapshots = Vec::new();
    let mut t = 0.0;
    let mut dt0 = 0.0;
    let limit = lf_limit(spec.h(), n, &theta[..n], problem.safety);

    for &target in &events {
        while t < target {
            let pass = lf_rhs(&u, ham, &theta[..n], &ext, &mut stats, &mut rhs);
            let remaining = target - t;
            let (dt, landed) = if remaining <= limit { (remaining, true) } else { (limit, false) };
            for (v, r) in u.values_mut().iter_mut().zip(&rhs) {
                *v += dt * r;
            }
            t = if landed { target } else { t + dt };
            if dt0 == 0.0 {
                dt0 = dt;
            }
            monitors.push(StepMonitor {
                t,
                dt,
                sup_time_deriv: pass.sup_rhs,
                lipschitz: libm::sqrt(pass.lipschitz_sq),
                max_hessian_norm: 0.0,
            });
            if u.values().iter().any(|v| !v.is_finite()) {
                return Err(CoreError::Divergence {
                    time: t,
                    detail: alloc::string::String::from("non-finite values"),
                });
            }
        }
        snapshots.push((target, u.clone()));
    }

    // Transient overshoots near kinks may clamp a handful of queries; more
    // than 0.1 percent means the covered range truly is too small.
    if stats.ratio() > 1e-3 {
        return Err(CoreError::Coverage { clamped: stats.clamped, total: stats.total });
    }

    let total_steps = monitors.len();
    Ok(EvolutionTrace { snapshots, dt0, tau: 10.0 * dt0, total_steps, monitors })
}
