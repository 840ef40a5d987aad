//! The periodic cell problem via discounted approximation.
//!
//! For a slope `p`, the corrector `v(., p)` and the effective value `Fbar(p)`
//! solve `F~(D^2 v, p + Dv, y) = Fbar(p)` on the torus with `v(0, p) = 0`.
//! Each discounted problem `lambda v + F~(D^2 v, p + Dv, y) = 0` is relaxed
//! in pseudo-time with the same monotone stencils as the flow solver,
//!
//! ```text
//! v_t = -lambda v - F~(D^2 v, p + Dv, y),
//! ```
//!
//! and `Fbar(p)` is read off as the grid mean of `-lambda v`. The relaxation
//! integrates the spatial mean of `v` exactly (the mean mode is linear and
//! decays only at rate `lambda`, which would otherwise dominate the run
//! time); the zero-mean remainder converges at the parabolic rate. The
//! stationary point is identical either way. A final linear fit in `lambda`
//! extrapolates the discount to zero.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::force::ModifiedForce;
use crate::grid::{self, ExtensionRule, GridFunction, GridSpec, Topology};
use crate::linalg::MAX_DIM;

#[derive(Clone, Copy, Debug)]
pub struct CellOptions {
    /// Absolute stop tolerance on `sup |v_t|`.
    pub stop_tol: f64,
    pub max_steps: usize,
    /// CFL safety factor for the relaxation steps.
    pub safety: f64,
}

impl Default for CellOptions {
    fn default() -> Self {
        CellOptions { stop_tol: 1e-8, max_steps: 20_000_000, safety: 0.9 }
    }
}

/// Uniform bounds of a corrector: `sup|v|`, `sup|D_y v|`, `sup||D_y^2 v||`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CorrectorBounds {
    pub sup_value: f64,
    pub sup_gradient: f64,
    pub sup_hessian: f64,
}

impl CorrectorBounds {
    fn max(self, other: CorrectorBounds) -> CorrectorBounds {
        CorrectorBounds {
            sup_value: self.sup_value.max(other.sup_value),
            sup_gradient: self.sup_gradient.max(other.sup_gradient),
            sup_hessian: self.sup_hessian.max(other.sup_hessian),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorrectorSolution {
    pub p: [f64; MAX_DIM],
    /// Periodic corrector, normalized to vanish at the origin.
    pub corrector: GridFunction,
    /// Grid mean of `-lambda v` for this discount.
    pub effective_value: f64,
    pub lambda: f64,
    /// `sup |F~(D^2 v, p + Dv, y) - Fbar(p)|` over the grid.
    pub residual: f64,
    pub iterations: usize,
    pub bounds: CorrectorBounds,
}

struct CellPass {
    mean_rhs: f64,
    sup_residual: f64,
    /// max over the grid of `|p + Dv|^2`
    max_q_sq: f64,
    /// min over the grid of `|p + Dv|^2`
    min_q_sq: f64,
}

/// Right-hand side `-F~(D^2 v, p + Dv, y)` of the relaxation, written into
/// `rhs`, plus the reductions the step control needs.
fn cell_rhs(
    v: &GridFunction,
    p: &[f64],
    cvals: &[f64],
    fm: &ModifiedForce,
    rhs: &mut [f64],
) -> CellPass {
    let spec = *v.spec();
    let m = spec.points_per_axis();
    let h = spec.h();
    let inv2h = 1.0 / (2.0 * h);
    let invh2 = 1.0 / (h * h);
    let values = v.values();
    let mut sum = 0.0;
    let mut max_q_sq = 0.0f64;
    let mut min_q_sq = f64::INFINITY;

    match spec.n() {
        1 => {
            let p0 = p[0];
            for i in 0..m {
                let vm = values[(i + m - 1) % m];
                let vp = values[(i + 1) % m];
                let center = values[i];
                let q = p0 + (vp - vm) * inv2h;
                let hxx = (vp - 2.0 * center + vm) * invh2;
                let r2 = 1.0 + q * q;
                let r = libm::sqrt(r2);
                let cmod = fm.value_scaled(cvals[i], r);
                let out = hxx / r2 + cmod * r;
                rhs[i] = out;
                sum += out;
                max_q_sq = max_q_sq.max(q * q);
                min_q_sq = min_q_sq.min(q * q);
            }
        }
        _ => {
            for iy in 0..m {
                for ix in 0..m {
                    let flat = ix + m * iy;
                    let center = values[flat];
                    let xm = values[(ix + m - 1) % m + m * iy];
                    let xp = values[(ix + 1) % m + m * iy];
                    let ym = values[ix + m * ((iy + m - 1) % m)];
                    let yp = values[ix + m * ((iy + 1) % m)];
                    let pp = values[(ix + 1) % m + m * ((iy + 1) % m)];
                    let pm = values[(ix + 1) % m + m * ((iy + m - 1) % m)];
                    let mp = values[(ix + m - 1) % m + m * ((iy + 1) % m)];
                    let mm = values[(ix + m - 1) % m + m * ((iy + m - 1) % m)];
                    let qx = p[0] + (xp - xm) * inv2h;
                    let qy = p[1] + (yp - ym) * inv2h;
                    let hxx = (xp - 2.0 * center + xm) * invh2;
                    let hyy = (yp - 2.0 * center + ym) * invh2;
                    let hxy = (pp - pm - mp + mm) * invh2 * 0.25;
                    let q_sq = qx * qx + qy * qy;
                    let r2 = 1.0 + q_sq;
                    let quad = qx * qx * hxx + 2.0 * qx * qy * hxy + qy * qy * hyy;
                    let r = libm::sqrt(r2);
                    let cmod = fm.value_scaled(cvals[flat], r);
                    let out = hxx + hyy - quad / r2 + cmod * r;
                    rhs[flat] = out;
                    sum += out;
                    max_q_sq = max_q_sq.max(q_sq);
                    min_q_sq = min_q_sq.min(q_sq);
                }
            }
        }
    }
    let mean = sum / spec.node_count() as f64;
    let mut sup_residual = 0.0f64;
    for r in rhs.iter() {
        sup_residual = sup_residual.max((r - mean).abs());
    }
    CellPass { mean_rhs: mean, sup_residual, max_q_sq, min_q_sq }
}

fn validate_cell(p: &[f64], lambda: f64, fm: &ModifiedForce, spec: &GridSpec) -> Result<()> {
    if !matches!(spec.topology(), Topology::Torus) {
        return Err(CoreError::invalid("cell problems live on the torus"));
    }
    if spec.n() != fm.dim() || p.len() != spec.n() {
        return Err(CoreError::invalid("cell problem dimensions disagree"));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::invalid("slope must be finite"));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(CoreError::invalid("discount must lie in (0, 1]"));
    }
    Ok(())
}

/// Relaxes the discounted problem to its steady state. `init` warm-starts the
/// zero-mean part; `None` starts from zero.
fn solve_discounted_from(
    p: &[f64],
    lambda: f64,
    fm: &ModifiedForce,
    spec: &GridSpec,
    opts: &CellOptions,
    init: Option<&GridFunction>,
) -> Result<CorrectorSolution> {
    validate_cell(p, lambda, fm, spec)?;
    let n = spec.n();
    let h = spec.h();
    let count = spec.node_count();
    let cvals: Vec<f64> = (0..count).map(|i| fm.base().value(&spec.point(i)[..n])).collect();
    let sup_c = cvals.iter().fold(fm.saturation().abs(), |m, v| m.max(v.abs()));

    // Zero-mean working field.
    let mut phi = match init {
        Some(f) => {
            if f.spec() != spec {
                return Err(CoreError::invalid("warm-start field lives on a different grid"));
            }
            let mean = f.values().iter().sum::<f64>() / count as f64;
            let vals: Vec<f64> = f.values().iter().map(|v| v - mean).collect();
            GridFunction::from_values(*spec, vals)?
        }
        None => GridFunction::constant(*spec, 0.0),
    };
    let mut rhs = vec![0.0; count];

    let mut iterations = 0usize;
    let mut pass = cell_rhs(&phi, p, &cvals, fm, &mut rhs);
    loop {
        // v_t at the assembled discounted iterate: the projected residual.
        let mut sup_vt = 0.0f64;
        for (r, f) in rhs.iter().zip(phi.values()) {
            sup_vt = sup_vt.max((r - pass.mean_rhs - lambda * f).abs());
        }
        if sup_vt < opts.stop_tol {
            break;
        }
        if iterations >= opts.max_steps {
            return Err(CoreError::IterationLimit { steps: iterations, residual: sup_vt });
        }
        // In one dimension the diffusion coefficient is 1/(1 + q^2) <= 1, so
        // the step can grow where the slope is steep; in two dimensions the
        // transverse eigenvalue of a(q) is 1 regardless.
        let diffusion_coeff = if n == 1 { 1.0 / (1.0 + pass.min_q_sq) } else { 1.0 };
        let diffusion = opts.safety * h * h / (2.0 * n as f64 * diffusion_coeff);
        let transport = h / (sup_c * libm::sqrt(1.0 + pass.max_q_sq) + 1.0);
        let dt = diffusion.min(transport);
        let mean_rhs = pass.mean_rhs;
        for (f, r) in phi.values_mut().iter_mut().zip(&rhs) {
            *f += dt * (r - mean_rhs - lambda * *f);
        }
        iterations += 1;
        pass = cell_rhs(&phi, p, &cvals, fm, &mut rhs);
        if !pass.mean_rhs.is_finite() {
            return Err(CoreError::Divergence {
                time: iterations as f64 * dt,
                detail: alloc::string::String::from("cell relaxation produced non-finite values"),
            });
        }
    }

    // Steady state: lambda mean(v) = mean(rhs), so Fbar = mean(-lambda v)
    // is just -mean_rhs, and the corrector normalization drops the mean.
    let effective_value = -pass.mean_rhs;
    let origin = phi.value(spec.origin());
    let vals: Vec<f64> = phi.values().iter().map(|v| v - origin).collect();
    let corrector = GridFunction::from_values(*spec, vals)?;

    let mut bounds = CorrectorBounds::default();
    let ext = ExtensionRule::unbounded();
    for i in 0..count {
        let idx = spec.unflat(i);
        bounds.sup_value = bounds.sup_value.max(corrector.value(i).abs());
        let g = grid::central_gradient(&corrector, &idx[..n], Some(&ext))?;
        bounds.sup_gradient = bounds.sup_gradient.max(crate::linalg::norm(n, &g));
        let hess = grid::central_hessian(&corrector, &idx[..n], Some(&ext))?;
        bounds.sup_hessian = bounds.sup_hessian.max(hess.frobenius());
    }

    let mut pfixed = [0.0; MAX_DIM];
    pfixed[..n].copy_from_slice(p);
    Ok(CorrectorSolution {
        p: pfixed,
        corrector,
        effective_value,
        lambda,
        residual: pass.sup_residual,
        iterations,
        bounds,
    })
}

/// Steady state of the discounted cell problem from a cold start.
pub fn solve_discounted(
    p: &[f64],
    lambda: f64,
    fm: &ModifiedForce,
    spec: &GridSpec,
    opts: &CellOptions,
) -> Result<CorrectorSolution> {
    solve_discounted_from(p, lambda, fm, spec, opts, None)
}

/// Warm-started variant for restart experiments and discount chains.
pub fn solve_discounted_with_init(
    p: &[f64],
    lambda: f64,
    fm: &ModifiedForce,
    spec: &GridSpec,
    opts: &CellOptions,
    init: &GridFunction,
) -> Result<CorrectorSolution> {
    solve_discounted_from(p, lambda, fm, spec, opts, Some(init))
}

/// Effective value after extrapolating the discount to zero.
#[derive(Clone, Debug)]
pub struct EffectiveValue {
    pub value: f64,
    /// Largest deviation of the per-discount values from the linear fit.
    pub uncertainty: f64,
    /// Set when the deviation exceeds ten times the stop tolerance.
    pub ill_conditioned: bool,
    pub per_lambda: Vec<(f64, f64)>,
}

/// Solves the discounted problem for every discount in `lambdas` (decreasing,
/// warm-starting each from the last) and extrapolates `-lambda v` to zero
/// discount by a least-squares line in `lambda`.
pub fn effective_value(
    p: &[f64],
    fm: &ModifiedForce,
    spec: &GridSpec,
    lambdas: &[f64],
    opts: &CellOptions,
) -> Result<(EffectiveValue, CorrectorSolution)> {
    if lambdas.len() < 2 {
        return Err(CoreError::invalid("need at least two discounts to extrapolate"));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) || lambdas.iter().any(|&l| l <= 0.0) {
        return Err(CoreError::invalid("discounts must be positive and strictly decreasing"));
    }
    let mut per_lambda = Vec::with_capacity(lambdas.len());
    let mut last: Option<CorrectorSolution> = None;
    for &lambda in lambdas {
        let sol =
            solve_discounted_from(p, lambda, fm, spec, opts, last.as_ref().map(|s| &s.corrector))?;
        per_lambda.push((lambda, sol.effective_value));
        last = Some(sol);
    }
    let (intercept, slope) = fit_line(&per_lambda);
    let uncertainty = per_lambda
        .iter()
        .fold(0.0f64, |m, &(l, v)| m.max((v - (intercept + slope * l)).abs()));
    let ill_conditioned = uncertainty > 10.0 * opts.stop_tol;
    Ok((
        EffectiveValue { value: intercept, uncertainty, ill_conditioned, per_lambda },
        last.expect("at least two discounts were solved"),
    ))
}

/// Least squares `v = a + b l`; returns `(a, b)`.
fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let k = points.len() as f64;
    let sx: f64 = points.iter().map(|(l, _)| l).sum();
    let sy: f64 = points.iter().map(|(_, v)| v).sum();
    let sxx: f64 = points.iter().map(|(l, _)| l * l).sum();
    let sxy: f64 = points.iter().map(|(l, v)| l * v).sum();
    let det = k * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return (sy / k, 0.0);
    }
    let b = (k * sxy - sx * sy) / det;
    let a = (sy - b * sx) / k;
    (a, b)
}

/// Counts interpolation queries that had to clamp the slope to the table range.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClampStats {
    pub clamped: u64,
    pub total: u64,
}

impl ClampStats {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 { 0.0 } else { self.clamped as f64 / self.total as f64 }
    }
}

/// `Fbar` sampled on a uniform slope grid over `[-range, range]^n` with
/// piecewise multilinear interpolation.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonianTable {
    n: usize,
    range: f64,
    samples_per_axis: usize,
    values: Vec<f64>,
    uncertainties: Vec<f64>,
}

impl EffectiveHamiltonianTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.range / (self.samples_per_axis - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn uncertainties(&self) -> &[f64] {
        &self.uncertainties
    }

    /// Sample slope along one axis for index `i`.
    pub fn node(&self, i: usize) -> f64 {
        -self.range + i as f64 * self.spacing()
    }

    pub fn from_raw(
        n: usize,
        range: f64,
        samples_per_axis: usize,
        values: Vec<f64>,
        uncertainties: Vec<f64>,
    ) -> Result<EffectiveHamiltonianTable> {
        crate::linalg::check_dim(n)?;
        if samples_per_axis < 2 {
            return Err(CoreError::invalid("need at least two samples per axis"));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(CoreError::invalid("table range must be positive"));
        }
        let count = samples_per_axis.pow(n as u32);
        if values.len() != count || uncertainties.len() != count {
            return Err(CoreError::invalid("table data does not match its sample counts"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::invalid("table values must be finite"));
        }
        Ok(EffectiveHamiltonianTable { n, range, samples_per_axis, values, uncertainties })
    }

    /// Multilinear interpolation with clamping to the covered range.
    pub fn eval(&self, p: &[f64], stats: &mut ClampStats) -> f64 {
        stats.total += 1;
        let s = self.samples_per_axis;
        let dp = self.spacing();
        let mut t = [0.0f64; MAX_DIM];
        let mut i0 = [0usize; MAX_DIM];
        let mut clamped = false;
        for k in 0..self.n {
            let mut x = p[k];
            if x < -self.range {
                x = -self.range;
                clamped = true;
            } else if x > self.range {
                x = self.range;
                clamped = true;
            }
            let u = (x + self.range) / dp;
            let mut cell = libm::floor(u) as usize;
            if cell > s - 2 {
                cell = s - 2;
            }
            i0[k] = cell;
            t[k] = u - cell as f64;
        }
        if clamped {
            stats.clamped += 1;
        }
        match self.n {
            1 => {
                let v0 = self.values[i0[0]];
                let v1 = self.values[i0[0] + 1];
                v0 + t[0] * (v1 - v0)
            }
            _ => {
                let at = |i: usize, j: usize| self.values[i + self.samples_per_axis * j];
                let v00 = at(i0[0], i0[1]);
                let v10 = at(i0[0] + 1, i0[1]);
                let v01 = at(i0[0], i0[1] + 1);
                let v11 = at(i0[0] + 1, i0[1] + 1);
                let a = v00 + t[0] * (v10 - v00);
                let b = v01 + t[0] * (v11 - v01);
                a + t[1] * (b - a)
            }
        }
    }

    /// Largest finite-difference slope of the table along one axis; the
    /// dissipation bound the effective solver needs.
    pub fn slope_bound(&self, axis: usize) -> f64 {
        let s = self.samples_per_axis;
        let dp = self.spacing();
        let mut worst = 0.0f64;
        match self.n {
            1 => {
                for i in 0..s - 1 {
                    worst = worst.max((self.values[i + 1] - self.values[i]).abs() / dp);
                }
            }
            _ => {
                for j in 0..s {
                    for i in 0..s {
                        if axis == 0 && i + 1 < s {
                            worst = worst
                                .max((self.values[i + 1 + s * j] - self.values[i + s * j]).abs() / dp);
                        }
                        if axis == 1 && j + 1 < s {
                            worst = worst
                                .max((self.values[i + s * (j + 1)] - self.values[i + s * j]).abs() / dp);
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Everything recorded about one table entry beyond the value itself.
#[derive(Clone, Debug)]
pub struct TableEntry {
    pub p: [f64; MAX_DIM],
    pub value: f64,
    pub uncertainty: f64,
    pub ill_conditioned: bool,
    pub residual: f64,
    pub bounds: CorrectorBounds,
}

#[derive(Clone, Debug)]
pub struct TableDiagnostics {
    pub entries: Vec<TableEntry>,
    /// Largest deviation `|Fbar(p) - Fbar(-p)|` over the sample grid;
    /// recorded, never assumed.
    pub parity_deviation: f64,
}

/// Sample slopes for a table build, axis 1 fastest.
pub fn table_nodes(n: usize, range: f64, samples_per_axis: usize) -> Vec<[f64; MAX_DIM]> {
    let dp = 2.0 * range / (samples_per_axis - 1) as f64;
    let count = samples_per_axis.pow(n as u32);
    (0..count)
        .map(|flat| {
            let mut p = [0.0; MAX_DIM];
            p[0] = -range + (flat % samples_per_axis) as f64 * dp;
            if n == 2 {
                p[1] = -range + (flat / samples_per_axis) as f64 * dp;
            }
            p
        })
        .collect()
}

/// One table entry: the vanishing-discount value at `p` plus diagnostics.
pub fn table_entry(
    p: &[f64],
    fm: &ModifiedForce,
    spec: &GridSpec,
    lambdas: &[f64],
    opts: &CellOptions,
) -> Result<TableEntry> {
    let (ev, sol) = effective_value(p, fm, spec, lambdas, opts)?;
    Ok(TableEntry {
        p: sol.p,
        value: ev.value,
        uncertainty: ev.uncertainty,
        ill_conditioned: ev.ill_conditioned,
        residual: sol.residual,
        bounds: sol.bounds,
    })
}

/// Assembles entries into a table, validating the range bound
/// `Fbar(p) in [min(-c~(., p)), max(-c~(., p))] sqrt(1 + |p|^2)` at every
/// sample (1e-6 slack) and recording parity.
pub fn assemble_table(
    fm: &ModifiedForce,
    spec: &GridSpec,
    range: f64,
    samples_per_axis: usize,
    entries: Vec<TableEntry>,
) -> Result<(EffectiveHamiltonianTable, TableDiagnostics)> {
    let n = fm.dim();
    let count = samples_per_axis.pow(n as u32);
    if entries.len() != count {
        return Err(CoreError::invalid("entry count does not match the sample grid"));
    }
    let m = spec.node_count();
    for e in &entries {
        let slope_norm = libm::sqrt(1.0 + crate::linalg::norm_sq(n, &e.p[..n]));
        let mut cmin = f64::INFINITY;
        let mut cmax = f64::NEG_INFINITY;
        for i in 0..m {
            let c = fm.value(&spec.point(i)[..n], &e.p[..n]);
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
        let lo = -cmax * slope_norm;
        let hi = -cmin * slope_norm;
        if e.value < lo - 1e-6 || e.value > hi + 1e-6 {
            return Err(CoreError::TableValidation { p: e.p, value: e.value, lo, hi });
        }
    }

    let values: Vec<f64> = entries.iter().map(|e| e.value).collect();
    let uncertainties: Vec<f64> = entries.iter().map(|e| e.uncertainty).collect();
    let table =
        EffectiveHamiltonianTable::from_raw(n, range, samples_per_axis, values, uncertainties)?;

    let mut parity = 0.0f64;
    let s = samples_per_axis;
    for flat in 0..count {
        let mirrored = match n {
            1 => s - 1 - flat,
            _ => (s - 1 - flat % s) + s * (s - 1 - flat / s),
        };
        parity = parity.max((table.values[flat] - table.values[mirrored]).abs());
    }

    Ok((table, TableDiagnostics { entries, parity_deviation: parity }))
}

/// Builds the full table sequentially. Callers that parallelize run
/// [`table_entry`] per node themselves and assemble the results.
pub fn build_table(
    fm: &ModifiedForce,
    spec: &GridSpec,
    range: f64,
    samples_per_axis: usize,
    lambdas: &[f64],
    opts: &CellOptions,
) -> Result<(EffectiveHamiltonianTable, TableDiagnostics)> {
    if samples_per_axis < 2 {
        return Err(CoreError::invalid("need at least two samples per axis"));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(CoreError::invalid("table range must be positive"));
    }
    let nodes = table_nodes(fm.dim(), range, samples_per_axis);
    let entries = nodes
        .iter()
        .map(|p| table_entry(&p[..fm.dim()], fm, spec, lambdas, opts))
        .collect::<Result<Vec<_>>>()?;
    assemble_table(fm, spec, range, samples_per_axis, entries)
}

/// The three uniform corrector bounds over everything a table build stored.
pub fn corrector_bound_report(diagnostics: &TableDiagnostics) -> CorrectorBounds {
    diagnostics
        .entries
        .iter()
        .fold(CorrectorBounds::default(), |acc, e| acc.max(e.bounds))
}
