//! Periodic forcing fields, the coercivity certificate, and the
//! gradient-cutoff modified force used by the cell problem.
//!
//! Forcing terms are unit-periodic in every axis and independent of the
//! vertical (graph) direction. Built-in parametric families carry analytic
//! derivatives; user closures fall back to finite differences.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{CoreError, Result};
use crate::linalg::{self, Mat, MAX_DIM};

const TAU: f64 = 2.0 * PI;

/// Step used for finite-difference derivatives of custom forces.
const FD_STEP: f64 = 1e-5;

/// One mode of a trigonometric polynomial: `cos_coeff cos(2pi m.y) + sin_coeff sin(2pi m.y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm {
    pub mode: [i32; MAX_DIM],
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

#[derive(Clone)]
pub enum ForceFamily {
    Constant { value: f64 },
    Sinusoid { offset: f64, amplitude: f64, mode: [i32; MAX_DIM], phase: f64 },
    TrigPoly { offset: f64, terms: Vec<TrigTerm> },
    /// Arbitrary unit-periodic closure; derivatives by finite differences.
    Custom { eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> },
}

impl fmt::Debug for ForceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForceFamily::Constant { value } => write!(f, "Constant({value})"),
            ForceFamily::Sinusoid { offset, amplitude, mode, phase } => write!(
                f,
                "Sinusoid(offset={offset}, amplitude={amplitude}, mode={mode:?}, phase={phase})"
            ),
            ForceFamily::TrigPoly { offset, terms } => {
                write!(f, "TrigPoly(offset={offset}, {} terms)", terms.len())
            }
            ForceFamily::Custom { .. } => write!(f, "Custom(..)"),
        }
    }
}

/// A periodic force `c(y)` together with its dimension.
#[derive(Clone, Debug)]
pub struct ForcingField {
    n: usize,
    family: ForceFamily,
}

impl ForcingField {
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        linalg::check_dim(n)?;
        if !value.is_finite() {
            return Err(CoreError::invalid("constant force value must be finite"));
        }
        Ok(ForcingField { n, family: ForceFamily::Constant { value } })
    }

    /// The zero force: plain mean curvature flow.
    pub fn zero(n: usize) -> Self {
        ForcingField { n, family: ForceFamily::Constant { value: 0.0 } }
    }

    pub fn sinusoid(n: usize, offset: f64, amplitude: f64, mode: [i32; MAX_DIM], phase: f64) -> Result<Self> {
        linalg::check_dim(n)?;
        if ![offset, amplitude, phase].iter().all(|v| v.is_finite()) {
            return Err(CoreError::invalid("sinusoid coefficients must be finite"));
        }
        if mode[n..].iter().any(|&k| k != 0) {
            return Err(CoreError::invalid("sinusoid mode has entries beyond the dimension"));
        }
        Ok(ForcingField { n, family: ForceFamily::Sinusoid { offset, amplitude, mode, phase } })
    }

    pub fn trig_poly(n: usize, offset: f64, terms: Vec<TrigTerm>) -> Result<Self> {
        linalg::check_dim(n)?;
        if !offset.is_finite()
            || terms.iter().any(|t| !t.cos_coeff.is_finite() || !t.sin_coeff.is_finite())
        {
            return Err(CoreError::invalid("trig polynomial coefficients must be finite"));
        }
        if terms.iter().any(|t| t.mode[n..].iter().any(|&k| k != 0)) {
            return Err(CoreError::invalid("trig polynomial mode has entries beyond the dimension"));
        }
        Ok(ForcingField { n, family: ForceFamily::TrigPoly { offset, terms } })
    }

    pub fn custom(n: usize, eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>) -> Result<Self> {
        linalg::check_dim(n)?;
        Ok(ForcingField { n, family: ForceFamily::Custom { eval } })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &ForceFamily {
        &self.family
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            ForceFamily::Constant { value } => *value == 0.0,
            ForceFamily::Sinusoid { offset, amplitude, .. } => *offset == 0.0 && *amplitude == 0.0,
            ForceFamily::TrigPoly { offset, terms } => *offset == 0.0 && terms.is_empty(),
            ForceFamily::Custom { .. } => false,
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match &self.family {
            ForceFamily::Constant { value } => *value,
            ForceFamily::Sinusoid { offset, amplitude, mode, phase } => {
                offset + amplitude * libm::sin(TAU * int_dot(self.n, mode, y) + phase)
            }
            ForceFamily::TrigPoly { offset, terms } => {
                let mut s = *offset;
                for t in terms {
                    let arg = TAU * int_dot(self.n, &t.mode, y);
                    s += t.cos_coeff * libm::cos(arg) + t.sin_coeff * libm::sin(arg);
                }
                s
            }
            ForceFamily::Custom { eval } => eval(&y[..self.n]),
        }
    }

    pub fn gradient(&self, y: &[f64]) -> [f64; MAX_DIM] {
        let mut g = [0.0; MAX_DIM];
        match &self.family {
            ForceFamily::Constant { .. } => {}
            ForceFamily::Sinusoid { amplitude, mode, phase, .. } => {
                let d = amplitude * TAU * libm::cos(TAU * int_dot(self.n, mode, y) + phase);
                for k in 0..self.n {
                    g[k] = d * mode[k] as f64;
                }
            }
            ForceFamily::TrigPoly { terms, .. } => {
                for t in terms {
                    let arg = TAU * int_dot(self.n, &t.mode, y);
                    let d = TAU * (-t.cos_coeff * libm::sin(arg) + t.sin_coeff * libm::cos(arg));
                    for k in 0..self.n {
                        g[k] += d * t.mode[k] as f64;
                    }
                }
            }
            ForceFamily::Custom { eval } => {
                let mut ym = [0.0; MAX_DIM];
                ym[..self.n].copy_from_slice(&y[..self.n]);
                for k in 0..self.n {
                    let base = ym[k];
                    ym[k] = base + FD_STEP;
                    let up = eval(&ym[..self.n]);
                    ym[k] = base - FD_STEP;
                    let dn = eval(&ym[..self.n]);
                    ym[k] = base;
                    g[k] = (up - dn) / (2.0 * FD_STEP);
                }
            }
        }
        g
    }

    pub fn hessian(&self, y: &[f64]) -> Mat {
        let n = self.n;
        let mut h = Mat::zeros(n);
        match &self.family {
            ForceFamily::Constant { .. } => {}
            ForceFamily::Sinusoid { amplitude, mode, phase, .. } => {
                let d = -amplitude * TAU * TAU * libm::sin(TAU * int_dot(n, mode, y) + phase);
                for i in 0..n {
                    for j in 0..n {
                        h.set(i, j, d * mode[i] as f64 * mode[j] as f64);
                    }
                }
            }
            ForceFamily::TrigPoly { terms, .. } => {
                for t in terms {
                    let arg = TAU * int_dot(n, &t.mode, y);
                    let d = -TAU * TAU * (t.cos_coeff * libm::cos(arg) + t.sin_coeff * libm::sin(arg));
                    for i in 0..n {
                        for j in 0..n {
                            h.set(i, j, h.get(i, j) + d * t.mode[i] as f64 * t.mode[j] as f64);
                        }
                    }
                }
            }
            ForceFamily::Custom { eval } => {
                let mut ym = [0.0; MAX_DIM];
                ym[..n].copy_from_slice(&y[..n]);
                let c0 = eval(&ym[..n]);
                for i in 0..n {
                    let bi = ym[i];
                    ym[i] = bi + FD_STEP;
                    let up = eval(&ym[..n]);
                    ym[i] = bi - FD_STEP;
                    let dn = eval(&ym[..n]);
                    ym[i] = bi;
                    h.set(i, i, (up - 2.0 * c0 + dn) / (FD_STEP * FD_STEP));
                }
                if n == 2 {
                    let (bx, by) = (ym[0], ym[1]);
                    let mut at = |sx: f64, sy: f64| {
                        ym[0] = bx + sx * FD_STEP;
                        ym[1] = by + sy * FD_STEP;
                        eval(&ym[..2])
                    };
                    let mixed = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0))
                        / (4.0 * FD_STEP * FD_STEP);
                    h.set(0, 1, mixed);
                    h.set(1, 0, mixed);
                }
            }
        }
        h
    }

    /// (min, max) of the force over one period; analytic where the family
    /// allows, dense sampling otherwise.
    pub fn value_range(&self) -> (f64, f64) {
        match &self.family {
            ForceFamily::Constant { value } => (*value, *value),
            ForceFamily::Sinusoid { offset, amplitude, mode, phase } => {
                if mode[..self.n].iter().all(|&k| k == 0) {
                    let v = offset + amplitude * libm::sin(*phase);
                    (v, v)
                } else {
                    (offset - amplitude.abs(), offset + amplitude.abs())
                }
            }
            _ => self.sampled_range(),
        }
    }

    fn sampled_range(&self) -> (f64, f64) {
        let m: usize = if self.n == 1 { 8192 } else { 256 };
        let h = 1.0 / m as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let total = m.pow(self.n as u32);
        let mut y = [0.0; MAX_DIM];
        for flat in 0..total {
            y[0] = (flat % m) as f64 * h;
            if self.n == 2 {
                y[1] = (flat / m) as f64 * h;
            }
            let v = self.value(&y[..self.n]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Upper bound for `sup |c|`.
    pub fn sup_value_bound(&self) -> f64 {
        match &self.family {
            ForceFamily::Constant { value } => value.abs(),
            ForceFamily::Sinusoid { offset, amplitude, .. } => offset.abs() + amplitude.abs(),
            ForceFamily::TrigPoly { offset, terms } => {
                offset.abs() + terms.iter().map(|t| libm::hypot(t.cos_coeff, t.sin_coeff)).sum::<f64>()
            }
            ForceFamily::Custom { .. } => {
                let (lo, hi) = self.sampled_range();
                lo.abs().max(hi.abs())
            }
        }
    }

    /// Upper bound for `sup |Dc|`.
    pub fn sup_gradient_bound(&self) -> f64 {
        match &self.family {
            ForceFamily::Constant { .. } => 0.0,
            ForceFamily::Sinusoid { amplitude, mode, .. } => {
                amplitude.abs() * TAU * int_norm(self.n, mode)
            }
            ForceFamily::TrigPoly { terms, .. } => terms
                .iter()
                .map(|t| TAU * int_norm(self.n, &t.mode) * libm::hypot(t.cos_coeff, t.sin_coeff))
                .sum(),
            ForceFamily::Custom { .. } => self.sampled_sup(|y| linalg::norm(self.n, &self.gradient(y))),
        }
    }

    /// Upper bound for `sup ||D^2 c||` (Frobenius).
    pub fn sup_hessian_bound(&self) -> f64 {
        match &self.family {
            ForceFamily::Constant { .. } => 0.0,
            ForceFamily::Sinusoid { amplitude, mode, .. } => {
                let k2 = int_norm(self.n, mode);
                amplitude.abs() * TAU * TAU * k2 * k2
            }
            ForceFamily::TrigPoly { terms, .. } => terms
                .iter()
                .map(|t| {
                    let k = int_norm(self.n, &t.mode);
                    TAU * TAU * k * k * libm::hypot(t.cos_coeff, t.sin_coeff)
                })
                .sum(),
            ForceFamily::Custom { .. } => self.sampled_sup(|y| self.hessian(y).frobenius()),
        }
    }

    fn sampled_sup(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let m: usize = if self.n == 1 { 2048 } else { 128 };
        let h = 1.0 / m as f64;
        let mut sup: f64 = 0.0;
        let total = m.pow(self.n as u32);
        let mut y = [0.0; MAX_DIM];
        for flat in 0..total {
            y[0] = (flat % m) as f64 * h;
            if self.n == 2 {
                y[1] = (flat / m) as f64 * h;
            }
            sup = sup.max(f(&y[..self.n]).abs());
        }
        sup
    }

    /// Estimate of the C^2 norm, `sup|c| + sup|Dc| + sup||D^2c||`.
    pub fn c2_norm_bound(&self) -> f64 {
        self.sup_value_bound() + self.sup_gradient_bound() + self.sup_hessian_bound()
    }
}

fn int_dot(n: usize, k: &[i32; MAX_DIM], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += k[i] as f64 * y[i];
    }
    s
}

fn int_norm(n: usize, k: &[i32; MAX_DIM]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += (k[i] as f64) * (k[i] as f64);
    }
    libm::sqrt(s)
}

/// Evidence that `c^2 - (n-1)|Dc| > delta` held on a sample grid with a
/// Lipschitz safety margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivityCertificate {
    pub delta: f64,
    /// Minimum of `c^2 - (n-1)|Dc|` over the sample grid.
    pub min_margin: f64,
    /// Spacing of the sample grid actually used.
    pub sample_resolution: f64,
}

/// Evaluates the coercivity margin on a uniform torus grid at the requested
/// spacing. Succeeds only if the sampled minimum clears `delta` by a slack
/// covering the margin's Lipschitz constant between samples.
pub fn check_coercivity(force: &ForcingField, delta: f64, resolution: f64) -> Result<CoercivityCertificate> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CoreError::invalid("delta must be positive and finite"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(CoreError::invalid("sample resolution must be positive"));
    }
    let n = force.dim();
    let m = libm::ceil(1.0 / resolution).max(8.0) as usize;
    let h = 1.0 / m as f64;

    let mut min_margin = f64::INFINITY;
    let mut worst = [0.0; MAX_DIM];
    let total = m.pow(n as u32);
    let mut y = [0.0; MAX_DIM];
    for flat in 0..total {
        y[0] = (flat % m) as f64 * h;
        if n == 2 {
            y[1] = (flat / m) as f64 * h;
        }
        let c = force.value(&y[..n]);
        let margin = if n == 1 {
            c * c
        } else {
            c * c - (n - 1) as f64 * linalg::norm(n, &force.gradient(&y[..n]))
        };
        if margin < min_margin {
            min_margin = margin;
            worst = y;
        }
    }

    // The margin's Lipschitz constant is at most 2 sup|c| sup|Dc| + (n-1) sup|D^2 c|;
    // the farthest a point can sit from a sample is h sqrt(n) / 2.
    let lip = 2.0 * force.sup_value_bound() * force.sup_gradient_bound()
        + (n - 1) as f64 * force.sup_hessian_bound();
    let slack = lip * h * libm::sqrt(n as f64) / 2.0;

    if min_margin - slack > delta {
        Ok(CoercivityCertificate { delta, min_margin, sample_resolution: h })
    } else {
        Err(CoreError::CoercivityViolation { margin: min_margin, delta, at: worst })
    }
}

/// The force with its value frozen to a constant beyond a gradient cutoff.
///
/// `value(y, p) = xi(sqrt(1+|p|^2)) c(y) + (1 - xi(...)) c0`, where `xi` is a
/// quintic smoothstep equal to 1 up to `sqrt(1+M^2)+1` and 0 from
/// `sqrt(1+M^2)+2` on, and `c0` is `sup c` for positive forces, `inf c` for
/// negative ones.
#[derive(Clone, Debug)]
pub struct ModifiedForce {
    base: ForcingField,
    gradient_bound: f64,
    saturation: f64,
    delta: f64,
}

/// Builds the cutoff modification. Requires a coercivity certificate for the
/// base force; the constant sign it guarantees selects the saturation value.
pub fn build_modified_force(
    force: &ForcingField,
    gradient_bound: f64,
    certificate: &CoercivityCertificate,
) -> Result<ModifiedForce> {
    if !(gradient_bound > 0.0 && gradient_bound.is_finite()) {
        return Err(CoreError::invalid("gradient bound M must be positive"));
    }
    let (lo, hi) = force.value_range();
    let saturation = if lo > 0.0 {
        hi
    } else if hi < 0.0 {
        lo
    } else {
        return Err(CoreError::invalid(
            "force is not of constant sign; the coercivity certificate cannot be valid",
        ));
    };
    let fm = ModifiedForce {
        base: force.clone(),
        gradient_bound,
        saturation,
        delta: certificate.delta,
    };
    // The cutoff mixes c with a saturation of the same sign and never
    // increases |D_y c|, so the margin survives; verified on a sample grid.
    let margin = fm.min_modified_margin(certificate.sample_resolution);
    if margin <= certificate.delta {
        return Err(CoreError::CoercivityViolation {
            margin,
            delta: certificate.delta,
            at: [0.0; MAX_DIM],
        });
    }
    Ok(fm)
}

impl ModifiedForce {
    pub fn base(&self) -> &ForcingField {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// The saturation constant `c0`.
    pub fn saturation(&self) -> f64 {
        self.saturation
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `xi = 1` for all slope magnitudes `sqrt(1+|p|^2)` up to this radius.
    pub fn plateau_radius(&self) -> f64 {
        libm::sqrt(1.0 + self.gradient_bound * self.gradient_bound) + 1.0
    }

    /// `xi = 0` from this radius on.
    pub fn cutoff_radius(&self) -> f64 {
        self.plateau_radius() + 1.0
    }

    /// The cutoff profile: quintic smoothstep, 1 on the plateau, 0 past the cutoff.
    pub fn cutoff(&self, r: f64) -> f64 {
        let r0 = self.plateau_radius();
        if r <= r0 {
            1.0
        } else if r >= r0 + 1.0 {
            0.0
        } else {
            let t = r - r0;
            1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)
        }
    }

    /// `c~(y, p)` for a slope vector `p`.
    pub fn value(&self, y: &[f64], slope: &[f64]) -> f64 {
        let r = libm::sqrt(1.0 + linalg::norm_sq(self.dim(), slope));
        self.value_scaled(self.base.value(y), r)
    }

    /// Hot-path variant taking a precomputed `c(y)` and `r = sqrt(1+|p|^2)`.
    #[inline]
    pub fn value_scaled(&self, c_at_y: f64, r: f64) -> f64 {
        let xi = self.cutoff(r);
        xi * c_at_y + (1.0 - xi) * self.saturation
    }

    /// `D_y c~(y, p) = xi(sqrt(1+|p|^2)) Dc(y)`.
    pub fn gradient_y(&self, y: &[f64], slope: &[f64]) -> [f64; MAX_DIM] {
        let r = libm::sqrt(1.0 + linalg::norm_sq(self.dim(), slope));
        let xi = self.cutoff(r);
        let mut g = self.base.gradient(y);
        for gk in g.iter_mut() {
            *gk *= xi;
        }
        g
    }

    /// Minimum of the modified margin `c~^2 - (n-1)|D_y c~|` over a sample
    /// grid in `y` and the full range of the cutoff.
    fn min_modified_margin(&self, resolution: f64) -> f64 {
        let n = self.dim();
        let m = libm::ceil(1.0 / resolution).max(8.0) as usize;
        let h = 1.0 / m as f64;
        let total = m.pow(n as u32);
        let mut y = [0.0; MAX_DIM];
        let mut min_margin = f64::INFINITY;
        for flat in 0..total {
            y[0] = (flat % m) as f64 * h;
            if n == 2 {
                y[1] = (flat / m) as f64 * h;
            }
            let c = self.base.value(&y[..n]);
            let dc = linalg::norm(n, &self.base.gradient(&y[..n]));
            // xi sweeps [0, 1] as the slope runs through the transition band.
            for step in 0..=8 {
                let xi = step as f64 / 8.0;
                let cm = xi * c + (1.0 - xi) * self.saturation;
                let margin = cm * cm - (n - 1) as f64 * xi * dc;
                min_margin = min_margin.min(margin);
            }
        }
        min_margin
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sinusoid_1d() -> ForcingField {
        ForcingField::sinusoid(1, 1.0, 0.5, [1, 0], 0.0).unwrap()
    }

    #[test]
    fn periodicity_by_sampling() {
        let f = sinusoid_1d();
        for i in 0..17 {
            let y = -1.0 + 0.13 * i as f64;
            assert!((f.value(&[y]) - f.value(&[y + 1.0])).abs() < 1e-12);
            assert!((f.value(&[y]) - f.value(&[y - 3.0])).abs() < 1e-12);
        }
        let g = ForcingField::trig_poly(
            2,
            0.5,
            vec![TrigTerm { mode: [1, 2], cos_coeff: 0.1, sin_coeff: -0.2 }],
        )
        .unwrap();
        for i in 0..9 {
            let y = [0.21 * i as f64, -0.37 * i as f64];
            let shifted = [y[0] + 2.0, y[1] - 1.0];
            assert!((g.value(&y) - g.value(&shifted)).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let f = ForcingField::trig_poly(
            2,
            1.2,
            vec![
                TrigTerm { mode: [1, 0], cos_coeff: 0.2, sin_coeff: 0.1 },
                TrigTerm { mode: [1, 1], cos_coeff: -0.05, sin_coeff: 0.15 },
            ],
        )
        .unwrap();
        let y = [0.3, 0.7];
        let mut prev_grad_err = f64::INFINITY;
        let mut prev_hess_err = f64::INFINITY;
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let mut grad_err: f64 = 0.0;
            let g = f.gradient(&y);
            for k in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[k] += h;
                ym[k] -= h;
                let fd = (f.value(&yp) - f.value(&ym)) / (2.0 * h);
                grad_err = grad_err.max((fd - g[k]).abs());
            }
            let hess = f.hessian(&y);
            let fd_xx = (f.value(&[y[0] + h, y[1]]) - 2.0 * f.value(&y) + f.value(&[y[0] - h, y[1]]))
                / (h * h);
            let fd_xy = (f.value(&[y[0] + h, y[1] + h]) - f.value(&[y[0] + h, y[1] - h])
                - f.value(&[y[0] - h, y[1] + h])
                + f.value(&[y[0] - h, y[1] - h]))
                / (4.0 * h * h);
            let hess_err = (fd_xx - hess.get(0, 0)).abs().max((fd_xy - hess.get(0, 1)).abs());
            // O(h^2): each halving should shrink errors by ~4.
            assert!(grad_err < prev_grad_err / 3.0 + 1e-13);
            assert!(hess_err < prev_hess_err / 3.0 + 1e-10);
            prev_grad_err = grad_err;
            prev_hess_err = hess_err;
        }
    }

    #[test]
    fn coercivity_sinusoid_certificate() {
        let cert = check_coercivity(&sinusoid_1d(), 0.2, 1.0 / 1024.0).unwrap();
        // min over the grid of (1 + 0.5 sin)^2 = 0.25, attained at y = 3/4.
        assert!((cert.min_margin - 0.25).abs() < 1e-9);
        assert!((cert.sample_resolution - 1.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn coercivity_constant_force() {
        let f = ForcingField::constant(2, 2.0).unwrap();
        let cert = check_coercivity(&f, 1.0, 1.0 / 64.0).unwrap();
        assert!((cert.min_margin - 4.0).abs() < 1e-12);
    }

    #[test]
    fn coercivity_sign_changing_force_fails() {
        let f = ForcingField::sinusoid(1, 0.0, 1.0, [1, 0], 0.0).unwrap();
        let err = check_coercivity(&f, 0.1, 1.0 / 512.0).unwrap_err();
        match err {
            CoreError::CoercivityViolation { margin, .. } => assert!(margin < 0.1),
            other => panic!("expected coercivity violation, got {other:?}"),
        }
    }

    #[test]
    fn modified_force_plateau_and_cutoff() {
        let f = sinusoid_1d();
        let cert = check_coercivity(&f, 0.2, 1.0 / 512.0).unwrap();
        let fm = build_modified_force(&f, 2.0, &cert).unwrap();
        assert_eq!(fm.saturation(), 1.5); // c > 0, so c0 = sup c

        // On the plateau the modification is invisible.
        let y = [0.3];
        for &p in &[0.0, 1.0, 2.0] {
            assert_eq!(fm.value(&y, &[p]), f.value(&y));
        }
        // Far beyond the cutoff only the saturation remains.
        assert_eq!(fm.value(&y, &[50.0]), 1.5);
        // In between, the value stays inside [min c, max c].
        for i in 0..60 {
            let p = 0.1 * i as f64;
            let v = fm.value(&y, &[p]);
            assert!((0.5..=1.5).contains(&v), "out of range at p = {p}: {v}");
        }
    }

    #[test]
    fn modified_force_periodicity_and_margin() {
        let f = sinusoid_1d();
        let cert = check_coercivity(&f, 0.2, 1.0 / 512.0).unwrap();
        let fm = build_modified_force(&f, 2.0, &cert).unwrap();
        for i in 0..13 {
            let y = 0.17 * i as f64;
            let p = [0.5 * i as f64];
            assert!((fm.value(&[y], &p) - fm.value(&[y + 1.0], &p)).abs() < 1e-12);
        }
        assert!(fm.min_modified_margin(1.0 / 512.0) > 0.2);
    }

    #[test]
    fn negative_force_saturates_at_infimum() {
        let f = ForcingField::sinusoid(1, -1.0, 0.25, [1, 0], 0.0).unwrap();
        let cert = check_coercivity(&f, 0.3, 1.0 / 512.0).unwrap();
        let fm = build_modified_force(&f, 1.0, &cert).unwrap();
        assert_eq!(fm.saturation(), -1.25);
    }

    #[test]
    fn cutoff_profile_shape() {
        let f = sinusoid_1d();
        let cert = check_coercivity(&f, 0.2, 1.0 / 512.0).unwrap();
        let fm = build_modified_force(&f, 3.0, &cert).unwrap();
        let r0 = fm.plateau_radius();
        assert_eq!(fm.cutoff(r0), 1.0);
        assert_eq!(fm.cutoff(r0 + 1.0), 0.0);
        assert!((fm.cutoff(r0 + 0.5) - 0.5).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 1..=20 {
            let v = fm.cutoff(r0 + i as f64 / 20.0);
            assert!(v <= prev + 1e-15, "cutoff must be monotone");
            prev = v;
        }
    }

    #[test]
    fn custom_force_finite_difference_fallback() {
        let f = ForcingField::custom(1, Arc::new(|y: &[f64]| 1.0 + 0.5 * libm::sin(TAU * y[0]))).unwrap();
        let g = f.gradient(&[0.1]);
        let exact = 0.5 * TAU * libm::cos(TAU * 0.1);
        assert!((g[0] - exact).abs() < 1e-6);
        let (lo, hi) = f.value_range();
        assert!((lo - 0.5).abs() < 1e-5 && (hi - 1.5).abs() < 1e-5);
    }
}
