//! The quasilinear graph operator
//! `F(X, p, y) = -tr{(I - p (x) p / (1+|p|^2)) X} - c(y) sqrt(1+|p|^2)`
//! and its gradient-cutoff modification.
//!
//! The operator is degenerate elliptic: growing the Hessian argument can only
//! decrease the value. Solvers rely on this monotonicity, and the property
//! tests below pin it down.

use crate::error::{CoreError, Result};
use crate::force::{ForcingField, ModifiedForce};
use crate::linalg::{self, Mat};

/// Relative tolerance for Hessian symmetry; inputs come from symmetric
/// stencils, so anything larger signals a bug upstream.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// The projection-like matrix `I - p (x) p / (1+|p|^2)`.
///
/// Symmetric with eigenvalues 1 (transverse to `p`) and `1/(1+|p|^2)` (along
/// `p`), so it stays uniformly positive for bounded slopes.
pub fn projection_matrix(p: &[f64]) -> Result<Mat> {
    let n = p.len();
    linalg::check_dim(n)?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::invalid("projection matrix argument must be finite"));
    }
    let s = 1.0 + linalg::norm_sq(n, p);
    let mut m = Mat::identity(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, m.get(i, j) - p[i] * p[j] / s);
        }
    }
    Ok(m)
}

fn check_inputs(hess: &Mat, grad: &[f64], y: &[f64], n: usize) -> Result<()> {
    if hess.n() != n || grad.len() != n || y.len() != n {
        return Err(CoreError::invalid("operator arguments disagree on the dimension"));
    }
    if !hess.is_finite() || grad.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(CoreError::invalid("operator arguments must be finite"));
    }
    let asym = hess.max_asymmetry();
    if asym > SYMMETRY_TOL * (1.0 + hess.frobenius()) {
        return Err(CoreError::invalid("Hessian argument is not symmetric"));
    }
    Ok(())
}

/// `F(X, p, y)` with the raw force.
pub fn evaluate(hess: &Mat, grad: &[f64], y: &[f64], force: &ForcingField) -> Result<f64> {
    let n = force.dim();
    check_inputs(hess, grad, y, n)?;
    Ok(-curvature_trace(n, hess, grad) - force.value(y) * slope_factor(n, grad))
}

/// The modified operator: the force is evaluated as `c~(y, p)`.
pub fn evaluate_modified(hess: &Mat, grad: &[f64], y: &[f64], fm: &ModifiedForce) -> Result<f64> {
    let n = fm.dim();
    check_inputs(hess, grad, y, n)?;
    Ok(-curvature_trace(n, hess, grad) - fm.value(y, grad) * slope_factor(n, grad))
}

/// `sqrt(1 + |p|^2)`, the area element of the graph.
#[inline]
pub fn slope_factor(n: usize, grad: &[f64]) -> f64 {
    libm::sqrt(1.0 + linalg::norm_sq(n, grad))
}

/// `tr{a(p) X} = tr X - p^T X p / (1+|p|^2)`, without forming `a(p)`.
#[inline]
pub fn curvature_trace(n: usize, hess: &Mat, grad: &[f64]) -> f64 {
    hess.trace() - hess.quad_form(grad) / (1.0 + linalg::norm_sq(n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use homog_mcf_testkit::rng::SplitMix64;

    #[test]
    fn projection_identity_at_zero_slope() {
        let a = projection_matrix(&[0.0, 0.0]).unwrap();
        assert_eq!(a, Mat::identity(2));
    }

    #[test]
    fn projection_scalar_case() {
        let a = projection_matrix(&[1.0]).unwrap();
        assert!((a.get(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_eigen_structure() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let p = [rng.range(-4.0, 4.0), rng.range(-4.0, 4.0)];
            let a = projection_matrix(&p).unwrap();
            assert!(a.max_asymmetry() == 0.0);
            let s = 1.0 + p[0] * p[0] + p[1] * p[1];
            // a(p) p = p / (1+|p|^2)
            for i in 0..2 {
                let api = a.get(i, 0) * p[0] + a.get(i, 1) * p[1];
                assert!((api - p[i] / s).abs() < 1e-12);
            }
            // Rayleigh quotients stay within the eigenvalue interval [1/s, 1].
            for _ in 0..8 {
                let v = [rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
                let vv = v[0] * v[0] + v[1] * v[1];
                if vv < 1e-12 {
                    continue;
                }
                let q = a.quad_form(&v) / vv;
                assert!(q >= 1.0 / s - 1e-12 && q <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn projection_rejects_nonfinite() {
        assert!(projection_matrix(&[f64::NAN]).is_err());
        assert!(projection_matrix(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn projection_lipschitz_in_slope() {
        // ||a(p) - a(q)|| <= C |p - q| with a moderate measured constant.
        let mut rng = SplitMix64::new(11);
        let mut measured: f64 = 0.0;
        for _ in 0..500 {
            let p = [rng.range(-3.0, 3.0), rng.range(-3.0, 3.0)];
            let q = [p[0] + rng.range(-0.5, 0.5), p[1] + rng.range(-0.5, 0.5)];
            let dp = libm::sqrt((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2));
            if dp < 1e-9 {
                continue;
            }
            let d = projection_matrix(&p).unwrap().add(&projection_matrix(&q).unwrap().scaled(-1.0));
            measured = measured.max(d.frobenius() / dp);
        }
        assert!(measured < 3.0, "measured Lipschitz constant {measured}");
    }

    #[test]
    fn operator_reference_values() {
        let c1 = ForcingField::constant(2, 1.0).unwrap();
        let v = evaluate(&Mat::zeros(2), &[0.0, 0.0], &[0.2, 0.4], &c1).unwrap();
        assert!((v - (-1.0)).abs() < 1e-15);

        let c0 = ForcingField::zero(2);
        let v = evaluate(&Mat::identity(2), &[0.0, 0.0], &[0.0, 0.0], &c0).unwrap();
        assert!((v - (-2.0)).abs() < 1e-15);

        // n = 1: F([2], 1, y) with c = 1 is -2 * 1/2 - sqrt(2).
        let c1d = ForcingField::constant(1, 1.0).unwrap();
        let x = Mat::from_rows(1, &[2.0]).unwrap();
        let v = evaluate(&x, &[1.0], &[0.0], &c1d).unwrap();
        assert!((v - (-1.0 - libm::sqrt(2.0))).abs() < 1e-12);
    }

    #[test]
    fn operator_rejects_asymmetric_hessian() {
        let c = ForcingField::constant(2, 1.0).unwrap();
        let x = Mat::from_rows(2, &[1.0, 0.5, 0.5 + 1e-6, 1.0]).unwrap();
        assert!(evaluate(&x, &[0.0, 0.0], &[0.0, 0.0], &c).is_err());
    }

    #[test]
    fn degenerate_ellipticity() {
        // X <= Y (Y - X positive semidefinite) implies F(X, ..) >= F(Y, ..).
        let force = ForcingField::sinusoid(2, 1.0, 0.3, [1, 1], 0.4).unwrap();
        let mut rng = SplitMix64::new(23);
        for _ in 0..300 {
            let x = random_symmetric(&mut rng);
            let b = [rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
            // Rank-one PSD bump: Y = X + b b^T.
            let mut y = x;
            for i in 0..2 {
                for j in 0..2 {
                    y.set(i, j, y.get(i, j) + b[i] * b[j]);
                }
            }
            let p = [rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)];
            let site = [rng.range(0.0, 1.0), rng.range(0.0, 1.0)];
            let fx = evaluate(&x, &p, &site, &force).unwrap();
            let fy = evaluate(&y, &p, &site, &force).unwrap();
            assert!(fx >= fy - 1e-12, "ellipticity violated: {fx} < {fy}");
        }
    }

    #[test]
    fn modified_operator_agrees_on_plateau() {
        let force = ForcingField::sinusoid(1, 1.0, 0.5, [1, 0], 0.0).unwrap();
        let cert = crate::force::check_coercivity(&force, 0.2, 1.0 / 512.0).unwrap();
        let fm = crate::force::build_modified_force(&force, 2.0, &cert).unwrap();
        let x = Mat::from_rows(1, &[0.7]).unwrap();
        let raw = evaluate(&x, &[1.5], &[0.3], &force).unwrap();
        let modified = evaluate_modified(&x, &[1.5], &[0.3], &fm).unwrap();
        assert_eq!(raw, modified);
        // Far past the cutoff the force saturates at c0 = 1.5.
        let far = evaluate_modified(&x, &[40.0], &[0.3], &fm).unwrap();
        let expect = -curvature_trace(1, &x, &[40.0]) - 1.5 * slope_factor(1, &[40.0]);
        assert!((far - expect).abs() < 1e-12);
    }

    fn random_symmetric(rng: &mut SplitMix64) -> Mat {
        let d = rng.range(-2.0, 2.0);
        let e = rng.range(-2.0, 2.0);
        let o = rng.range(-2.0, 2.0);
        Mat::from_rows(2, &[d, o, o, e]).unwrap()
    }
}
