//! Shooting oracle for the self-similar expander of one-dimensional graph
//! curve shortening flow emanating from the cone |x|.
//!
//! The profile `g` of the expanding solution `w(x, t) = sqrt(t) g(x / sqrt(t))`
//! satisfies
//!
//! ```text
//! g'' = (1 + g'^2) (g - eta g') / 2,    g(0) = alpha,  g'(0) = 0,
//! ```
//!
//! and matching the cone at infinity selects the unique `alpha` with
//! `g'(+inf) = 1`. The quantity `g - eta g'` is positive and decreasing along
//! admissible trajectories, so `g'` increases to a limit that is monotone in
//! `alpha`; bisection on that limit pins `alpha` down. Everything here is
//! plain RK4 arithmetic, independent of any grid solver.

const ETA_MAX: f64 = 10.0;
const STEP: f64 = 1.0e-3;

/// Integrates the profile ODE from the axis and reports the slope reached at
/// `ETA_MAX` (capped when the slope blows up, which happens for alpha above
/// the critical value).
fn terminal_slope(alpha: f64) -> f64 {
    let mut g = alpha;
    let mut dg = 0.0;
    let mut eta = 0.0;
    let accel = |eta: f64, g: f64, dg: f64| (1.0 + dg * dg) * (g - eta * dg) / 2.0;
    while eta < ETA_MAX {
        if dg > 10.0 {
            return dg;
        }
        let k1g = dg;
        let k1d = accel(eta, g, dg);
        let k2g = dg + 0.5 * STEP * k1d;
        let k2d = accel(eta + 0.5 * STEP, g + 0.5 * STEP * k1g, dg + 0.5 * STEP * k1d);
        let k3g = dg + 0.5 * STEP * k2d;
        let k3d = accel(eta + 0.5 * STEP, g + 0.5 * STEP * k2g, dg + 0.5 * STEP * k2d);
        let k4g = dg + STEP * k3d;
        let k4d = accel(eta + STEP, g + STEP * k3g, dg + STEP * k3d);
        g += STEP / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        dg += STEP / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        eta += STEP;
    }
    dg
}

/// The expander height at the origin at unit time, `g(0)` for the profile
/// with far-field slope 1.
pub fn origin_height() -> f64 {
    let mut lo = 1.0e-3;
    let mut hi = 4.0;
    debug_assert!(terminal_slope(lo) < 1.0 && terminal_slope(hi) > 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if terminal_slope(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1.0e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}
