//! Front-tracking solution for the one-dimensional effective equation
//! `u_t - sqrt(1 + u_x^2) = 0` started from the corner `u_0(x) = -|x|`.
//!
//! The subgraph expands at unit normal speed: the straight sides translate to
//! `-|x| + sqrt(2) t`, and the convex corner at the origin opens into a
//! circular arc of radius `t`. The two pieces meet at `|x| = t / sqrt(2)`.

use std::f64::consts::SQRT_2;

/// Exact viscosity solution at `(x, t)`, `t >= 0`.
pub fn expanding_corner(x: f64, t: f64) -> f64 {
    let ax = x.abs();
    if ax >= t / SQRT_2 {
        -ax + SQRT_2 * t
    } else {
        (t * t - x * x).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_initial_data() {
        for i in -10..=10 {
            let x = i as f64 * 0.3;
            assert_eq!(expanding_corner(x, 0.0), -x.abs());
        }
    }

    #[test]
    fn satisfies_equation_away_from_junctions() {
        // Check u_t = sqrt(1 + u_x^2) by centered differences on both pieces.
        let h = 1e-6;
        for &(x, t) in &[(1.0, 0.5), (-2.0, 0.7), (0.1, 0.9), (0.0, 1.0)] {
            let ut = (expanding_corner(x, t + h) - expanding_corner(x, t - h)) / (2.0 * h);
            let ux = (expanding_corner(x + h, t) - expanding_corner(x - h, t)) / (2.0 * h);
            assert!(
                (ut - (1.0 + ux * ux).sqrt()).abs() < 1e-5,
                "equation residual at ({x}, {t})"
            );
        }
    }

    #[test]
    fn pieces_join_continuously() {
        let t = 0.8;
        let xj = t / SQRT_2;
        let inside = expanding_corner(xj - 1e-9, t);
        let outside = expanding_corner(xj + 1e-9, t);
        assert!((inside - outside).abs() < 1e-8);
    }
}
