//! Tiny dense matrices and vectors for the desk-scale dimensions n = 1, 2.
//!
//! Everything is stack-allocated so the solver hot loops stay allocation-free.
//! Points and gradients are carried as `[f64; MAX_DIM]` with only the first
//! `n` entries meaningful.

use crate::error::{CoreError, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Checks a dimension argument once at a public entry point.
pub fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(CoreError::invalid("dimension must be 1 or 2"));
    }
    Ok(())
}

pub fn dot(n: usize, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..n {
        s += a[k] * b[k];
    }
    s
}

pub fn norm_sq(n: usize, a: &[f64]) -> f64 {
    dot(n, a, a)
}

pub fn norm(n: usize, a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(n, a))
}

/// Dense square matrix, row-major, n <= 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    a: [f64; MAX_DIM * MAX_DIM],
}

impl Mat {
    pub fn zeros(n: usize) -> Mat {
        debug_assert!(n >= 1 && n <= MAX_DIM);
        Mat { n, a: [0.0; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(n: usize, rows: &[f64]) -> Result<Mat> {
        check_dim(n)?;
        if rows.len() != n * n {
            return Err(CoreError::invalid("matrix data length does not match dimension"));
        }
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rows[i * n + j]);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * MAX_DIM + j] = v;
    }

    pub fn trace(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.get(i, i);
        }
        s
    }

    /// Frobenius norm, the matrix norm used throughout the estimates.
    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * self.get(i, j);
            }
        }
        libm::sqrt(s)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if !self.get(i, j).is_finite() {
                    return false;
                }
            }
        }
        true
    }

    /// tr(self * other).
    pub fn trace_product(&self, other: &Mat) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * other.get(j, i);
            }
        }
        s
    }

    /// Quadratic form v^T self v.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += v[i] * self.get(i, j) * v[j];
            }
        }
        s
    }

    pub fn scaled(&self, s: f64) -> Mat {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.set(i, j, self.get(i, j) * s);
            }
        }
        m
    }

    pub fn add(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.n, other.n);
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.set(i, j, self.get(i, j) + other.get(i, j));
            }
        }
        m
    }
}
