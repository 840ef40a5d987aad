//! Uniform grids on the unit torus or a truncated box, scalar fields on
//! them, and the second-order stencils and discrete norms every solver uses.
//!
//! Layout is row-major with axis 1 fastest (`flat = i1 + m * i2`), fixed so
//! exported tables are reproducible. Box grids carry points
//! `x_i = -L + i h` with `h = 2L / m`; the right endpoint is the ghost of the
//! next cell, and `m` is kept even so the origin is a grid node.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::linalg::{self, Mat, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Topology {
    /// Unit period in every axis.
    Torus,
    /// The box `[-extent, extent]^n` with Lipschitz extension beyond.
    Box { extent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    topology: Topology,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn torus(n: usize, points_per_axis: usize) -> Result<GridSpec> {
        linalg::check_dim(n)?;
        if points_per_axis < 8 {
            return Err(CoreError::invalid("need at least 8 points per axis"));
        }
        Ok(GridSpec { n, topology: Topology::Torus, points_per_axis })
    }

    pub fn boxed(n: usize, points_per_axis: usize, extent: f64) -> Result<GridSpec> {
        linalg::check_dim(n)?;
        if points_per_axis < 8 {
            return Err(CoreError::invalid("need at least 8 points per axis"));
        }
        if points_per_axis % 2 != 0 {
            return Err(CoreError::invalid("box grids need an even point count so 0 is a node"));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(CoreError::invalid("box extent must be positive"));
        }
        Ok(GridSpec { n, topology: Topology::Box { extent }, points_per_axis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing; `h * points_per_axis` spans one period or the box width.
    pub fn h(&self) -> f64 {
        match self.topology {
            Topology::Torus => 1.0 / self.points_per_axis as f64,
            Topology::Box { extent } => 2.0 * extent / self.points_per_axis as f64,
        }
    }

    /// Total number of grid nodes.
    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    #[inline]
    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut f = idx[0];
        if self.n == 2 {
            f += idx[1] * self.points_per_axis;
        }
        f
    }

    #[inline]
    pub fn unflat(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        idx[0] = flat % self.points_per_axis;
        if self.n == 2 {
            idx[1] = flat / self.points_per_axis;
        }
        idx
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        match self.topology {
            Topology::Torus => i as f64 * self.h(),
            Topology::Box { extent } => -extent + i as f64 * self.h(),
        }
    }

    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unflat(flat);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.n {
            x[k] = self.coord(idx[k]);
        }
        x
    }

    /// Flat index of the spatial origin.
    pub fn origin(&self) -> usize {
        match self.topology {
            Topology::Torus => 0,
            Topology::Box { .. } => {
                let mid = self.points_per_axis / 2;
                let idx = [mid; MAX_DIM];
                self.flat(&idx[..self.n])
            }
        }
    }
}

/// Lipschitz linear extension past a box boundary: ghost values continue the
/// one-sided slope, clamped to `slope_bound`, so truncation cannot inject new
/// extrema.
#[derive(Clone, Copy, Debug)]
pub struct ExtensionRule {
    pub slope_bound: f64,
}

impl ExtensionRule {
    pub fn unbounded() -> ExtensionRule {
        ExtensionRule { slope_bound: f64::INFINITY }
    }
}

/// Scalar field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != spec.node_count() {
            return Err(CoreError::invalid("value count does not match the grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::invalid("grid values must be finite"));
        }
        Ok(GridFunction { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<GridFunction> {
        let n = spec.n();
        let values: Vec<f64> = (0..spec.node_count()).map(|i| f(&spec.point(i)[..n])).collect();
        GridFunction::from_values(spec, values)
    }

    pub fn constant(spec: GridSpec, v: f64) -> GridFunction {
        GridFunction { spec, values: vec![v; spec.node_count()] }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Value at a signed multi-index, resolving the topology: torus indices
    /// wrap, box indices past the boundary use the extension rule.
    pub fn sample_extended(&self, idx: &[isize], ext: &ExtensionRule) -> f64 {
        let mut i = [0isize; MAX_DIM];
        i[..self.spec.n()].copy_from_slice(idx);
        self.sample_rec(i, ext)
    }

    /// Array-index variant of [`GridFunction::sample_extended`] for solver loops.
    #[inline]
    pub(crate) fn sample_i(&self, i: [isize; MAX_DIM], ext: &ExtensionRule) -> f64 {
        self.sample_rec(i, ext)
    }

    fn sample_rec(&self, mut i: [isize; MAX_DIM], ext: &ExtensionRule) -> f64 {
        let m = self.spec.points_per_axis as isize;
        let n = self.spec.n();
        match self.spec.topology {
            Topology::Torus => {
                let mut idx = [0usize; MAX_DIM];
                for k in 0..n {
                    idx[k] = i[k].rem_euclid(m) as usize;
                }
                self.values[self.spec.flat(&idx[..n])]
            }
            Topology::Box { .. } => {
                for k in 0..n {
                    if i[k] < 0 {
                        let d = (-i[k]) as f64;
                        i[k] = 0;
                        let v0 = self.sample_rec(i, ext);
                        i[k] = 1;
                        let v1 = self.sample_rec(i, ext);
                        let h = self.spec.h();
                        let slope = ((v1 - v0) / h).clamp(-ext.slope_bound, ext.slope_bound);
                        return v0 - d * h * slope;
                    }
                    if i[k] >= m {
                        let d = (i[k] - (m - 1)) as f64;
                        i[k] = m - 1;
                        let v0 = self.sample_rec(i, ext);
                        i[k] = m - 2;
                        let v1 = self.sample_rec(i, ext);
                        let h = self.spec.h();
                        let slope = ((v0 - v1) / h).clamp(-ext.slope_bound, ext.slope_bound);
                        return v0 + d * h * slope;
                    }
                }
                let mut idx = [0usize; MAX_DIM];
                for k in 0..n {
                    idx[k] = i[k] as usize;
                }
                self.values[self.spec.flat(&idx[..n])]
            }
        }
    }
}

fn boundary_check(f: &GridFunction, idx: &[usize], ext: Option<&ExtensionRule>) -> Result<()> {
    let spec = f.spec();
    if idx.len() != spec.n() {
        return Err(CoreError::invalid("multi-index length does not match the dimension"));
    }
    if idx.iter().any(|&i| i >= spec.points_per_axis()) {
        return Err(CoreError::invalid("multi-index out of range"));
    }
    if ext.is_none() && matches!(spec.topology(), Topology::Box { .. }) {
        let m = spec.points_per_axis();
        if idx.iter().any(|&i| i == 0 || i == m - 1) {
            return Err(CoreError::invalid(
                "boundary index on a box grid requires an extension rule",
            ));
        }
    }
    Ok(())
}

/// Second-order central gradient at a grid node.
pub fn central_gradient(f: &GridFunction, idx: &[usize], ext: Option<&ExtensionRule>) -> Result<[f64; MAX_DIM]> {
    boundary_check(f, idx, ext)?;
    let unbounded = ExtensionRule::unbounded();
    let rule = ext.unwrap_or(&unbounded);
    let spec = f.spec();
    let n = spec.n();
    let h = spec.h();
    let mut i = [0isize; MAX_DIM];
    for k in 0..n {
        i[k] = idx[k] as isize;
    }
    let mut g = [0.0; MAX_DIM];
    for k in 0..n {
        let mut ip = i;
        let mut im = i;
        ip[k] += 1;
        im[k] -= 1;
        g[k] = (f.sample_rec(ip, rule) - f.sample_rec(im, rule)) / (2.0 * h);
    }
    Ok(g)
}

/// Second-order central Hessian (four-point cross for mixed entries),
/// symmetric by construction.
pub fn central_hessian(f: &GridFunction, idx: &[usize], ext: Option<&ExtensionRule>) -> Result<Mat> {
    boundary_check(f, idx, ext)?;
    let unbounded = ExtensionRule::unbounded();
    let rule = ext.unwrap_or(&unbounded);
    let spec = f.spec();
    let n = spec.n();
    let h = spec.h();
    let h2 = h * h;
    let mut i = [0isize; MAX_DIM];
    for k in 0..n {
        i[k] = idx[k] as isize;
    }
    let center = f.sample_rec(i, rule);
    let mut m = Mat::zeros(n);
    for k in 0..n {
        let mut ip = i;
        let mut im = i;
        ip[k] += 1;
        im[k] -= 1;
        m.set(k, k, (f.sample_rec(ip, rule) - 2.0 * center + f.sample_rec(im, rule)) / h2);
    }
    if n == 2 {
        let mut pp = i;
        let mut pm = i;
        let mut mp = i;
        let mut mm = i;
        pp[0] += 1;
        pp[1] += 1;
        pm[0] += 1;
        pm[1] -= 1;
        mp[0] -= 1;
        mp[1] += 1;
        mm[0] -= 1;
        mm[1] -= 1;
        let mixed = (f.sample_rec(pp, rule) - f.sample_rec(pm, rule)
            - f.sample_rec(mp, rule)
            + f.sample_rec(mm, rule))
            / (4.0 * h2);
        m.set(0, 1, mixed);
        m.set(1, 0, mixed);
    }
    Ok(m)
}

/// Max absolute value over the grid.
pub fn sup_norm(f: &GridFunction) -> f64 {
    f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Max absolute difference; the discrete stand-in for the sup-norm distance.
pub fn sup_norm_diff(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.spec() != g.spec() {
        return Err(CoreError::invalid("sup_norm_diff needs identical grid specs"));
    }
    Ok(f.values()
        .iter()
        .zip(g.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Sup-norm difference restricted to the window `max_k |x_k| <= halfwidth`
/// on a box grid, keeping truncation-boundary pollution out of reported
/// errors.
pub fn windowed_sup_diff(f: &GridFunction, g: &GridFunction, halfwidth: f64) -> Result<f64> {
    if f.spec() != g.spec() {
        return Err(CoreError::invalid("windowed_sup_diff needs identical grid specs"));
    }
    let spec = f.spec();
    if !matches!(spec.topology(), Topology::Box { .. }) {
        return Err(CoreError::invalid("windowed_sup_diff is defined on box grids"));
    }
    let n = spec.n();
    let mut worst = 0.0f64;
    for i in 0..spec.node_count() {
        let x = spec.point(i);
        if (0..n).all(|k| x[k].abs() <= halfwidth + 1e-12) {
            worst = worst.max((f.value(i) - g.value(i)).abs());
        }
    }
    Ok(worst)
}

/// Max over the grid of the central-gradient magnitude.
pub fn discrete_lipschitz(f: &GridFunction) -> f64 {
    let spec = *f.spec();
    let ext = ExtensionRule::unbounded();
    let n = spec.n();
    let h = spec.h();
    let mut worst = 0.0f64;
    for flat in 0..spec.node_count() {
        let idx = spec.unflat(flat);
        let mut i = [0isize; MAX_DIM];
        for k in 0..n {
            i[k] = idx[k] as isize;
        }
        let mut gsq = 0.0;
        for k in 0..n {
            let mut ip = i;
            let mut im = i;
            ip[k] += 1;
            im[k] -= 1;
            let d = (f.sample_rec(ip, &ext) - f.sample_rec(im, &ext)) / (2.0 * h);
            gsq += d * d;
        }
        worst = worst.max(gsq);
    }
    libm::sqrt(worst)
}
