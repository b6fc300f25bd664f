//! Periodic grids, fields, discrete `L^q` norms and the heat semigroup.
//!
//! The box `[-L, L)^N` with `M` points per axis stands in for `R^N`. The
//! semigroup is applied exactly on the discrete Fourier modes, so the only
//! approximation relative to the whole-space heat flow is periodisation,
//! which is negligible as long as fields stay away from the box boundary.

mod io;
mod probe;
mod spectral;

pub use io::{read_field, write_field, FIELD_MAGIC};
pub use probe::{smoothing_exponent_probe, smoothing_exponent, ProbeConfig, ProbeResult};
pub use spectral::{heat_semigroup, s_gamma_apply, SpectralOperator};

use crate::error::{Error, Result};

/// Default cap on `M^N`.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dimension: usize,
    half_width: f64,
    points: usize,
}

impl Grid {
    pub fn new(dimension: usize, half_width: f64, points: usize) -> Result<Self> {
        Self::with_budget(dimension, half_width, points, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(dimension: usize, half_width: f64, points: usize, budget: usize) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dimension}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("box half-width must be positive, got {half_width}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::Domain(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        let total = points.checked_pow(dimension as u32).unwrap_or(usize::MAX);
        if total > budget {
            return Err(Error::Domain(format!(
                "grid of {points}^{dimension} = {total} points exceeds the budget of {budget}"
            )));
        }
        Ok(Self {
            dimension,
            half_width,
            points,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dimension as i32)
    }

    /// Per-axis indices of flat index `idx` (row-major, last axis fastest).
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rem = idx;
        for a in (0..self.dimension).rev() {
            out[a] = rem % self.points;
            rem /= self.points;
        }
        out
    }

    /// Coordinates of flat index `idx`; unused axes are 0.
    pub fn coordinates(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let ix = self.axis_indices(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dimension {
            x[a] = -self.half_width + ix[a] as f64 * h;
        }
        x
    }

    pub fn radius(&self, idx: usize) -> f64 {
        self.coordinates(idx).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Same grid with the box shrunk by `factor` (used by the parabolic rescaling).
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::with_budget(self.dimension, self.half_width / factor, self.points, usize::MAX)
    }

    pub(crate) fn require_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Alignment(format!(
                "grids differ: {self:?} vs {other:?}"
            )))
        }
    }
}

/// Real values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Alignment(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("field value {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        let n = grid.dimension();
        let values = (0..grid.len())
            .map(|i| f(&grid.coordinates(i)[..n]))
            .collect();
        Self::from_raw(grid, values)
    }

    /// Heat kernel `G_s(x) = (4 pi s)^{-N/2} exp(-|x|^2 / 4s)` sampled on the grid.
    pub fn heat_kernel(grid: Grid, s: f64) -> Self {
        let n = grid.dimension() as f64;
        let norm = (4.0 * std::f64::consts::PI * s).powf(-0.5 * n);
        Self::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            norm * (-r2 / (4.0 * s)).exp()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Self> {
        self.grid.require_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Largest `|f|` on the outermost layer of grid cells, relative to `max |f|`.
    pub fn boundary_fraction(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let m = self.grid.points_per_axis();
        let n = self.grid.dimension();
        let edge = (0..self.grid.len())
            .filter(|&i| {
                let ix = self.grid.axis_indices(i);
                ix[..n].iter().any(|&k| k == 0 || k == m - 1)
            })
            .fold(0.0f64, |acc, i| acc.max(self.values[i].abs()));
        edge / peak
    }

    /// `(x, value)` along axis 0 through the grid point closest to the origin.
    pub fn axis_slice(&self) -> Vec<(f64, f64)> {
        let m = self.grid.points_per_axis();
        let n = self.grid.dimension();
        let stride = m.pow(n as u32 - 1);
        let centre: usize = (1..n).map(|a| (m / 2) * m.pow((n - 1 - a) as u32)).sum();
        let h = self.grid.spacing();
        (0..m)
            .map(|i| (-self.grid.half_width() + i as f64 * h, self.values[centre + i * stride]))
            .collect()
    }
}

/// Regularised Hardy weight `w(x) = max(|x|, h/2)^{-gamma}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularWeight {
    grid: Grid,
    gamma: f64,
    values: Vec<f64>,
}

impl SingularWeight {
    /// `gamma` in `[0, 2)`; `gamma = 0` is the unit weight used by validation runs.
    pub fn new(grid: Grid, gamma: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&gamma) {
            return Err(Error::Domain(format!("gamma must lie in [0, 2), got {gamma}")));
        }
        let floor = 0.5 * grid.spacing();
        let values = (0..grid.len())
            .map(|i| {
                if gamma == 0.0 {
                    1.0
                } else {
                    grid.radius(i).max(floor).powf(-gamma)
                }
            })
            .collect();
        Ok(Self { grid, gamma, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.grid.require_same(f.grid())?;
        Ok(Field::from_raw(
            self.grid,
            f.values().iter().zip(&self.values).map(|(a, w)| a * w).collect(),
        ))
    }
}

/// Discrete `L^q` norm `(h^N sum |f|^q)^{1/q}`; `q = f64::INFINITY` gives `max |f|`.
pub fn lq_norm(f: &Field, q: f64) -> Result<f64> {
    lq_norm_values(f.values(), f.grid(), q)
}

pub fn lq_norm_values(values: &[f64], grid: &Grid, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!("L^q norm needs q > 1, got {q}")));
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if q.is_infinite() || peak == 0.0 {
        return Ok(peak);
    }
    let sum: f64 = values.iter().map(|v| (v.abs() / peak).powf(q)).sum();
    Ok(peak * (grid.cell_volume() * sum).powf(1.0 / q))
}

/// `|x|^{-gamma} |f|^{p-1} f` with the regularised weight.
pub fn hardy_henon_nonlinearity(f: &Field, w: &SingularWeight, p: f64) -> Result<Field> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("nonlinearity exponent must exceed 1, got {p}")));
    }
    w.grid().require_same(f.grid())?;
    Ok(Field::from_raw(
        *f.grid(),
        f.values()
            .iter()
            .zip(w.values())
            .map(|(&u, &wt)| wt * power_odd(u, p))
            .collect(),
    ))
}

#[inline]
pub fn power_odd(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        u.abs() * u
    } else {
        u.abs().powf(p - 1.0) * u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(4, 1.0, 16).is_err());
        assert!(Grid::new(2, 0.0, 16).is_err());
        assert!(Grid::new(2, 1.0, 12).is_err());
        assert!(Grid::new(2, 1.0, 4).is_err());
        assert!(Grid::new(3, 1.0, 256).is_err()); // 2^24 > budget
        let g = Grid::new(2, 2.0, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert_relative_eq!(g.spacing(), 0.25);
        assert_eq!(g.coordinates(0)[..2], [-2.0, -2.0]);
        assert_eq!(g.coordinates(17)[..2], [-1.75, -1.75]);
    }

    #[test]
    fn constant_field_norm() {
        for n in 1..=3 {
            let g = Grid::new(n, 1.5, 8).unwrap();
            let f = Field::constant(g, 0.7);
            for &q in &[1.5, 2.0, 4.0, 9.6] {
                assert_relative_eq!(
                    lq_norm(&f, q).unwrap(),
                    0.7 * 3.0f64.powf(n as f64 / q),
                    max_relative = 1e-13
                );
            }
            assert_eq!(lq_norm(&f, f64::INFINITY).unwrap(), 0.7);
        }
    }

    #[test]
    fn norm_rejects_q_at_most_one() {
        let f = Field::constant(Grid::new(1, 1.0, 8).unwrap(), 1.0);
        assert!(lq_norm(&f, 1.0).is_err());
        assert!(lq_norm(&f, 0.5).is_err());
    }

    #[test]
    fn gaussian_norm_matches_closed_form() {
        // ||G_s||_q = (4 pi s)^{-N/2 + N/(2q)} q^{-N/(2q)}
        let s: f64 = 0.3;
        for n in 1..=2 {
            let g = Grid::new(n, 8.0, 128).unwrap();
            let f = Field::heat_kernel(g, s);
            for &q in &[1.5, 2.0, 3.0, 6.0] {
                let nf = n as f64;
                let exact = (4.0 * std::f64::consts::PI * s).powf(-nf / 2.0 + nf / (2.0 * q))
                    * q.powf(-nf / (2.0 * q));
                assert_relative_eq!(lq_norm(&f, q).unwrap(), exact, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn field_rejects_non_finite_values() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Field::new(g, v).is_err());
        assert!(Field::new(g, vec![0.0; 7]).is_err());
    }

    #[test]
    fn weight_is_capped_at_half_spacing() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let w = SingularWeight::new(g, 1.5).unwrap();
        let cap = (0.5 * g.spacing()).powf(-1.5);
        assert!(w.values().iter().all(|&v| v > 0.0 && v <= cap * (1.0 + 1e-15)));
        // the origin is a grid point
        assert_relative_eq!(w.values().iter().cloned().fold(0.0, f64::max), cap);
        let unit = SingularWeight::new(g, 0.0).unwrap();
        assert!(unit.values().iter().all(|&v| v == 1.0));
        assert!(SingularWeight::new(g, 2.0).is_err());
    }

    #[test]
    fn nonlinearity_examples() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let w = SingularWeight::new(g, 0.5).unwrap();
        let zero = Field::zeros(g);
        assert!(hardy_henon_nonlinearity(&zero, &w, 3.0).unwrap().values().iter().all(|&v| v == 0.0));
        let f = Field::from_fn(g, |x| 1.0 + x[0] * x[0]);
        let sq = hardy_henon_nonlinearity(&f, &w, 2.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(sq.values()[i], w.values()[i] * f.values()[i] * f.values()[i]);
        }
        assert!(hardy_henon_nonlinearity(&f, &w, 1.0).is_err());
    }

    #[test]
    fn axis_slice_passes_through_origin() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        let f = Field::from_fn(g, |x| x[0] + 10.0 * x[1]);
        let s = f.axis_slice();
        assert_eq!(s.len(), 8);
        for (x, v) in s {
            assert_relative_eq!(v, x, epsilon = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous(c in -5.0f64..5.0, q in 1.1f64..8.0, seed in 0u64..1000) {
            let g = Grid::new(2, 1.0, 8).unwrap();
            let f = Field::from_fn(g, |x| ((seed as f64 + 1.0) * (x[0] + 2.0 * x[1])).sin());
            let a = lq_norm(&f.scaled(c), q).unwrap();
            let b = c.abs() * lq_norm(&f, q).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }

        #[test]
        fn nonlinearity_is_odd_and_homogeneous(c in 0.01f64..4.0, p in 1.05f64..4.0, gamma in 0.0f64..1.9) {
            let g = Grid::new(1, 1.0, 8).unwrap();
            let w = SingularWeight::new(g, gamma).unwrap();
            let f = Field::from_fn(g, |x| (3.0 * x[0]).sin() - 0.2);
            let pos = hardy_henon_nonlinearity(&f, &w, p).unwrap();
            let neg = hardy_henon_nonlinearity(&f.scaled(-1.0), &w, p).unwrap();
            for (a, b) in pos.values().iter().zip(neg.values()) {
                prop_assert_eq!(*a, -*b);
            }
            let scaled = hardy_henon_nonlinearity(&f.scaled(c), &w, p).unwrap();
            for (a, b) in scaled.values().iter().zip(pos.values()) {
                let expect = c * c.powf(p - 1.0) * b;
                prop_assert!((a - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
            }
        }
    }
}
