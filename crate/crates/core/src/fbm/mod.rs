//! One-dimensional fractional Brownian motion.
//!
//! Everything kernel-based here is restricted to the regular branch
//! `H > 1/2`, where the Volterra kernel is
//!
//! ```text
//! K(t, s) = c_H (H - 1/2) s^{1/2-H} int_s^t (r - s)^{H-3/2} r^{H-1/2} dr
//! dK/dt   = c_H (H - 1/2) (s/t)^{1/2-H} (t - s)^{H-3/2}
//! ```
//!
//! with `c_H = (2H Gamma(3/2-H) / (Gamma(H+1/2) Gamma(2-2H)))^{1/2}`. This
//! normalisation gives `int_0^t K(t,s)^2 ds = t^{2H}`.
//!
//! The integrable endpoint singularity `(r - s)^{H-3/2}` is removed with the
//! substitution `u = (r - s)^{H-1/2}`, which maps `(r-s)^{H-3/2} dr` onto
//! `du / (H - 1/2)`; the resulting bounded integrand is handled with
//! composite 32-point Gauss-Legendre panels.

pub mod diagnostics;
mod sampler;

pub use sampler::{
    sample_fbm_cholesky, sample_fbm_volterra, CholeskySampler, FbmSampler, SamplerConstructor,
    SamplerRegistry, VolterraSampler,
};

use crate::error::{Error, Result};
use crate::special::{gamma, tanh_sinh, GaussLegendre};

/// Hurst index `H` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Domain(format!(
                "Hurst parameter must lie in (0, 1), got {h}"
            )));
        }
        Ok(Self(h))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `H > 1/2`: the branch where the kernel formulas used here are valid.
    pub fn is_regular(self) -> bool {
        self.0 > 0.5
    }

    pub fn require_regular(self, op: &str) -> Result<()> {
        if self.is_regular() {
            Ok(())
        } else {
            Err(Error::UnsupportedBranch(format!(
                "{op} is implemented for H > 1/2 only (got H = {})",
                self.0
            )))
        }
    }
}

/// Strictly increasing time nodes `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain(
                "time grid needs at least the nodes 0 and T".into(),
            ));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Domain(format!(
                "time grid must start at 0, starts at {}",
                nodes[0]
            )));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Domain(format!(
                "time grid must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(Self { nodes })
    }

    /// `intervals + 1` equispaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon > 0.0) || intervals == 0 {
            return Err(Error::Domain(format!(
                "uniform grid needs T > 0 and at least one interval (T = {horizon}, n = {intervals})"
            )));
        }
        let n = intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|j| horizon * j as f64 / n).collect();
        nodes[intervals] = horizon;
        Self::new(nodes)
    }

    /// Nodes `T (j/J)^exponent`, concentrating resolution near `t = 0`.
    pub fn graded(horizon: f64, intervals: usize, exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0) {
            return Err(Error::Domain(format!(
                "grading exponent must be >= 1, got {exponent}"
            )));
        }
        let uniform = Self::uniform(1.0, intervals)?;
        let mut nodes: Vec<f64> = uniform.nodes.iter().map(|x| horizon * x.powf(exponent)).collect();
        nodes[intervals] = horizon;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("grid is never empty")
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Step of a uniform grid, `None` otherwise.
    pub fn uniform_step(&self) -> Option<f64> {
        let step = self.horizon() / self.intervals() as f64;
        let tol = 1e-9 * step;
        self.nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= tol)
            .then_some(step)
    }

    /// Index of the node equal to `t` (relative tolerance `1e-12 T`).
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon();
        let idx = self.nodes.partition_point(|&x| x < t - tol);
        (idx < self.nodes.len() && (self.nodes[idx] - t).abs() <= tol).then_some(idx)
    }

    /// Prefix grid `t_0 .. t_last`.
    pub fn truncated(&self, last: usize) -> Result<Self> {
        if last == 0 || last >= self.nodes.len() {
            return Err(Error::Domain(format!(
                "cannot truncate a grid of {} nodes at index {last}",
                self.nodes.len()
            )));
        }
        Self::new(self.nodes[..=last].to_vec())
    }
}

/// Sampled fBm path; `values[j]` is `B^H(t_j)` and `values[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub hurst: HurstParameter,
    pub seed: u64,
}

/// Step function `sum_i a_i 1_{(t_i, t_{i+1}]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    coefficients: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, coefficients: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != coefficients.len() + 1 {
            return Err(Error::Domain(format!(
                "step function with {} coefficients needs {} breakpoints, got {}",
                coefficients.len(),
                coefficients.len() + 1,
                breakpoints.len()
            )));
        }
        if breakpoints.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::Domain("breakpoints must be nonnegative".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            coefficients,
        })
    }

    /// `1_{(a, b]}`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![1.0])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Intervals `(t_i, t_{i+1}]` with their coefficient.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.coefficients)
            .map(|(w, &a)| (w[0], w[1], a))
    }

    pub fn eval(&self, t: f64) -> f64 {
        // right-closed pieces
        let idx = self.breakpoints.partition_point(|&b| b < t);
        if idx == 0 || idx > self.coefficients.len() {
            0.0
        } else {
            self.coefficients[idx - 1]
        }
    }
}

/// A deterministic integrand on `[0, T]` for [`k_star_apply`].
pub trait TimeFunction {
    fn value(&self, t: f64) -> f64;

    /// Points where the function may jump; quadrature panels are split there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl TimeFunction for StepFunction {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Piecewise-linear interpolant through `(nodes[i], values[i])`.
#[derive(Debug, Clone)]
pub struct Tabulated {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeFunction for Tabulated {
    fn value(&self, t: f64) -> f64 {
        let n = self.nodes.len();
        if n == 0 {
            return 0.0;
        }
        let idx = self.nodes.partition_point(|&x| x < t);
        if idx == 0 {
            self.values[0]
        } else if idx >= n {
            self.values[n - 1]
        } else {
            let (t0, t1) = (self.nodes[idx - 1], self.nodes[idx]);
            let w = (t - t0) / (t1 - t0);
            self.values[idx - 1] * (1.0 - w) + self.values[idx] * w
        }
    }
}

/// Wraps a closure as a smooth [`TimeFunction`].
pub struct FnProfile<F>(pub F);

impl<F: Fn(f64) -> f64> TimeFunction for FnProfile<F> {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// `R(s, t) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2`.
pub fn covariance(s: f64, t: f64, h: HurstParameter) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!(
            "covariance needs nonnegative times, got ({s}, {t})"
        )));
    }
    if h.value() == 0.5 {
        return Ok(s.min(t));
    }
    let two_h = 2.0 * h.value();
    Ok(0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// Normalising constant `c_H` of the Volterra kernel.
pub fn c_h(h: HurstParameter) -> f64 {
    let h = h.value();
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// Closed-form `dK/dt (t, s)` on the regular branch.
pub fn kernel_time_derivative(t: f64, s: f64, h: HurstParameter) -> Result<f64> {
    h.require_regular("kernel derivative")?;
    if !(s > 0.0 && t > s) {
        return Err(Error::Domain(format!(
            "kernel derivative needs 0 < s < t, got s = {s}, t = {t}"
        )));
    }
    let hv = h.value();
    Ok(c_h(h) * (hv - 0.5) * (s / t).powf(0.5 - hv) * (t - s).powf(hv - 1.5))
}

/// Upper limit of the substituted variable and the grading point where
/// `r(u) = s + u^{1/(H-1/2)}` leaves the neighbourhood of `s`.
fn substituted_breaks(s: f64, upper: f64, exponent: f64, extra: &[f64]) -> Vec<f64> {
    let u_max = upper.powf(1.0 / exponent);
    let mut breaks = vec![0.0, u_max];
    // r(u) has a rounded corner at u ~ s^{H-1/2}; grade geometrically towards it.
    let corner = s.powf(1.0 / exponent);
    if corner < u_max {
        let mut c = corner;
        while c > u_max * 1e-12 && breaks.len() < 64 {
            breaks.push(c);
            c *= 0.25;
        }
        let mut c = corner * 2.0;
        while c < u_max {
            breaks.push(c);
            c *= 2.0;
        }
    }
    for &b in extra {
        if b > 0.0 && b < upper {
            breaks.push(b.powf(1.0 / exponent));
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * u_max);
    if breaks.len() == 2 {
        // smooth case: a few equal panels
        let w = u_max / 4.0;
        breaks = (0..=4).map(|k| k as f64 * w).collect();
    }
    breaks
}

/// Volterra kernel `K(t, s)` for `0 < s < t`, `H > 1/2`.
pub fn volterra_kernel(t: f64, s: f64, h: HurstParameter) -> Result<f64> {
    h.require_regular("Volterra kernel")?;
    if !(s > 0.0 && t > s) {
        return Err(Error::Domain(format!(
            "Volterra kernel needs 0 < s < t, got s = {s}, t = {t}"
        )));
    }
    let hv = h.value();
    let a = hv - 0.5;
    let k = 1.0 / a;
    let rule = GaussLegendre::standard();
    let breaks = substituted_breaks(s, t - s, k, &[]);
    // (H - 1/2) from dr cancels the kernel's prefactor
    let integral: f64 = breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |u| (s + u.powf(k)).powf(a)))
        .sum();
    Ok(c_h(h) * s.powf(-a) * integral)
}

/// `(K*_T phi)(s) = int_s^T phi(r) dK/dr(r, s) dr` at each point of `points`
/// (all in `(0, T]`).
pub fn k_star_apply(
    phi: &dyn TimeFunction,
    horizon: f64,
    points: &[f64],
    h: HurstParameter,
) -> Result<Vec<f64>> {
    h.require_regular("K* operator")?;
    let jumps = phi.breakpoints();
    points
        .iter()
        .map(|&s| {
            if !(s > 0.0 && s <= horizon) {
                return Err(Error::Domain(format!(
                    "K* is evaluated on (0, T] = (0, {horizon}], got s = {s}"
                )));
            }
            Ok(k_star_point(phi, &jumps, horizon, s, h))
        })
        .collect()
}

fn k_star_point(phi: &dyn TimeFunction, jumps: &[f64], horizon: f64, s: f64, h: HurstParameter) -> f64 {
    if s >= horizon {
        return 0.0;
    }
    let a = h.value() - 0.5;
    let k = 1.0 / a;
    let rule = GaussLegendre::standard();
    let rel: Vec<f64> = jumps.iter().map(|&b| b - s).collect();
    let breaks = substituted_breaks(s, horizon - s, k, &rel);
    let integral: f64 = breaks
        .windows(2)
        .map(|w| {
            rule.integrate(w[0], w[1], |u| {
                let r = s + u.powf(k);
                phi.value(r) * (r / s).powf(a)
            })
        })
        .sum();
    c_h(h) * integral
}

/// `||K*_T phi||^2_{L^2[0,T]}` by tanh-sinh quadrature on the pieces between
/// the breakpoints of `phi`; `level` sets the step `2^-level`, so each
/// increment doubles the number of abscissae.
pub fn k_star_l2_norm_sq(
    phi: &dyn TimeFunction,
    horizon: f64,
    h: HurstParameter,
    level: u32,
) -> Result<f64> {
    h.require_regular("K* operator")?;
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let jumps = phi.breakpoints();
    let mut cuts: Vec<f64> = std::iter::once(0.0)
        .chain(jumps.iter().copied().filter(|&b| b > 0.0 && b < horizon))
        .chain(std::iter::once(horizon))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    Ok(cuts
        .windows(2)
        .map(|w| {
            tanh_sinh(w[0], w[1], level, |s| {
                if s <= 0.0 || s >= horizon {
                    0.0
                } else {
                    let v = k_star_point(phi, &jumps, horizon, s, h);
                    v * v
                }
            })
        })
        .sum())
}

/// `<1_{(a,b]}, 1_{(c,d]}>_H` in closed form.
fn rectangle_product(a: f64, b: f64, c: f64, d: f64, two_h: f64) -> f64 {
    let f = |x: f64| x.abs().powf(two_h);
    0.5 * (f(d - a) - f(d - b) - f(c - a) + f(c - b))
}

/// Inner product `H(2H-1) int int phi(s) chi(t) |t-s|^{2H-2} ds dt` for step
/// functions, summed exactly rectangle by rectangle.
pub fn inner_product_h(phi: &StepFunction, chi: &StepFunction, h: HurstParameter) -> Result<f64> {
    h.require_regular("H inner product")?;
    let two_h = 2.0 * h.value();
    Ok(phi
        .pieces()
        .map(|(a, b, x)| {
            chi.pieces()
                .map(|(c, d, y)| x * y * rectangle_product(a, b, c, d, two_h))
                .sum::<f64>()
        })
        .sum())
}

/// Wiener integral `sum_i a_i (B(t_{i+1}) - B(t_i))` of a step function
/// whose breakpoints are nodes of the path grid.
pub fn wiener_integral_step(phi: &StepFunction, path: &FbmPath) -> Result<f64> {
    let idx: Vec<usize> = phi
        .breakpoints()
        .iter()
        .map(|&t| {
            path.grid.node_index(t).ok_or_else(|| {
                Error::Alignment(format!("breakpoint {t} is not a node of the path grid"))
            })
        })
        .collect::<Result<_>>()?;
    Ok(idx
        .windows(2)
        .zip(phi.coefficients())
        .map(|(w, a)| a * (path.values[w[1]] - path.values[w[0]]))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hp(h: f64) -> HurstParameter {
        HurstParameter::new(h).unwrap()
    }

    #[test]
    fn hurst_bounds() {
        assert!(HurstParameter::new(0.0).is_err());
        assert!(HurstParameter::new(1.0).is_err());
        assert!(HurstParameter::new(f64::NAN).is_err());
        assert!(hp(0.75).is_regular());
        assert!(!hp(0.5).is_regular());
        assert!(matches!(
            hp(0.4).require_regular("x"),
            Err(Error::UnsupportedBranch(_))
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        let g = TimeGrid::uniform(2.0, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.horizon(), 2.0);
        assert_relative_eq!(g.uniform_step().unwrap(), 0.25);
        assert_eq!(g.node_index(0.75), Some(3));
        assert_eq!(g.node_index(0.7), None);
        let graded = TimeGrid::graded(1.0, 8, 2.0).unwrap();
        assert!(graded.uniform_step().is_none());
        assert_relative_eq!(graded.nodes()[1], 1.0 / 64.0);
    }

    #[test]
    fn covariance_examples() {
        let h = hp(0.75);
        assert_relative_eq!(covariance(0.7, 0.7, h).unwrap(), 0.7f64.powf(1.5), max_relative = 1e-15);
        assert_relative_eq!(covariance(1.0, 2.0, h).unwrap(), std::f64::consts::SQRT_2, max_relative = 1e-12);
        assert_eq!(covariance(0.3, 0.8, hp(0.5)).unwrap(), 0.3);
        assert!(covariance(-0.1, 1.0, h).is_err());
    }

    #[test]
    fn c_h_values() {
        assert_relative_eq!(c_h(hp(0.5)), 1.0, max_relative = 1e-13);
        // independent gamma implementation (scipy.special.gamma)
        assert_relative_eq!(c_h(hp(0.75)), 1.069_644_635_031_990_4, max_relative = 1e-10);
        assert_relative_eq!(c_h(hp(0.9)), 0.811_220_648_143_352_4, max_relative = 1e-10);
    }

    #[test]
    fn kernel_branch_and_domain_errors() {
        assert!(matches!(volterra_kernel(1.0, 0.5, hp(0.4)), Err(Error::UnsupportedBranch(_))));
        assert!(matches!(volterra_kernel(1.0, 1.0, hp(0.7)), Err(Error::Domain(_))));
        assert!(matches!(volterra_kernel(1.0, 0.0, hp(0.7)), Err(Error::Domain(_))));
    }

    /// Brute-force midpoint sum of the defining integral with the singular
    /// part subtracted: int (r-s)^{H-3/2} (r^a - s^a) dr + s^a (t-s)^a / a.
    fn kernel_brute_force(t: f64, s: f64, h: f64, cells: usize) -> f64 {
        let a = h - 0.5;
        let w = (t - s) / cells as f64;
        let sa = s.powf(a);
        let mut sum = 0.0;
        for i in 0..cells {
            let r = s + (i as f64 + 0.5) * w;
            sum += (r - s).powf(h - 1.5) * (r.powf(a) - sa);
        }
        c_h(hp(h)) * a * s.powf(-a) * (sum * w + sa * (t - s).powf(a) / a)
    }

    #[test]
    fn kernel_matches_brute_force_riemann_sum() {
        let k = volterra_kernel(2.0, 1.0, hp(0.75)).unwrap();
        let oracle = kernel_brute_force(2.0, 1.0, 0.75, 1_000_000);
        assert!(((k - oracle) / oracle).abs() < 1e-5, "{k} vs {oracle}");
    }

    #[test]
    fn kernel_vanishes_on_the_diagonal() {
        // K(t, t - eps) ~ c_H eps^{H-1/2}
        let h = hp(0.8);
        let mut prev = f64::INFINITY;
        for &eps in &[1e-2, 1e-4, 1e-8, 1e-12] {
            let k = volterra_kernel(1.0, 1.0 - eps, h).unwrap();
            assert!(k < prev);
            prev = k;
            if eps < 1e-6 {
                assert_relative_eq!(k, c_h(h) * eps.powf(0.3), max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn kernel_square_integrates_to_variance() {
        // int_0^t K(t,s)^2 ds = t^{2H}, s = t v^4 removes the s^{1-2H} endpoint
        for &h in &[0.6, 0.75, 0.9] {
            let hh = hp(h);
            let t = 1.3;
            let v = tanh_sinh(0.0, t, 6, |s| {
                if s <= 0.0 || s >= t {
                    0.0
                } else {
                    volterra_kernel(t, s, hh).unwrap().powi(2)
                }
            });
            assert!((v / t.powf(2.0 * h) - 1.0).abs() < 1e-6, "h={h}: {v} vs {}", t.powf(2.0 * h));
        }
    }

    #[test]
    fn kernel_derivative_matches_finite_difference() {
        for &(t, s, h) in &[(2.0, 1.0, 0.75), (1.0, 0.3, 0.6), (0.5, 0.05, 0.9), (3.0, 2.5, 0.7)] {
            let hh = hp(h);
            let dt = 1e-5 * t;
            let fd = (volterra_kernel(t + dt, s, hh).unwrap() - volterra_kernel(t - dt, s, hh).unwrap())
                / (2.0 * dt);
            let exact = kernel_time_derivative(t, s, hh).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-4, "t={t} s={s} h={h}: {fd} vs {exact}");
        }
    }

    #[test]
    fn k_star_of_zero_and_one() {
        let h = hp(0.75);
        let zero = StepFunction::new(vec![0.0, 1.0], vec![0.0]).unwrap();
        let pts = [0.1, 0.5, 0.9, 1.0];
        assert!(k_star_apply(&zero, 1.0, &pts, h).unwrap().iter().all(|&v| v == 0.0));
        let one = StepFunction::indicator(0.0, 1.0).unwrap();
        let ks = k_star_apply(&one, 1.0, &pts[..3], h).unwrap();
        for (s, v) in pts.iter().zip(ks) {
            let oracle = kernel_brute_force(1.0, *s, 0.75, 400_000);
            assert!(((v - oracle) / oracle).abs() < 1e-4, "s={s}: {v} vs {oracle}");
        }
        assert!(k_star_apply(&one, 1.0, &[0.0], h).is_err());
        assert!(matches!(k_star_apply(&one, 1.0, &[0.5], hp(0.5)), Err(Error::UnsupportedBranch(_))));
    }

    #[test]
    fn inner_product_of_indicators_is_covariance() {
        for &h in &[0.55, 0.75, 0.95] {
            let hh = hp(h);
            for &(t, s) in &[(1.0, 1.0), (0.3, 0.8), (2.0, 0.5)] {
                let ip = inner_product_h(
                    &StepFunction::indicator(0.0, t).unwrap(),
                    &StepFunction::indicator(0.0, s).unwrap(),
                    hh,
                )
                .unwrap();
                assert_relative_eq!(ip, covariance(s, t, hh).unwrap(), max_relative = 1e-13);
            }
        }
        assert!(inner_product_h(
            &StepFunction::indicator(0.0, 1.0).unwrap(),
            &StepFunction::indicator(0.0, 1.0).unwrap(),
            hp(0.5)
        )
        .is_err());
    }

    /// Brute-force double sum over `cells x cells` lattice cells. The cell-pair
    /// weight for lag `d` is the reduced integral
    /// `H(2H-1) w^{2H} int_{-1}^{1} (1-|v|) |d+v|^{2H-2} dv`, evaluated
    /// numerically by tanh-sinh quadrature.
    fn inner_product_brute_force(phi: &StepFunction, chi: &StepFunction, h: f64, horizon: f64, cells: usize) -> f64 {
        let w = horizon / cells as f64;
        let c = h * (2.0 * h - 1.0) * w.powf(2.0 * h);
        let lag_weight: Vec<f64> = (0..cells)
            .map(|d| {
                let d = d as f64;
                let f = |v: f64| (1.0 - v.abs()) * (d + v).abs().powf(2.0 * h - 2.0);
                c * if d == 0.0 {
                    2.0 * tanh_sinh(0.0, 1.0, 6, f)
                } else {
                    tanh_sinh(-1.0, 0.0, 6, f) + tanh_sinh(0.0, 1.0, 6, f)
                }
            })
            .collect();
        let pv: Vec<f64> = (0..cells).map(|i| phi.eval((i as f64 + 0.5) * w)).collect();
        let cv: Vec<f64> = (0..cells).map(|i| chi.eval((i as f64 + 0.5) * w)).collect();
        let mut sum = 0.0;
        for i in 0..cells {
            for j in 0..cells {
                sum += pv[i] * cv[j] * lag_weight[i.abs_diff(j)];
            }
        }
        sum
    }

    #[test]
    fn inner_product_matches_brute_force_double_integral() {
        // breakpoints on the 1000-cell lattice so the oracle has no cut cells
        let phi = StepFunction::new(vec![0.0, 0.2, 0.55, 1.0], vec![1.5, -0.7, 2.0]).unwrap();
        let chi = StepFunction::new(vec![0.1, 0.4, 0.9], vec![-1.0, 0.8]).unwrap();
        for &h in &[0.6, 0.75, 0.9] {
            let exact = inner_product_h(&phi, &chi, hp(h)).unwrap();
            let oracle = inner_product_brute_force(&phi, &chi, h, 1.0, 1000);
            assert!((exact - oracle).abs() < 1e-3, "h={h}: {exact} vs {oracle}");
        }
    }

    #[test]
    fn wiener_integral_alignment_and_telescoping() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let path = FbmPath {
            grid,
            values: vec![0.0, 0.3, -0.2, 0.5, 1.1],
            hurst: hp(0.7),
            seed: 0,
        };
        let full = StepFunction::indicator(0.0, 1.0).unwrap();
        assert_relative_eq!(wiener_integral_step(&full, &path).unwrap(), 1.1);
        let zero = StepFunction::new(vec![0.25, 0.75], vec![0.0]).unwrap();
        assert_eq!(wiener_integral_step(&zero, &path).unwrap(), 0.0);
        let off = StepFunction::indicator(0.1, 0.5).unwrap();
        assert!(matches!(wiener_integral_step(&off, &path), Err(Error::Alignment(_))));
    }

    #[test]
    fn step_function_is_right_closed() {
        let f = StepFunction::new(vec![0.0, 1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 3.0);
        assert_eq!(f.eval(1.5), 4.0);
        assert_eq!(f.eval(2.0), 4.0);
        assert_eq!(f.eval(2.1), 0.0);
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(StepFunction::new(vec![1.0, 0.5], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn covariance_is_symmetric(s in 0.0f64..10.0, t in 0.0f64..10.0, h in 0.01f64..0.99) {
            let hh = hp(h);
            prop_assert_eq!(covariance(s, t, hh).unwrap(), covariance(t, s, hh).unwrap());
        }

        #[test]
        fn half_hurst_covariance_is_min(s in 0.0f64..10.0, t in 0.0f64..10.0) {
            prop_assert_eq!(covariance(s, t, hp(0.5)).unwrap(), s.min(t));
        }
    }
}
