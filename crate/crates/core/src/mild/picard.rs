//! The fixed-point map
//! `Phi(u)(t) = e^{t Delta} u0 + int_0^t S_gamma(t-s)(|u|^{p-1}u)(s) ds + Z(t)`
//! on a time grid, the metric it contracts in, and Picard iteration.
//!
//! The Duhamel term is integrated exactly in time per Fourier mode with the
//! nonlinearity frozen at the cell midpoint `(u_i + u_{i+1})/2`, which gives
//! the recursion `D_{i+1} = e^{-lambda dt} D_i + (1 - e^{-lambda dt})/lambda g_i`.

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fbm::TimeGrid;
use crate::heat::{lq_norm_values, power_odd, Field, Grid, SingularWeight, SpectralOperator};
use crate::noise::{phi1, NoisePath};
use crate::rng::stream_rng;

/// Fields `u(t_j)` on a shared spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: TimeGrid,
    fields: Vec<Field>,
}

impl Trajectory {
    pub fn new(times: TimeGrid, fields: Vec<Field>) -> Result<Self> {
        if fields.len() != times.len() {
            return Err(Error::Alignment(format!(
                "{} fields for {} time nodes",
                fields.len(),
                times.len()
            )));
        }
        for f in &fields[1..] {
            fields[0].grid().require_same(f.grid())?;
        }
        Ok(Self { times, fields })
    }

    pub fn zeros(times: TimeGrid, grid: Grid) -> Self {
        let fields = vec![Field::zeros(grid); times.len()];
        Self { times, fields }
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.times != other.times {
            return Err(Error::Alignment("trajectories live on different time grids".into()));
        }
        self.grid().require_same(other.grid())
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_compatible(other)?;
        Ok(Self {
            times: self.times.clone(),
            fields: self
                .fields
                .iter()
                .zip(&other.fields)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<_>>()?,
        })
    }

    /// `sup_j ||u(t_j)||_q`.
    pub fn sup_norm(&self, q: f64) -> Result<f64> {
        self.fields
            .iter()
            .map(|f| lq_norm_values(f.values(), f.grid(), q))
            .try_fold(0.0f64, |m, v| Ok(m.max(v?)))
    }
}

/// The norm `sup_t ||u||_q + sup_t t^sigma ||u||_r` behind the metric `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub q: f64,
    pub r: f64,
    pub sigma: f64,
}

impl Metric {
    pub fn norm(&self, u: &Trajectory) -> Result<f64> {
        let mut sup_q = 0.0f64;
        let mut sup_r = 0.0f64;
        for (t, f) in u.times.nodes().iter().zip(&u.fields) {
            sup_q = sup_q.max(lq_norm_values(f.values(), f.grid(), self.q)?);
            if *t > 0.0 {
                sup_r = sup_r.max(t.powf(self.sigma) * lq_norm_values(f.values(), f.grid(), self.r)?);
            }
        }
        Ok(sup_q + sup_r)
    }

    pub fn distance(&self, u: &Trajectory, v: &Trajectory) -> Result<f64> {
        self.norm(&u.sub(v)?)
    }
}

pub fn metric_d(u: &Trajectory, v: &Trajectory, q: f64, r: f64, sigma: f64) -> Result<f64> {
    Metric { q, r, sigma }.distance(u, v)
}

/// `Phi` for fixed `u0`, weight, exponent and noise on a time grid.
pub struct PicardMap {
    op: SpectralOperator,
    weight: SingularWeight,
    p: f64,
    times: TimeGrid,
    /// `e^{t_j Delta} u0 + Z(t_j)`.
    base: Vec<Field>,
    nonlinear: bool,
}

impl PicardMap {
    pub fn new(u0: &Field, weight: SingularWeight, p: f64, z: &NoisePath) -> Result<Self> {
        let op = SpectralOperator::new(*u0.grid());
        let spectra = (0..z.grid().len())
            .map(|j| z.spectrum_at(j, u0.grid()))
            .collect::<Result<Vec<_>>>()?;
        Self::build(op, u0, weight, p, z.grid().clone(), Some(spectra))
    }

    pub fn without_noise(u0: &Field, weight: SingularWeight, p: f64, times: TimeGrid) -> Result<Self> {
        Self::build(SpectralOperator::new(*u0.grid()), u0, weight, p, times, None)
    }

    fn build(
        op: SpectralOperator,
        u0: &Field,
        weight: SingularWeight,
        p: f64,
        times: TimeGrid,
        noise: Option<Vec<Vec<Complex64>>>,
    ) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("p must exceed 1, got {p}")));
        }
        weight.grid().require_same(u0.grid())?;
        let u0_hat = op.forward(u0.values());
        let base = times
            .nodes()
            .par_iter()
            .enumerate()
            .map(|(j, &t)| {
                let mut spec = u0_hat.clone();
                op.apply_heat_multiplier(&mut spec, t);
                if let Some(z) = &noise {
                    spec.iter_mut().zip(&z[j]).for_each(|(a, b)| *a += b);
                }
                Field::new(*u0.grid(), op.inverse(spec).0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            op,
            weight,
            p,
            times,
            base,
            nonlinear: true,
        })
    }

    /// Drops the nonlinear term, leaving `Phi(u) = e^{t Delta} u0 + Z`.
    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }

    /// `e^{t Delta} u0 + Z(t)`, the first Picard iterate.
    pub fn base(&self) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            fields: self.base.clone(),
        }
    }

    pub fn apply(&self, u: &Trajectory) -> Result<Trajectory> {
        if u.times != self.times {
            return Err(Error::Alignment("trajectory and map use different time grids".into()));
        }
        self.op.grid().require_same(u.grid())?;
        if !self.nonlinear {
            return Ok(self.base());
        }
        let nodes = self.times.nodes();
        let w = self.weight.values();
        let mut slots: Vec<Vec<Complex64>> = (0..nodes.len() - 1)
            .into_par_iter()
            .map(|i| {
                let (a, b) = (u.fields[i].values(), u.fields[i + 1].values());
                let g: Vec<f64> = a
                    .iter()
                    .zip(b)
                    .zip(w)
                    .map(|((x, y), wt)| wt * power_odd(0.5 * (x + y), self.p))
                    .collect();
                self.op.forward(&g)
            })
            .collect();
        // slots[i] <- D_{i+1}
        let lambdas = self.op.eigenvalues();
        let mut prev: Option<usize> = None;
        for i in 0..slots.len() {
            let dt = nodes[i + 1] - nodes[i];
            let (done, rest) = slots.split_at_mut(i);
            let cur = &mut rest[0];
            for (k, c) in cur.iter_mut().enumerate() {
                let x = lambdas[k] * dt;
                *c *= dt * phi1(x);
                if let Some(pi) = prev {
                    *c += done[pi][k] * (-x).exp();
                }
            }
            prev = Some(i);
        }
        let mut fields = Vec::with_capacity(nodes.len());
        fields.push(self.base[0].clone());
        let rest: Vec<Field> = slots
            .into_par_iter()
            .enumerate()
            .map(|(i, d)| {
                let (vals, _) = self.op.inverse(d);
                let out = vals.iter().zip(self.base[i + 1].values()).map(|(a, b)| a + b).collect();
                Field::new(*self.op.grid(), out)
            })
            .collect::<Result<_>>()?;
        fields.extend(rest);
        Ok(Trajectory {
            times: self.times.clone(),
            fields,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Ball radius `M`; iterates with `sup ||u||_q > 10 M` abort the solve.
    pub radius: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySolution {
    pub trajectory: Trajectory,
    /// `d(u^{k+1}, u^k)` per iteration.
    pub picard_distances: Vec<f64>,
    /// Ratios of consecutive distances.
    pub contraction_ratios: Vec<f64>,
    /// `d(Phi u, u)` for the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

impl TrajectorySolution {
    pub fn iterations(&self) -> usize {
        self.picard_distances.len()
    }

    pub fn max_ratio(&self) -> f64 {
        self.contraction_ratios.iter().cloned().fold(0.0, f64::max)
    }
}

/// Iterates `u^{k+1} = Phi(u^k)` from `start` (default `e^{t Delta} u0 + Z`)
/// until `d(u^{k+1}, u^k) <= tol`.
pub fn picard_solve(
    map: &PicardMap,
    metric: &Metric,
    opts: &PicardOptions,
    start: Option<Trajectory>,
) -> Result<TrajectorySolution> {
    let mut u = start.unwrap_or_else(|| map.base());
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let guard = |k: usize, v: &Trajectory| -> Result<()> {
        if let Some(m) = opts.radius {
            let norm = v.sup_norm(metric.q)?;
            if !(norm <= 10.0 * m) {
                return Err(Error::Divergence {
                    iteration: k,
                    norm,
                    limit: 10.0 * m,
                });
            }
        }
        Ok(())
    };
    guard(0, &u)?;
    let mut converged = false;
    for k in 1..=opts.max_iter {
        let next = map.apply(&u)?;
        guard(k, &next)?;
        let d = metric.distance(&next, &u)?;
        if let Some(&last) = distances.last() {
            if last > 0.0 {
                ratios.push(d / last);
            }
        }
        distances.push(d);
        u = next;
        if d <= opts.tol {
            converged = true;
            break;
        }
    }
    let residual = metric.distance(&map.apply(&u)?, &u)?;
    Ok(TrajectorySolution {
        trajectory: u,
        picard_distances: distances,
        contraction_ratios: ratios,
        residual,
        converged,
    })
}

/// Random trajectory with `metric.norm(u) = fraction * radius`: a few Gaussian
/// bumps near the origin with time-varying amplitudes.
pub fn random_ball_trajectory(
    times: &TimeGrid,
    grid: &Grid,
    metric: &Metric,
    radius: f64,
    fraction: f64,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = stream_rng(seed, 0x4241_4c4c);
    let n = grid.dimension();
    let l = grid.half_width();
    let lo = 1.5 * grid.spacing();
    let hi = (0.3 * l).max(2.0 * lo);
    let bumps: Vec<([f64; 3], f64, f64, f64)> = (0..4)
        .map(|_| {
            let mut c = [0.0; 3];
            for x in c.iter_mut().take(n) {
                *x = rng.random_range(-0.3 * l..0.3 * l);
            }
            let width = rng.random_range(lo..hi);
            (c, width, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .collect();
    let horizon = times.horizon();
    let fields = times
        .nodes()
        .iter()
        .map(|&t| {
            let s = t / horizon;
            Field::from_fn(*grid, |x| {
                bumps
                    .iter()
                    .map(|(c, w, a, b)| {
                        let r2: f64 = x.iter().zip(c).map(|(u, v)| (u - v) * (u - v)).sum();
                        (a + b * s) * (-r2 / (2.0 * w * w)).exp()
                    })
                    .sum()
            })
        })
        .collect();
    let u = Trajectory::new(times.clone(), fields)?;
    let norm = metric.norm(&u)?;
    let scale = fraction * radius / norm;
    Ok(Trajectory {
        times: u.times,
        fields: u.fields.iter().map(|f| f.scaled(scale)).collect(),
    })
}

/// `u_lambda(t, x) = lambda^{2/(p-1)} u(lambda^2 t, lambda x)` for `lambda = 2^k`:
/// the box shrinks to `L / lambda` and the times to `t / lambda^2`.
pub fn scaling_transform(u: &Trajectory, lambda: f64, p: f64) -> Result<Trajectory> {
    if !(lambda > 0.0) || lambda.log2().fract() != 0.0 {
        return Err(Error::Alignment(format!(
            "scaling factor must be a power of two to map grids onto grids, got {lambda}"
        )));
    }
    let grid = u.grid().rescaled(lambda)?;
    let amp = lambda.powf(2.0 / (p - 1.0));
    let l2 = lambda * lambda;
    let times = TimeGrid::new(u.times.nodes().iter().map(|t| t / l2).collect())?;
    let fields = u
        .fields
        .iter()
        .map(|f| Field::new(grid, f.values().iter().map(|v| amp * v).collect()))
        .collect::<Result<_>>()?;
    Trajectory::new(times, fields)
}
