//! Monte-Carlo and quadrature diagnostics for the fBm layer: increment
//! variance, self-similarity, empirical covariance and the isometry
//! `||K* phi||^2_{L^2} = <phi, phi>_H`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{covariance, inner_product_h, k_star_l2_norm_sq, wiener_integral_step, FbmPath};
use super::{CholeskySampler, FbmSampler, HurstParameter, StepFunction, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// `count` independent paths, path `i` drawn from the stream of `derive_seed(seed, i)`.
pub fn sample_paths(sampler: &dyn FbmSampler, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|i| sampler.sample_values(&mut stream_rng(derive_seed(seed, i as u64), 0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawReport {
    /// Per lag `k`: `(k dt, relative error of the pooled increment variance)`.
    pub increments: Vec<(f64, f64)>,
    /// Per node `t`: `(t, relative error of Var B(2t) / Var B(t) against 2^{2H})`.
    pub self_similarity: Vec<(f64, f64)>,
}

impl LawReport {
    pub fn max_increment_error(&self) -> f64 {
        self.increments.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    pub fn max_self_similarity_error(&self) -> f64 {
        self.self_similarity.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

/// Law checks on a uniform grid: increment variance at dyadic lags against
/// `|t - s|^{2H}` and the scaling ratio `Var B(2t) / Var B(t) = 2^{2H}`.
pub fn law_check(sampler: &dyn FbmSampler, count: usize, seed: u64) -> Result<LawReport> {
    let grid = sampler.grid();
    let dt = grid
        .uniform_step()
        .ok_or_else(|| Error::Domain("law check needs a uniform grid".into()))?;
    let n = grid.intervals();
    let two_h = 2.0 * sampler.hurst().value();
    let paths = sample_paths(sampler, count, seed);
    let lags: Vec<usize> = std::iter::successors(Some(1usize), |k| Some(2 * k))
        .take_while(|&k| k <= n)
        .collect();
    let increments = lags
        .iter()
        .map(|&k| {
            let mut sum = 0.0;
            let mut terms = 0usize;
            for path in &paths {
                for s in 0..=n - k {
                    let d = path[s + k] - path[s];
                    sum += d * d;
                    terms += 1;
                }
            }
            let lag = k as f64 * dt;
            let target = lag.powf(two_h);
            (lag, (sum / terms as f64 - target).abs() / target)
        })
        .collect();
    let second_moment = |j: usize| paths.iter().map(|p| p[j] * p[j]).sum::<f64>() / count as f64;
    let self_similarity = lags
        .iter()
        .filter(|&&k| 2 * k <= n)
        .map(|&k| {
            let ratio = second_moment(2 * k) / second_moment(k);
            let target = 2f64.powf(two_h);
            (k as f64 * dt, (ratio - target).abs() / target)
        })
        .collect();
    Ok(LawReport {
        increments,
        self_similarity,
    })
}

/// Largest entrywise deviation of the empirical covariance on the positive
/// nodes from `R(s, t)`.
pub fn covariance_error(sampler: &dyn FbmSampler, count: usize, seed: u64) -> Result<f64> {
    let nodes = sampler.grid().nodes();
    let h = sampler.hurst();
    let paths = sample_paths(sampler, count, seed);
    let mut worst = 0.0f64;
    for i in 1..nodes.len() {
        for j in i..nodes.len() {
            let emp = paths.iter().map(|p| p[i] * p[j]).sum::<f64>() / count as f64;
            worst = worst.max((emp - covariance(nodes[i], nodes[j], h)?).abs());
        }
    }
    Ok(worst)
}

/// Step function with `pieces` intervals whose breakpoints are distinct nodes
/// of `grid` and whose coefficients are standard normal.
pub fn random_step_function<R: Rng>(grid: &TimeGrid, pieces: usize, rng: &mut R) -> Result<StepFunction> {
    let nodes = grid.nodes();
    if pieces == 0 || pieces >= nodes.len() {
        return Err(Error::Domain(format!(
            "cannot place {pieces} pieces on {} nodes",
            nodes.len()
        )));
    }
    let mut idx = rand::seq::index::sample(rng, nodes.len(), pieces + 1).into_vec();
    idx.sort_unstable();
    let breakpoints = idx.iter().map(|&i| nodes[i]).collect();
    let coefficients = (0..pieces).map(|_| rng.sample(StandardNormal)).collect();
    StepFunction::new(breakpoints, coefficients)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryCase {
    pub phi: StepFunction,
    pub h_norm_sq: f64,
    /// `||K* phi||^2` at `level` and `level + 1`.
    pub coarse: f64,
    pub refined: f64,
    pub monte_carlo: f64,
}

impl IsometryCase {
    pub fn quadrature_error(&self) -> f64 {
        (self.refined - self.h_norm_sq).abs() / self.h_norm_sq
    }

    pub fn monte_carlo_error(&self) -> f64 {
        (self.monte_carlo - self.h_norm_sq).abs() / self.h_norm_sq
    }
}

/// For `functions` random step functions on `grid`: the `K*` quadrature at
/// `level` and one refinement doubling, and the sample variance of the Wiener
/// integral over `samples` Cholesky paths.
pub fn isometry_check(
    grid: &TimeGrid,
    h: HurstParameter,
    functions: usize,
    samples: usize,
    level: u32,
    seed: u64,
) -> Result<Vec<IsometryCase>> {
    let sampler = CholeskySampler::new(grid, h)?;
    let paths: Vec<FbmPath> = sample_paths(&sampler, samples, seed)
        .into_iter()
        .map(|values| FbmPath {
            grid: grid.clone(),
            values,
            hurst: h,
            seed,
        })
        .collect();
    let mut rng = stream_rng(seed, 0x4953_4f4d);
    let phis = (0..functions)
        .map(|i| random_step_function(grid, 2 + i % 5, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    phis.into_par_iter()
        .map(|phi| {
            let horizon = grid.horizon();
            let integrals = paths
                .iter()
                .map(|p| wiener_integral_step(&phi, p))
                .collect::<Result<Vec<_>>>()?;
            let mean = integrals.iter().sum::<f64>() / samples as f64;
            let var = integrals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (samples as f64 - 1.0);
            Ok(IsometryCase {
                h_norm_sq: inner_product_h(&phi, &phi, h)?,
                coarse: k_star_l2_norm_sq(&phi, horizon, h, level)?,
                refined: k_star_l2_norm_sq(&phi, horizon, h, level + 1)?,
                monte_carlo: var,
                phi,
            })
        })
        .collect()
}
