//! Interchangeable fBm path samplers.
//!
//! A sampler is prepared once for a `(grid, H)` pair (factorisation, kernel
//! tables) and then draws any number of paths from a caller-supplied
//! generator. Samplers are looked up by name through [`SamplerRegistry`] so
//! configuration files can pick one at runtime.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{covariance, volterra_kernel, FbmPath, HurstParameter, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

pub trait FbmSampler: Send + Sync {
    fn name(&self) -> &'static str;

    fn grid(&self) -> &TimeGrid;

    fn hurst(&self) -> HurstParameter;

    /// Path values on the grid, `values[0] = 0`.
    fn sample_values(&self, rng: &mut StreamRng) -> Vec<f64>;

    fn sample(&self, seed: u64) -> FbmPath {
        let mut rng = stream_rng(seed, 0);
        FbmPath {
            grid: self.grid().clone(),
            values: self.sample_values(&mut rng),
            hurst: self.hurst(),
            seed,
        }
    }
}

pub type SamplerConstructor = fn(&TimeGrid, HurstParameter) -> Result<Box<dyn FbmSampler>>;

/// Name -> constructor table for fBm samplers.
#[derive(Clone)]
pub struct SamplerRegistry {
    entries: BTreeMap<&'static str, SamplerConstructor>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, constructor: SamplerConstructor) {
        self.entries.insert(name, constructor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, name: &str, grid: &TimeGrid, h: HurstParameter) -> Result<Box<dyn FbmSampler>> {
        let ctor = self.entries.get(name).ok_or_else(|| Error::UnknownStrategy {
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        ctor(grid, h)
    }
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register("cholesky", |g, h| Ok(Box::new(CholeskySampler::new(g, h)?)));
        reg.register("volterra", |g, h| Ok(Box::new(VolterraSampler::new(g, h)?)));
        reg
    }
}

/// Exact Gaussian sampling from the covariance matrix on the positive nodes.
pub struct CholeskySampler {
    grid: TimeGrid,
    hurst: HurstParameter,
    /// Packed lower-triangular factor, row `i` holds `i + 1` entries.
    factor: Vec<f64>,
}

/// Pivots below this fraction of the largest diagonal entry are rejected.
const PIVOT_TOLERANCE: f64 = 1e-12;

impl CholeskySampler {
    pub fn new(grid: &TimeGrid, hurst: HurstParameter) -> Result<Self> {
        let times = &grid.nodes()[1..];
        let n = times.len();
        let mut factor = vec![0.0; n * (n + 1) / 2];
        let row = |i: usize| i * (i + 1) / 2;
        let max_diag = times
            .iter()
            .map(|&t| covariance(t, t, hurst))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = covariance(times[i], times[j], hurst)?;
                let (ri, rj) = (row(i), row(j));
                for k in 0..j {
                    sum -= factor[ri + k] * factor[rj + k];
                }
                if i == j {
                    if !(sum > PIVOT_TOLERANCE * max_diag) {
                        return Err(Error::NotPositiveDefinite {
                            minor: i + 1,
                            pivot: sum,
                        });
                    }
                    factor[ri + i] = sum.sqrt();
                } else {
                    factor[ri + j] = sum / factor[rj + j];
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            hurst,
            factor,
        })
    }

    /// Dense lower factor `L` with `L L^T = R` on the positive nodes.
    pub fn factor_dense(&self) -> Vec<Vec<f64>> {
        let n = self.grid.len() - 1;
        (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                r[..=i].copy_from_slice(&self.factor[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1]);
                r
            })
            .collect()
    }
}

impl FbmSampler for CholeskySampler {
    fn name(&self) -> &'static str {
        "cholesky"
    }

    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    fn sample_values(&self, rng: &mut StreamRng) -> Vec<f64> {
        let n = self.grid.len() - 1;
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        for i in 0..n {
            let r = &self.factor[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            out.push(r.iter().zip(&xi).map(|(l, x)| l * x).sum());
        }
        out
    }
}

/// Discretised Volterra representation `B(t_j) = sum_i K(t_j, m_i) dW_i`
/// with left-point Wiener increments and the kernel at cell midpoints `m_i`.
pub struct VolterraSampler {
    grid: TimeGrid,
    hurst: HurstParameter,
    /// `weights[j-1][i] = K(t_j, m_i) sqrt(dt)`, `i < j`.
    weights: Vec<Vec<f64>>,
}

impl VolterraSampler {
    pub fn new(grid: &TimeGrid, hurst: HurstParameter) -> Result<Self> {
        hurst.require_regular("Volterra sampler")?;
        let dt = grid.uniform_step().ok_or_else(|| {
            Error::Domain("Volterra sampler requires a uniform time grid".into())
        })?;
        let sq = dt.sqrt();
        let nodes = grid.nodes();
        let weights = (1..nodes.len())
            .map(|j| {
                (0..j)
                    .map(|i| Ok(volterra_kernel(nodes[j], nodes[i] + 0.5 * dt, hurst)? * sq))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            hurst,
            weights,
        })
    }
}

impl FbmSampler for VolterraSampler {
    fn name(&self) -> &'static str {
        "volterra"
    }

    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    fn sample_values(&self, rng: &mut StreamRng) -> Vec<f64> {
        let n = self.grid.len() - 1;
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        std::iter::once(0.0)
            .chain(
                self.weights
                    .iter()
                    .map(|w| w.iter().zip(&xi).map(|(a, b)| a * b).sum()),
            )
            .collect()
    }
}

pub fn sample_fbm_cholesky(grid: &TimeGrid, h: HurstParameter, seed: u64) -> Result<FbmPath> {
    Ok(CholeskySampler::new(grid, h)?.sample(seed))
}

pub fn sample_fbm_volterra(grid: &TimeGrid, h: HurstParameter, seed: u64) -> Result<FbmPath> {
    Ok(VolterraSampler::new(grid, h)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(h: f64) -> HurstParameter {
        HurstParameter::new(h).unwrap()
    }

    #[test]
    fn cholesky_factor_reproduces_covariance() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        for &h in &[0.3, 0.6, 0.9] {
            let s = CholeskySampler::new(&grid, hp(h)).unwrap();
            let l = s.factor_dense();
            let t = &grid.nodes()[1..];
            let mut max_err: f64 = 0.0;
            for i in 0..t.len() {
                for j in 0..t.len() {
                    let llt: f64 = (0..t.len()).map(|k| l[i][k] * l[j][k]).sum();
                    max_err = max_err.max((llt - covariance(t[i], t[j], hp(h)).unwrap()).abs());
                }
            }
            assert!(max_err <= 1e-10, "h={h}: {max_err:e}");
        }
    }

    #[test]
    fn cholesky_succeeds_on_large_grids() {
        let grid = TimeGrid::uniform(1.0, 511).unwrap();
        for &h in &[0.55, 0.75, 0.95] {
            assert!(CholeskySampler::new(&grid, hp(h)).is_ok(), "h = {h}");
        }
    }

    #[test]
    fn near_degenerate_grid_names_the_minor() {
        let grid = TimeGrid::new(vec![0.0, 0.5, 0.5 + 1e-15, 1.0]).unwrap();
        match CholeskySampler::new(&grid, hp(0.7)) {
            Err(Error::NotPositiveDefinite { minor, .. }) => assert_eq!(minor, 2),
            other => panic!("expected factorisation error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn seed_determinism() {
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        for name in ["cholesky", "volterra"] {
            let s = SamplerRegistry::default().build(name, &grid, hp(0.7)).unwrap();
            let a = s.sample(11);
            let b = s.sample(11);
            let c = s.sample(12);
            assert_eq!(a, b);
            assert_ne!(a.values, c.values);
            assert_eq!(a.values[0], 0.0);
        }
    }

    #[test]
    fn registry_lookup() {
        let reg = SamplerRegistry::default();
        assert_eq!(reg.names(), vec!["cholesky", "volterra"]);
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        assert!(matches!(
            reg.build("circulant", &grid, hp(0.7)),
            Err(Error::UnknownStrategy { .. })
        ));
        assert!(matches!(
            reg.build("volterra", &grid, hp(0.4)),
            Err(Error::UnsupportedBranch(_))
        ));
        let graded = TimeGrid::graded(1.0, 8, 2.0).unwrap();
        assert!(reg.build("volterra", &graded, hp(0.7)).is_err());
        assert!(reg.build("cholesky", &graded, hp(0.4)).is_ok());
    }
}
