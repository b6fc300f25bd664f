use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, Grid, SingularWeight};
use crate::error::{Error, Result};

/// Multi-dimensional FFT on a [`Grid`] together with the Laplacian spectrum
/// `lambda_k = (pi / L)^2 |k|^2`, `k` in `(-M/2, M/2]^N`.
#[derive(Clone)]
pub struct SpectralOperator {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    eigenvalues: Vec<f64>,
}

impl std::fmt::Debug for SpectralOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOperator").field("grid", &self.grid).finish()
    }
}

impl SpectralOperator {
    pub fn new(grid: Grid) -> Self {
        let m = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scale = (std::f64::consts::PI / grid.half_width()).powi(2);
        let eigenvalues = (0..grid.len())
            .map(|idx| {
                let ix = grid.axis_indices(idx);
                ix[..grid.dimension()]
                    .iter()
                    .map(|&i| {
                        let k = wavenumber(i, m) as f64;
                        k * k
                    })
                    .sum::<f64>()
                    * scale
            })
            .collect();
        Self {
            grid,
            forward,
            inverse,
            eigenvalues,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.grid.points_per_axis();
        let n = self.grid.dimension();
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); m];
        for axis in 0..n - 1 {
            let stride = m.pow((n - 1 - axis) as u32);
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[start + k * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[start + k * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalised forward DFT of real values.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse DFT (normalised by `M^N`); returns the real part and the
    /// largest imaginary residue.
    pub fn inverse(&self, mut data: Vec<Complex64>) -> (Vec<f64>, f64) {
        self.transform(&mut data, &self.inverse);
        let norm = 1.0 / self.grid.len() as f64;
        let mut residue: f64 = 0.0;
        let values = data
            .into_iter()
            .map(|c| {
                residue = residue.max((c.im * norm).abs());
                c.re * norm
            })
            .collect();
        (values, residue)
    }

    /// Multiply spectral data by `exp(-lambda t)` in place.
    pub fn apply_heat_multiplier(&self, data: &mut [Complex64], t: f64) {
        for (c, &l) in data.iter_mut().zip(&self.eigenvalues) {
            *c *= (-l * t).exp();
        }
    }

    pub fn heat(&self, f: &Field, t: f64) -> Result<Field> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("heat semigroup needs t >= 0, got {t}")));
        }
        self.grid.require_same(f.grid())?;
        if t == 0.0 {
            return Ok(f.clone());
        }
        let mut data = self.forward(f.values());
        self.apply_heat_multiplier(&mut data, t);
        Ok(Field::from_raw(self.grid, self.inverse(data).0))
    }

    /// `S_gamma(t) f = e^{t Delta}(w f)`, `t > 0`.
    pub fn s_gamma(&self, f: &Field, w: &SingularWeight, t: f64) -> Result<Field> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "S_gamma(t) is applied for t > 0 only, got {t}"
            )));
        }
        self.heat(&w.apply(f)?, t)
    }
}

/// Signed wavenumber of FFT index `i` on `m` points, Nyquist mapped to `+m/2`.
pub(crate) fn wavenumber(i: usize, m: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

pub fn heat_semigroup(f: &Field, t: f64) -> Result<Field> {
    SpectralOperator::new(*f.grid()).heat(f, t)
}

pub fn s_gamma_apply(f: &Field, w: &SingularWeight, t: f64) -> Result<Field> {
    SpectralOperator::new(*f.grid()).s_gamma(f, w, t)
}
