//! Cylindrical fBm on a periodic trigonometric basis and the stochastic
//! convolution `Z(t) = int_0^t e^{(t-s) Delta} dB^H(s)`.
//!
//! The basis on `[-L, L)^N` is `e_m(x) = (2L)^{-N/2} exp(i pi m.(x+L)/L)`,
//! truncated to `|m|_inf <= m_max`. Every mode pair `{m, -m}` carries two
//! independent real fBms `a_m, b_m` (cosine and sine parts) entering as the
//! conjugate coefficients `(a_m -+ i b_m)/sqrt 2`; the zero mode carries one.
//! Each real component is convolved with `e^{-lambda_m t}` independently.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fbm::{covariance, inner_product_h, FbmPath, HurstParameter, SamplerRegistry, StepFunction, TimeGrid};
use crate::heat::{lq_norm_values, Field, Grid, SpectralOperator};
use crate::rng::{mode_stream, stream_rng};

/// Truncated trigonometric basis. `modes[0]` is the zero mode, the rest are
/// one representative of each `{m, -m}` pair (first nonzero entry positive).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    dimension: usize,
    half_width: f64,
    m_max: usize,
    modes: Vec<[i64; 3]>,
    eigenvalues: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(dimension: usize, half_width: f64, m_max: usize) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dimension}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("box half-width must be positive, got {half_width}")));
        }
        let side = 2 * m_max as i64 + 1;
        let total = side.pow(dimension as u32);
        let mut modes = vec![[0i64; 3]];
        for flat in 0..total {
            let mut m = [0i64; 3];
            let mut rem = flat;
            for a in (0..dimension).rev() {
                m[a] = rem % side - m_max as i64;
                rem /= side;
            }
            if m.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
                modes.push(m);
            }
        }
        let scale = (std::f64::consts::PI / half_width).powi(2);
        let eigenvalues = modes
            .iter()
            .map(|m| scale * m.iter().map(|&c| (c * c) as f64).sum::<f64>())
            .collect();
        Ok(Self {
            dimension,
            half_width,
            m_max,
            modes,
            eigenvalues,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// Zero mode followed by one representative per `{m, -m}` pair.
    pub fn representatives(&self) -> &[[i64; 3]] {
        &self.modes
    }

    /// `lambda_m = |pi m / L|^2` per representative.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Every mode of the truncated set, closed under negation.
    pub fn all_modes(&self) -> Vec<[i64; 3]> {
        let mut out = self.modes.clone();
        out.extend(self.modes[1..].iter().map(|m| [-m[0], -m[1], -m[2]]));
        out
    }

    /// Number of independent real components, `(2 m_max + 1)^N`.
    pub fn component_count(&self) -> usize {
        2 * self.modes.len() - 1
    }

    fn component_index(&self, rep: usize, sine: bool) -> usize {
        if rep == 0 {
            0
        } else {
            2 * rep - 1 + sine as usize
        }
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dimension() != self.dimension || grid.half_width() != self.half_width {
            return Err(Error::Alignment(format!(
                "spatial grid {grid:?} does not match the basis box (N = {}, L = {})",
                self.dimension, self.half_width
            )));
        }
        if grid.points_per_axis() < 2 * self.m_max + 2 {
            return Err(Error::Alignment(format!(
                "{} points per axis cannot resolve m_max = {} (need >= {})",
                grid.points_per_axis(),
                self.m_max,
                2 * self.m_max + 2
            )));
        }
        Ok(())
    }
}

/// One real driving fBm and its convolution `z(t) = int_0^t e^{-lambda(t-s)} db(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeNoise {
    pub lambda: f64,
    pub fbm: FbmPath,
    pub convolved: Vec<f64>,
}

/// `z(t_j)` for a piecewise-linear driving path `b` on `nodes`, integrated
/// exactly on each cell: `z_{j+1} = e^{-lambda dt} z_j + (b_{j+1} - b_j) (1 - e^{-lambda dt}) / (lambda dt)`.
/// `lambda = 0` returns `b` itself.
pub fn convolve_mode(lambda: f64, nodes: &[f64], b: &[f64]) -> Vec<f64> {
    if lambda == 0.0 {
        return b.to_vec();
    }
    let mut z = Vec::with_capacity(b.len());
    z.push(0.0);
    for j in 0..b.len() - 1 {
        let x = lambda * (nodes[j + 1] - nodes[j]);
        z.push((-x).exp() * z[j] + (b[j + 1] - b[j]) * phi1(x));
    }
    z
}

/// `(1 - e^{-x}) / x`, continuous at 0.
#[inline]
pub(crate) fn phi1(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Exact variance of the discretised `z(T)` produced by [`convolve_mode`]
/// from an exact fBm sample on `grid`.
pub fn discrete_mode_variance(lambda: f64, grid: &TimeGrid, h: HurstParameter) -> Result<f64> {
    let t = grid.nodes();
    let n = t.len() - 1;
    // weight of each increment b_{j+1} - b_j in z_n
    let mut g = vec![0.0; n];
    let mut decay = 1.0;
    for j in (0..n).rev() {
        let x = lambda * (t[j + 1] - t[j]);
        g[j] = decay * phi1(x);
        decay *= (-x).exp();
    }
    // coefficient of b_i, i = 1..n
    let c: Vec<f64> = (1..=n).map(|i| g[i - 1] - if i < n { g[i] } else { 0.0 }).collect();
    let mut var = 0.0;
    for i in 0..n {
        var += c[i] * c[i] * covariance(t[i + 1], t[i + 1], h)?;
        for k in 0..i {
            var += 2.0 * c[i] * c[k] * covariance(t[i + 1], t[k + 1], h)?;
        }
    }
    Ok(var)
}

/// `Var int_0^t e^{-lambda(t-s)} dB^H(s)` from the closed-form `H` inner product
/// of the cell-averaged integrand on `pieces` equal cells.
pub fn convolution_variance(lambda: f64, t: f64, h: HurstParameter, pieces: usize) -> Result<f64> {
    let dt = t / pieces as f64;
    let breaks: Vec<f64> = (0..=pieces).map(|i| i as f64 * dt).collect();
    let coeffs = (0..pieces)
        .map(|i| {
            let (a, b) = (t - breaks[i + 1], t - breaks[i]);
            if lambda == 0.0 {
                1.0
            } else {
                (-lambda * a).exp() * phi1(lambda * (b - a))
            }
        })
        .collect();
    let phi = StepFunction::new(breaks, coeffs)?;
    inner_product_h(&phi, &phi, h)
}

pub fn sample_mode_convolution(
    lambda: f64,
    grid: &TimeGrid,
    h: HurstParameter,
    seed: u64,
) -> Result<ModeNoise> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("eigenvalue must be >= 0, got {lambda}")));
    }
    h.require_regular("mode convolution")?;
    let sampler = SamplerRegistry::default().build("cholesky", grid, h)?;
    let fbm = sampler.sample(seed);
    let convolved = convolve_mode(lambda, grid.nodes(), &fbm.values);
    Ok(ModeNoise {
        lambda,
        fbm,
        convolved,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOptions {
    /// Registered fBm sampler name.
    pub sampler: String,
    /// Multiplies every driving path.
    pub amplitude: f64,
}

impl Default for NoiseOptions {
    fn default() -> Self {
        Self {
            sampler: "cholesky".into(),
            amplitude: 1.0,
        }
    }
}

/// Sampled `Z(t_j)`, stored as real mode components per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    basis: SpectralBasis,
    grid: TimeGrid,
    hurst: HurstParameter,
    seed: u64,
    outside_existence_range: bool,
    /// `components[c][j]`, component order as in [`SpectralBasis`].
    components: Vec<Vec<f64>>,
}

pub fn sample_noise_path(
    basis: &SpectralBasis,
    grid: &TimeGrid,
    h: HurstParameter,
    seed: u64,
) -> Result<NoisePath> {
    sample_noise_path_with(basis, grid, h, seed, &NoiseOptions::default())
}

pub fn sample_noise_path_with(
    basis: &SpectralBasis,
    grid: &TimeGrid,
    h: HurstParameter,
    seed: u64,
    options: &NoiseOptions,
) -> Result<NoisePath> {
    h.require_regular("cylindrical fBm convolution")?;
    let sampler = SamplerRegistry::default().build(&options.sampler, grid, h)?;
    let nodes = grid.nodes();
    let components = (0..basis.component_count())
        .into_par_iter()
        .map(|c| {
            let (rep, sine) = if c == 0 { (0, false) } else { (c.div_ceil(2), c % 2 == 0) };
            let m = basis.modes[rep];
            let mut rng = stream_rng(seed, mode_stream(&m[..basis.dimension], sine as u64));
            let mut b = sampler.sample_values(&mut rng);
            if options.amplitude != 1.0 {
                b.iter_mut().for_each(|v| *v *= options.amplitude);
            }
            convolve_mode(basis.eigenvalues[rep], nodes, &b)
        })
        .collect();
    Ok(NoisePath {
        basis: basis.clone(),
        grid: grid.clone(),
        hurst: h,
        seed,
        outside_existence_range: !hurst_in_existence_range(basis.dimension, h),
        components,
    })
}

/// `H > max(1/2, N/4)`.
pub fn hurst_in_existence_range(dimension: usize, h: HurstParameter) -> bool {
    h.value() > 0.5f64.max(dimension as f64 / 4.0)
}

impl NoisePath {
    /// `Z = 0` on the given time grid.
    pub fn zero(basis: &SpectralBasis, grid: &TimeGrid, h: HurstParameter) -> Self {
        Self {
            basis: basis.clone(),
            grid: grid.clone(),
            hurst: h,
            seed: 0,
            outside_existence_range: !hurst_in_existence_range(basis.dimension, h),
            components: vec![vec![0.0; grid.len()]; basis.component_count()],
        }
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Set when `H <= max(1/2, N/4)`: computable, but outside the range
    /// where existence is established.
    pub fn outside_existence_range(&self) -> bool {
        self.outside_existence_range
    }

    /// Convolved real component `c` over time.
    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    /// Same path restricted to `|m|_inf <= m_max`. Mode seeds do not depend
    /// on the truncation, so this equals sampling with the smaller basis.
    pub fn truncated(&self, m_max: usize) -> Result<Self> {
        if m_max > self.basis.m_max {
            return Err(Error::Domain(format!(
                "cannot extend truncation from {} to {m_max}",
                self.basis.m_max
            )));
        }
        let basis = SpectralBasis::new(self.basis.dimension, self.basis.half_width, m_max)?;
        let mut components = Vec::with_capacity(basis.component_count());
        let lookup: std::collections::HashMap<[i64; 3], usize> =
            self.basis.modes.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        for (rep, m) in basis.modes.iter().enumerate() {
            let src = lookup[m];
            components.push(self.components[self.basis.component_index(src, false)].clone());
            if rep > 0 {
                components.push(self.components[self.basis.component_index(src, true)].clone());
            }
        }
        Ok(Self {
            basis,
            components,
            ..self.clone()
        })
    }

    /// Keeps the nodes `0..=last`.
    pub fn truncated_in_time(&self, last: usize) -> Result<Self> {
        Ok(Self {
            grid: self.grid.truncated(last)?,
            components: self.components.iter().map(|c| c[..=last].to_vec()).collect(),
            ..self.clone()
        })
    }

    /// `||Z(t_j)||_{L^2}` of the continuous truncated series (Parseval).
    pub fn l2_norm(&self, j: usize) -> f64 {
        self.components.iter().map(|c| c[j] * c[j]).sum::<f64>().sqrt()
    }

    /// Spectrum of `Z(t_j)` in the FFT layout of `grid`, scaled so that
    /// [`SpectralOperator::inverse`] returns the field values.
    pub fn spectrum_at(&self, j: usize, grid: &Grid) -> Result<Vec<Complex64>> {
        self.basis.check_grid(grid)?;
        let m = grid.points_per_axis();
        let n = self.basis.dimension;
        let scale = grid.len() as f64 * (2.0 * self.basis.half_width).powf(-0.5 * n as f64);
        let flat = |mode: &[i64; 3]| -> usize {
            (0..n).fold(0, |acc, a| acc * m + mode[a].rem_euclid(m as i64) as usize)
        };
        let mut out = vec![Complex64::default(); grid.len()];
        out[0] = Complex64::new(self.components[0][j] * scale, 0.0);
        let s = scale * std::f64::consts::FRAC_1_SQRT_2;
        for (rep, mode) in self.basis.modes.iter().enumerate().skip(1) {
            let a = self.components[2 * rep - 1][j];
            let b = self.components[2 * rep][j];
            out[flat(mode)] = Complex64::new(a * s, -b * s);
            out[flat(&[-mode[0], -mode[1], -mode[2]])] = Complex64::new(a * s, b * s);
        }
        Ok(out)
    }

    /// `Z(t_j)` on `grid` and the largest imaginary residue of the inverse transform.
    pub fn field_with_residue(&self, j: usize, op: &SpectralOperator) -> Result<(Field, f64)> {
        let (values, residue) = op.inverse(self.spectrum_at(j, op.grid())?);
        Ok((Field::new(*op.grid(), values)?, residue))
    }

    pub fn field_at(&self, j: usize, op: &SpectralOperator) -> Result<Field> {
        Ok(self.field_with_residue(j, op)?.0)
    }
}

/// `K(T) = sup_t ||Z(t)||_q + sup_t t^sigma ||Z(t)||_r` over grid nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KFunctional {
    pub sup_q: f64,
    pub sup_weighted_r: f64,
    pub total: f64,
    pub sigma: f64,
    pub q: f64,
    pub r: f64,
}

impl KFunctional {
    pub fn zero(q: f64, r: f64, sigma: f64) -> Self {
        Self {
            sup_q: 0.0,
            sup_weighted_r: 0.0,
            total: 0.0,
            sigma,
            q,
            r,
        }
    }
}

/// `(||Z(t_j)||_q, ||Z(t_j)||_r)` for every node.
pub fn node_norms(z: &NoisePath, grid: &Grid, q: f64, r: f64) -> Result<Vec<(f64, f64)>> {
    let op = SpectralOperator::new(*grid);
    (0..z.grid.len())
        .into_par_iter()
        .map(|j| {
            let (values, _) = op.inverse(z.spectrum_at(j, grid)?);
            Ok((lq_norm_values(&values, grid, q)?, lq_norm_values(&values, grid, r)?))
        })
        .collect()
}

/// `K(t_j)` for every horizon `t_j` of the path's grid; nondecreasing in `j`.
pub fn k_profile(times: &[f64], norms: &[(f64, f64)], q: f64, r: f64, sigma: f64) -> Result<Vec<KFunctional>> {
    if !(q > 1.0 && r > 1.0 && sigma > 0.0) {
        return Err(Error::Domain(format!(
            "K functional needs q, r > 1 and sigma > 0, got q = {q}, r = {r}, sigma = {sigma}"
        )));
    }
    if times.len() != norms.len() {
        return Err(Error::Alignment("one norm pair per time node required".into()));
    }
    let mut acc = KFunctional::zero(q, r, sigma);
    Ok(times
        .iter()
        .zip(norms)
        .map(|(&t, &(nq, nr))| {
            let weighted = if t == 0.0 { 0.0 } else { t.powf(sigma) * nr };
            acc.sup_q = acc.sup_q.max(nq);
            acc.sup_weighted_r = acc.sup_weighted_r.max(weighted);
            acc.total = acc.sup_q + acc.sup_weighted_r;
            acc
        })
        .collect())
}

pub fn k_functional(z: &NoisePath, grid: &Grid, q: f64, r: f64, sigma: f64) -> Result<KFunctional> {
    let norms = node_norms(z, grid, q, r)?;
    Ok(*k_profile(z.grid.nodes(), &norms, q, r, sigma)?.last().unwrap())
}

/// Growth of `sup_t ||Z(t)||_{L^2}^2` when the truncation is reduced from
/// the path's `m_max` to `m_small`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationGrowth {
    pub coarse_energy: f64,
    pub fine_energy: f64,
    /// `fine / coarse - 1`.
    pub relative_growth: f64,
}

pub fn truncation_growth(fine: &NoisePath, m_small: usize) -> Result<TruncationGrowth> {
    let coarse = fine.truncated(m_small)?;
    let sup = |z: &NoisePath| (0..z.grid.len()).map(|j| z.l2_norm(j).powi(2)).fold(0.0, f64::max);
    let (c, f) = (sup(&coarse), sup(fine));
    Ok(TruncationGrowth {
        coarse_energy: c,
        fine_energy: f,
        relative_growth: f / c - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::lq_norm;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hp(h: f64) -> HurstParameter {
        HurstParameter::new(h).unwrap()
    }

    #[test]
    fn basis_structure() {
        let b = SpectralBasis::new(2, 1.0, 2).unwrap();
        assert_eq!(b.component_count(), 25);
        assert_eq!(b.representatives().len(), 13);
        assert_eq!(b.representatives()[0], [0, 0, 0]);
        let all = b.all_modes();
        assert_eq!(all.len(), 25);
        for m in &all {
            assert!(all.contains(&[-m[0], -m[1], -m[2]]));
        }
        assert!(b.eigenvalues().iter().all(|&l| l >= 0.0));
        assert_eq!(b.eigenvalues()[0], 0.0);
        let pi2 = std::f64::consts::PI.powi(2);
        for (m, l) in b.representatives().iter().zip(b.eigenvalues()) {
            assert_relative_eq!(*l, pi2 * (m[0] * m[0] + m[1] * m[1]) as f64);
        }
        assert!(b.check_grid(&Grid::new(2, 1.0, 8).unwrap()).is_ok());
        let b = SpectralBasis::new(2, 1.0, 4).unwrap();
        assert!(b.check_grid(&Grid::new(2, 1.0, 8).unwrap()).is_err());
        assert!(b.check_grid(&Grid::new(2, 2.0, 16).unwrap()).is_err());
    }

    #[test]
    fn zero_eigenvalue_returns_the_fbm() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let m = sample_mode_convolution(0.0, &grid, hp(0.7), 3).unwrap();
        assert_eq!(m.convolved, m.fbm.values);
        let m = sample_mode_convolution(5.0, &grid, hp(0.7), 3).unwrap();
        assert_eq!(m.convolved[0], 0.0);
        assert!(sample_mode_convolution(-1.0, &grid, hp(0.7), 3).is_err());
        assert!(matches!(
            sample_mode_convolution(1.0, &grid, hp(0.5), 3),
            Err(Error::UnsupportedBranch(_))
        ));
    }

    #[test]
    fn convolution_of_linear_path_matches_closed_form() {
        // b(t) = t: z(t) = (1 - e^{-lambda t}) / lambda
        let grid = TimeGrid::graded(2.0, 40, 2.0).unwrap();
        let b = grid.nodes().to_vec();
        for &lambda in &[1e-12, 0.3, 7.0, 400.0] {
            let z = convolve_mode(lambda, grid.nodes(), &b);
            for (t, zt) in grid.nodes().iter().zip(&z) {
                assert_relative_eq!(*zt, -(-lambda * t).exp_m1() / lambda, max_relative = 1e-12, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn discrete_variance_approaches_oracle() {
        let h = hp(0.75);
        for &lambda in &[0.0, 2.0, 20.0] {
            let oracle = convolution_variance(lambda, 1.0, h, 1000).unwrap();
            let disc = discrete_mode_variance(lambda, &TimeGrid::uniform(1.0, 512).unwrap(), h).unwrap();
            assert_relative_eq!(disc, oracle, max_relative = 1e-2);
        }
        assert_relative_eq!(convolution_variance(0.0, 1.0, h, 10).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn sampled_mode_variance_matches_oracle() {
        let grid = TimeGrid::uniform(1.0, 128).unwrap();
        let h = hp(0.7);
        let lambda = 4.0;
        let sampler = SamplerRegistry::default().build("cholesky", &grid, h).unwrap();
        let n = 10_000;
        let mut sum = 0.0;
        for s in 0..n {
            let b = sampler.sample_values(&mut stream_rng(s, 1));
            let z = convolve_mode(lambda, grid.nodes(), &b);
            sum += z.last().unwrap().powi(2);
        }
        let oracle = convolution_variance(lambda, 1.0, h, 1000).unwrap();
        assert_relative_eq!(sum / n as f64, oracle, max_relative = 0.1);
    }

    #[test]
    fn variance_plateaus_for_large_times() {
        let h = hp(0.8);
        let lambda = 2.0;
        let at = |t: f64| convolution_variance(lambda, t, h, 1500).unwrap();
        let base = at(5.0 / lambda);
        assert!(at(20.0 / lambda) <= 3.0 * base);
    }

    #[test]
    fn single_zero_mode_is_constant_field() {
        let basis = SpectralBasis::new(2, 1.5, 0).unwrap();
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let z = sample_noise_path(&basis, &grid, hp(0.75), 9).unwrap();
        let op = SpectralOperator::new(Grid::new(2, 1.5, 8).unwrap());
        let b0 = SamplerRegistry::default()
            .build("cholesky", &grid, hp(0.75))
            .unwrap()
            .sample_values(&mut stream_rng(9, mode_stream(&[0, 0], 0)));
        for (j, b) in b0.iter().enumerate() {
            let f = z.field_at(j, &op).unwrap();
            for v in f.values() {
                assert_relative_eq!(*v, b / 3.0, max_relative = 1e-12, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn field_is_real_and_parseval_holds() {
        let basis = SpectralBasis::new(2, 1.0, 5).unwrap();
        let grid = TimeGrid::uniform(0.5, 32).unwrap();
        let z = sample_noise_path(&basis, &grid, hp(0.8), 1).unwrap();
        assert!(!z.outside_existence_range());
        let op = SpectralOperator::new(Grid::new(2, 1.0, 16).unwrap());
        for j in [0, 7, 32] {
            let (f, residue) = z.field_with_residue(j, &op).unwrap();
            assert!(residue <= 1e-10 * f.max_abs().max(1e-300));
            if j == 0 {
                assert_eq!(f.max_abs(), 0.0);
            } else {
                assert_relative_eq!(lq_norm(&f, 2.0).unwrap(), z.l2_norm(j), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn nested_truncation_and_determinism() {
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let big = sample_noise_path(&SpectralBasis::new(2, 1.0, 4).unwrap(), &grid, hp(0.8), 5).unwrap();
        let small = sample_noise_path(&SpectralBasis::new(2, 1.0, 2).unwrap(), &grid, hp(0.8), 5).unwrap();
        assert_eq!(big.truncated(2).unwrap(), small);
        assert_eq!(big, sample_noise_path(&SpectralBasis::new(2, 1.0, 4).unwrap(), &grid, hp(0.8), 5).unwrap());
        assert!(small.truncated(3).is_err());
    }

    #[test]
    fn hurst_guards() {
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let basis = SpectralBasis::new(3, 1.0, 1).unwrap();
        assert!(matches!(
            sample_noise_path(&basis, &grid, hp(0.5), 0),
            Err(Error::UnsupportedBranch(_))
        ));
        assert!(sample_noise_path(&basis, &grid, hp(0.6), 0).unwrap().outside_existence_range());
        assert!(!sample_noise_path(&basis, &grid, hp(0.8), 0).unwrap().outside_existence_range());
        let volterra = NoiseOptions { sampler: "volterra".into(), amplitude: 1.0 };
        assert!(sample_noise_path_with(&basis, &grid, hp(0.8), 0, &volterra).is_ok());
        let bogus = NoiseOptions { sampler: "spectral".into(), amplitude: 1.0 };
        assert!(matches!(
            sample_noise_path_with(&basis, &grid, hp(0.8), 0, &bogus),
            Err(Error::UnknownStrategy { .. })
        ));
    }

    #[test]
    fn k_functional_cases() {
        let basis = SpectralBasis::new(2, 1.0, 1).unwrap();
        let tg = TimeGrid::uniform(1.0, 8).unwrap();
        let g = Grid::new(2, 1.0, 8).unwrap();
        let zero = NoisePath::zero(&basis, &tg, hp(0.8));
        assert_eq!(k_functional(&zero, &g, 4.0, 9.6, 0.2).unwrap().total, 0.0);
        // one-node path: total = a + t1^sigma b
        let basis0 = SpectralBasis::new(2, 1.0, 0).unwrap();
        let tg1 = TimeGrid::new(vec![0.0, 0.3]).unwrap();
        let z = sample_noise_path(&basis0, &tg1, hp(0.8), 2).unwrap();
        let k = k_functional(&z, &g, 4.0, 9.6, 0.2).unwrap();
        let c = z.component(0)[1] / 2.0;
        let a = c.abs() * 2.0f64.powf(2.0 / 4.0);
        let b = c.abs() * 2.0f64.powf(2.0 / 9.6);
        assert_relative_eq!(k.total, a + 0.3f64.powf(0.2) * b, max_relative = 1e-12);
        assert_relative_eq!(k.total, k.sup_q + k.sup_weighted_r);
        assert!(k_profile(&[0.0], &[(0.0, 0.0)], 4.0, 9.6, 0.0).is_err());
    }

    #[test]
    fn mode_variance_slope_is_minus_two_h() {
        let h = hp(0.75);
        let grid = TimeGrid::uniform(1.0, 1024).unwrap();
        let lambdas = [40.0, 80.0, 160.0, 320.0];
        let lv: Vec<f64> = lambdas.iter().map(|l: &f64| l.ln()).collect();
        let vv: Vec<f64> = lambdas
            .iter()
            .map(|&l| discrete_mode_variance(l, &grid, h).unwrap().ln())
            .collect();
        let slope = (vv[3] - vv[0]) / (lv[3] - lv[0]);
        assert!((slope + 1.5).abs() <= 0.15 * 1.5, "slope {slope}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn linear_in_driving_noise(seed in 0u64..1000, c in -4.0f64..4.0) {
            let basis = SpectralBasis::new(1, 1.0, 3).unwrap();
            let grid = TimeGrid::uniform(1.0, 16).unwrap();
            let z = sample_noise_path(&basis, &grid, hp(0.7), seed).unwrap();
            let opts = NoiseOptions { amplitude: c, ..NoiseOptions::default() };
            let zc = sample_noise_path_with(&basis, &grid, hp(0.7), seed, &opts).unwrap();
            for k in 0..basis.component_count() {
                for (a, b) in z.component(k).iter().zip(zc.component(k)) {
                    prop_assert!((c * a - b).abs() <= 1e-13 * (1.0 + b.abs()));
                }
            }
        }

        #[test]
        fn k_is_nondecreasing_in_horizon(seed in 0u64..1000) {
            let basis = SpectralBasis::new(1, 1.0, 3).unwrap();
            let tg = TimeGrid::uniform(1.0, 16).unwrap();
            let z = sample_noise_path(&basis, &tg, hp(0.7), seed).unwrap();
            let g = Grid::new(1, 1.0, 8).unwrap();
            let norms = node_norms(&z, &g, 3.0, 5.0).unwrap();
            let prof = k_profile(tg.nodes(), &norms, 3.0, 5.0, 0.3).unwrap();
            for w in prof.windows(2) {
                prop_assert!(w[1].total >= w[0].total);
            }
        }
    }
}
