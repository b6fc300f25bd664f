//! Empirical check of the weighted smoothing estimate
//! `||S_gamma(t) phi||_{q2} <= C t^{-(N/2)(1/q1 - 1/q2) - gamma/2} ||phi||_{q1}`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{lq_norm_values, Field, Grid, SingularWeight, SpectralOperator};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub gamma: f64,
    pub q1: f64,
    pub q2: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub probe_count: usize,
    pub seed: u64,
}

impl ProbeConfig {
    /// Probe window `[(2h)^2, (L/4)^2]`, matching the range of probe widths.
    pub fn for_grid(grid: &Grid, gamma: f64, q1: f64, q2: f64) -> Self {
        let h = grid.spacing();
        Self {
            gamma,
            q1,
            q2,
            t_min: (2.0 * h).powi(2),
            t_max: (grid.half_width() / 4.0).powi(2),
            t_count: 12,
            probe_count: 48,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub slope: f64,
    pub expected_slope: f64,
    /// `2 max_t ratio(t) t^{-expected_slope}`.
    pub c0: f64,
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl ProbeResult {
    pub fn relative_slope_error(&self) -> f64 {
        ((self.slope - self.expected_slope) / self.expected_slope).abs()
    }
}

/// `-(N/2)(1/q1 - 1/q2) - gamma/2`.
pub fn smoothing_exponent(dimension: usize, gamma: f64, q1: f64, q2: f64) -> f64 {
    -(dimension as f64 / 2.0) * (1.0 / q1 - 1.0 / q2) - gamma / 2.0
}

fn check_exponents(n: usize, gamma: f64, q1: f64, q2: f64) -> Result<()> {
    if !(q1 > 1.0 && q2 > 1.0) {
        return Err(Error::Precondition(format!(
            "need 1 < q1, q2, got q1 = {q1}, q2 = {q2}"
        )));
    }
    let mid = gamma / n as f64 + 1.0 / q1;
    if gamma == 0.0 {
        if q1 > q2 {
            return Err(Error::Precondition(format!(
                "gamma = 0 requires q1 <= q2, got q1 = {q1}, q2 = {q2}"
            )));
        }
        return Ok(());
    }
    if !(1.0 / q2 < mid) {
        return Err(Error::Precondition(format!(
            "1/q2 < gamma/N + 1/q1 fails: {} >= {mid}",
            1.0 / q2
        )));
    }
    if !(mid < 1.0) {
        return Err(Error::Precondition(format!(
            "gamma/N + 1/q1 < 1 fails: {mid} >= 1"
        )));
    }
    Ok(())
}

fn gaussian(grid: &Grid, centre: [f64; 3], width: f64) -> Field {
    Field::from_fn(*grid, |x| {
        let r2: f64 = x.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum();
        (-r2 / (2.0 * width * width)).exp()
    })
}

/// Origin-centred bumps on a geometric ladder of widths in `[h, L/2]`, the
/// same number of bumps with random widths and centres, and white noise.
/// For `gamma = 0` the constant field (the wide-bump limit) is added.
fn probe_fields(grid: &Grid, cfg: &ProbeConfig) -> Vec<Field> {
    let mut rng = stream_rng(cfg.seed, 0x5350_524f_4245);
    let h = grid.spacing();
    let (lo, hi) = (h.ln(), (grid.half_width() / 2.0).ln());
    let noise_count = (cfg.probe_count / 8).max(1);
    let ladder = ((cfg.probe_count - noise_count.min(cfg.probe_count)) / 2).max(2);
    let n = grid.dimension();
    let mut out = Vec::new();
    for i in 0..ladder {
        let s = i as f64 / (ladder - 1) as f64;
        out.push(gaussian(grid, [0.0; 3], (lo * (1.0 - s) + hi * s).exp()));
    }
    for _ in 0..ladder {
        let width = rng.random_range(lo..hi).exp();
        let mut centre = [0.0; 3];
        for c in centre.iter_mut().take(n) {
            *c = width * rng.random_range(-1.0..1.0);
        }
        out.push(gaussian(grid, centre, width));
    }
    for _ in 0..noise_count {
        let values = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
        out.push(Field::from_raw(*grid, values));
    }
    if cfg.gamma == 0.0 {
        out.push(Field::constant(*grid, 1.0));
    }
    out
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn smoothing_exponent_probe(grid: &Grid, cfg: &ProbeConfig) -> Result<ProbeResult> {
    let n = grid.dimension();
    check_exponents(n, cfg.gamma, cfg.q1, cfg.q2)?;
    let h = grid.spacing();
    let (lo, hi) = (h * h, grid.half_width().powi(2) / 10.0);
    if !(cfg.t_min >= lo && cfg.t_max <= hi && cfg.t_min < cfg.t_max) {
        return Err(Error::Precondition(format!(
            "time range [{}, {}] must lie inside the resolved window [{lo}, {hi}]",
            cfg.t_min, cfg.t_max
        )));
    }
    if cfg.t_count < 2 || cfg.probe_count == 0 {
        return Err(Error::Domain("probe needs at least two times and one probe".into()));
    }
    let weight = SingularWeight::new(*grid, cfg.gamma)?;
    let op = SpectralOperator::new(*grid);
    let times: Vec<f64> = (0..cfg.t_count)
        .map(|i| {
            let s = i as f64 / (cfg.t_count - 1) as f64;
            (cfg.t_min.ln() * (1.0 - s) + cfg.t_max.ln() * s).exp()
        })
        .collect();
    let mut ratios = vec![0.0f64; times.len()];
    for phi in probe_fields(grid, cfg) {
        let denom = lq_norm_values(phi.values(), grid, cfg.q1)?;
        let spectrum = op.forward(weight.apply(&phi)?.values());
        for (ratio, &t) in ratios.iter_mut().zip(&times) {
            let mut data = spectrum.clone();
            op.apply_heat_multiplier(&mut data, t);
            let (out, _) = op.inverse(data);
            *ratio = ratio.max(lq_norm_values(&out, grid, cfg.q2)? / denom);
        }
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let expected = smoothing_exponent(n, cfg.gamma, cfg.q1, cfg.q2);
    let c0 = 2.0
        * times
            .iter()
            .zip(&ratios)
            .map(|(t, r)| r * t.powf(-expected))
            .fold(0.0, f64::max);
    Ok(ProbeResult {
        slope: log_slope(&lx, &ly),
        expected_slope: expected,
        c0,
        times,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponent_formula() {
        assert_relative_eq!(smoothing_exponent(3, 1.0, 2.0, 4.0), -0.875);
        assert_relative_eq!(smoothing_exponent(2, 0.5, 4.0, 4.0), -0.25);
        assert_eq!(smoothing_exponent(2, 0.0, 3.0, 3.0), 0.0);
    }

    #[test]
    fn preconditions_name_the_failed_inequality() {
        let g = Grid::new(2, 4.0, 32).unwrap();
        let mut cfg = ProbeConfig::for_grid(&g, 1.5, 2.0, 4.0);
        match smoothing_exponent_probe(&g, &cfg) {
            Err(Error::Precondition(m)) => assert!(m.contains("< 1 fails"), "{m}"),
            other => panic!("{other:?}"),
        }
        cfg.gamma = 0.1;
        cfg.q1 = 8.0;
        cfg.q2 = 2.0;
        match smoothing_exponent_probe(&g, &cfg) {
            Err(Error::Precondition(m)) => assert!(m.contains("1/q2 <"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut cfg = ProbeConfig::for_grid(&g, 0.0, 4.0, 2.0);
        assert!(smoothing_exponent_probe(&g, &cfg).is_err());
        cfg.q2 = 4.0;
        cfg.t_max = g.half_width().powi(2);
        assert!(smoothing_exponent_probe(&g, &cfg).is_err());
    }

    #[test]
    fn contraction_gives_flat_slope() {
        let g = Grid::new(2, 4.0, 64).unwrap();
        let mut cfg = ProbeConfig::for_grid(&g, 0.0, 3.0, 3.0);
        cfg.probe_count = 16;
        let res = smoothing_exponent_probe(&g, &cfg).unwrap();
        assert!(res.slope.abs() < 0.05, "{res:?}");
        assert!(res.ratios.iter().all(|&r| r <= 1.0 + 1e-10));
    }
}
