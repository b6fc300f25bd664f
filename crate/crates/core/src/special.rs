//! Gamma and Beta functions plus Gauss-Legendre quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_series(x: f64) -> f64 {
    // x is the shifted argument (z - 1)
    LANCZOS_COEF[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEF[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0))
}

/// Gamma function via the Lanczos approximation (g = 7, nine coefficients)
/// with reflection below 1/2. Poles at non-positive integers return NaN.
pub fn gamma(z: f64) -> f64 {
    if z <= 0.0 && z == z.floor() {
        return f64::NAN;
    }
    if z < 0.5 {
        PI / ((PI * z).sin() * gamma(1.0 - z))
    } else {
        let x = z - 1.0;
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_series(x)
    }
}

/// Natural log of the Gamma function for `z > 0`.
pub fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        (PI / (PI * z).sin()).ln() - ln_gamma(1.0 - z)
    } else {
        let x = z - 1.0;
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_series(x).ln()
    }
}

/// Euler Beta function `B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)`.
pub fn beta(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!(
            "beta function needs positive arguments, got ({x}, {y})"
        )));
    }
    if x + y < 150.0 {
        Ok(gamma(x) * gamma(y) / gamma(x + y))
    } else {
        Ok((ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp())
    }
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 32-point rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]` with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule over `panels` equal panels.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * width;
                self.integrate(lo, lo + width, &mut f)
            })
            .sum()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

/// Tanh-sinh (double exponential) quadrature of `f` over `[a, b]`.
///
/// Step `2^-level`; handles integrable algebraic endpoint singularities.
/// Abscissae are generated from their distance to the nearer endpoint so the
/// integrand is never evaluated exactly at `a` or `b`.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(a: f64, b: f64, level: u32, mut f: F) -> f64 {
    let step = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let mut k: i64 = 0;
    loop {
        let t = k as f64 * step;
        let s = 0.5 * PI * t.sinh();
        let c = 0.5 * PI * t.cosh();
        // 1 - tanh(s) computed without cancellation
        let complement = 2.0 / ((2.0 * s).exp() + 1.0);
        let ch = s.cosh();
        let w = c / (ch * ch);
        if !(complement > 0.0) || w * half < 1e-300 {
            break;
        }
        let dist = half * complement;
        if k == 0 {
            sum += w * f(a + half);
        } else {
            let (lo, hi) = (a + dist, b - dist);
            if lo == a && hi == b {
                break;
            }
            if hi < b {
                sum += w * f(hi);
            }
            if lo > a {
                sum += w * f(lo);
            }
        }
        k += 1;
        if t > 6.5 {
            break;
        }
    }
    sum * step * half
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(1.5), 0.5 * PI.sqrt(), max_relative = 1e-13);
        // reference values from an arbitrary-precision evaluation
        assert_relative_eq!(gamma(0.25), 3.625_609_908_221_908, max_relative = 1e-12);
        assert_relative_eq!(gamma(2.7), 1.544_685_845_850_594, max_relative = 1e-12);
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-12);
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &z in &[0.1, 0.7, 1.3, 2.9, 7.5, 30.0] {
            assert_relative_eq!(ln_gamma(z), gamma(z).ln(), epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn beta_values() {
        assert_relative_eq!(beta(1.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(beta(2.0, 3.0).unwrap(), 1.0 / 12.0, max_relative = 1e-13);
        assert!((beta(0.5, 0.5).unwrap() - PI).abs() < 1e-10);
        assert!(beta(0.0, 1.0).is_err());
        assert!(beta(1.0, -0.3).is_err());
        assert_relative_eq!(
            beta(100.0, 80.0).unwrap(),
            (ln_gamma(100.0) + ln_gamma(80.0) - ln_gamma(180.0)).exp(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // int_0^1 x^{-1/2} (1 + x) dx = 8/3
        let v = tanh_sinh(0.0, 1.0, 6, |x| (1.0 + x) / x.sqrt());
        assert!((v - 8.0 / 3.0).abs() < 1e-12, "{v}");
        // int_0^1 x^{-0.9} dx = 10
        let v = tanh_sinh(0.0, 1.0, 6, |x| x.powf(-0.9));
        assert!((v - 10.0).abs() < 1e-9, "{v}");
        let v = tanh_sinh(1.0, 3.0, 5, |x| x * x);
        assert_relative_eq!(v, 26.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        let weight_sum: f64 = rule.weights.iter().sum();
        assert_relative_eq!(weight_sum, 2.0, max_relative = 1e-14);
        // degree 15 is integrated exactly by 8 nodes
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert_relative_eq!(v, 2f64.powi(16) / 16.0, max_relative = 1e-12);
        let rule32 = GaussLegendre::standard();
        assert_eq!(rule32.len(), 32);
        assert_relative_eq!(rule32.integrate(0.0, PI, f64::sin), 2.0, max_relative = 1e-14);
    }
}
