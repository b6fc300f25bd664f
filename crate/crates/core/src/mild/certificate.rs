//! Existence-time certificate: the largest horizon `T*` on which
//!
//! ```text
//! (T1)    K(T) + C0 C1 M^p T^alpha <= M - ||u0||_q
//! (T2)    K(T) + C0 C2 M^p T^alpha <= M - ||u0||_q
//! (cont1) C0 (C1 + C2) M^{p-1} T^alpha <= 1/2
//! ```
//!
//! hold, with `K(T)` the pathwise noise functional and `M` chosen by a radius
//! policy from `||u0||_q` and `K(T)`. `K` is nondecreasing and `T^alpha`
//! increasing, so the feasible set is an interval `[0, T*]`: nodes are
//! bisected first, then `T*` is solved in closed form inside the first
//! infeasible cell with `K` bounded by its value at the cell's right end.

use std::collections::BTreeMap;

use super::{DerivedExponents, ProblemSpec};
use crate::error::{Error, Result};
use crate::fbm::{HurstParameter, TimeGrid};
use crate::heat::{lq_norm, smoothing_exponent_probe, Grid, ProbeConfig, ProbeResult};
use crate::noise::{k_profile, node_norms, sample_noise_path_with, NoiseOptions, NoisePath, SpectralBasis};

pub trait RadiusPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Ball radius for a candidate horizon `T`, given `||u0||_q` and `K(T)`.
    fn radius(&self, u0_norm: f64, k_at_horizon: f64) -> f64;
}

/// `M = 2(||u0||_q + K(T))`, or 1 when both vanish.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubledRadius;

impl RadiusPolicy for DoubledRadius {
    fn name(&self) -> &'static str {
        "double"
    }

    fn radius(&self, u0_norm: f64, k_at_horizon: f64) -> f64 {
        let m = 2.0 * (u0_norm + k_at_horizon);
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedRadius(pub f64);

impl RadiusPolicy for FixedRadius {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn radius(&self, _: f64, _: f64) -> f64 {
        self.0
    }
}

pub type RadiusConstructor = fn(Option<f64>) -> Result<Box<dyn RadiusPolicy>>;

#[derive(Clone)]
pub struct RadiusRegistry {
    entries: BTreeMap<&'static str, RadiusConstructor>,
}

impl RadiusRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, constructor: RadiusConstructor) {
        self.entries.insert(name, constructor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, name: &str, value: Option<f64>) -> Result<Box<dyn RadiusPolicy>> {
        let ctor = self.entries.get(name).ok_or_else(|| Error::UnknownStrategy {
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        ctor(value)
    }
}

impl Default for RadiusRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register("double", |v| match v {
            None => Ok(Box::new(DoubledRadius)),
            Some(_) => Err(Error::Domain("radius policy 'double' takes no value".into())),
        });
        reg.register("fixed", |v| match v {
            Some(m) if m > 0.0 && m.is_finite() => Ok(Box::new(FixedRadius(m))),
            Some(m) => Err(Error::Domain(format!("fixed radius must be positive, got {m}"))),
            None => Err(Error::Domain("radius policy 'fixed' needs a value".into())),
        });
        reg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateInputs {
    /// Candidate horizons `0 = t_0 < ... < t_n = T0`.
    pub times: Vec<f64>,
    /// `K(t_j)`, nondecreasing.
    pub k_values: Vec<f64>,
    pub u0_norm: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub p: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub t1: f64,
    pub t2: f64,
    pub cont1: f64,
}

impl Margins {
    pub fn min(&self) -> f64 {
        self.t1.min(self.t2).min(self.cont1)
    }

    pub fn all_nonnegative(&self) -> bool {
        self.min() >= 0.0
    }

    fn tightest(&self) -> &'static str {
        let m = self.min();
        if self.cont1 == m {
            "cont1"
        } else if self.t1 == m {
            "T1"
        } else {
            "T2"
        }
    }
}

impl CertificateInputs {
    pub fn margins(&self, m: f64, t: f64, k: f64) -> Margins {
        let ta = t.powf(self.alpha);
        let room = m - self.u0_norm - k;
        Margins {
            t1: room - self.c0 * self.c1 * m.powf(self.p) * ta,
            t2: room - self.c0 * self.c2 * m.powf(self.p) * ta,
            cont1: 0.5 - self.c0 * (self.c1 + self.c2) * m.powf(self.p - 1.0) * ta,
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 || self.k_values.len() != n {
            return Err(Error::Alignment(
                "need at least two horizons and one K value per horizon".into(),
            ));
        }
        if self.times[0] != 0.0 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("horizons must start at 0 and increase".into()));
        }
        if self.k_values.iter().any(|k| !(*k >= 0.0)) || self.k_values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("K values must be nonnegative and nondecreasing".into()));
        }
        let consts = [self.u0_norm, self.c0, self.c1, self.c2];
        if consts.iter().any(|c| !(*c >= 0.0 && c.is_finite())) || !(self.p > 1.0) || !(self.alpha > 0.0) {
            return Err(Error::Domain(format!("invalid certificate constants: {self:?}")));
        }
        Ok(())
    }

    /// Largest `T` with the constraints satisfied for the fixed value `k`.
    fn closed_form_bound(&self, m: f64, k: f64) -> (f64, &'static str) {
        let inv = 1.0 / self.alpha;
        let room = m - self.u0_norm - k;
        let bound = |num: f64, den: f64| if den > 0.0 { (num / den).powf(inv) } else { f64::INFINITY };
        let cands = [
            (bound(0.5, self.c0 * (self.c1 + self.c2) * m.powf(self.p - 1.0)), "cont1"),
            (bound(room, self.c0 * self.c1 * m.powf(self.p)), "T1"),
            (bound(room, self.c0 * self.c2 * m.powf(self.p)), "T2"),
        ];
        cands.into_iter().fold((f64::INFINITY, "none"), |a, b| if b.0 < a.0 { b } else { a })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceCertificate {
    pub t_star: f64,
    pub m: f64,
    pub k_at_t: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub margins: Margins,
    /// Constraint that limits `T*`: `T1`, `T2`, `cont1`, `K-jump` (the noise
    /// functional jumps at the next node) or `horizon` (feasible up to `T0`).
    pub binding: &'static str,
    pub policy: &'static str,
    /// Last feasible node index.
    pub node: usize,
}

impl ExistenceCertificate {
    pub fn reaches_horizon(&self) -> bool {
        self.binding == "horizon"
    }
}

pub fn certify(inputs: &CertificateInputs, policy: &dyn RadiusPolicy) -> Result<ExistenceCertificate> {
    inputs.check()?;
    let n = inputs.times.len() - 1;
    let radius = |j: usize| policy.radius(inputs.u0_norm, inputs.k_values[j]);
    let m0 = radius(0);
    if !(m0 > inputs.u0_norm) {
        return Err(Error::Infeasible {
            binding: "T1".into(),
            detail: format!("M = {m0} does not exceed ||u0||_q = {}", inputs.u0_norm),
        });
    }
    let margins_at = |j: usize| inputs.margins(radius(j), inputs.times[j], inputs.k_values[j]);
    let first = margins_at(0);
    if !first.all_nonnegative() {
        return Err(Error::Infeasible {
            binding: first.tightest().into(),
            detail: format!("violated already at T = 0: {first:?} with M = {m0}"),
        });
    }
    // constants taken at node `j`, certificate reports node `node`
    let make = |t: f64, j: usize, binding, node| {
        let (m, k) = (radius(j), inputs.k_values[j]);
        ExistenceCertificate {
            t_star: t,
            m,
            k_at_t: k,
            c0: inputs.c0,
            c1: inputs.c1,
            c2: inputs.c2,
            margins: inputs.margins(m, t, k),
            binding,
            policy: policy.name(),
            node,
        }
    };
    if margins_at(n).all_nonnegative() {
        return Ok(make(inputs.times[n], n, "horizon", n));
    }
    let (mut lo, mut hi) = (0, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if margins_at(mid).all_nonnegative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // K(T) <= K(t_hi) on the cell, so the bound with K(t_hi) is safe there.
    let (m, k) = (radius(hi), inputs.k_values[hi]);
    let (mut t, binding) = inputs.closed_form_bound(m, k);
    while t > inputs.times[lo] && !inputs.margins(m, t, k).all_nonnegative() {
        t *= 1.0 - 4.0 * f64::EPSILON;
    }
    if t > inputs.times[lo] {
        return Ok(make(t, hi, binding, lo));
    }
    if lo == 0 {
        return Err(Error::Infeasible {
            binding: "K-jump".into(),
            detail: format!("no positive horizon before the first node {:e}", inputs.times[1]),
        });
    }
    Ok(make(inputs.times[lo], lo, "K-jump", lo))
}

/// `C0` from the smoothing probe at the exponent pairs `(r/p, q)` and
/// `(r/p, r)` used by the two Duhamel estimates.
pub fn estimate_c0(
    grid: &Grid,
    gamma: f64,
    p: f64,
    q: f64,
    r: f64,
    probe_count: usize,
    seed: u64,
) -> Result<(f64, Vec<ProbeResult>)> {
    let mut results = Vec::new();
    for q2 in [q, r] {
        let mut cfg = ProbeConfig::for_grid(grid, gamma, r / p, q2);
        cfg.probe_count = probe_count;
        cfg.seed = seed;
        results.push(smoothing_exponent_probe(grid, &cfg)?);
    }
    let c0 = results.iter().map(|r| r.c0).fold(0.0, f64::max);
    Ok((c0, results))
}

/// Certificate inputs for a sampled noise path on `spec`'s spatial grid.
pub fn certificate_inputs(
    spec: &ProblemSpec,
    exps: &DerivedExponents,
    z: &NoisePath,
    c0: f64,
) -> Result<CertificateInputs> {
    let norms = node_norms(z, spec.grid(), spec.q, exps.r)?;
    let prof = k_profile(z.grid().nodes(), &norms, spec.q, exps.r, exps.sigma)?;
    Ok(CertificateInputs {
        times: z.grid().nodes().to_vec(),
        k_values: prof.iter().map(|k| k.total).collect(),
        u0_norm: lq_norm(&spec.u0, spec.q)?,
        c0,
        c1: exps.beta_c1,
        c2: exps.beta_c2,
        p: spec.p,
        alpha: exps.alpha,
    })
}

pub fn estimate_existence_time(
    spec: &ProblemSpec,
    exps: &DerivedExponents,
    z: &NoisePath,
    c0: f64,
    policy: &dyn RadiusPolicy,
) -> Result<ExistenceCertificate> {
    certify(&certificate_inputs(spec, exps, z, c0)?, policy)
}

/// Certifies on `[0, T0]`, then resamples the noise on a fresh uniform grid
/// of `intervals` cells over `[0, T*]` and re-certifies until the certificate
/// holds on the whole resampled grid. When the bound falls inside the first
/// cell the next grid spans that cell. Returns the certificate and
/// the noise path on `[0, T*]`.
#[allow(clippy::too_many_arguments)]
pub fn certify_pathwise(
    spec: &ProblemSpec,
    exps: &DerivedExponents,
    basis: &SpectralBasis,
    noise: &NoiseOptions,
    intervals: usize,
    c0: f64,
    policy: &dyn RadiusPolicy,
    max_rounds: usize,
) -> Result<(ExistenceCertificate, NoisePath)> {
    let h = HurstParameter::new(spec.hurst)?;
    let mut horizon = spec.horizon_hint;
    for _ in 0..max_rounds {
        let grid = TimeGrid::uniform(horizon, intervals)?;
        let z = sample_noise_path_with(basis, &grid, h, spec.seed, noise)?;
        match estimate_existence_time(spec, exps, &z, c0, policy) {
            Ok(cert) if cert.reaches_horizon() => return Ok((cert, z)),
            // a bound inside the first cell is limited by the grid, not the path
            Ok(cert) => horizon = cert.t_star.max(grid.nodes()[1]),
            Err(Error::Infeasible { binding, .. }) if binding == "K-jump" => horizon = grid.nodes()[1],
            Err(e) => return Err(e),
        }
    }
    Err(Error::Infeasible {
        binding: "resampling".into(),
        detail: format!("certificate did not stabilise within {max_rounds} rounds (last T = {horizon:e})"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn override_inputs(u0: f64, intervals: usize) -> CertificateInputs {
        let times: Vec<f64> = (0..=intervals).map(|i| i as f64 / intervals as f64).collect();
        CertificateInputs {
            k_values: vec![0.0; times.len()],
            times,
            u0_norm: u0,
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            p: 2.0,
            alpha: 0.125,
        }
    }

    #[test]
    fn closed_form_override() {
        for intervals in [1, 7, 256, 4096] {
            let c = certify(&override_inputs(0.5, intervals), &FixedRadius(1.0)).unwrap();
            assert_eq!(c.t_star, 0.25f64.powi(8));
            assert_eq!(c.binding, "cont1");
            assert!(c.margins.all_nonnegative());
            assert_eq!(c.margins.cont1, 0.0);
        }
    }

    #[test]
    fn radius_at_most_initial_norm_is_infeasible() {
        match certify(&override_inputs(1.0, 16), &FixedRadius(1.0)) {
            Err(Error::Infeasible { binding, .. }) => assert_eq!(binding, "T1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn whole_horizon_and_k_jump() {
        let mut inp = override_inputs(0.0, 4);
        inp.c0 = 1e-6;
        let c = certify(&inp, &FixedRadius(1.0)).unwrap();
        assert!(c.reaches_horizon());
        assert_eq!(c.t_star, 1.0);
        inp.k_values = vec![0.0, 0.1, 0.2, 1.0, 1.0];
        let c = certify(&inp, &FixedRadius(1.0)).unwrap();
        assert_eq!((c.t_star, c.binding, c.node), (0.5, "K-jump", 2));
    }

    #[test]
    fn registry() {
        let reg = RadiusRegistry::default();
        assert_eq!(reg.names(), vec!["double", "fixed"]);
        assert_eq!(reg.build("double", None).unwrap().radius(0.0, 0.0), 1.0);
        assert_eq!(reg.build("double", None).unwrap().radius(0.25, 0.5), 1.5);
        assert_eq!(reg.build("fixed", Some(3.0)).unwrap().radius(9.0, 9.0), 3.0);
        assert!(reg.build("fixed", None).is_err());
        assert!(matches!(reg.build("triple", None), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn malformed_inputs() {
        let mut inp = override_inputs(0.1, 4);
        inp.k_values[2] = -1.0;
        assert!(certify(&inp, &DoubledRadius).is_err());
        let mut inp = override_inputs(0.1, 4);
        inp.times[0] = 0.1;
        assert!(certify(&inp, &DoubledRadius).is_err());
    }

    proptest! {
        #[test]
        fn larger_initial_data_never_extends_existence(
            u0 in 0.01f64..2.0,
            k in proptest::collection::vec(0.0f64..0.05, 32),
            c0 in 0.1f64..3.0,
        ) {
            let mut k = k;
            for i in 1..k.len() { k[i] += k[i - 1]; }
            k[0] = 0.0;
            let mut inp = override_inputs(u0, 31);
            inp.k_values = k;
            inp.c0 = c0;
            let t = |inp: &CertificateInputs| certify(inp, &DoubledRadius).map(|c| c.t_star).unwrap_or(0.0);
            let small = t(&inp);
            inp.u0_norm *= 2.0;
            prop_assert!(t(&inp) <= small);
        }
    }
}
