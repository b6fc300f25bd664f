//! `estimate-time`: existence-time certificates over a batch of seeds.

use rayon::prelude::*;

use henon_spde::fbm::{HurstParameter, TimeGrid};
use henon_spde::heat::lq_norm;
use henon_spde::mild::{
    certify, certify_pathwise, estimate_existence_time, CertificateInputs,
    DerivedExponents, ExistenceCertificate, ProblemSpec, RadiusPolicy,
};
use henon_spde::noise::NoisePath;
use henon_spde::rng::derive_seed;
use henon_spde::Error;

use super::{basis, c0_value, exponents, median, noise_options, number_or, problem, radius_policy};
use crate::config::{key, Config, KeySpec, Kind};
use crate::output::{num, opt, write_csv};
use crate::{RunContext, RunError};

pub(super) fn keys() -> Vec<KeySpec> {
    let mut k = vec![key("seed", Kind::Int, "0")];
    k.extend(super::grid_keys("3", "4", "32"));
    k.extend(super::model_keys());
    k.extend([
        key("time.horizon", Kind::Float, "1"),
        key("time.intervals", Kind::Int, "32"),
    ]);
    k.extend(super::noise_keys());
    k.extend(super::certificate_keys());
    k.extend([
        key("certificate.k_zero", Kind::Bool, "false"),
        key("certificate.c1", super::ANY, "auto"),
        key("certificate.c2", super::ANY, "auto"),
        key("certificate.u0_norm", super::ANY, "auto"),
        key("batch.seeds", Kind::Int, "4"),
    ]);
    k
}

/// One batch member: its seed and either a certificate or the binding
/// constraint that made it infeasible.
pub(crate) struct Member {
    pub seed: u64,
    pub outcome: Result<ExistenceCertificate, (String, String)>,
}

pub(crate) fn row(index: usize, m: &Member) -> Vec<String> {
    match &m.outcome {
        Ok(c) => vec![
            index.to_string(),
            m.seed.to_string(),
            "feasible".into(),
            num(c.t_star),
            c.binding.into(),
            num(c.m),
            num(c.k_at_t),
            num(c.margins.t1),
            num(c.margins.t2),
            num(c.margins.cont1),
            c.node.to_string(),
            String::new(),
        ],
        Err((binding, detail)) => {
            let mut r = vec![index.to_string(), m.seed.to_string(), "infeasible".into(), String::new(), binding.clone()];
            r.extend(std::iter::repeat_n(String::new(), 6));
            r.push(detail.clone());
            r
        }
    }
}

pub(crate) const CERT_HEADER: [&str; 12] = [
    "index", "seed", "status", "t_star", "binding", "m", "k_at_t", "margin_t1", "margin_t2", "margin_cont1", "node",
    "detail",
];

/// Sorted `T*` of the feasible members.
pub(crate) fn feasible_times(members: &[Member]) -> Vec<f64> {
    let mut t: Vec<f64> = members.iter().filter_map(|m| m.outcome.as_ref().ok().map(|c| c.t_star)).collect();
    t.sort_by(f64::total_cmp);
    t
}

fn split(r: henon_spde::Result<ExistenceCertificate>) -> Result<Result<ExistenceCertificate, (String, String)>, Error> {
    match r {
        Ok(c) => Ok(Ok(c)),
        Err(Error::Infeasible { binding, detail }) => Ok(Err((binding, detail))),
        Err(e) => Err(e),
    }
}

/// Certificates for `seeds` batch members derived from `spec.seed`.
pub(crate) fn batch(
    cfg: &Config,
    spec: &ProblemSpec,
    exps: &DerivedExponents,
    c0: f64,
    policy: &dyn RadiusPolicy,
    seeds: usize,
) -> Result<Vec<Member>, RunError> {
    let intervals = cfg.count("time.intervals", 1)?;
    let rounds = cfg.count("certificate.rounds", 1)?;
    let b = basis(cfg, spec.grid())?;
    if !cfg.bool("noise.enabled")? {
        let h = HurstParameter::new(spec.hurst)?;
        let z = NoisePath::zero(&b, &TimeGrid::uniform(spec.horizon_hint, intervals)?, h);
        let outcome = split(estimate_existence_time(spec, exps, &z, c0, policy))?;
        return Ok(vec![Member { seed: spec.seed, outcome }]);
    }
    let opts = noise_options(cfg)?;
    let members: Result<Vec<Member>, Error> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let mut s = spec.clone();
            s.seed = derive_seed(spec.seed, i as u64);
            let outcome = split(certify_pathwise(&s, exps, &b, &opts, intervals, c0, policy, rounds).map(|(c, _)| c))?;
            Ok(Member { seed: s.seed, outcome })
        })
        .collect();
    Ok(members?)
}

/// Certificate with `K = 0` and optionally overridden constants.
fn k_zero(
    cfg: &Config,
    spec: &ProblemSpec,
    exps: &DerivedExponents,
    (u0_norm, c0, c1, c2): (f64, f64, f64, f64),
    policy: &dyn RadiusPolicy,
) -> Result<Member, RunError> {
    let intervals = cfg.count("time.intervals", 1)?;
    let times = TimeGrid::uniform(spec.horizon_hint, intervals)?.nodes().to_vec();
    let inputs = CertificateInputs {
        k_values: vec![0.0; times.len()],
        times,
        u0_norm,
        c0,
        c1,
        c2,
        p: spec.p,
        alpha: exps.alpha,
    };
    Ok(Member {
        seed: spec.seed,
        outcome: split(certify(&inputs, policy))?,
    })
}

pub(super) fn run(cfg: &Config, ctx: &mut RunContext) -> Result<(), RunError> {
    let seed = cfg.u64("seed")?;
    let horizon = cfg.positive("time.horizon")?;
    let spec = problem(cfg, horizon, seed)?;
    let exps = exponents(ctx, &spec)?;
    let zero = cfg.bool("certificate.k_zero")?;
    if !zero {
        for k in ["certificate.c1", "certificate.c2", "certificate.u0_norm"] {
            if cfg.raw(k) != "auto" {
                return Err(cfg.invalid(k, "overrides need certificate.k_zero = true").into());
            }
        }
    }
    let c0 = c0_value(cfg, &spec, &exps, ctx)?;
    ctx.manifest.set("certificate.c0", c0);
    let policy = radius_policy(cfg)?;
    ctx.manifest.set("certificate.policy", policy.name());
    let u0_norm = match number_or(cfg, "certificate.u0_norm", "auto")? {
        Some(v) => v,
        None => lq_norm(&spec.u0, spec.q)?,
    };
    ctx.manifest.set("certificate.u0_norm", u0_norm);
    let c1 = number_or(cfg, "certificate.c1", "auto")?.unwrap_or(exps.beta_c1);
    let c2 = number_or(cfg, "certificate.c2", "auto")?.unwrap_or(exps.beta_c2);
    let members = if zero {
        vec![k_zero(cfg, &spec, &exps, (u0_norm, c0, c1, c2), policy.as_ref())?]
    } else {
        batch(cfg, &spec, &exps, c0, policy.as_ref(), cfg.count("batch.seeds", 1)?)?
    };
    let rows: Vec<Vec<String>> = members.iter().enumerate().map(|(i, m)| row(i, m)).collect();
    write_csv(&ctx.path("certificates.csv"), &CERT_HEADER, &rows)?;
    for (i, m) in members.iter().enumerate() {
        let binding = match &m.outcome {
            Ok(c) => c.binding.to_string(),
            Err((b, _)) => b.clone(),
        };
        ctx.manifest.set(format!("certificate.{i}.binding"), binding);
    }
    let t = feasible_times(&members);
    let (lo, mid, hi) = (t.first().copied(), median(&t), t.last().copied());
    write_csv(
        &ctx.path("summary.csv"),
        &["members", "feasible", "t_star_min", "t_star_median", "t_star_max", "c0", "c1", "c2", "alpha", "policy"],
        &[vec![
            members.len().to_string(),
            t.len().to_string(),
            opt(lo),
            opt(mid),
            opt(hi),
            num(c0),
            num(c1),
            num(c2),
            num(exps.alpha),
            policy.name().into(),
        ]],
    )?;
    ctx.manifest.set("certificate.feasible", t.len());
    ctx.manifest.set("certificate.t_star_min", opt(lo));
    ctx.manifest.set("certificate.t_star_median", opt(mid));
    ctx.manifest.set("certificate.t_star_max", opt(hi));
    if t.is_empty() {
        let mut bindings: Vec<String> = members.iter().filter_map(|m| m.outcome.as_ref().err().map(|e| e.0.clone())).collect();
        bindings.sort();
        bindings.dedup();
        let detail = members
            .iter()
            .filter_map(|m| m.outcome.as_ref().err().map(|e| format!("seed {}: {}", m.seed, e.1)))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Infeasible {
            binding: bindings.join(", "),
            detail,
        }
        .into());
    }
    Ok(())
}
