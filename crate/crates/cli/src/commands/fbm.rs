//! `validate-fbm`: law, sampler agreement and isometry checks.

use henon_spde::fbm::diagnostics::{covariance_error, isometry_check, law_check};
use henon_spde::fbm::{HurstParameter, SamplerRegistry, TimeGrid};
use henon_spde::rng::derive_seed;
use henon_spde::Error;

use crate::config::{key, Config, KeySpec, Kind};
use crate::output::{num, write_csv};
use crate::{RunContext, RunError};

pub(super) fn keys() -> Vec<KeySpec> {
    vec![
        key("seed", Kind::Int, "0"),
        key("fbm.hurst", Kind::FloatList, "0.6, 0.75, 0.9"),
        key("fbm.horizon", Kind::Float, "1"),
        key("fbm.intervals", Kind::Int, "64"),
        key("fbm.paths", Kind::Int, "10000"),
        key("fbm.sampler", Kind::Word(&["cholesky", "volterra"]), "cholesky"),
        key("fbm.tolerance", Kind::Float, "0.05"),
        key("fbm.kernel_checks", Kind::Bool, "true"),
        key("fbm.covariance_hurst", Kind::FloatList, "0.75"),
        key("fbm.covariance_intervals", Kind::Int, "32"),
        key("fbm.covariance_samples", Kind::Int, "10000"),
        key("fbm.covariance_tolerance", Kind::Float, "0.05"),
        key("fbm.isometry_functions", Kind::Int, "10"),
        key("fbm.isometry_samples", Kind::Int, "20000"),
        key("fbm.isometry_level", Kind::Int, "5"),
        key("fbm.isometry_tolerance", Kind::Float, "0.01"),
        key("fbm.isometry_mc_tolerance", Kind::Float, "0.05"),
    ]
}

struct Table {
    rows: Vec<Vec<String>>,
    failed: Vec<String>,
    unsupported: Vec<String>,
}

impl Table {
    fn push(&mut self, ctx: &mut RunContext, check: &str, h: f64, at: &str, value: f64, tol: f64) {
        let passed = value <= tol;
        if !passed {
            self.failed.push(format!("{check} at H={h} ({at}): {value:e} > {tol:e}"));
        }
        self.rows.push(vec![
            check.into(),
            num(h),
            at.into(),
            num(value),
            num(tol),
            if passed { "pass" } else { "fail" }.into(),
        ]);
        let k = format!("check.{check}.H{h}");
        if ctx.manifest.get(&k) != Some("fail") {
            ctx.manifest.set(k, if passed { "pass" } else { "fail" });
        }
    }

    fn unsupported(&mut self, ctx: &mut RunContext, check: &str, h: f64, why: String) {
        self.rows.push(vec![check.into(), num(h), String::new(), String::new(), String::new(), "unsupported".into()]);
        ctx.manifest.set(format!("check.{check}.H{h}"), "unsupported");
        self.unsupported.push(format!("{check} at H={h}: {why}"));
    }
}

pub(super) fn run(cfg: &Config, ctx: &mut RunContext) -> Result<(), RunError> {
    let seed = cfg.u64("seed")?;
    let hursts = cfg.list("fbm.hurst")?;
    if let Some(h) = hursts.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
        return Err(cfg.invalid("fbm.hurst", format!("H = {h} is outside (0, 1)")).into());
    }
    let horizon = cfg.positive("fbm.horizon")?;
    let grid = TimeGrid::uniform(horizon, cfg.count("fbm.intervals", 2)?)?;
    let paths = cfg.count("fbm.paths", 2)?;
    let tol = cfg.positive("fbm.tolerance")?;
    let registry = SamplerRegistry::default();
    let sampler_name = cfg.word("fbm.sampler")?;
    let mut table = Table {
        rows: Vec::new(),
        failed: Vec::new(),
        unsupported: Vec::new(),
    };
    for (i, &h) in hursts.iter().enumerate() {
        let hp = HurstParameter::new(h)?;
        let stream = derive_seed(seed, i as u64);
        match registry.build(sampler_name, &grid, hp) {
            Ok(sampler) => {
                let rep = law_check(sampler.as_ref(), paths, stream)?;
                for (lag, e) in &rep.increments {
                    table.push(ctx, "increment_variance", h, &format!("lag={lag}"), *e, tol);
                }
                for (t, e) in &rep.self_similarity {
                    table.push(ctx, "self_similarity", h, &format!("t={t}"), *e, tol);
                }
            }
            Err(Error::UnsupportedBranch(m)) => table.unsupported(ctx, "law", h, m),
            Err(e) => return Err(e.into()),
        }
    }
    if cfg.bool("fbm.kernel_checks")? {
        let cov_grid = TimeGrid::uniform(horizon, cfg.count("fbm.covariance_intervals", 1)?)?;
        let cov_samples = cfg.count("fbm.covariance_samples", 2)?;
        let cov_tol = cfg.positive("fbm.covariance_tolerance")?;
        let functions = cfg.count("fbm.isometry_functions", 1)?;
        let iso_samples = cfg.count("fbm.isometry_samples", 2)?;
        let level = cfg.u64("fbm.isometry_level")? as u32;
        let iso_tol = cfg.positive("fbm.isometry_tolerance")?;
        let mc_tol = cfg.positive("fbm.isometry_mc_tolerance")?;
        let cov_hursts = cfg.list("fbm.covariance_hurst")?;
        for (i, &h) in cov_hursts.iter().enumerate() {
            let hp = HurstParameter::new(h).map_err(|e| cfg.invalid("fbm.covariance_hurst", e))?;
            let stream = derive_seed(seed, 1000 + i as u64);
            match registry
                .build("volterra", &cov_grid, hp)
                .and_then(|v| covariance_error(v.as_ref(), cov_samples, stream))
            {
                Ok(cov) => table.push(ctx, "volterra_covariance", h, "max_abs", cov, cov_tol),
                Err(Error::UnsupportedBranch(m)) => table.unsupported(ctx, "volterra_covariance", h, m),
                Err(e) => return Err(e.into()),
            }
        }
        for (i, &h) in hursts.iter().enumerate() {
            let hp = HurstParameter::new(h)?;
            let stream = derive_seed(seed, 2000 + i as u64);
            match isometry_check(&grid, hp, functions, iso_samples, level, stream) {
                Ok(iso) => {
                    for (j, c) in iso.iter().enumerate() {
                        table.push(ctx, "isometry_quadrature", h, &format!("phi={j}"), c.quadrature_error(), iso_tol);
                        table.push(ctx, "isometry_monte_carlo", h, &format!("phi={j}"), c.monte_carlo_error(), mc_tol);
                    }
                }
                Err(Error::UnsupportedBranch(m)) => table.unsupported(ctx, "isometry", h, m),
                Err(e) => return Err(e.into()),
            }
        }
    }
    write_csv(
        &ctx.path("fbm_checks.csv"),
        &["check", "hurst", "at", "value", "tolerance", "status"],
        &table.rows,
    )?;
    ctx.manifest.set("checks.failed", table.failed.len());
    ctx.manifest.set("checks.unsupported", table.unsupported.len());
    if !table.unsupported.is_empty() {
        return Err(Error::UnsupportedBranch(table.unsupported.join("; ")).into());
    }
    if !table.failed.is_empty() {
        return Err(RunError::ChecksFailed(table.failed.join("; ")));
    }
    Ok(())
}
