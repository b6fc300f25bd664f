//! The five subcommands and the configuration groups they share.

mod estimate;
mod fbm;
mod simulate;
mod smoothing;
mod sweep;

use henon_spde::heat::{Field, Grid};
use henon_spde::mild::{
    derive_exponents, estimate_c0, validate_parameters, DerivedExponents, ProblemSpec, RadiusPolicy, RadiusRegistry,
};
use henon_spde::noise::{NoiseOptions, SpectralBasis};

use crate::config::{key, Config, ConfigError, KeySpec, Kind};
use crate::{RunContext, RunError};

pub fn schema(command: &str) -> Option<Vec<KeySpec>> {
    Some(match command {
        "validate-fbm" => fbm::keys(),
        "validate-smoothing" => smoothing::keys(),
        "estimate-time" => estimate::keys(),
        "simulate" => simulate::keys(),
        "sweep" => sweep::keys(),
        _ => return None,
    })
}

pub fn dispatch(command: &str, cfg: &Config, ctx: &mut RunContext) -> Result<(), RunError> {
    match command {
        "validate-fbm" => fbm::run(cfg, ctx),
        "validate-smoothing" => smoothing::run(cfg, ctx),
        "estimate-time" => estimate::run(cfg, ctx),
        "simulate" => simulate::run(cfg, ctx),
        "sweep" => sweep::run(cfg, ctx),
        _ => unreachable!("schema() rejects unknown commands"),
    }
}

const ANY: Kind = Kind::Word(&[]);

fn grid_keys(dimension: &'static str, half_width: &'static str, points: &'static str) -> Vec<KeySpec> {
    vec![
        key("grid.dimension", Kind::Int, dimension),
        key("grid.half_width", Kind::Float, half_width),
        key("grid.points", Kind::Int, points),
    ]
}

fn model_keys() -> Vec<KeySpec> {
    vec![
        key("model.gamma", Kind::Float, "1"),
        key("model.p", Kind::Float, "2"),
        key("model.q", Kind::Float, "4"),
        key("model.hurst", Kind::Float, "0.8"),
        key("model.validation_mode", Kind::Bool, "false"),
        key("initial.shape", Kind::Word(&["gaussian", "constant", "zero"]), "gaussian"),
        key("initial.amplitude", Kind::Float, "0.01"),
        key("initial.width", Kind::Float, "0.5"),
    ]
}

fn noise_keys() -> Vec<KeySpec> {
    vec![
        key("noise.enabled", Kind::Bool, "true"),
        key("noise.m_max", Kind::Int, "8"),
        key("noise.sampler", Kind::Word(&["cholesky", "volterra"]), "cholesky"),
        key("noise.amplitude", Kind::Float, "1"),
    ]
}

fn certificate_keys() -> Vec<KeySpec> {
    vec![
        key("certificate.radius", Kind::Word(&["double", "fixed"]), "double"),
        key("certificate.radius_value", Kind::Float, "1"),
        key("certificate.c0", ANY, "probe"),
        key("certificate.probes", Kind::Int, "48"),
        key("certificate.rounds", Kind::Int, "12"),
    ]
}

pub(crate) fn grid(cfg: &Config) -> Result<Grid, RunError> {
    let n = cfg.usize("grid.dimension")?;
    let l = cfg.positive("grid.half_width")?;
    let m = cfg.count("grid.points", 2)?;
    Grid::new(n, l, m).map_err(|e| cfg.invalid("grid.points", e).into())
}

pub(crate) fn initial_field(cfg: &Config, grid: Grid) -> Result<Field, RunError> {
    let a = cfg.f64("initial.amplitude")?;
    Ok(match cfg.word("initial.shape")? {
        "zero" => Field::zeros(grid),
        "constant" => Field::constant(grid, a),
        _ => {
            let w = cfg.positive("initial.width")?;
            Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                a * (-r2 / (2.0 * w * w)).exp()
            })
        }
    })
}

pub(crate) fn problem(cfg: &Config, horizon: f64, seed: u64) -> Result<ProblemSpec, RunError> {
    let g = grid(cfg)?;
    Ok(ProblemSpec {
        gamma: cfg.f64("model.gamma")?,
        p: cfg.f64("model.p")?,
        q: cfg.f64("model.q")?,
        hurst: cfg.f64("model.hurst")?,
        u0: initial_field(cfg, g)?,
        horizon_hint: horizon,
        seed,
        validation_mode: cfg.bool("model.validation_mode")?,
    })
}

pub(crate) fn basis(cfg: &Config, grid: &Grid) -> Result<SpectralBasis, RunError> {
    let m = cfg.count("noise.m_max", 0)?;
    let b = SpectralBasis::new(grid.dimension(), grid.half_width(), m).map_err(|e| cfg.invalid("noise.m_max", e))?;
    b.check_grid(grid).map_err(|e| cfg.invalid("noise.m_max", e))?;
    Ok(b)
}

pub(crate) fn noise_options(cfg: &Config) -> Result<NoiseOptions, RunError> {
    Ok(NoiseOptions {
        sampler: cfg.word("noise.sampler")?.to_string(),
        amplitude: cfg.f64("noise.amplitude")?,
    })
}

pub(crate) fn radius_policy(cfg: &Config) -> Result<Box<dyn RadiusPolicy>, RunError> {
    let name = cfg.word("certificate.radius")?;
    let value = (name == "fixed").then(|| cfg.f64("certificate.radius_value")).transpose()?;
    RadiusRegistry::default()
        .build(name, value)
        .map_err(|e| cfg.invalid("certificate.radius", e).into())
}

/// `key` as a number, or `None` when it holds `word`.
pub(crate) fn number_or(cfg: &Config, key: &str, word: &str) -> Result<Option<f64>, ConfigError> {
    if cfg.raw(key) == word {
        Ok(None)
    } else {
        cfg.f64(key).map(Some).map_err(|_| cfg.invalid(key, format!("expected a number or `{word}`, got `{}`", cfg.raw(key))))
    }
}

/// `C0` from the config or from the smoothing probe; records the source.
pub(crate) fn c0_value(
    cfg: &Config,
    spec: &ProblemSpec,
    exps: &DerivedExponents,
    ctx: &mut RunContext,
) -> Result<f64, RunError> {
    if let Some(c0) = number_or(cfg, "certificate.c0", "probe")? {
        ctx.manifest.set("certificate.c0_source", "config");
        return Ok(c0);
    }
    let probes = cfg.count("certificate.probes", 1)?;
    let (c0, results) = estimate_c0(spec.grid(), spec.gamma, spec.p, spec.q, exps.r, probes, spec.seed)?;
    ctx.manifest.set("certificate.c0_source", "probe");
    for (i, r) in results.iter().enumerate() {
        ctx.manifest.set(format!("probe.{i}.slope"), r.slope);
        ctx.manifest.set(format!("probe.{i}.expected_slope"), r.expected_slope);
        ctx.manifest.set(format!("probe.{i}.c0"), r.c0);
    }
    Ok(c0)
}

/// Validates `spec`, records every check and the derived exponents.
pub(crate) fn exponents(ctx: &mut RunContext, spec: &ProblemSpec) -> Result<DerivedExponents, RunError> {
    for c in &validate_parameters(spec).checks {
        ctx.manifest.set(format!("check.validation.{}", c.name), if c.passed { "pass" } else { "fail" });
    }
    let e = derive_exponents(spec)?;
    record_exponents(ctx, &e);
    Ok(e)
}

fn record_exponents(ctx: &mut RunContext, e: &DerivedExponents) {
    ctx.manifest.set("derived.r", e.r);
    ctx.manifest.set("derived.sigma", e.sigma);
    ctx.manifest.set("derived.alpha", e.alpha);
    ctx.manifest.set("derived.q_c", e.q_c);
    ctx.manifest.set("derived.c1", e.beta_c1);
    ctx.manifest.set("derived.c2", e.beta_c2);
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}
