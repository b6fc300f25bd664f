//! `sweep`: validity region, exponents and optional `T*` statistics over a
//! lattice of `(N, gamma, p, q, H)`.

use henon_spde::heat::Grid;
use henon_spde::mild::{
    estimate_c0, hurst_lower_bound, q_lower_bound, validate_tuple, DerivedExponents, ProblemSpec,
};
use henon_spde::rng::derive_seed;

use super::estimate::{batch, feasible_times};
use super::{initial_field, median, number_or, radius_policy};
use crate::config::{key, Config, KeySpec, Kind};
use crate::output::{num, opt, write_csv};
use crate::{RunContext, RunError};

pub(super) fn keys() -> Vec<KeySpec> {
    let mut k = vec![
        key("seed", Kind::Int, "0"),
        key("sweep.dimension", Kind::FloatList, "2, 3"),
        key("sweep.gamma", Kind::FloatList, "0.5, 1, 1.5"),
        key("sweep.p", Kind::FloatList, "2"),
        key("sweep.q", Kind::FloatList, "2:8:13"),
        key("sweep.hurst", Kind::FloatList, "0.8"),
        key("sweep.budget", Kind::Int, "10000"),
        key("sweep.certify", Kind::Bool, "false"),
        key("grid.half_width", Kind::Float, "4"),
        key("grid.points", Kind::Int, "32"),
    ];
    k.extend(super::model_keys().into_iter().filter(|s| s.key.starts_with("initial.")));
    k.extend([
        key("time.horizon", Kind::Float, "1"),
        key("time.intervals", Kind::Int, "16"),
    ]);
    k.extend(super::noise_keys());
    k.extend(super::certificate_keys());
    k.push(key("batch.seeds", Kind::Int, "2"));
    k
}

const HEADER: [&str; 26] = [
    "dimension",
    "gamma",
    "p",
    "q",
    "hurst",
    "valid",
    "dimension_ok",
    "gamma_ok",
    "p_ok",
    "hurst_ok",
    "q_ok",
    "chain_ok",
    "q_lower_bound",
    "hurst_lower_bound",
    "r",
    "sigma",
    "alpha",
    "alpha_identity",
    "q_c",
    "c1",
    "c2",
    "feasible",
    "t_star_min",
    "t_star_median",
    "t_star_max",
    "reason",
];

fn dimensions(cfg: &Config) -> Result<Vec<usize>, RunError> {
    cfg.list("sweep.dimension")?
        .into_iter()
        .map(|d| {
            if (1.0..=3.0).contains(&d) && d.fract() == 0.0 {
                Ok(d as usize)
            } else {
                Err(cfg.invalid("sweep.dimension", format!("dimension {d} is not 1, 2 or 3")).into())
            }
        })
        .collect()
}

struct Stats {
    feasible: usize,
    times: Vec<f64>,
    reason: String,
}

/// Certificates for one valid lattice point.
fn certify_point(
    cfg: &Config,
    (n, gamma, p, q, hurst): (usize, f64, f64, f64, f64),
    exps: &DerivedExponents,
    seed: u64,
) -> Result<Stats, RunError> {
    let grid = Grid::new(n, cfg.positive("grid.half_width")?, cfg.count("grid.points", 2)?)
        .map_err(|e| cfg.invalid("grid.points", e))?;
    let spec = ProblemSpec {
        gamma,
        p,
        q,
        hurst,
        u0: initial_field(cfg, grid)?,
        horizon_hint: cfg.positive("time.horizon")?,
        seed,
        validation_mode: false,
    };
    let c0 = match number_or(cfg, "certificate.c0", "probe")? {
        Some(c) => c,
        None => estimate_c0(&grid, gamma, p, q, exps.r, cfg.count("certificate.probes", 1)?, seed)?.0,
    };
    let policy = radius_policy(cfg)?;
    let members = batch(cfg, &spec, exps, c0, policy.as_ref(), cfg.count("batch.seeds", 1)?)?;
    let times = feasible_times(&members);
    let mut bindings: Vec<String> = members.iter().filter_map(|m| m.outcome.as_ref().err().map(|e| e.0.clone())).collect();
    bindings.sort();
    bindings.dedup();
    Ok(Stats {
        feasible: times.len(),
        times,
        reason: if bindings.is_empty() { String::new() } else { format!("infeasible: {}", bindings.join(", ")) },
    })
}

pub(super) fn run(cfg: &Config, ctx: &mut RunContext) -> Result<(), RunError> {
    let seed = cfg.u64("seed")?;
    let dims = dimensions(cfg)?;
    let gammas = cfg.list("sweep.gamma")?;
    let ps = cfg.list("sweep.p")?;
    let qs = cfg.list("sweep.q")?;
    let hs = cfg.list("sweep.hurst")?;
    let size = dims.len() * gammas.len() * ps.len() * qs.len() * hs.len();
    let budget = cfg.usize("sweep.budget")?;
    ctx.manifest.set("sweep.points", size);
    if size > budget {
        return Err(cfg.invalid("sweep.budget", format!("lattice has {size} points, budget is {budget}")).into());
    }
    let certify = cfg.bool("sweep.certify")?;
    let mut rows = Vec::with_capacity(size);
    let mut valid_count = 0usize;
    let mut index = 0u64;
    for &n in &dims {
        for &gamma in &gammas {
            for &p in &ps {
                for &q in &qs {
                    for &h in &hs {
                        let report = validate_tuple(n, gamma, p, q, h);
                        let ok = |name: &str| report.get(name).is_some_and(|c| c.passed).to_string();
                        let exps = DerivedExponents::compute(n, gamma, p, q).ok();
                        let valid = report.all_passed();
                        let stats = if valid && certify {
                            let point_seed = derive_seed(seed, index);
                            Some(certify_point(cfg, (n, gamma, p, q, h), exps.as_ref().unwrap(), point_seed)?)
                        } else {
                            None
                        };
                        index += 1;
                        valid_count += valid as usize;
                        let reason = match &stats {
                            _ if !valid => report.failures().map(|c| c.name).collect::<Vec<_>>().join(" "),
                            Some(s) => s.reason.clone(),
                            None => String::new(),
                        };
                        let e = exps.as_ref();
                        let t = stats.as_ref().map(|s| &s.times[..]).unwrap_or(&[]);
                        rows.push(vec![
                            n.to_string(),
                            num(gamma),
                            num(p),
                            num(q),
                            num(h),
                            valid.to_string(),
                            ok("dimension"),
                            ok("gamma"),
                            ok("p"),
                            ok("hurst"),
                            ok("q"),
                            ok("derived-chain"),
                            num(q_lower_bound(n, gamma, p)),
                            num(hurst_lower_bound(n)),
                            opt(e.map(|e| e.r)),
                            opt(e.map(|e| e.sigma)),
                            opt(e.map(|e| e.alpha)),
                            opt(e.map(|e| e.alpha_from_identity(n, gamma, p, q))),
                            opt(e.map(|e| e.q_c)),
                            opt(e.map(|e| e.beta_c1)),
                            opt(e.map(|e| e.beta_c2)),
                            stats.as_ref().map(|s| s.feasible.to_string()).unwrap_or_default(),
                            opt(t.first().copied()),
                            opt(median(t)),
                            opt(t.last().copied()),
                            reason,
                        ]);
                    }
                }
            }
        }
    }
    write_csv(&ctx.path("sweep.csv"), &HEADER, &rows)?;
    ctx.manifest.set("sweep.valid_points", valid_count);
    Ok(())
}
