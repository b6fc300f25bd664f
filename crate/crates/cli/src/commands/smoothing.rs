//! `validate-smoothing`: fitted decay exponent of `S_gamma(t)` per case.

use henon_spde::heat::{smoothing_exponent_probe, ProbeConfig};

use super::{grid, number_or};
use crate::config::{key, Config, KeySpec, Kind};
use crate::output::{num, write_csv, write_text};
use crate::{RunContext, RunError};

pub(super) fn keys() -> Vec<KeySpec> {
    let mut k = vec![key("seed", Kind::Int, "0")];
    k.extend(super::grid_keys("2", "8", "128"));
    k.extend([
        key("smoothing.gamma", Kind::FloatList, "0.5, 0.5, 1"),
        key("smoothing.q1", Kind::FloatList, "4, 2, 4"),
        key("smoothing.q2", Kind::FloatList, "4, 4, 2"),
        key("smoothing.probes", Kind::Int, "48"),
        key("smoothing.times", Kind::Int, "12"),
        key("smoothing.t_min", super::ANY, "auto"),
        key("smoothing.t_max", super::ANY, "auto"),
        key("smoothing.tolerance", Kind::Float, "0.1"),
    ]);
    k
}

const PLOT: &str = r#"# Renders smoothing_ratios.csv; run with python3 from this directory.
import csv
from collections import defaultdict
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

curves = defaultdict(list)
with open("smoothing_ratios.csv", newline="") as f:
    for r in csv.DictReader(f):
        curves[r["case"]].append((float(r["t"]), float(r["ratio"])))
with open("smoothing.csv", newline="") as f:
    labels = {r["case"]: "gamma={gamma} q1={q1} q2={q2} slope={slope:.3}".format(
        gamma=r["gamma"], q1=r["q1"], q2=r["q2"], slope=float(r["slope"])) for r in csv.DictReader(f)}

fig, ax = plt.subplots(figsize=(6, 4))
for case, pts in curves.items():
    ts, rs = zip(*pts)
    ax.loglog(ts, rs, marker="o", markersize=3, label=labels.get(case, case))
ax.set_xlabel("t")
ax.set_ylabel("sup ||S_gamma(t) phi||_q2 / ||phi||_q1")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("smoothing_ratios.png", dpi=150)
"#;

pub(super) fn run(cfg: &Config, ctx: &mut RunContext) -> Result<(), RunError> {
    let seed = cfg.u64("seed")?;
    let g = grid(cfg)?;
    let gammas = cfg.list("smoothing.gamma")?;
    let q1s = cfg.list("smoothing.q1")?;
    let q2s = cfg.list("smoothing.q2")?;
    if q1s.len() != gammas.len() || q2s.len() != gammas.len() {
        return Err(cfg
            .invalid("smoothing.q2", "smoothing.gamma, smoothing.q1 and smoothing.q2 need the same length")
            .into());
    }
    let tol = cfg.positive("smoothing.tolerance")?;
    let t_min = number_or(cfg, "smoothing.t_min", "auto")?;
    let t_max = number_or(cfg, "smoothing.t_max", "auto")?;
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut failed = Vec::new();
    for (i, ((&gamma, &q1), &q2)) in gammas.iter().zip(&q1s).zip(&q2s).enumerate() {
        let mut pc = ProbeConfig::for_grid(&g, gamma, q1, q2);
        pc.probe_count = cfg.count("smoothing.probes", 1)?;
        pc.t_count = cfg.count("smoothing.times", 2)?;
        pc.seed = seed;
        if let Some(t) = t_min {
            pc.t_min = t;
        }
        if let Some(t) = t_max {
            pc.t_max = t;
        }
        let res = smoothing_exponent_probe(&g, &pc)?;
        let err = res.relative_slope_error();
        let passed = err <= tol;
        if !passed {
            failed.push(format!("case {i}: slope {} vs {}", res.slope, res.expected_slope));
        }
        ctx.manifest.set(format!("check.smoothing.{i}"), if passed { "pass" } else { "fail" });
        rows.push(vec![
            i.to_string(),
            g.dimension().to_string(),
            num(gamma),
            num(q1),
            num(q2),
            num(res.expected_slope),
            num(res.slope),
            num(err),
            num(res.c0),
            if passed { "pass" } else { "fail" }.into(),
        ]);
        for (t, r) in res.times.iter().zip(&res.ratios) {
            curves.push(vec![i.to_string(), num(*t), num(*r)]);
        }
    }
    write_csv(
        &ctx.path("smoothing.csv"),
        &["case", "dimension", "gamma", "q1", "q2", "expected_slope", "slope", "relative_error", "c0", "status"],
        &rows,
    )?;
    write_csv(&ctx.path("smoothing_ratios.csv"), &["case", "t", "ratio"], &curves)?;
    write_text(&ctx.path("plot_smoothing.py"), PLOT)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(RunError::ChecksFailed(failed.join("; ")))
    }
}
