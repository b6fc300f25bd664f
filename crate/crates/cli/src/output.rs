//! CSV tables and plot scripts.

use std::path::Path;

use crate::RunError;

/// Writes an RFC-4180 table with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| RunError::Output(format!("{}: {e}", path.display())))?;
    let fail = |e: csv::Error| RunError::Output(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    w.flush().map_err(|e| RunError::Output(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::Output(format!("{}: {e}", path.display())))
}

/// Shortest round-trip representation, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A matplotlib script that reads `csv_name` next to itself and draws
/// `y` columns against `x`, one panel each.
pub fn plot_script(csv_name: &str, x: &str, ys: &[&str], log_x: bool, log_y: bool, title: &str) -> String {
    let cols = ys.iter().map(|y| format!("{y:?}")).collect::<Vec<_>>().join(", ");
    format!(
        r#"# Renders {csv_name}; run with python3 from this directory.
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open({csv_name:?}, newline="") as f:
    rows = list(csv.DictReader(f))

columns = [{cols}]
fig, axes = plt.subplots(len(columns), 1, figsize=(6, 3 * len(columns)), squeeze=False)
for ax, col in zip(axes[:, 0], columns):
    pts = [(float(r[{x:?}]), float(r[col])) for r in rows if r[col] not in ("", "nan")]
    if pts:
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", markersize=3)
    ax.set_xlabel({x:?})
    ax.set_ylabel(col)
    if {log_x}:
        ax.set_xscale("log")
    if {log_y}:
        ax.set_yscale("log")
axes[0, 0].set_title({title:?})
fig.tight_layout()
fig.savefig({png:?}, dpi=150)
"#,
        log_x = if log_x { "True" } else { "False" },
        log_y = if log_y { "True" } else { "False" },
        png = csv_name.replace(".csv", ".png"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_uses_crlf() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["a", "b"], &[vec!["1".into(), "x, y".into()]]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\r\n1,\"x, y\"\r\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-300, 4f64.powi(-8), -2.5] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(opt(None), "");
    }

    #[test]
    fn plot_script_names_its_inputs() {
        let s = plot_script("norms.csv", "t", &["norm_q"], false, true, "norms");
        assert!(s.contains("\"norms.csv\"") && s.contains("\"norm_q\"") && s.contains("norms.png"));
    }
}
