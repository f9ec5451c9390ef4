//! Report emission: method-comparison tables, rank-correlation and Pareto
//! summaries, and hand-rolled SVG boxplots and scatter plots.
//!
//! Cross-configuration analyses read the per-config mean over samples.
//! Plots skip silently-empty slices with a logged notice instead of
//! erroring, so partial sweeps still render.

use crate::sweep::{Metric, ResultRecord};
use anyhow::{Context, Result};
use faeval_core::stats::{pareto_front, spearman_rho, Direction};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One configuration's mean metric values, pivoted out of the record
/// stream.
#[derive(Clone, Debug)]
pub struct ConfigRow {
    pub model: String,
    pub split: String,
    pub method: String,
    pub params: String,
    pub params_hash: String,
    /// Metric name to mean-over-samples value.
    pub means: BTreeMap<String, f64>,
    pub flagged: u64,
}

/// Pivot records into one row per configuration, keeping the mean
/// aggregate of every metric present.
pub fn config_rows(records: &[ResultRecord]) -> Vec<ConfigRow> {
    let mut rows: BTreeMap<(String, String, String, String), ConfigRow> = BTreeMap::new();
    for r in records {
        if r.aggregate != "mean" {
            continue;
        }
        let key = (
            r.model_id.clone(),
            r.split.clone(),
            r.method.clone(),
            r.params.clone(),
        );
        let row = rows.entry(key).or_insert_with(|| ConfigRow {
            model: r.model_id.clone(),
            split: r.split.clone(),
            method: r.method.clone(),
            params: r.params.clone(),
            params_hash: r.params_hash.clone(),
            means: BTreeMap::new(),
            flagged: r.flagged,
        });
        row.means.insert(r.metric.clone(), r.value);
        row.flagged = row.flagged.max(r.flagged);
    }
    rows.into_values().collect()
}

/// Everything a report run produced.
#[derive(Debug)]
pub struct ReportOutcome {
    /// Files written, in creation order.
    pub files: Vec<PathBuf>,
    /// Skip notices, also printed to stderr as they occur.
    pub notices: Vec<String>,
}

fn push_notice(notices: &mut Vec<String>, msg: String) {
    eprintln!("notice: {msg}");
    notices.push(msg);
}

fn write_file(out: &mut ReportOutcome, path: PathBuf, content: &str) -> Result<()> {
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    out.files.push(path);
    Ok(())
}

fn fmt_val(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".to_string()
    }
}

/// Render every table and plot for a record stream.
///
/// Writes `summary.csv`, `spearman.csv`, `pareto.csv`, one boxplot SVG per
/// (model, split, metric) slice with data, one scatter SVG per (model,
/// split) that has both infidelity and direction-corrected means, and
/// `notices.txt` when anything was skipped.
pub fn emit_report(records: &[ResultRecord], out_dir: &Path) -> Result<ReportOutcome> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut out = ReportOutcome {
        files: Vec::new(),
        notices: Vec::new(),
    };
    let rows = config_rows(records);

    let mut summary = String::from(
        "model,split,method,params_hash,pc_abpc_mean,dpc_abpc_mean,infidelity_mean,flagged\n",
    );
    for row in &rows {
        let get = |m: Metric| {
            row.means
                .get(m.name())
                .map(|v| fmt_val(*v))
                .unwrap_or_default()
        };
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            row.model,
            row.split,
            row.method,
            row.params_hash,
            get(Metric::PcAbpc),
            get(Metric::DpcAbpc),
            get(Metric::Infidelity),
            row.flagged
        )
        .expect("string write");
    }
    write_file(&mut out, out_dir.join("summary.csv"), &summary)?;

    let mut slices: BTreeMap<(String, String), Vec<&ConfigRow>> = BTreeMap::new();
    for row in &rows {
        slices
            .entry((row.model.clone(), row.split.clone()))
            .or_default()
            .push(row);
    }

    let mut spearman = String::from("model,split,metric_a,metric_b,n_configs,rho\n");
    for ((model, split), slice) in &slices {
        for (a, b) in [
            (Metric::PcAbpc, Metric::DpcAbpc),
            (Metric::PcAbpc, Metric::Infidelity),
            (Metric::DpcAbpc, Metric::Infidelity),
        ] {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for row in slice {
                if let (Some(&x), Some(&y)) = (row.means.get(a.name()), row.means.get(b.name())) {
                    if x.is_finite() && y.is_finite() {
                        xs.push(x);
                        ys.push(y);
                    }
                }
            }
            let rho = if xs.len() < 2 {
                "undefined".to_string()
            } else {
                match spearman_rho(&xs, &ys) {
                    Ok(r) => fmt_val(r),
                    Err(_) => "undefined".to_string(),
                }
            };
            writeln!(
                spearman,
                "{},{},{},{},{},{}",
                model,
                split,
                a.name(),
                b.name(),
                xs.len(),
                rho
            )
            .expect("string write");
        }
    }
    write_file(&mut out, out_dir.join("spearman.csv"), &spearman)?;

    let mut pareto = String::from(
        "model,split,method,params_hash,infidelity_mean,dpc_abpc_mean,on_front\n",
    );
    let mut fronts: BTreeMap<(String, String), (Vec<&ConfigRow>, Vec<usize>)> = BTreeMap::new();
    for ((model, split), slice) in &slices {
        let scored: Vec<&ConfigRow> = slice
            .iter()
            .copied()
            .filter(|row| {
                matches!(
                    (
                        row.means.get(Metric::Infidelity.name()),
                        row.means.get(Metric::DpcAbpc.name())
                    ),
                    (Some(x), Some(y)) if x.is_finite() && y.is_finite()
                )
            })
            .collect();
        if scored.is_empty() {
            continue;
        }
        let points: Vec<(f64, f64)> = scored
            .iter()
            .map(|row| {
                (
                    row.means[Metric::Infidelity.name()],
                    row.means[Metric::DpcAbpc.name()],
                )
            })
            .collect();
        let front = pareto_front(&points, (Direction::Minimize, Direction::Maximize));
        for (i, row) in scored.iter().enumerate() {
            writeln!(
                pareto,
                "{},{},{},{},{},{},{}",
                model,
                split,
                row.method,
                row.params_hash,
                fmt_val(points[i].0),
                fmt_val(points[i].1),
                front.contains(&i)
            )
            .expect("string write");
        }
        fronts.insert((model.clone(), split.clone()), (scored, front));
    }
    write_file(&mut out, out_dir.join("pareto.csv"), &pareto)?;

    for ((model, split), slice) in &slices {
        for metric in Metric::all() {
            let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for row in slice {
                if let Some(&v) = row.means.get(metric.name()) {
                    if v.is_finite() {
                        groups.entry(&row.method).or_default().push(v);
                    }
                }
            }
            if groups.is_empty() {
                push_notice(
                    &mut out.notices,
                    format!(
                        "boxplot {} ({model}, {split}) skipped: no finite values",
                        metric.name()
                    ),
                );
                continue;
            }
            let svg = boxplot_svg(&groups, &format!("{} on {model} {split}", metric.name()));
            write_file(
                &mut out,
                out_dir.join(format!("boxplot-{}-{model}-{split}.svg", metric.name())),
                &svg,
            )?;
        }

        match fronts.get(&(model.clone(), split.clone())) {
            Some((scored, front)) if !scored.is_empty() => {
                let points: Vec<(f64, f64)> = scored
                    .iter()
                    .map(|row| {
                        (
                            row.means[Metric::Infidelity.name()],
                            row.means[Metric::DpcAbpc.name()],
                        )
                    })
                    .collect();
                let svg = scatter_svg(
                    &points,
                    front,
                    &format!("infidelity vs dpc-abpc on {model} {split}"),
                );
                write_file(
                    &mut out,
                    out_dir.join(format!("scatter-{model}-{split}.svg")),
                    &svg,
                )?;
            }
            _ => push_notice(
                &mut out.notices,
                format!("scatter ({model}, {split}) skipped: needs both infidelity and dpc-abpc"),
            ),
        }
    }

    if !out.notices.is_empty() {
        let joined = out.notices.join("\n") + "\n";
        write_file(&mut out, out_dir.join("notices.txt"), &joined)?;
    }
    Ok(out)
}

/// Median-split quartiles: q2 is the median, q1 and q3 are medians of the
/// strict lower and upper halves.
pub fn quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    assert!(!sorted.is_empty());
    let med = |xs: &[f64]| -> f64 {
        let n = xs.len();
        if n % 2 == 1 {
            xs[n / 2]
        } else {
            0.5 * (xs[n / 2 - 1] + xs[n / 2])
        }
    };
    let n = sorted.len();
    if n == 1 {
        return (sorted[0], sorted[0], sorted[0]);
    }
    let half = n / 2;
    (med(&sorted[..half]), med(sorted), med(&sorted[n - half..]))
}

fn scale(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi <= lo {
        return 0.5 * (out_lo + out_hi);
    }
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

fn svg_num(v: f64) -> String {
    format!("{v:.2}")
}

/// One box per group, whiskers at the observed min and max.
pub fn boxplot_svg(groups: &BTreeMap<&str, Vec<f64>>, title: &str) -> String {
    let n = groups.len();
    let width = 100 + 90 * n;
    let height = 380;
    let (top, bottom) = (50.0, 320.0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for vs in groups.values() {
        for &v in vs {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| scale(v, lo, hi, bottom, top);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\" \
         font-family=\"sans-serif\">{}</text>\n\
         <line x1=\"60\" y1=\"{top}\" x2=\"60\" y2=\"{bottom}\" stroke=\"black\"/>\n\
         <text x=\"54\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" \
         font-family=\"sans-serif\">{}</text>\n\
         <text x=\"54\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" \
         font-family=\"sans-serif\">{}</text>\n",
        width / 2,
        escape(title),
        svg_num(y(hi) + 4.0),
        svg_num(hi),
        svg_num(y(lo) + 4.0),
        svg_num(lo),
    );
    for (i, (name, vs)) in groups.iter().enumerate() {
        let cx = 110.0 + 90.0 * i as f64;
        let mut sorted = vs.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite plot values"));
        let (q1, q2, q3) = quartiles(&sorted);
        let (vmin, vmax) = (sorted[0], sorted[sorted.len() - 1]);
        writeln!(svg, "<g class=\"box\" data-method=\"{}\">", escape(name)).expect("string write");
        writeln!(
            svg,
            "<line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"black\"/>",
            svg_num(y(vmin)),
            svg_num(y(vmax))
        )
        .expect("string write");
        for v in [vmin, vmax] {
            writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
                svg_num(cx - 15.0),
                svg_num(y(v)),
                svg_num(cx + 15.0),
                svg_num(y(v))
            )
            .expect("string write");
        }
        writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"50\" height=\"{}\" fill=\"#9ecae1\" stroke=\"black\"/>",
            svg_num(cx - 25.0),
            svg_num(y(q3)),
            svg_num((y(q1) - y(q3)).max(0.5))
        )
        .expect("string write");
        writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"2\"/>",
            svg_num(cx - 25.0),
            svg_num(y(q2)),
            svg_num(cx + 25.0),
            svg_num(y(q2))
        )
        .expect("string write");
        writeln!(
            svg,
            "<text x=\"{cx}\" y=\"345\" font-size=\"10\" text-anchor=\"middle\" \
             font-family=\"sans-serif\">{}</text>",
            escape(name)
        )
        .expect("string write");
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}

/// All points as dots, the given front subset ringed and classed `pareto`.
pub fn scatter_svg(points: &[(f64, f64)], front: &[usize], title: &str) -> String {
    let (width, height) = (520, 440);
    let (left, right, top, bottom) = (70.0, 480.0, 50.0, 380.0);
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let xpad = 0.05 * (x_hi - x_lo);
    let ypad = 0.05 * (y_hi - y_lo);
    let (x_lo, x_hi, y_lo, y_hi) = (x_lo - xpad, x_hi + xpad, y_lo - ypad, y_hi + ypad);
    let px = |x: f64| scale(x, x_lo, x_hi, left, right);
    let py = |y: f64| scale(y, y_lo, y_hi, bottom, top);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\" \
         font-family=\"sans-serif\">{}</text>\n\
         <line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"black\"/>\n\
         <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{bottom}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"420\" font-size=\"11\" text-anchor=\"middle\" \
         font-family=\"sans-serif\">infidelity (mean)</text>\n\
         <text x=\"20\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" transform=\"rotate(-90 20 {})\">dpc-abpc (mean)</text>\n",
        width / 2,
        escape(title),
        (left + right) / 2.0,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
    );
    for (i, &(x, y)) in points.iter().enumerate() {
        if front.contains(&i) {
            continue;
        }
        writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"#636363\" data-index=\"{i}\"/>",
            svg_num(px(x)),
            svg_num(py(y))
        )
        .expect("string write");
    }
    for &i in front {
        let (x, y) = points[i];
        writeln!(
            svg,
            "<circle class=\"pareto\" cx=\"{}\" cy=\"{}\" r=\"5.5\" fill=\"#d95f02\" \
             stroke=\"black\" stroke-width=\"1.5\" data-index=\"{i}\"/>",
            svg_num(px(x)),
            svg_num(py(y))
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
