use std::collections::BTreeMap;
use std::path::Path;

use super::experiment::{read_metrics, MetricsRow};
use crate::error::{Error, Result};

/// Aggregate key: everything that identifies a condition except the seed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    algorithm: String,
    metric_name: String,
    eta_inv_bits: u64,
    d: usize,
    epsilon_bits: u64,
    delta_bits: Option<u64>,
}

impl GroupKey {
    fn of(r: &MetricsRow) -> Self {
        GroupKey {
            algorithm: r.algorithm.clone(),
            metric_name: r.metric_name.clone(),
            eta_inv_bits: r.eta_inv.to_bits(),
            d: r.d,
            epsilon_bits: r.epsilon.to_bits(),
            delta_bits: r.delta.map(f64::to_bits),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub algorithm: String,
    pub metric_name: String,
    pub eta_inv: f64,
    pub d: usize,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub n_seeds: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean +/- sample std across seeds for every condition.
pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry(GroupKey::of(r)).or_default().push(r.metric_value);
    }
    groups
        .into_iter()
        .map(|(k, vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                algorithm: k.algorithm,
                metric_name: k.metric_name,
                eta_inv: f64::from_bits(k.eta_inv_bits),
                d: k.d,
                epsilon: f64::from_bits(k.epsilon_bits),
                delta: k.delta_bits.map(f64::from_bits),
                n_seeds: vals.len(),
                mean,
                std: var.sqrt(),
            }
        })
        .collect()
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "algorithm        metric            eta_inv        D   epsilon  delta      seeds   mean +/- std\n",
    );
    for r in rows {
        let delta = r.delta.map_or("-".to_string(), |d| format!("{d}"));
        out.push_str(&format!(
            "{:<16} {:<16} {:>8.3} {:>8} {:>9.3}  {:<9} {:>6}   {:.4} +/- {:.4}\n",
            r.algorithm, r.metric_name, r.eta_inv, r.d, r.epsilon, delta, r.n_seeds, r.mean, r.std
        ));
    }
    out
}

/// Plot point series keyed by algorithm; x is the chosen sweep axis.
fn series_by_algorithm(
    rows: &[SummaryRow],
    metric: &str,
    x_of: impl Fn(&SummaryRow) -> f64,
) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric_name == metric) {
        series
            .entry(r.algorithm.clone())
            .or_default()
            .push((x_of(r), r.mean));
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
    }
    series
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Minimal hand-rolled SVG line chart: one polyline per algorithm,
/// axes, tick labels, legend. No external deps on purpose.
pub fn svg_line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &BTreeMap<String, Vec<(f64, f64)>>,
) -> String {
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 55.0);
    let pts: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let (mut x0, mut x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let (mut y0, mut y1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    if pts.is_empty() {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = (y1 - y0) * 0.05;
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        w / 2.0
    );
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb,
        h - mb
    ));
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n\
             <text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4:.3}</text>\n",
            px(fx),
            h - mb,
            h - mb + 5.0,
            h - mb + 20.0,
            fx
        ));
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n\
             <text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5:.3}</text>\n",
            ml - 5.0,
            py(fy),
            ml,
            ml - 8.0,
            py(fy) + 4.0,
            fy
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (ml + w - mr) / 2.0,
        h - 12.0,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        for p in pts {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(p.0),
                py(p.1)
            ));
        }
        let ly = mt + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{ly}\" x2=\"{1}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{2}\" y=\"{3}\">{name}</text>\n",
            w - mr - 120.0,
            w - mr - 95.0,
            w - mr - 90.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Build a report from a metrics CSV: a plain-text summary table plus
/// one SVG per metric with eta_inv on the x axis (or epsilon when the
/// data varies along epsilon instead). Empty metrics files yield a
/// zero-row summary and no plots, still a success.
pub fn report(metrics_path: &Path, out_dir: &Path) -> Result<Vec<String>> {
    let rows = read_metrics(metrics_path)?;
    let summary = summarize(&rows);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io("report dir", e))?;
    let table = summary_table(&summary);
    let table_path = out_dir.join("summary.txt");
    std::fs::write(&table_path, &table).map_err(|e| Error::io("summary write", e))?;
    let mut written = vec![table_path.display().to_string()];

    let metrics: Vec<String> = {
        let mut m: Vec<String> = summary.iter().map(|r| r.metric_name.clone()).collect();
        m.sort();
        m.dedup();
        m
    };
    for metric in &metrics {
        let sub: Vec<&SummaryRow> = summary.iter().filter(|r| &r.metric_name == metric).collect();
        // pick the axis that actually varies in the data
        let varies = |f: &dyn Fn(&SummaryRow) -> f64| {
            let mut vals: Vec<u64> = sub.iter().map(|r| f(r).to_bits()).collect();
            vals.sort_unstable();
            vals.dedup();
            vals.len() > 1
        };
        let (axis_name, x_of): (&str, fn(&SummaryRow) -> f64) = if varies(&|r| r.eta_inv) {
            ("eta_inv", |r| r.eta_inv)
        } else if varies(&|r| r.epsilon) {
            ("epsilon", |r| r.epsilon)
        } else if varies(&|r| r.d as f64) {
            ("D", |r| r.d as f64)
        } else {
            ("eta_inv", |r| r.eta_inv)
        };
        let series = series_by_algorithm(&summary, metric, x_of);
        if series.values().all(|v| v.is_empty()) {
            continue;
        }
        let svg = svg_line_plot(metric, axis_name, metric, &series);
        let path = out_dir.join(format!("{metric}.svg"));
        std::fs::write(&path, svg).map_err(|e| Error::io("plot write", e))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}
