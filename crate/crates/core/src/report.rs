//! Summaries of a metric history: per-wave quartiles (boxplot data) and
//! median trends per criterion. Output depends only on the set of rows, not
//! their order.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::Result;
use crate::orchestrator::MetricRow;
use crate::scalar::quantile_sorted;

#[derive(Debug, Clone, PartialEq)]
pub struct QuartileRow {
    pub wave: usize,
    pub criterion: String,
    pub output: String,
    pub metric: &'static str,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub criterion: String,
    pub output: String,
    pub metric: &'static str,
    pub wave: usize,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub quartiles: Vec<QuartileRow>,
    pub trends: Vec<TrendPoint>,
}

const METRICS: [&str; 2] = ["max_error", "median_crps"];

pub fn build_report(rows: &[MetricRow]) -> Report {
    // (criterion, output, metric, wave) → values
    let mut groups: BTreeMap<(String, String, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        for (m, v) in [r.max_error, r.median_crps].into_iter().enumerate() {
            groups
                .entry((r.criterion.to_string(), r.output.clone(), m, r.wave))
                .or_default()
                .push(v);
        }
    }
    let mut report = Report::default();
    for ((criterion, output, m, wave), mut values) in groups {
        values.sort_by(f64::total_cmp);
        let q = |p: f64| quantile_sorted(&values, p);
        let row = QuartileRow {
            wave,
            criterion: criterion.clone(),
            output: output.clone(),
            metric: METRICS[m],
            n: values.len(),
            min: values[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: values[values.len() - 1],
        };
        report.trends.push(TrendPoint {
            criterion,
            output,
            metric: METRICS[m],
            wave,
            median: row.median,
        });
        report.quartiles.push(row);
    }
    report.quartiles.sort_by(|a, b| {
        (a.wave, &a.criterion, &a.output, a.metric).cmp(&(b.wave, &b.criterion, &b.output, b.metric))
    });
    report
}

pub fn write_quartiles_csv<W: Write>(report: &Report, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["wave", "criterion", "output", "metric", "n", "min", "q1", "median", "q3", "max"])?;
    for r in &report.quartiles {
        w.write_record([
            r.wave.to_string(),
            r.criterion.clone(),
            r.output.clone(),
            r.metric.to_string(),
            r.n.to_string(),
            r.min.to_string(),
            r.q1.to_string(),
            r.median.to_string(),
            r.q3.to_string(),
            r.max.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trends_csv<W: Write>(report: &Report, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["criterion", "output", "metric", "wave", "median"])?;
    for t in &report.trends {
        w.write_record([
            t.criterion.clone(),
            t.output.clone(),
            t.metric.to_string(),
            t.wave.to_string(),
            t.median.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
