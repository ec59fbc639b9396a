use csv::{Terminator, WriterBuilder};

use super::CliError;
use crate::evaluation::{ComparisonReport, CvReport, StageOutcome};
use crate::metrics::MetricsBundle;
use crate::neural::TrainTrace;

fn writer() -> csv::Writer<Vec<u8>> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn bundle_cells(m: Option<&MetricsBundle>) -> [String; 4] {
    match m {
        Some(m) => [num(m.mse), num(m.rmse), num(m.mae), opt(m.mape)],
        None => Default::default(),
    }
}

/// `model,mse,rmse,mae,mape` at full precision; failed rows have empty cells.
pub fn metrics_csv(report: &ComparisonReport) -> String {
    let mut w = writer();
    w.write_record(["model", "mse", "rmse", "mae", "mape"]).expect("in-memory");
    for row in &report.rows {
        let c = bundle_cells(row.metrics.as_ref());
        w.write_record([row.name.as_str(), &c[0], &c[1], &c[2], &c[3]]).expect("in-memory");
    }
    finish(w)
}

/// One parsed `metrics.csv` row: name, `[mse, rmse, mae]` and MAPE.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsCsvRow {
    pub model: String,
    pub values: Option<[f64; 3]>,
    pub mape: Option<f64>,
}

fn parse_cell(s: &str, line: usize) -> Result<Option<f64>, CliError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| CliError::Input(format!("line {line}: `{s}`: {e}")))
}

pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricsCsvRow>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Input(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["model", "mse", "rmse", "mae", "mape"] {
        return Err(CliError::Input("unexpected metrics header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
        let line = i + 2;
        let v: Vec<Option<f64>> = (1..4).map(|j| parse_cell(&rec[j], line)).collect::<Result<_, _>>()?;
        let values = match (v[0], v[1], v[2]) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        rows.push(MetricsCsvRow { model: rec[0].to_string(), values, mape: parse_cell(&rec[4], line)? });
    }
    Ok(rows)
}

fn md_cell(v: f64) -> String {
    format!("{:.2}", crate::metrics::round_to(v, 2))
}

/// Two-decimal Markdown table; failed rows carry their error text.
pub fn metrics_markdown(title: &str, report: &ComparisonReport, timestamp: Option<&str>) -> String {
    let mut out = format!("# {title}\n\n");
    if let Some(t) = timestamp {
        out.push_str(&format!("Generated: {t}\n\n"));
    }
    let fp = &report.fingerprint;
    out.push_str(&format!(
        "Train windows: {}, test windows: {}, features: {}, seed: {}\n\n",
        fp.n_train,
        fp.n_test,
        fp.features.join(", "),
        fp.seed
    ));
    out.push_str("| Model | MSE | RMSE | MAE | MAPE |\n|---|---:|---:|---:|---:|\n");
    for row in &report.rows {
        match (&row.metrics, &row.error) {
            (Some(m), _) => out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                row.name,
                md_cell(m.mse),
                md_cell(m.rmse),
                md_cell(m.mae),
                m.mape.map(md_cell).unwrap_or_else(|| "n/a".into())
            )),
            (None, e) => out.push_str(&format!(
                "| {} | failed: {} | | | |\n",
                row.name,
                e.as_deref().unwrap_or("unknown error").replace('|', "/")
            )),
        }
    }
    out.push_str("\nMAPE is in percent; all other columns are in volts (squared for MSE).\n");
    out
}

/// Fold rows then a `mean` row whose `*_std` cells hold the sample standard deviation.
pub fn cv_csv(report: &CvReport) -> String {
    let mut w = writer();
    w.write_record(["fold", "mse", "rmse", "mae", "mape", "mse_std", "rmse_std", "mae_std", "mape_std"])
        .expect("in-memory");
    for f in &report.folds {
        let c = bundle_cells(Some(&f.metrics));
        w.write_record([f.fold.to_string(), c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone(), String::new(), String::new(), String::new(), String::new()])
            .expect("in-memory");
    }
    let (m, s) = (&report.mean, &report.std);
    w.write_record([
        "mean".to_string(),
        num(m.mse),
        num(m.rmse),
        num(m.mae),
        opt(m.mape),
        num(s.mse),
        num(s.rmse),
        num(s.mae),
        opt(s.mape),
    ])
    .expect("in-memory");
    finish(w)
}

pub fn trace_csv(trace: &TrainTrace) -> String {
    let mut w = writer();
    w.write_record(["epoch", "train_loss", "val_loss"]).expect("in-memory");
    for (i, l) in trace.train_loss.iter().enumerate() {
        let v = trace.val_loss.as_ref().map(|v| num(v[i])).unwrap_or_default();
        w.write_record([(i + 1).to_string(), num(*l), v]).expect("in-memory");
    }
    finish(w)
}

pub fn tuning_csv(stages: &[StageOutcome]) -> String {
    let mut w = writer();
    w.write_record(["stage", "epochs", "batch_size", "learning_rate", "val_mse", "selected"]).expect("in-memory");
    for s in stages {
        for g in &s.grid {
            let chosen = s.selection.is_some_and(|p| {
                p.epochs == g.epochs && p.batch_size == g.batch_size && p.learning_rate == g.learning_rate
            });
            w.write_record([
                s.name.clone(),
                g.epochs.to_string(),
                g.batch_size.to_string(),
                num(g.learning_rate),
                opt(g.val_mse),
                chosen.to_string(),
            ])
            .expect("in-memory");
        }
    }
    finish(w)
}
