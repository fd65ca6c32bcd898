use super::gold::{CorrelationEntry, DimensionStats};
use super::stats::{Confusion, Correlation, CountryPrediction};
use crate::label::PeaceLabel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// Descriptive statistics table, one row per dimension.
pub fn format_table_one(rows: &[DimensionStats]) -> String {
    let mut out = format!(
        "{:<22} {:>4} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
        "dimension", "n", "mean", "sd", "min", "max", "median"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<22} {:>4} {:>6} {:>6} {:>6} {:>6} {:>6}",
            r.dimension.key(),
            r.n,
            cell(r.mean),
            cell(r.sd),
            cell(r.min),
            cell(r.max),
            cell(r.median)
        );
    }
    out
}

fn r_cell(r: Correlation) -> String {
    match r {
        Correlation::Defined(v) => format!("{v:.3}"),
        Correlation::Undefined => "undef".into(),
    }
}

/// Correlation table: rows are (model, mode), columns dimensions.
pub fn format_table_two(entries: &[CorrelationEntry]) -> String {
    let mut rows: BTreeMap<(String, String), BTreeMap<_, _>> = BTreeMap::new();
    let mut dims = std::collections::BTreeSet::new();
    for e in entries {
        dims.insert(e.dimension);
        rows.entry((e.model_id.clone(), e.mode.clone()))
            .or_default()
            .insert(e.dimension, e.r);
    }
    let mut out = format!("{:<28}", "model / mode");
    for d in &dims {
        let _ = write!(out, " {:>21}", d.key());
    }
    out.push('\n');
    for ((model, mode), cells) in rows {
        let _ = write!(out, "{:<28}", format!("{model} / {mode}"));
        for d in &dims {
            let _ = write!(out, " {:>21}", cells.get(d).map_or("-".into(), |r| r_cell(*r)));
        }
        out.push('\n');
    }
    out
}

/// `model_id,mode,dimension,n,r` with an empty `r` when undefined.
pub fn correlation_csv(entries: &[CorrelationEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model_id", "mode", "dimension", "n", "r"]).expect("in-memory write");
    for e in entries {
        let r = e.r.value().map(|v| v.to_string()).unwrap_or_default();
        w.write_record([&e.model_id, &e.mode, e.dimension.key(), &e.n.to_string(), &r])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRow {
    pub country: String,
    pub articles: usize,
    pub mean_probability: f64,
    pub predicted: PeaceLabel,
    pub truth: Option<PeaceLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub n: usize,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub countries: Vec<CountryRow>,
}

impl EvalReport {
    pub fn country_rows(
        predictions: &BTreeMap<String, CountryPrediction>,
        truth: &BTreeMap<String, PeaceLabel>,
    ) -> Vec<CountryRow> {
        predictions
            .iter()
            .map(|(c, p)| CountryRow {
                country: c.clone(),
                articles: p.articles,
                mean_probability: p.mean_probability,
                predicted: p.label,
                truth: truth.get(c).copied(),
            })
            .collect()
    }

    /// Countries whose predicted label matches a known truth.
    pub fn countries_correct(&self) -> usize {
        self.countries
            .iter()
            .filter(|r| r.truth == Some(r.predicted))
            .count()
    }

    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        let mut out = format!(
            "dataset {}  n={}  accuracy={:.4}\nconfusion: TH={} TL={} FH={} FL={}\n",
            self.dataset, self.n, self.accuracy, c.true_high, c.true_low, c.false_high, c.false_low
        );
        for r in &self.countries {
            let truth = r.truth.map_or("?".to_string(), |t| t.to_string());
            let _ = writeln!(
                out,
                "  {:<6} {:>5} {:.3} {} (truth {})",
                r.country, r.articles, r.mean_probability, r.predicted, truth
            );
        }
        out
    }
}
