use super::print_json;
use super::providers::{embedder, Backend, DEFAULT_BASE_URL};
use anyhow::{bail, Context, Result};
use peacelens::corpus::*;
use peacelens::embedding::{EmbeddingCache, EmbeddingGateway, EmbeddingRequest, DEFAULT_EMBED_MODEL};
use peacelens::eval::{
    accuracy, country_level_classify, group_by_country, transfer_diagnostic, Confusion, EvalReport,
    TransferDiagnostic,
};
use peacelens::nn::{load_checkpoint, save_checkpoint, train_model, Architecture, NetworkSpec, Precision, TrainingConfig};
use peacelens::PeaceLabel;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct IngestArgs {
    /// JSONL articles: id, country, source, text, optional published_at.
    #[arg(long)]
    corpus: PathBuf,
    /// JSON object country -> "high" | "low".
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "stub")]
    embed: Backend,
    #[arg(long, default_value = DEFAULT_EMBED_MODEL)]
    embed_model: String,
    #[arg(long, default_value = DEFAULT_BASE_URL)]
    embed_base_url: String,
    /// Persistent embedding cache file.
    #[arg(long)]
    embed_cache: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    max_in_flight: usize,
}

#[derive(Serialize)]
struct IngestSummary {
    articles: usize,
    rejected_lines: usize,
    embedded: usize,
    embedding_failures: usize,
    high: usize,
    low: usize,
    out: PathBuf,
}

pub async fn ingest(a: IngestArgs, json: bool) -> Result<()> {
    let report = ingest_jsonl(&a.corpus)?;
    for r in &report.rejects {
        tracing::warn!(line = r.line, reason = %r.reason, "rejected article");
    }
    let table = CountryPeaceTable::load(&a.labels)?;
    let labeled = assign_labels(report.articles, &table)?;
    let cache = match &a.embed_cache {
        Some(p) => EmbeddingCache::open(p)?,
        None => EmbeddingCache::in_memory(),
    };
    let gateway = EmbeddingGateway::new(embedder(a.embed, &a.embed_model, &a.embed_base_url)?, cache);
    let requests: Vec<_> = labeled
        .iter()
        .map(|l| EmbeddingRequest::new(l.article.id.clone(), l.article.text.clone()))
        .collect();
    let batch = gateway.embed_batch(&requests, a.max_in_flight).await?;
    for (id, e) in &batch.errors {
        tracing::warn!(id = %id, error = %e, "embedding failed");
    }
    let examples: Vec<LabeledExample> = labeled
        .iter()
        .filter_map(|l| {
            batch.vectors.get(&l.article.id).map(|v| LabeledExample {
                id: l.article.id.clone(),
                country: l.article.country.clone(),
                label: l.label,
                embedding: v.as_slice().to_vec(),
            })
        })
        .collect();
    if examples.is_empty() {
        bail!("no article could be embedded");
    }
    write_dataset(&a.out, &examples)?;
    let high = examples.iter().filter(|e| e.label == PeaceLabel::High).count();
    let summary = IngestSummary {
        articles: labeled.len(),
        rejected_lines: report.rejects.len(),
        embedded: examples.len(),
        embedding_failures: batch.errors.len(),
        high,
        low: examples.len() - high,
        out: a.out,
    };
    if json {
        print_json(&summary)
    } else {
        println!(
            "ingested {} articles ({} lines rejected), embedded {} ({} high, {} low), {} failures -> {}",
            summary.articles,
            summary.rejected_lines,
            summary.embedded,
            summary.high,
            summary.low,
            summary.embedding_failures,
            summary.out.display()
        );
        Ok(())
    }
}

#[derive(clap::Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    countries: usize,
    #[arg(long, default_value_t = 100)]
    per_country: usize,
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = peacelens::nn::EMBEDDING_DIM)]
    dim: usize,
}

pub fn synth(a: SynthArgs, json: bool) -> Result<()> {
    let cfg = SyntheticConfig {
        countries: a.countries,
        articles_per_country: a.per_country,
        separation: a.separation,
        noise_sigma: a.sigma,
        dim: a.dim,
        seed: a.seed,
        ..SyntheticConfig::default()
    };
    let examples = generate_synthetic_corpus(&cfg)?;
    write_dataset(&a.out, &examples)?;
    if json {
        print_json(&serde_json::json!({ "examples": examples.len(), "config": cfg, "out": a.out }))
    } else {
        println!("wrote {} synthetic examples to {}", examples.len(), a.out.display());
        Ok(())
    }
}

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// feed_forward | cnn | revised_cnn
    #[arg(long, default_value = "cnn")]
    arch: Architecture,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// f32 | f64
    #[arg(long, default_value = "f32")]
    precision: Precision,
    /// Held-out fraction reported per epoch; 0 trains on everything.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Spread batch gradients over threads. Results then depend on the core count.
    #[arg(long)]
    parallel: bool,
}

pub fn train(a: TrainArgs, json: bool) -> Result<()> {
    if !(0.0..1.0).contains(&a.test_fraction) {
        bail!("--test-fraction must be in [0, 1)");
    }
    let examples = read_dataset(&a.dataset)?;
    let dim = examples.first().map_or(0, |e| e.embedding.len());
    let spec = NetworkSpec::canonical_with_input(a.arch, dim)?;
    let (train_set, test_set) = if a.test_fraction > 0.0 {
        train_test_split(
            examples,
            &SplitConfig {
                train_fraction: 1.0 - a.test_fraction,
                seed: a.seed,
            },
        )?
    } else {
        (examples, Vec::new())
    };
    let to_train = |v: &[LabeledExample]| v.iter().map(LabeledExample::to_train_example).collect::<Vec<_>>();
    let (train_x, test_x) = (to_train(&train_set), to_train(&test_set));
    let cfg = TrainingConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
        precision: a.precision,
        deterministic: !a.parallel,
        ..TrainingConfig::default()
    };
    let (model, history) = train_model(&spec, &train_x, (!test_x.is_empty()).then_some(&test_x[..]), &cfg)?;
    save_checkpoint(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if json {
        return print_json(&history);
    }
    println!("{:>5} {:>10} {:>9} {:>10} {:>9}", "epoch", "train_loss", "train_acc", "test_loss", "test_acc");
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for e in &history.epochs {
        println!(
            "{:>5} {:>10.4} {:>9.4} {:>10} {:>9}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            opt(e.test_loss),
            opt(e.test_accuracy)
        );
    }
    println!("checkpoint {} ({}, {} train / {} test)", a.out.display(), a.arch, train_x.len(), test_x.len());
    Ok(())
}

#[derive(clap::Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Serialize)]
struct EvaluateOutput {
    #[serde(flatten)]
    report: EvalReport,
    countries_correct: usize,
    transfer: TransferDiagnostic,
}

pub fn evaluate(a: EvaluateArgs, json: bool) -> Result<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let examples = read_dataset(&a.dataset)?;
    let mut probs = Vec::with_capacity(examples.len());
    for e in &examples {
        probs.push(model.predict(&e.embedding).with_context(|| format!("article {}", e.id))?);
    }
    let predicted: Vec<PeaceLabel> = probs.iter().map(|p| PeaceLabel::from_probability(*p)).collect();
    let truth: Vec<PeaceLabel> = examples.iter().map(|e| e.label).collect();
    let grouped = group_by_country(examples.iter().map(|e| e.country.as_str()).zip(probs.iter().copied()));
    let countries = country_level_classify(&grouped)?;
    let mut country_truth: BTreeMap<String, PeaceLabel> = BTreeMap::new();
    for e in &examples {
        if let Some(prev) = country_truth.insert(e.country.clone(), e.label) {
            if prev != e.label {
                bail!("country {} carries both labels", e.country);
            }
        }
    }
    let report = EvalReport {
        dataset: a.dataset.display().to_string(),
        n: examples.len(),
        accuracy: accuracy(&predicted, &truth)?,
        confusion: Confusion::from_pairs(predicted.iter().zip(&truth)),
        countries: EvalReport::country_rows(&countries, &country_truth),
    };
    let out = EvaluateOutput {
        countries_correct: report.countries_correct(),
        transfer: transfer_diagnostic(&predicted)?,
        report,
    };
    if json {
        return print_json(&out);
    }
    print!("{}", out.report.to_text());
    println!("countries correct: {}/{}", out.countries_correct, out.report.countries.len());
    let t = &out.transfer;
    println!(
        "high-peace share {:.3}{}",
        t.high_fraction,
        if t.alarm { "  (degenerate: nearly one class)" } else { "" }
    );
    Ok(())
}
