use super::print_json;
use super::providers::LlmArgs;
use super::score::emotion_summary;
use anyhow::{bail, Context, Result};
use peacelens::eval::{
    aggregate_gold, correlation_csv, format_table_one, format_table_two, inter_rater_reliability, model_vs_human,
    CorrelationEntry, DimensionStats, GoldStandard, ReliabilityReport,
};
use peacelens::scorer::{batch_score, PeaceDimension, ScoreJob, ScorerConfig, ScoringMode};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// JSONL lines `{"video_id": .., "transcript": ..}`.
    #[arg(long)]
    transcripts: PathBuf,
    /// Ratings CSV: video_id, rater_id, dimension, score.
    #[arg(long)]
    gold: PathBuf,
    /// Modes to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "text_only,dual_input")]
    modes: Vec<ScoringMode>,
    /// Also write the correlation table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    max_parallel: usize,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Deserialize)]
struct TranscriptLine {
    video_id: String,
    transcript: String,
}

#[derive(Serialize)]
struct BenchOutput {
    table_one: Vec<DimensionStats>,
    reliability: Vec<ReliabilityReport>,
    correlations: Vec<CorrelationEntry>,
    failures: Vec<Failure>,
}

#[derive(Serialize)]
struct Failure {
    video_id: String,
    mode: ScoringMode,
    error: String,
}

fn mode_key(m: ScoringMode) -> &'static str {
    match m {
        ScoringMode::TextOnly => "text_only",
        ScoringMode::DualInput => "dual_input",
    }
}

pub async fn bench(a: BenchArgs, json: bool) -> Result<()> {
    let text = std::fs::read_to_string(&a.transcripts).with_context(|| format!("reading {}", a.transcripts.display()))?;
    let mut transcripts = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let t: TranscriptLine = serde_json::from_str(line).with_context(|| format!("transcripts line {}", n + 1))?;
        transcripts.push(t);
    }
    if transcripts.is_empty() {
        bail!("no transcripts in {}", a.transcripts.display());
    }
    let gold = GoldStandard::load_csv(&a.gold)?;
    let llm = a.llm.llm()?;
    let template = a.llm.template()?;
    let config = ScorerConfig {
        max_parallel: a.max_parallel,
        ..ScorerConfig::default()
    };

    let mut correlations = Vec::new();
    let mut failures = Vec::new();
    for mode in &a.modes {
        let mut jobs = Vec::with_capacity(transcripts.len());
        for t in &transcripts {
            let summary = match mode {
                ScoringMode::DualInput => Some(emotion_summary(&t.transcript, a.llm.emotion()?.as_ref()).await?),
                ScoringMode::TextOnly => None,
            };
            jobs.push(ScoreJob {
                transcript_id: t.video_id.clone(),
                transcript: t.transcript.clone(),
                mode: *mode,
                summary,
            });
        }
        let results = batch_score(&jobs, llm.as_ref(), &template, &config).await?;
        let mut per_dim: BTreeMap<PeaceDimension, BTreeMap<String, f64>> = BTreeMap::new();
        for (job, r) in jobs.iter().zip(results) {
            match r {
                Ok(set) => {
                    for (d, s) in &set.scores {
                        per_dim.entry(*d).or_default().insert(job.transcript_id.clone(), *s as f64);
                    }
                }
                Err(e) => failures.push(Failure {
                    video_id: job.transcript_id.clone(),
                    mode: *mode,
                    error: e.to_string(),
                }),
            }
        }
        for d in PeaceDimension::ALL {
            let scores = per_dim.remove(&d).unwrap_or_default();
            match model_vs_human(&scores, &gold, d, llm.model_id(), mode_key(*mode)) {
                Ok(e) => correlations.push(e),
                Err(e) => tracing::warn!(dimension = %d, mode = mode_key(*mode), error = %e, "no correlation"),
            }
        }
    }
    if let Some(path) = &a.csv {
        std::fs::write(path, correlation_csv(&correlations)).with_context(|| format!("writing {}", path.display()))?;
    }
    let out = BenchOutput {
        table_one: aggregate_gold(&gold),
        reliability: PeaceDimension::ALL.iter().map(|d| inter_rater_reliability(&gold, *d)).collect(),
        correlations,
        failures,
    };
    if json {
        return print_json(&out);
    }
    println!("human ratings ({} videos scored by the model)\n", transcripts.len());
    print!("{}", format_table_one(&out.table_one));
    println!();
    for r in &out.reliability {
        let rs: Vec<String> = r
            .pairs
            .iter()
            .map(|p| match p.r.and_then(|c| c.value()) {
                Some(v) => format!("{}-{} {v:.3}", p.rater_a, p.rater_b),
                None => format!("{}-{} n/a", p.rater_a, p.rater_b),
            })
            .collect();
        let pooled = r.pooled_within_one.map_or("-".into(), |v| format!("{:.3}", v));
        println!("{:<22} within-one {pooled}  r: {}", r.dimension.key(), rs.join(", "));
    }
    println!();
    print!("{}", format_table_two(&out.correlations));
    for f in &out.failures {
        println!("failed: {} ({}) {}", f.video_id, mode_key(f.mode), f.error);
    }
    Ok(())
}
