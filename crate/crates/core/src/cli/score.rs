use super::print_json;
use super::providers::LlmArgs;
use anyhow::{Context, Result};
use peacelens::emotion::{chunk_transcript, fetch_profiles, summarize_profiles, TranscriptEmotionSummary, ValenceWeights};
use peacelens::emotion::EmotionSource;
use peacelens::scorer::{score_transcript, ScoreJob, ScorerConfig, ScoringMode};
use std::io::Read;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct ScoreArgs {
    /// Transcript text file, `-` for stdin.
    #[arg(long)]
    transcript: PathBuf,
    /// Transcript id; the file stem by default. Mock fixtures are keyed by it.
    #[arg(long)]
    id: Option<String>,
    #[arg(long, default_value = "dual_input")]
    mode: ScoringMode,
    #[command(flatten)]
    llm: LlmArgs,
}

pub async fn emotion_summary(text: &str, source: &dyn EmotionSource) -> Result<TranscriptEmotionSummary> {
    let chunks = chunk_transcript(text)?;
    let profiles = fetch_profiles(&chunks, source).await?;
    Ok(summarize_profiles(&profiles, &ValenceWeights::default())?)
}

pub async fn score(a: ScoreArgs) -> Result<()> {
    let text = if a.transcript.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(&a.transcript).with_context(|| format!("reading {}", a.transcript.display()))?
    };
    let id = a.id.clone().unwrap_or_else(|| {
        a.transcript
            .file_stem()
            .map_or("stdin".into(), |s| s.to_string_lossy().into_owned())
    });
    let summary = match a.mode {
        ScoringMode::DualInput => Some(emotion_summary(&text, a.llm.emotion()?.as_ref()).await?),
        ScoringMode::TextOnly => None,
    };
    let job = ScoreJob {
        transcript_id: id,
        transcript: text,
        mode: a.mode,
        summary,
    };
    let llm = a.llm.llm()?;
    let scores = score_transcript(&job, llm.as_ref(), &a.llm.template()?, &ScorerConfig::default()).await?;
    print_json(&scores)
}
