use super::{PeaceDimension, ScoreError, ScoringMode};
use crate::emotion::TranscriptEmotionSummary;
use std::collections::BTreeMap;
use std::path::Path;

pub const EMOTION_BLOCK_START: &str = "[EMOTION PROFILE]";
pub const EMOTION_BLOCK_END: &str = "[/EMOTION PROFILE]";
pub const TRUNCATION_NOTICE: &str = "[Transcript truncated to fit the length budget.]";
/// Transcript character budget when none is configured.
pub const DEFAULT_PROMPT_CHARS: usize = 12_000;

const BUILTIN: &str = include_str!("../../prompts/simplistic-v1.txt");

/// Versioned scoring prompt, parsed from a sectioned text file:
///
/// ```text
/// version: simplistic-v1
/// ## preamble
/// ## rubric compassion_contempt   (one per dimension)
/// ## format
/// ## emotion                      (uses {mean_valence} {volatility} {neutrality_fraction})
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub version: String,
    pub preamble: String,
    pub rubrics: BTreeMap<PeaceDimension, String>,
    pub format: String,
    pub emotion: String,
}

impl PromptTemplate {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in template is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScoreError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ScoreError::Template(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ScoreError> {
        let bad = |m: String| ScoreError::Template(m);
        let mut version = None;
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            if let Some(name) = line.strip_prefix("## ") {
                sections.push((name.trim().to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(line);
                body.push('\n');
            } else if let Some(v) = line.strip_prefix("version:") {
                version = Some(v.trim().to_string());
            } else if !line.trim().is_empty() {
                return Err(bad(format!("unexpected line before first section: {line:?}")));
            }
        }
        let version = version.filter(|v| !v.is_empty()).ok_or_else(|| bad("missing version".into()))?;
        let mut preamble = None;
        let mut format = None;
        let mut emotion = None;
        let mut rubrics = BTreeMap::new();
        for (name, body) in sections {
            let body = body.trim().to_string();
            match name.split_once(' ') {
                Some(("rubric", key)) => {
                    let d = PeaceDimension::from_key(key.trim())
                        .ok_or_else(|| bad(format!("rubric for unknown dimension {key:?}")))?;
                    rubrics.insert(d, body);
                }
                _ => match name.as_str() {
                    "preamble" => preamble = Some(body),
                    "format" => format = Some(body),
                    "emotion" => emotion = Some(body),
                    other => return Err(bad(format!("unknown section {other:?}"))),
                },
            }
        }
        if let Some(d) = PeaceDimension::ALL.iter().find(|d| !rubrics.contains_key(d)) {
            return Err(bad(format!("missing rubric for {d}")));
        }
        let t = PromptTemplate {
            version,
            preamble: preamble.ok_or_else(|| bad("missing preamble".into()))?,
            rubrics,
            format: format.ok_or_else(|| bad("missing format".into()))?,
            emotion: emotion.ok_or_else(|| bad("missing emotion section".into()))?,
        };
        let probe = t.render_head();
        if !(probe.contains('1') && probe.contains('5')) {
            return Err(bad("template never states the 1 to 5 scale bounds".into()));
        }
        Ok(t)
    }

    fn render_head(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.preamble);
        out.push_str("\n\nScale: 1 (lowest) to 5 (highest) on every dimension.\n");
        for d in PeaceDimension::ALL {
            out.push_str(&format!("\n{}:\n{}\n", d.key(), self.rubrics[&d]));
        }
        out.push('\n');
        out.push_str(&self.format);
        out.push('\n');
        out
    }
}

/// Render the full prompt. `TextOnly` ignores `summary`; `DualInput` requires
/// one. A transcript longer than `max_chars` characters is cut and the
/// prompt ends with [`TRUNCATION_NOTICE`].
pub fn build_prompt(
    transcript: &str,
    template: &PromptTemplate,
    mode: ScoringMode,
    summary: Option<&TranscriptEmotionSummary>,
    max_chars: usize,
) -> Result<String, ScoreError> {
    let mut out = template.render_head();
    if mode == ScoringMode::DualInput {
        let s = summary.ok_or(ScoreError::MissingSummary)?;
        let block = template
            .emotion
            .replace("{mean_valence}", &format!("{:.3}", s.mean_valence))
            .replace("{volatility}", &format!("{:.3}", s.volatility))
            .replace("{neutrality_fraction}", &format!("{:.3}", s.neutrality_fraction));
        out.push_str(&format!("\n{EMOTION_BLOCK_START}\n{block}\n{EMOTION_BLOCK_END}\n"));
    }
    let (body, truncated) = match transcript.char_indices().nth(max_chars) {
        Some((cut, _)) => (&transcript[..cut], true),
        None => (transcript, false),
    };
    out.push_str("\nTranscript:\n<<<\n");
    out.push_str(body);
    out.push_str("\n>>>\n");
    if truncated {
        out.push_str(TRUNCATION_NOTICE);
    }
    Ok(out)
}
