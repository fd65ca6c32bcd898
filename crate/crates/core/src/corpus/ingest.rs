use super::CorpusError;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

/// Ingestion aborts when more than this share of non-blank lines is rejected.
pub const MAX_REJECT_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    /// ISO-3166 alpha-2, upper case.
    pub country: String,
    pub source: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineReject {
    /// 1-based.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub articles: Vec<Article>,
    pub rejects: Vec<LineReject>,
}

#[derive(Deserialize)]
struct RawArticle {
    id: Option<String>,
    country: Option<String>,
    source: Option<String>,
    text: Option<String>,
    #[serde(default)]
    published_at: Option<String>,
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    // Accept a bare date or a full RFC 3339 timestamp.
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| chrono::DateTime::parse_from_rfc3339(s).map(|d| d.date_naive()))
        .map_err(|_| format!("published_at {s:?} is not an ISO-8601 date"))
}

fn parse_line(line: &str) -> Result<Article, String> {
    let raw: RawArticle = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let id = raw.id.ok_or("missing \"id\"")?;
    if id.is_empty() {
        return Err("empty \"id\"".into());
    }
    let country = raw.country.ok_or("missing \"country\"")?;
    let country = country.trim().to_ascii_uppercase();
    if country.len() != 2 || !country.bytes().all(|b| b.is_ascii_alphabetic()) {
        return Err(format!("country {country:?} is not an alpha-2 code"));
    }
    let text = raw.text.ok_or("missing \"text\"")?;
    if text.trim().is_empty() {
        return Err("empty \"text\"".into());
    }
    let published_at = raw.published_at.as_deref().map(parse_date).transpose()?;
    Ok(Article {
        id,
        country,
        source: raw.source.unwrap_or_default(),
        text,
        published_at,
    })
}

/// Read a JSONL corpus. Blank lines are skipped; malformed lines and
/// duplicate ids are reported with their line numbers.
pub fn ingest_reader<R: BufRead>(reader: R) -> Result<IngestReport, CorpusError> {
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut total = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let result = parse_line(&line).and_then(|a| {
            if seen.insert(a.id.clone()) {
                Ok(a)
            } else {
                Err(format!("duplicate id {:?}", a.id))
            }
        });
        match result {
            Ok(a) => report.articles.push(a),
            Err(reason) => {
                tracing::warn!(line = i + 1, %reason, "rejected corpus line");
                report.rejects.push(LineReject { line: i + 1, reason });
            }
        }
    }
    if total > 0 && report.rejects.len() as f64 > MAX_REJECT_FRACTION * total as f64 {
        let first = &report.rejects[0];
        return Err(CorpusError::TooManyMalformed {
            rejected: report.rejects.len(),
            total,
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    Ok(report)
}

pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<IngestReport, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, country: &str) -> String {
        format!(r#"{{"id":"{id}","country":"{country}","source":"s","text":"some text"}}"#)
    }

    #[test]
    fn keeps_file_order() {
        let body = [line("a", "no"), line("b", "NG"), line("c", "IE")].join("\n");
        let r = ingest_reader(body.as_bytes()).unwrap();
        let ids: Vec<_> = r.articles.iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(r.articles[0].country, "NO");
        assert!(r.rejects.is_empty());
    }

    #[test]
    fn missing_country_reported_by_line() {
        let mut lines: Vec<String> = (0..10).map(|i| line(&i.to_string(), "NO")).collect();
        lines.insert(3, r#"{"id":"x","source":"s","text":"t"}"#.into());
        let r = ingest_reader(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(r.articles.len(), 10);
        assert_eq!(r.rejects.len(), 1);
        assert_eq!(r.rejects[0].line, 4);
        assert!(r.rejects[0].reason.contains("country"));
    }

    #[test]
    fn empty_input() {
        let r = ingest_reader("".as_bytes()).unwrap();
        assert!(r.articles.is_empty());
        let r = ingest_reader("\n  \n".as_bytes()).unwrap();
        assert!(r.articles.is_empty());
    }

    #[test]
    fn too_many_malformed_aborts() {
        let mut lines: Vec<String> = (0..8).map(|i| line(&i.to_string(), "NO")).collect();
        lines.push("not json".into());
        lines.push("{}".into());
        // 2 of 10 rejected
        let err = ingest_reader(lines.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::TooManyMalformed { rejected: 2, total: 10, first_line: 9, .. }));
    }

    #[test]
    fn exactly_ten_percent_is_tolerated() {
        let mut lines: Vec<String> = (0..9).map(|i| line(&i.to_string(), "NO")).collect();
        lines.push(line("0", "NO"));
        let r = ingest_reader(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(r.rejects[0].reason, "duplicate id \"0\"");
    }

    #[test]
    fn dates() {
        let l = r#"{"id":"a","country":"US","source":"s","text":"t","published_at":"2021-03-04T10:00:00Z"}"#;
        let r = ingest_reader(l.as_bytes()).unwrap();
        assert_eq!(r.articles[0].published_at, NaiveDate::from_ymd_opt(2021, 3, 4));
    }
}
