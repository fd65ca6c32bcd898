use super::{Article, CorpusError};
use crate::label::PeaceLabel;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Country to peace label, as supplied by the user. Keys starting with `_`
/// are metadata (`_provenance` names the index the labels came from).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountryPeaceTable {
    pub labels: BTreeMap<String, PeaceLabel>,
    pub provenance: Option<String>,
}

impl CountryPeaceTable {
    pub fn new(labels: impl IntoIterator<Item = (String, PeaceLabel)>) -> Self {
        CountryPeaceTable {
            labels: labels
                .into_iter()
                .map(|(c, l)| (c.to_ascii_uppercase(), l))
                .collect(),
            provenance: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CorpusError::InvalidTable(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(CorpusError::InvalidTable("expected a JSON object".into()));
        };
        let mut table = CountryPeaceTable::default();
        for (key, v) in map {
            if key == "_provenance" {
                table.provenance = v.as_str().map(str::to_owned);
                continue;
            }
            if key.starts_with('_') {
                continue;
            }
            let label = v
                .as_str()
                .and_then(|s| s.parse::<PeaceLabel>().ok())
                .ok_or_else(|| {
                    CorpusError::InvalidTable(format!("{key}: expected \"high\" or \"low\", got {v}"))
                })?;
            table.labels.insert(key.to_ascii_uppercase(), label);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn get(&self, country: &str) -> Option<PeaceLabel> {
        self.labels.get(&country.to_ascii_uppercase()).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledArticle {
    pub article: Article,
    pub label: PeaceLabel,
}

/// Attach each article's country label. Every country must be in the table.
pub fn assign_labels(
    articles: Vec<Article>,
    table: &CountryPeaceTable,
) -> Result<Vec<LabeledArticle>, CorpusError> {
    let missing: BTreeSet<&str> = articles
        .iter()
        .filter(|a| table.get(&a.country).is_none())
        .map(|a| a.country.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::UnknownCountries(
            missing.into_iter().map(str::to_owned).collect(),
        ));
    }
    Ok(articles
        .into_iter()
        .map(|article| {
            let label = table.get(&article.country).expect("checked above");
            LabeledArticle { article, label }
        })
        .collect())
}
