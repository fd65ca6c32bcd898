use super::PeaceDimension;
use serde_json::{Map, Value};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("no JSON object found in response")]
    NoJsonFound,
    #[error("missing dimension {0}")]
    MissingDimension(String),
    #[error("{0} = {1} is outside 1..=5")]
    OutOfRange(String, f64),
    #[error("{0} is not an integer")]
    NonInteger(String),
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::NoJsonFound => "no_json_found",
            ParseError::MissingDimension(_) => "missing_dimension",
            ParseError::OutOfRange(..) => "out_of_range",
            ParseError::NonInteger(_) => "non_integer",
        }
    }
}

pub type ParsedScores = BTreeMap<PeaceDimension, (u8, String)>;

/// Byte range of the balanced `{...}` starting at `start`, honouring JSON
/// string literals.
fn balanced_end(s: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in s[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// First balanced `{...}` in `raw` that parses as a JSON object.
pub fn extract_json_object(raw: &str) -> Option<Map<String, Value>> {
    raw.char_indices()
        .filter(|(_, c)| *c == '{')
        .find_map(|(i, _)| {
            let end = balanced_end(raw, i)?;
            match serde_json::from_str::<Value>(&raw[i..end]) {
                Ok(Value::Object(m)) => Some(m),
                _ => None,
            }
        })
}

fn rationale(obj: &Map<String, Value>, d: PeaceDimension) -> String {
    let nested = obj
        .get("rationales")
        .and_then(|r| r.get(d.key()))
        .and_then(Value::as_str);
    let flat = obj.get(&format!("{}_rationale", d.key())).and_then(Value::as_str);
    nested.or(flat).unwrap_or_default().to_string()
}

/// Parse a model response into five integer scores with rationales.
///
/// Scores may sit at the top level or under `"scores"`. Rationales are read
/// from `"rationales": {dim: text}` or `"<dim>_rationale"`. Dimensions are
/// checked in canonical order and the first problem is reported.
pub fn parse_response(raw: &str) -> Result<ParsedScores, ParseError> {
    let obj = extract_json_object(raw).ok_or(ParseError::NoJsonFound)?;
    let scores = match obj.get("scores") {
        Some(Value::Object(inner)) if !PeaceDimension::ALL.iter().any(|d| obj.contains_key(d.key())) => inner,
        _ => &obj,
    };
    let mut out = BTreeMap::new();
    for d in PeaceDimension::ALL {
        let name = d.key().to_string();
        let v = scores.get(d.key()).ok_or_else(|| ParseError::MissingDimension(name.clone()))?;
        let x = v.as_f64().ok_or_else(|| ParseError::NonInteger(name.clone()))?;
        if x.fract() != 0.0 {
            return Err(ParseError::NonInteger(name));
        }
        if !(1.0..=5.0).contains(&x) {
            return Err(ParseError::OutOfRange(name, x));
        }
        out.insert(d, (x as u8, rationale(&obj, d)));
    }
    Ok(out)
}
