use super::EmotionError;

/// Lower-cased words that end in a period without ending a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "u.s", "u.k", "a.m",
    "p.m", "inc", "ltd", "co", "no", "gen", "gov", "sen", "rep", "approx", "fig",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | '\u{2026}')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Split into sentences at terminal punctuation followed by whitespace.
/// A period ending a known abbreviation does not split. Chunks are trimmed
/// and never empty; joining them with single spaces reproduces the text up
/// to whitespace.
pub fn chunk_transcript(text: &str) -> Result<Vec<String>, EmotionError> {
    if text.trim().is_empty() {
        return Err(EmotionError::EmptyTranscript);
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut chunks = Vec::new();
    let mut start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        // Consume the punctuation run and any closing quotes or brackets.
        let mut j = i;
        while j + 1 < chars.len() && (is_terminal(chars[j + 1].1) || is_closer(chars[j + 1].1)) {
            j += 1;
        }
        let end = chars.get(j + 1).map_or(text.len(), |(b, _)| *b);
        let at_boundary = chars.get(j + 1).is_none_or(|(_, n)| n.is_whitespace());
        if at_boundary && !(c == '.' && j == i && ends_with_abbreviation(&text[start..chars[i].0])) {
            push(&mut chunks, &text[start..end]);
            start = end;
        }
        i = j + 1;
    }
    push(&mut chunks, &text[start..]);
    Ok(chunks)
}

fn ends_with_abbreviation(before_period: &str) -> bool {
    let word = before_period
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

fn push(chunks: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        chunks.push(s.to_string());
    }
}
