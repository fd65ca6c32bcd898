/// N-gram orders used when none are configured: unigrams and bigrams.
pub const DEFAULT_NGRAM_ORDERS: [usize; 2] = [1, 2];

/// Lower-case, split on Unicode whitespace and trim non-alphanumeric
/// characters from both ends of each token. Tokens that are all punctuation
/// disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// All contiguous `n`-grams joined by single spaces. `n == 0` yields nothing.
pub fn ngram_preprocess(text: &str, n: usize) -> Vec<String> {
    ngrams(&tokenize(text), n)
}

fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// N-grams of every order in `orders`, concatenated in order.
pub fn preprocess_multi(text: &str, orders: &[usize]) -> Vec<String> {
    let tokens = tokenize(text);
    orders.iter().flat_map(|&n| ngrams(&tokens, n)).collect()
}
