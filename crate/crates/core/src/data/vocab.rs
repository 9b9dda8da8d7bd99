use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::model::Vocabulary;

/// Whitespace tokenization.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Keep the `limit` most frequent types (ties broken by first occurrence) and
/// map the stream onto their ids, dropping everything else.
pub fn build_vocab<S: AsRef<str>>(tokens: &[S], limit: usize) -> Result<(Vocabulary, Vec<usize>)> {
    if tokens.is_empty() {
        return invalid("token stream is empty");
    }
    if limit == 0 {
        return invalid("vocabulary limit must be positive");
    }
    // (count, first position)
    let mut freq: HashMap<&str, (u64, usize)> = HashMap::new();
    for (i, t) in tokens.iter().enumerate() {
        freq.entry(t.as_ref()).or_insert((0, i)).0 += 1;
    }
    let mut types: Vec<(&str, u64, usize)> = freq.into_iter().map(|(t, (c, f))| (t, c, f)).collect();
    types.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    types.truncate(limit);
    let vocab = Vocabulary::new(types.iter().map(|t| t.0.to_string()).collect())?;
    let ids = tokens.iter().filter_map(|t| vocab.id(t.as_ref())).collect();
    Ok((vocab, ids))
}
