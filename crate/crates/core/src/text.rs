//! Small text helpers shared by aspect extraction, preference descriptions and
//! the oracle providers.

/// Prefix turning an aspect into a negative preference description.
pub const NEGATION_MARKER: &str = "not ";

/// Lowercases and trims non-alphanumeric characters from both ends.
pub fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Normalized, non-empty whitespace tokens in order of appearance.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
}

/// Splits a preference description into `(negated, aspect)`.
pub fn strip_negation(text: &str) -> (bool, &str) {
    let t = text.trim_start();
    if t.len() >= NEGATION_MARKER.len()
        && t[..NEGATION_MARKER.len()].eq_ignore_ascii_case(NEGATION_MARKER)
    {
        (true, t[NEGATION_MARKER.len()..].trim())
    } else {
        (false, t.trim())
    }
}

/// Lowercase alphanumeric-only form used for fuzzy name matching.
pub fn loose_key(text: &str) -> String {
    text.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}
