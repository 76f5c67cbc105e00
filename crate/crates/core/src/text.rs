//! Small text helpers shared by the query, feature and document code.

/// Collapses every run of whitespace to one space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn alnum_tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercase, punctuation replaced by spaces, whitespace collapsed.
pub fn normalize_phrase(s: &str) -> String {
    alnum_tokens(s).join(" ")
}

/// Lowercased alphanumerics only; insensitive to spacing, hyphenation and
/// punctuation.
pub fn compact_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}
