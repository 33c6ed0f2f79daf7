use concept_lens::{Error, Result};

/// Parses integers separated by whitespace and/or commas. Square brackets
/// are ignored, so a JSON array of indices is accepted too.
pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    text.split(|c: char| c.is_whitespace() || matches!(c, ',' | '[' | ']'))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Format(format!("{t:?} is not a non-negative integer index"))))
        .collect()
}

pub fn format_index_list(indices: &[usize]) -> String {
    indices.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}
