//! Pulling a program out of a chat response.

const FENCE: &str = "```";

/// Contents of the first triple-backtick block with its language tag
/// removed, or the whole trimmed response when there is no fence.
pub fn extract_code_block(response: &str) -> String {
    extract_code(response).0
}

/// Like [`extract_code_block`], also reporting whether a fence was found.
pub fn extract_code(response: &str) -> (String, bool) {
    let Some(open) = response.find(FENCE) else {
        return (response.trim().to_string(), false);
    };
    let after = &response[open + FENCE.len()..];
    let close = after.find(FENCE);
    let newline = after.find('\n');
    let body = match (newline, close) {
        // inline block such as ```x = 1```
        (Some(nl), Some(c)) if c < nl => &after[..c],
        (None, Some(c)) => &after[..c],
        (Some(nl), Some(c)) => &after[nl + 1..c],
        (Some(nl), None) => &after[nl + 1..],
        (None, None) => "",
    };
    (body.trim().to_string(), true)
}
