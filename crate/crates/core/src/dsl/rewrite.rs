use serde::{Deserialize, Serialize};

use super::parser::parse;
use super::span::SourceSpan;
use super::RewriteError;

/// Replace the number literal at `span` with `new_value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiteralRewrite {
    pub span: SourceSpan,
    #[serde(rename = "newValue")]
    pub new_value: f64,
}

/// Shortest decimal text that parses back to exactly `value`.
pub fn render_number(value: f64) -> String {
    // Display for f64 is the shortest round-trip form and never uses exponents.
    let text = value.to_string();
    if text == "-0" {
        "0".to_string()
    } else {
        text
    }
}

/// Splices every rewrite into `source`, right to left.
///
/// Each span must address a number literal of `parse(source)` and the spans
/// must be pairwise disjoint. A rewrite to the literal's current value
/// leaves its text untouched. Text outside the rewritten spans is preserved,
/// except that a single space is inserted where the new literal would
/// otherwise fuse with a neighbouring token (`2-` followed by `-1` would
/// start a comment).
pub fn apply_rewrites(source: &str, rewrites: &[LiteralRewrite]) -> Result<String, RewriteError> {
    if rewrites.is_empty() {
        return Ok(source.to_string());
    }
    let program = parse(source)?;
    let literals = program.number_literals();
    for rw in rewrites {
        if !literals.iter().any(|(span, _)| *span == rw.span) {
            return Err(RewriteError::NotALiteral { span: rw.span });
        }
        if !rw.new_value.is_finite() {
            return Err(RewriteError::NonFinite { span: rw.span });
        }
    }
    let mut ordered: Vec<&LiteralRewrite> = rewrites.iter().collect();
    ordered.sort_by_key(|rw| std::cmp::Reverse(rw.span.start));
    for pair in ordered.windows(2) {
        if pair[0].span.overlaps(&pair[1].span) || pair[0].span == pair[1].span {
            return Err(RewriteError::Overlap { first: pair[1].span, second: pair[0].span });
        }
    }

    let mut out = source.to_string();
    let bytes = source.as_bytes();
    for rw in ordered {
        let current = literals.iter().find(|(span, _)| *span == rw.span).map(|(_, v)| *v);
        if current.is_some_and(|v| v.to_bits() == rw.new_value.to_bits()) {
            continue;
        }
        let mut text = render_number(rw.new_value);
        let before = rw.span.start.checked_sub(1).map(|i| bytes[i]);
        let after = bytes.get(rw.span.end).copied();
        if text.starts_with('-') && before == Some(b'-') {
            text.insert(0, ' ');
        }
        if after.is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.') {
            text.push(' ');
        }
        out.replace_range(rw.span.range(), &text);
    }

    let reparsed = parse(&out)?;
    if reparsed.number_literals().len() != literals.len() {
        return Err(RewriteError::ShapeChanged);
    }
    Ok(out)
}
