//! Anchor handling around translation: enclose the answer in bullet
//! markers, normalize punctuation that translators mangle, turn the markers
//! into quotes, and after translation seek the quotes to recover the span.

use thiserror::Error;

use crate::corpus::AnswerSpan;
use crate::text::char_len;

/// One side of the pre-translation anchor.
pub const ANCHOR_MARK: &str = "\u{2022}\u{2022}";
pub const BULLET: char = '\u{2022}';
/// The anchor as seen by the translator.
pub const QUOTE: char = '"';

const ARABIC_SEMICOLON: char = '\u{061B}';
const EN_DASH: char = '\u{2013}';
const EM_DASH: char = '\u{2014}';
const LEFT_DOUBLE_QUOTE: char = '\u{201C}';
const RIGHT_DOUBLE_QUOTE: char = '\u{201D}';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnchorError {
    #[error("answer span [{start}, {end}) does not match a context of {len} code points")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("text already contains a double quote at {position}; clean it before finalizing anchors")]
    QuotePresent { position: usize },
    #[error("expected 2 anchor quotes, found {found}")]
    AnchorCount { found: usize },
    #[error("no anchor marker at {position}")]
    MissingMarker { position: usize },
}

/// Number of code points `c` becomes under [`clean_text`].
fn cleaned_width(c: char) -> usize {
    match c {
        QUOTE | LEFT_DOUBLE_QUOTE | RIGHT_DOUBLE_QUOTE => 0,
        EN_DASH | EM_DASH => 2,
        _ => 1,
    }
}

fn push_cleaned(out: &mut String, c: char) {
    match c {
        ';' => out.push(ARABIC_SEMICOLON),
        EN_DASH | EM_DASH => out.push_str("--"),
        QUOTE | LEFT_DOUBLE_QUOTE | RIGHT_DOUBLE_QUOTE => {}
        other => out.push(other),
    }
}

/// Semicolons become Arabic semicolons, en and em dashes become `--`, and
/// straight and curly double quotes are dropped. Nothing else changes.
pub fn clean_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        push_cleaned(&mut out, c);
    }
    out
}

/// Length in code points of `clean_text(text)`, without building it.
pub fn cleaned_len(text: &str) -> usize {
    text.chars().map(cleaned_width).sum()
}

/// Inserts [`ANCHOR_MARK`] before and after the span.
pub fn enclose_answer(context: &str, span: &AnswerSpan) -> Result<String, AnchorError> {
    if !span.matches(context) {
        return Err(AnchorError::InvalidSpan {
            start: span.answer_start,
            end: span.end(),
            len: char_len(context),
        });
    }
    let mut out = String::with_capacity(context.len() + 2 * ANCHOR_MARK.len());
    let (start, end) = (span.answer_start, span.end());
    for (i, c) in context.chars().enumerate() {
        if i == start {
            out.push_str(ANCHOR_MARK);
        }
        if i == end {
            out.push_str(ANCHOR_MARK);
        }
        out.push(c);
    }
    if end == char_len(context) {
        if start == end {
            out.push_str(ANCHOR_MARK);
        }
        out.push_str(ANCHOR_MARK);
    }
    Ok(out)
}

/// Replaces every `••`, scanning left to right, with a single `"`.
pub fn finalize_markers(text: &str) -> Result<String, AnchorError> {
    if let Some(position) = text.chars().position(|c| c == QUOTE) {
        return Err(AnchorError::QuotePresent { position });
    }
    Ok(text.replace(ANCHOR_MARK, "\""))
}

/// Replaces exactly the two markers starting at code points `open` and
/// `close` with quotes, leaving any other bullets alone. Used when the
/// marker positions are known, which keeps bullets that happen to sit next
/// to the answer in the source from being mistaken for the anchor.
pub fn finalize_anchor(text: &str, open: usize, close: usize) -> Result<String, AnchorError> {
    let chars: Vec<char> = text.chars().collect();
    for p in [open, close] {
        if chars.get(p) != Some(&BULLET) || chars.get(p + 1) != Some(&BULLET) {
            return Err(AnchorError::MissingMarker { position: p });
        }
    }
    if let Some(position) = chars.iter().position(|&c| c == QUOTE) {
        return Err(AnchorError::QuotePresent { position });
    }
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if i == open || i == close {
            out.push(QUOTE);
            i += 2;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    Ok(out)
}

/// The result of locating the anchor quotes in a translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sought {
    pub answer_text: String,
    /// Offset into `context`, in code points.
    pub answer_start: usize,
    /// The translation with both quotes removed.
    pub context: String,
}

impl Sought {
    pub fn span(&self) -> AnswerSpan {
        AnswerSpan::new(self.answer_text.clone(), self.answer_start)
    }
}

pub fn count_quotes(text: &str) -> usize {
    text.chars().filter(|&c| c == QUOTE).count()
}

pub fn seek_answer(translated: &str) -> Result<Sought, AnchorError> {
    let positions: Vec<usize> = translated
        .chars()
        .enumerate()
        .filter_map(|(i, c)| (c == QUOTE).then_some(i))
        .collect();
    let [p1, p2] = positions[..] else {
        return Err(AnchorError::AnchorCount { found: positions.len() });
    };
    let mut context = String::with_capacity(translated.len());
    let mut answer_text = String::new();
    for (i, c) in translated.chars().enumerate() {
        if i == p1 || i == p2 {
            continue;
        }
        if p1 < i && i < p2 {
            answer_text.push(c);
        }
        context.push(c);
    }
    Ok(Sought {
        answer_text,
        answer_start: p1,
        context,
    })
}

/// Decimal digits in the scripts this pipeline handles: ASCII,
/// Arabic-Indic, Extended Arabic-Indic (Urdu) and Devanagari.
pub fn is_decimal_digit(c: char) -> bool {
    matches!(c, '0'..='9' | '\u{0660}'..='\u{0669}' | '\u{06F0}'..='\u{06F9}' | '\u{0966}'..='\u{096F}')
}

/// Restores dashes: `--` between two digits becomes an en dash, any other
/// `--` an em dash. Pairs are consumed left to right without overlap.
pub fn postprocess_dashes(text: &str) -> String {
    postprocess_dashes_with_span(text, 0, 0).0
}

/// [`postprocess_dashes`] that also maps a code-point range `[start, end)`
/// of the input onto the output. A boundary falling between the two hyphens
/// of a pair is widened to include the resulting dash.
pub fn postprocess_dashes_with_span(text: &str, start: usize, end: usize) -> (String, usize, usize) {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = String::with_capacity(text.len());
    let (mut new_start, mut new_end) = (None, None);
    let mut written = 0;
    let mut i = 0;
    while i < n {
        if i == start {
            new_start = Some(written);
        }
        if i == end {
            new_end = Some(written);
        }
        if chars[i] == '-' && i + 1 < n && chars[i + 1] == '-' {
            let between_digits = i > 0 && is_decimal_digit(chars[i - 1]) && i + 2 < n && is_decimal_digit(chars[i + 2]);
            out.push(if between_digits { EN_DASH } else { EM_DASH });
            if i + 1 == start {
                new_start = Some(written);
            }
            if i + 1 == end {
                new_end = Some(written + 1);
            }
            written += 1;
            i += 2;
        } else {
            out.push(chars[i]);
            written += 1;
            i += 1;
        }
    }
    (out, new_start.unwrap_or(written), new_end.unwrap_or(written))
}
