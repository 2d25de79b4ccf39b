//! Rule-based sentence splitting and greedy packing of sentences into
//! segments short enough to be translated without truncation.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Segments sent for translation stay strictly below this many code points.
pub const DEFAULT_LIMIT: usize = 1000;

const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

const TERMINATORS: [char; 4] = ['.', '?', '!', '\u{06D4}'];
const CLOSERS: [char; 8] = ['"', '\'', ')', ']', '\u{201D}', '\u{2019}', '\u{00BB}', '}'];
const OPENERS: [char; 7] = ['"', '\'', '(', '[', '\u{201C}', '\u{2018}', '\u{00AB}'];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("protected span [{start}, {end}) lies outside a context of {len} code points")]
    ProtectedOutOfBounds { start: usize, end: usize, len: usize },
    #[error("nothing to reassemble")]
    EmptyReassembly,
}

/// Abbreviations (with their trailing period) after which a period does not
/// end a sentence. Matching is case-sensitive.
#[derive(Debug, Clone, Default)]
pub struct AbbreviationLexicon {
    entries: HashSet<String>,
}

impl AbbreviationLexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            entries: entries.into_iter().map(Into::into).collect(),
        }
    }

    /// Parses the plain-text format: one abbreviation per line. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn extend(&mut self, other: AbbreviationLexicon) {
        self.entries.extend(other.entries);
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The bundled English lexicon.
pub fn default_lexicon() -> AbbreviationLexicon {
    AbbreviationLexicon::parse(DEFAULT_ABBREVIATIONS)
}

/// A sentence as a code-point range `[start, end)`. Whitespace between
/// sentences belongs to no span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

pub fn split_sentences(text: &str, abbreviations: &AbbreviationLexicon) -> Vec<SentenceSpan> {
    let chars: Vec<char> = text.chars().collect();
    split_chars(&chars, abbreviations)
}

fn split_chars(chars: &[char], abbreviations: &AbbreviationLexicon) -> Vec<SentenceSpan> {
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(i);
        }
        if !TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut j = i;
        while j < n && TERMINATORS.contains(&chars[j]) {
            j += 1;
        }
        let single_period = j - run_start == 1 && c == '.';
        while j < n && CLOSERS.contains(&chars[j]) {
            j += 1;
        }
        let at_break = j == n || chars[j].is_whitespace();
        if at_break && !(single_period && is_abbreviation(chars, run_start, abbreviations)) {
            spans.push(SentenceSpan {
                start: start.take().expect("sentence open"),
                end: j,
            });
        }
        i = j;
    }
    if let Some(s) = start {
        let mut end = n;
        while end > s && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        spans.push(SentenceSpan { start: s, end });
    }
    spans
}

fn is_abbreviation(chars: &[char], period: usize, abbreviations: &AbbreviationLexicon) -> bool {
    let mut from = period;
    while from > 0 && !chars[from - 1].is_whitespace() {
        from -= 1;
    }
    while from < period && OPENERS.contains(&chars[from]) {
        from += 1;
    }
    let token: String = chars[from..=period].iter().collect();
    abbreviations.contains(&token)
}

/// A contiguous slice of a context, produced by [`Segmenter::segment`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// The source text of `origin`, including any whitespace that separates
    /// it from the next segment.
    pub text: String,
    /// Code-point range `[start, end)` in the source context.
    pub origin: (usize, usize),
    pub contains_anchor: bool,
    /// Set when the segment reaches the limit because it could not be cut:
    /// a single long sentence, or sentences fused around a protected span.
    pub oversize: bool,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.origin.1 - self.origin.0
    }

    pub fn is_empty(&self) -> bool {
        self.origin.0 == self.origin.1
    }
}

#[derive(Debug, Clone)]
pub struct Segmenter {
    pub limit: usize,
    pub abbreviations: AbbreviationLexicon,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self {
            limit: DEFAULT_LIMIT,
            abbreviations: default_lexicon(),
        }
    }
}

impl Segmenter {
    pub fn new(limit: usize, abbreviations: AbbreviationLexicon) -> Self {
        Self { limit, abbreviations }
    }

    pub fn split_sentences(&self, text: &str) -> Vec<SentenceSpan> {
        split_sentences(text, &self.abbreviations)
    }

    /// Packs consecutive sentences greedily into segments shorter than the
    /// limit. Cuts only happen at sentence starts, and never strictly inside
    /// `protected`, so the protected range always ends up in one segment.
    /// The segment origins partition `context`.
    pub fn segment(&self, context: &str, protected: Option<(usize, usize)>) -> Result<Vec<Segment>, SegmentError> {
        let chars: Vec<char> = context.chars().collect();
        let len = chars.len();
        if let Some((start, end)) = protected {
            if start > end || end > len {
                return Err(SegmentError::ProtectedOutOfBounds { start, end, len });
            }
        }
        if len == 0 {
            return Ok(Vec::new());
        }

        let sentences = split_chars(&chars, &self.abbreviations);
        let cuts: Vec<usize> = sentences
            .iter()
            .skip(1)
            .map(|s| s.start)
            .filter(|&c| protected.is_none_or(|(ps, pe)| !(ps < c && c < pe)))
            .collect();

        let mut bounds = Vec::new();
        let mut cur = 0;
        let mut k = 0;
        while cur < len {
            if len - cur < self.limit {
                bounds.push((cur, len));
                break;
            }
            // Farthest admissible cut that keeps the segment under the limit;
            // failing that, the nearest cut at all.
            let mut chosen = None;
            while k < cuts.len() && cuts[k] - cur < self.limit {
                chosen = Some(cuts[k]);
                k += 1;
            }
            let next = match chosen.or_else(|| cuts.get(k).copied()) {
                Some(c) => c,
                None => len,
            };
            if chosen.is_none() && next < len {
                k += 1;
            }
            bounds.push((cur, next));
            cur = next;
        }

        Ok(bounds
            .into_iter()
            .map(|(start, end)| Segment {
                text: chars[start..end].iter().collect(),
                origin: (start, end),
                contains_anchor: protected.is_some_and(|(ps, pe)| start <= ps && pe <= end),
                oversize: end - start >= self.limit,
            })
            .collect())
    }
}

/// Segments `context` with the default lexicon.
pub fn segment_paragraph(
    context: &str,
    limit: usize,
    protected: Option<(usize, usize)>,
) -> Result<Vec<Segment>, SegmentError> {
    Segmenter::new(limit, default_lexicon()).segment(context, protected)
}

/// Joins translated segment texts with exactly one space.
pub fn reassemble<S: AsRef<str>>(parts: &[S]) -> Result<String, SegmentError> {
    if parts.is_empty() {
        return Err(SegmentError::EmptyReassembly);
    }
    Ok(parts.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(text: &str, spans: &[SentenceSpan]) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        spans.iter().map(|s| chars[s.start..s.end].iter().collect()).collect()
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(split_sentences("", &default_lexicon()).is_empty());
        assert!(split_sentences("   ", &default_lexicon()).is_empty());
    }

    #[test]
    fn abbreviation_does_not_end_sentence() {
        let lex = AbbreviationLexicon::new(["Dr."]);
        let text = "Dr. Smith arrived. He left.";
        let spans = split_sentences(text, &lex);
        assert_eq!(texts(text, &spans), ["Dr. Smith arrived.", "He left."]);

        let bare = split_sentences(text, &AbbreviationLexicon::default());
        assert_eq!(bare.len(), 3);
    }

    #[test]
    fn unterminated_text_is_one_sentence() {
        let spans = split_sentences("no terminator here", &default_lexicon());
        assert_eq!(spans, [SentenceSpan { start: 0, end: 18 }]);
    }

    #[test]
    fn handles_urdu_full_stop_closers_and_decimals() {
        let text = "یہ پہلا جملہ ہے۔ یہ دوسرا ہے۔";
        assert_eq!(split_sentences(text, &default_lexicon()).len(), 2);

        let text = "He said \"stop.\" Then 3.14 was it! Really?";
        assert_eq!(
            texts(text, &split_sentences(text, &default_lexicon())),
            ["He said \"stop.\"", "Then 3.14 was it!", "Really?"]
        );
    }

    #[test]
    fn lexicon_file_format() {
        let lex = AbbreviationLexicon::parse("# comment\nDr.\n\n  Prof. \n");
        assert_eq!(lex.len(), 2);
        assert!(lex.contains("Prof."));
        assert!(default_lexicon().contains("e.g."));
    }

    #[test]
    fn short_context_is_single_segment() {
        let context = "word ".repeat(80);
        let segs = segment_paragraph(&context, DEFAULT_LIMIT, None).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].text, context);
        assert!(!segs[0].oversize);
    }

    #[test]
    fn long_context_is_packed_below_limit() {
        // 1,427 code points: twenty 60-character sentences and a long tail.
        let sentence = "The Normans attacked the city and the harbour in that year. ";
        let mut context = sentence.repeat(20);
        context.push_str(&"x".repeat(1427 - context.chars().count() - 1));
        context.push('.');
        assert_eq!(context.chars().count(), 1427);
        let segs = segment_paragraph(&context, DEFAULT_LIMIT, None).unwrap();
        assert!(segs.len() >= 2);
        assert!(segs.iter().all(|s| s.len() < DEFAULT_LIMIT));
        assert_eq!(segs.iter().map(|s| s.text.as_str()).collect::<String>(), context);
    }

    #[test]
    fn protected_span_moves_boundary() {
        // Two sentences; the greedy cut at the start of the second falls
        // inside the protected span.
        let first = format!("{}.", "a".repeat(14));
        let context = format!("{first} bbbbbbbbbbbbbb.");
        let plain = segment_paragraph(&context, 20, None).unwrap();
        assert_eq!(plain.len(), 2);
        assert_eq!(plain[1].origin.0, 16);

        let fused = segment_paragraph(&context, 20, Some((10, 20))).unwrap();
        assert_eq!(fused.len(), 1);
        assert!(fused[0].contains_anchor);
        assert!(fused[0].oversize);
    }

    #[test]
    fn protected_span_out_of_bounds() {
        assert_eq!(
            segment_paragraph("abc", 10, Some((2, 4))),
            Err(SegmentError::ProtectedOutOfBounds {
                start: 2,
                end: 4,
                len: 3
            })
        );
    }

    #[test]
    fn single_long_sentence_is_oversize() {
        let context = format!("{} end. tail.", "w".repeat(1200));
        let segs = segment_paragraph(&context, DEFAULT_LIMIT, None).unwrap();
        assert_eq!(segs.len(), 2);
        assert!(segs[0].oversize);
        assert!(!segs[1].oversize);
    }

    #[test]
    fn reassemble_joins_with_single_space() {
        assert_eq!(reassemble(&["a"]).unwrap(), "a");
        assert_eq!(reassemble(&["x.", "y."]).unwrap(), "x. y.");
        assert_eq!(reassemble::<&str>(&[]), Err(SegmentError::EmptyReassembly));

        let parts = ["پہلا جملہ۔", "دوسرا جملہ۔", "تیسرا۔"];
        let joined = reassemble(&parts).unwrap();
        let expected: usize = parts.iter().map(|p| p.chars().count()).sum::<usize>() + parts.len() - 1;
        assert_eq!(joined.chars().count(), expected);
    }
}
