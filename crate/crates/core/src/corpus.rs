//! SQuAD2.0-format corpora: parsing, span validation, statistics and
//! serialization.
//!
//! All offsets are counted in Unicode scalar values (Rust `char`s), which
//! is the indexing convention of the published SQuAD files. Byte and UTF-16
//! offsets are never used.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::text::{char_len, char_slice};

/// Contexts at or above this many code points are counted as long.
pub const LONG_PARAGRAPH_CHARS: usize = 1000;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed JSON at byte {byte} (line {line}, column {column}): {message}")]
    Parse {
        byte: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("corpus has {} span mismatch(es), first at qa {}", .0.mismatches.len(), .0.mismatches[0].qa_id)]
    Validation(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub text: String,
    /// Offset of the first answer character in the context, in code points.
    pub answer_start: usize,
}

impl AnswerSpan {
    pub fn new(text: impl Into<String>, answer_start: usize) -> Self {
        Self {
            text: text.into(),
            answer_start,
        }
    }

    /// Exclusive end offset in code points.
    pub fn end(&self) -> usize {
        self.answer_start + char_len(&self.text)
    }

    /// True when `context[answer_start..end]` equals the answer text.
    pub fn matches(&self, context: &str) -> bool {
        char_slice(context, self.answer_start, self.end()).is_some_and(|s| s == self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaRec {
    pub id: String,
    pub question: String,
    pub is_impossible: bool,
    pub answers: Vec<AnswerSpan>,
    /// Unrecognised fields, kept for round-tripping.
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphRec {
    pub context: String,
    pub qas: Vec<QaRec>,
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Article {
    pub title: String,
    pub paragraphs: Vec<ParagraphRec>,
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub version: String,
    pub articles: Vec<Article>,
    pub extra: Map<String, Value>,
}

impl Default for Corpus {
    fn default() -> Self {
        Self {
            version: "v2.0".to_string(),
            articles: Vec::new(),
            extra: Map::new(),
        }
    }
}

impl QaRec {
    pub fn answerable(id: impl Into<String>, question: impl Into<String>, answer: AnswerSpan) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            is_impossible: false,
            answers: vec![answer],
            extra: Map::new(),
        }
    }

    pub fn unanswerable(id: impl Into<String>, question: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            is_impossible: true,
            answers: Vec::new(),
            extra: Map::new(),
        }
    }
}

impl ParagraphRec {
    pub fn new(context: impl Into<String>, qas: Vec<QaRec>) -> Self {
        Self {
            context: context.into(),
            qas,
            extra: Map::new(),
        }
    }
}

impl Article {
    pub fn new(title: impl Into<String>, paragraphs: Vec<ParagraphRec>) -> Self {
        Self {
            title: title.into(),
            paragraphs,
            extra: Map::new(),
        }
    }
}

impl Corpus {
    pub fn new(articles: Vec<Article>) -> Self {
        Self {
            articles,
            ..Self::default()
        }
    }

    pub fn paragraphs(&self) -> impl Iterator<Item = &ParagraphRec> {
        self.articles.iter().flat_map(|a| a.paragraphs.iter())
    }

    /// Every QA paired with the context it belongs to.
    pub fn qas(&self) -> impl Iterator<Item = (&ParagraphRec, &QaRec)> {
        self.paragraphs().flat_map(|p| p.qas.iter().map(move |q| (p, q)))
    }

    pub fn question_count(&self) -> usize {
        self.paragraphs().map(|p| p.qas.len()).sum()
    }
}

// ---------------------------------------------------------------------------
// Parsing

/// Parses a SQuAD2.0 JSON document.
///
/// `plausible_answers` on unanswerable questions is dropped; other unknown
/// fields are kept in the `extra` maps.
pub fn parse_corpus(bytes: &[u8]) -> Result<Corpus, CorpusError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        CorpusError::Parse {
            byte: byte_offset(bytes, line, column),
            line,
            column,
            message: e.to_string(),
        }
    })?;
    let corpus = corpus_from_value(root)?;

    let mut seen = HashSet::new();
    for (_, qa) in corpus.qas() {
        if !seen.insert(qa.id.as_str()) {
            return Err(schema("data", format!("duplicate qa id {:?}", qa.id)));
        }
    }
    Ok(corpus)
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = bytes.split(|&b| b == b'\n').take(line - 1).map(|l| l.len() + 1).sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn into_object(value: Value, path: &str) -> Result<Map<String, Value>, CorpusError> {
    match value {
        Value::Object(map) => Ok(map),
        other => Err(schema(path, format!("expected object, found {}", kind(&other)))),
    }
}

fn kind(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn take_string(map: &mut Map<String, Value>, key: &str, path: &str) -> Result<String, CorpusError> {
    match map.remove(key) {
        Some(Value::String(s)) => Ok(s),
        Some(other) => Err(schema(
            format!("{path}.{key}"),
            format!("expected string, found {}", kind(&other)),
        )),
        None => Err(schema(format!("{path}.{key}"), "missing required field")),
    }
}

fn take_array(map: &mut Map<String, Value>, key: &str, path: &str, required: bool) -> Result<Vec<Value>, CorpusError> {
    match map.remove(key) {
        Some(Value::Array(items)) => Ok(items),
        Some(other) => Err(schema(
            format!("{path}.{key}"),
            format!("expected array, found {}", kind(&other)),
        )),
        None if required => Err(schema(format!("{path}.{key}"), "missing required field")),
        None => Ok(Vec::new()),
    }
}

fn corpus_from_value(root: Value) -> Result<Corpus, CorpusError> {
    let mut map = into_object(root, "$")?;
    let version = match map.remove("version") {
        Some(Value::String(s)) => s,
        Some(other) => return Err(schema("$.version", format!("expected string, found {}", kind(&other)))),
        None => String::new(),
    };
    let articles = take_array(&mut map, "data", "$", true)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| article_from_value(v, &format!("$.data[{i}]")))
        .collect::<Result<_, _>>()?;
    Ok(Corpus {
        version,
        articles,
        extra: map,
    })
}

fn article_from_value(value: Value, path: &str) -> Result<Article, CorpusError> {
    let mut map = into_object(value, path)?;
    let title = match map.remove("title") {
        Some(Value::String(s)) => s,
        Some(other) => {
            return Err(schema(
                format!("{path}.title"),
                format!("expected string, found {}", kind(&other)),
            ))
        }
        None => String::new(),
    };
    let paragraphs = take_array(&mut map, "paragraphs", path, true)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| paragraph_from_value(v, &format!("{path}.paragraphs[{i}]")))
        .collect::<Result<_, _>>()?;
    Ok(Article {
        title,
        paragraphs,
        extra: map,
    })
}

fn paragraph_from_value(value: Value, path: &str) -> Result<ParagraphRec, CorpusError> {
    let mut map = into_object(value, path)?;
    let context = take_string(&mut map, "context", path)?;
    if context.is_empty() {
        return Err(schema(format!("{path}.context"), "context is empty"));
    }
    let qas = take_array(&mut map, "qas", path, true)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| qa_from_value(v, &format!("{path}.qas[{i}]")))
        .collect::<Result<_, _>>()?;
    Ok(ParagraphRec {
        context,
        qas,
        extra: map,
    })
}

fn qa_from_value(value: Value, path: &str) -> Result<QaRec, CorpusError> {
    let mut map = into_object(value, path)?;
    let id = take_string(&mut map, "id", path)?;
    let question = take_string(&mut map, "question", path)?;
    let is_impossible = match map.remove("is_impossible") {
        Some(Value::Bool(b)) => b,
        Some(other) => {
            return Err(schema(
                format!("{path}.is_impossible"),
                format!("expected boolean, found {}", kind(&other)),
            ))
        }
        None => false,
    };
    map.remove("plausible_answers");
    let answers: Vec<AnswerSpan> = take_array(&mut map, "answers", path, false)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| answer_from_value(v, &format!("{path}.answers[{i}]")))
        .collect::<Result<_, _>>()?;
    if !is_impossible && answers.is_empty() {
        return Err(schema(format!("{path}.answers"), "answerable question has no answers"));
    }
    Ok(QaRec {
        id,
        question,
        is_impossible,
        // Impossible questions carry no gold spans.
        answers: if is_impossible { Vec::new() } else { answers },
        extra: map,
    })
}

fn answer_from_value(value: Value, path: &str) -> Result<AnswerSpan, CorpusError> {
    let mut map = into_object(value, path)?;
    let text = take_string(&mut map, "text", path)?;
    let answer_start = match map.remove("answer_start") {
        Some(Value::Number(n)) => n
            .as_u64()
            .ok_or_else(|| schema(format!("{path}.answer_start"), "expected a non-negative integer"))?
            as usize,
        Some(other) => {
            return Err(schema(
                format!("{path}.answer_start"),
                format!("expected integer, found {}", kind(&other)),
            ))
        }
        None => return Err(schema(format!("{path}.answer_start"), "missing required field")),
    };
    Ok(AnswerSpan { text, answer_start })
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanMismatch {
    pub qa_id: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Number of answer spans checked.
    pub checked: usize,
    pub mismatches: Vec<SpanMismatch>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Checks every gold span of every answerable question against its context.
pub fn check_spans(corpus: &Corpus) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (paragraph, qa) in corpus.qas() {
        if qa.is_impossible {
            continue;
        }
        let context_len = char_len(&paragraph.context);
        for span in &qa.answers {
            report.checked += 1;
            if span.matches(&paragraph.context) {
                continue;
            }
            let start = span.answer_start.min(context_len);
            let end = span.end().min(context_len);
            report.mismatches.push(SpanMismatch {
                qa_id: qa.id.clone(),
                expected: span.text.clone(),
                found: char_slice(&paragraph.context, start, end)
                    .unwrap_or_default()
                    .to_string(),
            });
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Serialization

fn qa_to_value(qa: &QaRec) -> Value {
    let mut map = Map::new();
    map.insert("id".into(), Value::String(qa.id.clone()));
    map.insert("question".into(), Value::String(qa.question.clone()));
    map.insert("is_impossible".into(), Value::Bool(qa.is_impossible));
    map.insert(
        "answers".into(),
        Value::Array(
            qa.answers
                .iter()
                .map(|a| {
                    let mut m = Map::new();
                    m.insert("text".into(), Value::String(a.text.clone()));
                    m.insert("answer_start".into(), Value::from(a.answer_start));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    extend_missing(&mut map, &qa.extra);
    Value::Object(map)
}

fn extend_missing(map: &mut Map<String, Value>, extra: &Map<String, Value>) {
    for (k, v) in extra {
        if !map.contains_key(k) {
            map.insert(k.clone(), v.clone());
        }
    }
}

pub fn corpus_to_value(corpus: &Corpus) -> Value {
    let data = corpus
        .articles
        .iter()
        .map(|article| {
            let paragraphs = article
                .paragraphs
                .iter()
                .map(|p| {
                    let mut m = Map::new();
                    m.insert("context".into(), Value::String(p.context.clone()));
                    m.insert("qas".into(), Value::Array(p.qas.iter().map(qa_to_value).collect()));
                    extend_missing(&mut m, &p.extra);
                    Value::Object(m)
                })
                .collect();
            let mut m = Map::new();
            m.insert("title".into(), Value::String(article.title.clone()));
            m.insert("paragraphs".into(), Value::Array(paragraphs));
            extend_missing(&mut m, &article.extra);
            Value::Object(m)
        })
        .collect();
    let mut root = Map::new();
    root.insert("version".into(), Value::String(corpus.version.clone()));
    root.insert("data".into(), Value::Array(data));
    extend_missing(&mut root, &corpus.extra);
    Value::Object(root)
}

/// Serializes a corpus to UTF-8 JSON. Refuses corpora whose spans do not
/// match their contexts.
pub fn write_corpus(corpus: &Corpus) -> Result<Vec<u8>, CorpusError> {
    let report = check_spans(corpus);
    if !report.is_clean() {
        return Err(CorpusError::Validation(report));
    }
    Ok(serde_json::to_vec(&corpus_to_value(corpus)).expect("JSON values always serialize"))
}

// ---------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub total_questions: usize,
    pub answerable: usize,
    pub unanswerable: usize,
    pub paragraphs: usize,
    /// Contexts with at least [`LONG_PARAGRAPH_CHARS`] code points.
    pub long_paragraphs: usize,
}

impl SplitStats {
    pub fn from_counts(answerable: usize, unanswerable: usize) -> Self {
        Self {
            total_questions: answerable + unanswerable,
            answerable,
            unanswerable,
            ..Self::default()
        }
    }
}

impl std::ops::Add for SplitStats {
    type Output = SplitStats;

    fn add(self, rhs: SplitStats) -> SplitStats {
        SplitStats {
            total_questions: self.total_questions + rhs.total_questions,
            answerable: self.answerable + rhs.answerable,
            unanswerable: self.unanswerable + rhs.unanswerable,
            paragraphs: self.paragraphs + rhs.paragraphs,
            long_paragraphs: self.long_paragraphs + rhs.long_paragraphs,
        }
    }
}

pub fn summarize(corpus: &Corpus) -> SplitStats {
    let mut stats = SplitStats::default();
    for paragraph in corpus.paragraphs() {
        stats.paragraphs += 1;
        if char_len(&paragraph.context) >= LONG_PARAGRAPH_CHARS {
            stats.long_paragraphs += 1;
        }
        for qa in &paragraph.qas {
            stats.total_questions += 1;
            if qa.is_impossible {
                stats.unanswerable += 1;
            } else {
                stats.answerable += 1;
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIGURE_1: &str = "The further decline of Byzantine state-of-affairs paved the road to a third attack in 1185, when a large Norman army invaded Dyrrachium, owing to the betrayal of high Byzantine officials. Some time later, Dyrrachium\u{2014}one of the most important naval bases of the Adriatic\u{2014}fell again to Byzantine hands.";

    fn single(context: &str, qa: QaRec) -> Corpus {
        Corpus::new(vec![Article::new("t", vec![ParagraphRec::new(context, vec![qa])])])
    }

    #[test]
    fn parses_minimal_document() {
        let doc = br#"{"version":"v2.0","data":[{"title":"t","paragraphs":[{"context":"ab","qas":[{"id":"q1","question":"?","is_impossible":false,"answers":[{"text":"a","answer_start":0}]}]}]}]}"#;
        let corpus = parse_corpus(doc).unwrap();
        assert_eq!(corpus.question_count(), 1);
        assert_eq!(
            corpus.articles[0].paragraphs[0].qas[0].answers[0],
            AnswerSpan::new("a", 0)
        );
    }

    #[test]
    fn missing_answer_start_names_path() {
        let doc = br#"{"version":"v2.0","data":[{"title":"t","paragraphs":[{"context":"ab","qas":[{"id":"q1","question":"?","answers":[{"text":"a"}]}]}]}]}"#;
        match parse_corpus(doc) {
            Err(CorpusError::Schema { path, .. }) => {
                assert_eq!(path, "$.data[0].paragraphs[0].qas[0].answers[0].answer_start")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_context_and_id_are_schema_errors() {
        let doc = br#"{"data":[{"title":"t","paragraphs":[{"qas":[]}]}]}"#;
        assert!(matches!(parse_corpus(doc), Err(CorpusError::Schema { path, .. }) if path.ends_with("context")));
        let doc = br#"{"data":[{"title":"t","paragraphs":[{"context":"x","qas":[{"question":"?"}]}]}]}"#;
        assert!(matches!(parse_corpus(doc), Err(CorpusError::Schema { path, .. }) if path.ends_with("qas[0].id")));
    }

    #[test]
    fn malformed_json_reports_byte_position() {
        let doc = b"{\"version\": \"v2.0\",\n \"data\": [,]}";
        match parse_corpus(doc) {
            Err(CorpusError::Parse { byte, line, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(doc[byte], b',');
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = br#"{"data":[{"title":"t","paragraphs":[{"context":"x","qas":[{"id":"a","question":"?","is_impossible":true,"answers":[]},{"id":"a","question":"?","is_impossible":true,"answers":[]}]}]}]}"#;
        assert!(matches!(parse_corpus(doc), Err(CorpusError::Schema { .. })));
    }

    #[test]
    fn plausible_answers_dropped_other_fields_kept() {
        let doc = br#"{"version":"v2.0","data":[{"title":"t","paragraphs":[{"context":"ab","qas":[{"plausible_answers":[{"text":"a","answer_start":0}],"id":"q","question":"?","is_impossible":true,"answers":[],"note":1}]}]}]}"#;
        let corpus = parse_corpus(doc).unwrap();
        let qa = &corpus.articles[0].paragraphs[0].qas[0];
        assert!(!qa.extra.contains_key("plausible_answers"));
        assert_eq!(qa.extra["note"], Value::from(1));
        let back = parse_corpus(&write_corpus(&corpus).unwrap()).unwrap();
        assert_eq!(back, corpus);
    }

    #[test]
    fn check_spans_examples() {
        let ok = single("1185 war", QaRec::answerable("q", "?", AnswerSpan::new("1185", 0)));
        assert!(check_spans(&ok).is_clean());

        let shifted = single("1185 war", QaRec::answerable("q", "?", AnswerSpan::new("1185", 1)));
        let report = check_spans(&shifted);
        assert_eq!(report.mismatches.len(), 1);
        assert_eq!(report.mismatches[0].found, "185 ");

        let fig = single(
            FIGURE_1,
            QaRec::answerable(
                "q",
                "When did the Normans attack Dyrrachium?",
                AnswerSpan::new("1185", 86),
            ),
        );
        assert!(check_spans(&fig).is_clean());
    }

    #[test]
    fn offsets_are_code_points() {
        // U+1D11E is 4 bytes in UTF-8 and 2 units in UTF-16.
        let context = "\u{1D11E}\u{1D11E} clef";
        let good = single(context, QaRec::answerable("q", "?", AnswerSpan::new("clef", 3)));
        assert!(check_spans(&good).is_clean());
        for wrong in [5usize, 9] {
            let bad = single(context, QaRec::answerable("q", "?", AnswerSpan::new("clef", wrong)));
            assert_eq!(check_spans(&bad).mismatches.len(), 1);
        }
    }

    #[test]
    fn write_refuses_corrupt_spans() {
        let bad = single("1185 war", QaRec::answerable("q", "?", AnswerSpan::new("1185", 3)));
        assert!(matches!(write_corpus(&bad), Err(CorpusError::Validation(_))));
    }

    #[test]
    fn urdu_round_trip_is_lossless() {
        let context = "نارمنوں نے 1185 میں حملہ کیا؛ یہ ایک اہم واقعہ تھا۔";
        let start = context
            .chars()
            .collect::<Vec<_>>()
            .iter()
            .position(|&c| c == '1')
            .unwrap();
        let corpus = single(
            context,
            QaRec::answerable("q", "نارمنوں نے کب حملہ کیا؟", AnswerSpan::new("1185", start)),
        );
        let bytes = write_corpus(&corpus).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("نارمنوں"), "non-ASCII text must not be escaped");
        assert_eq!(parse_corpus(&bytes).unwrap(), corpus);
    }

    #[test]
    fn summarize_counts() {
        assert_eq!(summarize(&Corpus::default()), SplitStats::default());
        let corpus = Corpus::new(vec![Article::new(
            "t",
            vec![
                ParagraphRec::new(
                    "ab",
                    vec![
                        QaRec::answerable("1", "?", AnswerSpan::new("a", 0)),
                        QaRec::unanswerable("2", "?"),
                    ],
                ),
                ParagraphRec::new(
                    "x".repeat(1000),
                    vec![QaRec::answerable("3", "?", AnswerSpan::new("x", 0))],
                ),
            ],
        )]);
        let stats = summarize(&corpus);
        assert_eq!(
            stats,
            SplitStats {
                total_questions: 3,
                answerable: 2,
                unanswerable: 1,
                paragraphs: 2,
                long_paragraphs: 1
            }
        );
    }
}
