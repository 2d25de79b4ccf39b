//! Corpus translation with anchored answer spans.
//!
//! Each answerable question gets its own anchored copy of the context:
//! enclose the first gold span in bullet markers, clean the text, segment it
//! below the length limit, turn the markers into quotes, translate, and seek
//! the quotes in the reassembled translation. Items whose quotes do not
//! survive are discarded and logged. Unanswerable questions of a paragraph
//! share one unanchored translation of its context.

use std::collections::BTreeMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchor::{
    self, clean_text, cleaned_len, count_quotes, enclose_answer, finalize_anchor, postprocess_dashes,
    postprocess_dashes_with_span, seek_answer, AnchorError, QUOTE,
};
use crate::corpus::{
    check_spans, summarize, AnswerSpan, Article, Corpus, ParagraphRec, QaRec, SplitStats, ValidationReport,
};
use crate::segment::{reassemble, Segment, Segmenter};
use crate::text::{char_len, char_slice};
use crate::translate::{TranslateError, Translator};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input corpus has {} span mismatch(es)", .0.mismatches.len())]
    InvalidSpans(ValidationReport),
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    fn call(&self, translator: &dyn Translator, batch: &[String]) -> Result<Vec<String>, TranslateError> {
        let mut attempt = 0;
        loop {
            let result = translator.translate_batch(batch).and_then(|out| {
                if out.len() == batch.len() {
                    Ok(out)
                } else {
                    Err(TranslateError::Misaligned {
                        expected: batch.len(),
                        got: out.len(),
                    })
                }
            });
            match result {
                Err(e) if e.is_transient() && attempt + 1 < self.attempts.max(1) => {
                    std::thread::sleep(self.base_delay * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub segmenter: Segmenter,
    /// Items translated concurrently.
    pub parallelism: usize,
    pub retry: RetryPolicy,
    /// Label for the report, e.g. "train" or "dev".
    pub split: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segmenter: Segmenter::default(),
            parallelism: 8,
            retry: RetryPolicy::default(),
            split: "dev".to_string(),
        }
    }
}

/// One question ready for translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineItem {
    pub qa_id: String,
    /// Cleaned question.
    pub question: String,
    /// Cleaned first gold answer, offset into the cleaned context.
    pub answer: Option<AnswerSpan>,
    /// Segments of the cleaned context; the anchored one still holds the
    /// bullet markers.
    pub segments: Vec<Segment>,
    pub is_impossible: bool,
    /// Code-point offsets of the opening and closing markers in the cleaned,
    /// enclosed context.
    pub anchors: Option<(usize, usize)>,
}

impl PipelineItem {
    pub fn prepare(context: &str, qa: &QaRec, segmenter: &Segmenter) -> Result<Self, AnchorError> {
        let question = clean_text(&qa.question);
        let gold = if qa.is_impossible { None } else { qa.answers.first() };
        let Some(gold) = gold else {
            let segments = segment_unprotected(&clean_text(context), segmenter);
            return Ok(Self {
                qa_id: qa.id.clone(),
                question,
                answer: None,
                segments,
                is_impossible: true,
                anchors: None,
            });
        };

        let enclosed = clean_text(&enclose_answer(context, gold)?);
        let prefix = char_slice(context, 0, gold.answer_start).expect("span validated by enclose");
        let open = cleaned_len(prefix);
        let answer_text = clean_text(&gold.text);
        let close = open + anchor::ANCHOR_MARK.chars().count() + char_len(&answer_text);
        let segments = segmenter
            .segment(&enclosed, Some((open, close + 2)))
            .expect("anchor range lies inside the enclosed context");
        Ok(Self {
            qa_id: qa.id.clone(),
            question,
            answer: Some(AnswerSpan::new(answer_text, open)),
            segments,
            is_impossible: false,
            anchors: Some((open, close)),
        })
    }

    pub fn anchor_segment(&self) -> Option<usize> {
        self.segments.iter().position(|s| s.contains_anchor)
    }

    /// The context texts handed to the translator, anchor markers already
    /// finalized into quotes.
    pub fn context_units(&self) -> Result<Vec<String>, AnchorError> {
        let mut units = translation_units(&self.segments);
        if let (Some((open, close)), Some(k)) = (self.anchors, self.anchor_segment()) {
            let base = self.segments[k].origin.0;
            units[k] = finalize_anchor(&units[k], open - base, close - base)?;
        }
        Ok(units)
    }
}

fn segment_unprotected(context: &str, segmenter: &Segmenter) -> Vec<Segment> {
    segmenter.segment(context, None).expect("no protected span")
}

/// Segment texts as sent for translation: whitespace separating a segment
/// from the next is dropped, since reassembly puts back a single space.
fn translation_units(segments: &[Segment]) -> Vec<String> {
    let last = segments.len().saturating_sub(1);
    segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i < last {
                s.text.trim_end().to_string()
            } else {
                s.text.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslatedQa {
    pub qa_id: String,
    pub question: String,
    pub context: String,
    /// Recovered span, offset into `context`.
    pub answer: Option<AnswerSpan>,
    /// The answer translated on its own, outside the context.
    pub answer_standalone: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    AnchorCount,
    BackendError,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::AnchorCount => "anchor_count",
            DiscardReason::BackendError => "backend_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub qa_id: String,
    pub reason: DiscardReason,
    pub quote_count_found: usize,
}

impl DiscardRecord {
    pub fn anchor(qa_id: &str, found: usize) -> Self {
        Self {
            qa_id: qa_id.to_string(),
            reason: DiscardReason::AnchorCount,
            quote_count_found: found,
        }
    }

    fn backend(qa_id: &str, error: &TranslateError) -> Self {
        log::warn!("discarding {qa_id}: {error}");
        Self {
            qa_id: qa_id.to_string(),
            reason: DiscardReason::BackendError,
            quote_count_found: 0,
        }
    }
}

/// Serializes discard records as JSON Lines.
pub fn discards_to_jsonl(records: &[DiscardRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("plain record"));
        out.push('\n');
    }
    out
}

/// Translates one item. Answerable items are discarded when the anchored
/// segment or the reassembled context does not come back with exactly two
/// quotes.
pub fn project_qa(
    item: &PipelineItem,
    translator: &dyn Translator,
    retry: RetryPolicy,
) -> Result<TranslatedQa, DiscardRecord> {
    let Some(answer) = &item.answer else {
        let (questions, context) =
            project_group(std::slice::from_ref(&item.question), &item.segments, translator, retry)
                .map_err(|e| DiscardRecord::backend(&item.qa_id, &e))?;
        return Ok(TranslatedQa {
            qa_id: item.qa_id.clone(),
            question: questions.into_iter().next().expect("one question"),
            context,
            answer: None,
            answer_standalone: None,
        });
    };

    let units = item.context_units().expect("prepared items carry valid markers");
    let mut batch = Vec::with_capacity(units.len() + 2);
    batch.push(item.question.clone());
    batch.push(answer.text.clone());
    batch.extend(units);
    let mut out = retry
        .call(translator, &batch)
        .map_err(|e| DiscardRecord::backend(&item.qa_id, &e))?;
    let segments_t = out.split_off(2);
    let answer_direct = out.pop().expect("answer");
    let question_t = out.pop().expect("question");

    if let Some(k) = item.anchor_segment() {
        let found = count_quotes(&segments_t[k]);
        if found != 2 {
            return Err(DiscardRecord::anchor(&item.qa_id, found));
        }
    }
    let joined = reassemble(&segments_t).expect("at least one segment");
    let sought = seek_answer(&joined).map_err(|e| match e {
        AnchorError::AnchorCount { found } => DiscardRecord::anchor(&item.qa_id, found),
        other => unreachable!("seek only fails on the quote count: {other}"),
    })?;
    let end = sought.answer_start + char_len(&sought.answer_text);
    let (context, start, end) = postprocess_dashes_with_span(&sought.context, sought.answer_start, end);
    let answer_text = char_slice(&context, start, end)
        .expect("mapped span in range")
        .to_string();
    Ok(TranslatedQa {
        qa_id: item.qa_id.clone(),
        question: postprocess_dashes(&question_t),
        context,
        answer: Some(AnswerSpan::new(answer_text, start)),
        answer_standalone: Some(postprocess_dashes(&answer_direct)),
    })
}

/// Translates several unanswerable questions along with one shared,
/// unanchored context.
fn project_group(
    questions: &[String],
    segments: &[Segment],
    translator: &dyn Translator,
    retry: RetryPolicy,
) -> Result<(Vec<String>, String), TranslateError> {
    let mut batch = questions.to_vec();
    batch.extend(translation_units(segments));
    let mut out = retry.call(translator, &batch)?;
    let segments_t = out.split_off(questions.len());
    let context = if segments_t.is_empty() {
        String::new()
    } else {
        let joined = reassemble(&segments_t).expect("non-empty");
        // Nothing is anchored here, so stray quotes carry no meaning.
        postprocess_dashes(&joined.replace(QUOTE, ""))
    };
    Ok((out.iter().map(|q| postprocess_dashes(q)).collect(), context))
}

// ---------------------------------------------------------------------------
// Reporting

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub split: String,
    pub attempted: usize,
    pub produced: usize,
    pub discarded: usize,
    pub discarded_by_reason: BTreeMap<DiscardReason, usize>,
    pub input: SplitStats,
    pub output: SplitStats,
    /// Gold answers beyond the first, which are not projected.
    pub extra_gold_answers_ignored: usize,
    pub segments_translated: usize,
    pub oversize_segments: usize,
}

impl PipelineReport {
    pub fn tally(split: impl Into<String>, input: SplitStats, output: SplitStats, discards: &[DiscardRecord]) -> Self {
        let mut by_reason = BTreeMap::new();
        for d in discards {
            *by_reason.entry(d.reason).or_insert(0) += 1;
        }
        Self {
            split: split.into(),
            attempted: input.total_questions,
            produced: output.total_questions,
            discarded: discards.len(),
            discarded_by_reason: by_reason,
            input,
            output,
            ..Self::default()
        }
    }

    /// `attempted = produced + discarded`.
    pub fn is_conserved(&self) -> bool {
        self.attempted == self.produced + self.discarded
            && self.discarded == self.discarded_by_reason.values().sum::<usize>()
    }

    pub fn discard_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.discarded as f64 / self.attempted as f64
        }
    }

    /// Discard rate as a percentage rounded to `decimals` places.
    pub fn discard_percent(&self, decimals: i32) -> f64 {
        let scale = 10f64.powi(decimals);
        (self.discard_rate() * 100.0 * scale).round() / scale
    }

    /// Combines reports of several splits.
    pub fn merge(&self, other: &PipelineReport) -> PipelineReport {
        let mut by_reason = self.discarded_by_reason.clone();
        for (k, v) in &other.discarded_by_reason {
            *by_reason.entry(*k).or_insert(0) += v;
        }
        PipelineReport {
            split: format!("{}+{}", self.split, other.split),
            attempted: self.attempted + other.attempted,
            produced: self.produced + other.produced,
            discarded: self.discarded + other.discarded,
            discarded_by_reason: by_reason,
            input: self.input + other.input,
            output: self.output + other.output,
            extra_gold_answers_ignored: self.extra_gold_answers_ignored + other.extra_gold_answers_ignored,
            segments_translated: self.segments_translated + other.segments_translated,
            oversize_segments: self.oversize_segments + other.oversize_segments,
        }
    }
}

// ---------------------------------------------------------------------------
// Corpus run

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub corpus: Corpus,
    pub report: PipelineReport,
    pub discards: Vec<DiscardRecord>,
}

enum Work<'a> {
    Answerable {
        qa: &'a QaRec,
        item: PipelineItem,
    },
    Unanswerable {
        qas: Vec<&'a QaRec>,
        segments: Vec<Segment>,
    },
}

enum Outcome {
    Answerable(Result<TranslatedQa, DiscardRecord>),
    Unanswerable(Result<(Vec<String>, String), TranslateError>),
}

/// Translates a whole corpus. Per-item failures become discard records;
/// the output keeps source order regardless of completion order.
pub fn run_pipeline(
    corpus: &Corpus,
    translator: &dyn Translator,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let validation = check_spans(corpus);
    if !validation.is_clean() {
        return Err(PipelineError::InvalidSpans(validation));
    }

    // works[a][p] holds the units of paragraph p of article a, in QA order.
    let mut extra_golds = 0;
    let mut works: Vec<Vec<Vec<Work>>> = Vec::with_capacity(corpus.articles.len());
    for article in &corpus.articles {
        let mut article_works = Vec::with_capacity(article.paragraphs.len());
        for paragraph in &article.paragraphs {
            let mut units: Vec<Work> = Vec::new();
            let mut group: Option<usize> = None;
            for qa in &paragraph.qas {
                if !qa.is_impossible {
                    extra_golds += qa.answers.len().saturating_sub(1);
                    let item = PipelineItem::prepare(&paragraph.context, qa, &config.segmenter)
                        .expect("spans validated above");
                    units.push(Work::Answerable { qa, item });
                    continue;
                }
                match group {
                    Some(g) => {
                        if let Work::Unanswerable { qas, .. } = &mut units[g] {
                            qas.push(qa);
                        }
                    }
                    None => {
                        group = Some(units.len());
                        units.push(Work::Unanswerable {
                            qas: vec![qa],
                            segments: segment_unprotected(&clean_text(&paragraph.context), &config.segmenter),
                        });
                    }
                }
            }
            article_works.push(units);
        }
        works.push(article_works);
    }

    let flat: Vec<&Work> = works.iter().flatten().flatten().collect();
    let mut segments_translated = 0;
    let mut oversize_segments = 0;
    for w in &flat {
        let segments = match w {
            Work::Answerable { item, .. } => &item.segments,
            Work::Unanswerable { segments, .. } => segments,
        };
        segments_translated += segments.len();
        oversize_segments += segments.iter().filter(|s| s.oversize).count();
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| PipelineError::WorkerPool(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        flat.par_iter()
            .map(|w| match w {
                Work::Answerable { item, .. } => Outcome::Answerable(project_qa(item, translator, config.retry)),
                Work::Unanswerable { qas, segments } => {
                    let questions: Vec<String> = qas.iter().map(|q| clean_text(&q.question)).collect();
                    Outcome::Unanswerable(project_group(&questions, segments, translator, config.retry))
                }
            })
            .collect()
    });

    let mut outcomes = outcomes.into_iter();
    let mut discards = Vec::new();
    let mut articles = Vec::with_capacity(corpus.articles.len());
    for (article, article_works) in corpus.articles.iter().zip(&works) {
        let mut paragraphs = Vec::new();
        for (paragraph, units) in article.paragraphs.iter().zip(article_works) {
            for work in units {
                match (work, outcomes.next().expect("one outcome per work")) {
                    (Work::Answerable { qa, .. }, Outcome::Answerable(result)) => match result {
                        Ok(t) => {
                            let mut out_qa = QaRec {
                                question: t.question,
                                answers: t.answer.into_iter().collect(),
                                ..(*qa).clone()
                            };
                            out_qa.is_impossible = false;
                            paragraphs.push(ParagraphRec {
                                context: t.context,
                                qas: vec![out_qa],
                                extra: paragraph.extra.clone(),
                            });
                        }
                        Err(d) => discards.push(d),
                    },
                    (Work::Unanswerable { qas, .. }, Outcome::Unanswerable(result)) => match result {
                        Ok((questions, context)) => {
                            let out_qas = qas
                                .iter()
                                .zip(questions)
                                .map(|(qa, question)| QaRec {
                                    question,
                                    answers: Vec::new(),
                                    ..(*qa).clone()
                                })
                                .collect();
                            paragraphs.push(ParagraphRec {
                                context,
                                qas: out_qas,
                                extra: paragraph.extra.clone(),
                            });
                        }
                        Err(e) => discards.extend(qas.iter().map(|qa| DiscardRecord::backend(&qa.id, &e))),
                    },
                    _ => unreachable!("outcomes follow work order"),
                }
            }
        }
        if !paragraphs.is_empty() {
            articles.push(Article {
                title: article.title.clone(),
                paragraphs,
                extra: article.extra.clone(),
            });
        }
    }

    let out_corpus = Corpus {
        version: corpus.version.clone(),
        articles,
        extra: corpus.extra.clone(),
    };
    let mut report = PipelineReport::tally(
        config.split.clone(),
        summarize(corpus),
        summarize(&out_corpus),
        &discards,
    );
    report.extra_gold_answers_ignored = extra_golds;
    report.segments_translated = segments_translated;
    report.oversize_segments = oversize_segments;
    Ok(PipelineOutput {
        corpus: out_corpus,
        report,
        discards,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translate::{FaultInjectionBackend, FixtureMapBackend, IdentityBackend};
    use std::sync::atomic::{AtomicUsize, Ordering};

    const FIGURE_1: &str = "The further decline of Byzantine state-of-affairs paved the road to a third attack in 1185, when a large Norman army invaded Dyrrachium, owing to the betrayal of high Byzantine officials. Some time later, Dyrrachium\u{2014}one of the most important naval bases of the Adriatic\u{2014}fell again to Byzantine hands.";

    fn figure_corpus() -> Corpus {
        Corpus::new(vec![Article::new(
            "Normans",
            vec![ParagraphRec::new(
                FIGURE_1,
                vec![
                    QaRec::answerable(
                        "a1",
                        "When did the Normans attack Dyrrachium?",
                        AnswerSpan::new("1185", 86),
                    ),
                    QaRec::unanswerable("u1", "Who betrayed the Normans?"),
                ],
            )],
        )])
    }

    fn item_for(context: &str, qa: &QaRec) -> PipelineItem {
        PipelineItem::prepare(context, qa, &Segmenter::default()).unwrap()
    }

    #[test]
    fn identity_round_trip_recovers_cleaned_span() {
        let qa = QaRec::answerable("a1", "When?", AnswerSpan::new("1185", 86));
        let item = item_for(FIGURE_1, &qa);
        let t = project_qa(&item, &IdentityBackend, RetryPolicy::immediate(1)).unwrap();
        // The em dashes pass through "--" and come back as em dashes.
        assert_eq!(t.context, FIGURE_1);
        assert_eq!(t.answer, Some(AnswerSpan::new("1185", 86)));
        assert!(t.answer.unwrap().matches(&t.context));
    }

    #[test]
    fn clean_adjusted_offset() {
        let context = "He said \u{201C}hi\u{201D}; later, 1990\u{2013}1995 was the answer.";
        let start = 21;
        assert_eq!(char_slice(context, start, start + 9), Some("1990–1995"));
        let qa = QaRec::answerable("q", "?", AnswerSpan::new("1990–1995", start));
        let item = item_for(context, &qa);
        let answer = item.answer.clone().unwrap();
        assert_eq!(answer.text, "1990--1995");
        assert_eq!(answer.answer_start, start - 2);
        let t = project_qa(&item, &IdentityBackend, RetryPolicy::immediate(1)).unwrap();
        assert_eq!(t.context, "He said hi؛ later, 1990–1995 was the answer.");
        assert_eq!(t.answer, Some(AnswerSpan::new("1990–1995", start - 2)));
    }

    #[test]
    fn dash_adjacent_span_stays_consistent() {
        // Answer "–1995" alone would restore to an em dash; taken from the
        // context it keeps the en dash.
        let context = "From 1990\u{2013}1995.";
        let qa = QaRec::answerable("q", "?", AnswerSpan::new("\u{2013}1995", 9));
        let t = project_qa(&item_for(context, &qa), &IdentityBackend, RetryPolicy::immediate(1)).unwrap();
        let answer = t.answer.unwrap();
        assert!(answer.matches(&t.context));
        assert_eq!(answer.text, "\u{2013}1995");
    }

    #[test]
    fn bullets_next_to_answer_survive() {
        let context = "x\u{2022}abc\u{2022}y and \u{2022}\u{2022} more";
        let qa = QaRec::answerable("q", "?", AnswerSpan::new("abc", 2));
        let t = project_qa(&item_for(context, &qa), &IdentityBackend, RetryPolicy::immediate(1)).unwrap();
        assert_eq!(t.context, context);
        assert_eq!(t.answer, Some(AnswerSpan::new("abc", 2)));
    }

    #[test]
    fn lost_quote_is_discarded() {
        let qa = QaRec::answerable("a1", "When?", AnswerSpan::new("1185", 86));
        let item = item_for(FIGURE_1, &qa);
        let d = project_qa(&item, &FaultInjectionBackend::new(1.0, 9), RetryPolicy::immediate(1)).unwrap_err();
        assert_eq!(d, DiscardRecord::anchor("a1", 1));
    }

    #[test]
    fn unanswerable_with_fixture_backend() {
        let fixtures = BTreeMap::from([(
            "Who betrayed the Normans?".to_string(),
            "نارمنوں کو کس نے دھوکہ دیا؟".to_string(),
        )]);
        let qa = QaRec::unanswerable("u1", "Who betrayed the Normans?");
        let item = item_for(FIGURE_1, &qa);
        assert!(item.anchors.is_none());
        let t = project_qa(&item, &FixtureMapBackend::new(fixtures), RetryPolicy::immediate(1)).unwrap();
        assert_eq!(t.question, "نارمنوں کو کس نے دھوکہ دیا؟");
        assert!(t.answer.is_none());
    }

    struct Failing {
        calls: AtomicUsize,
    }

    impl Translator for Failing {
        fn translate_batch(&self, _: &[String]) -> Result<Vec<String>, TranslateError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Err(TranslateError::Status {
                status: 503,
                message: "busy".into(),
            })
        }

        fn identity(&self) -> String {
            "failing".into()
        }
    }

    #[test]
    fn backend_failure_after_retries() {
        let backend = Failing {
            calls: AtomicUsize::new(0),
        };
        let qa = QaRec::answerable("a1", "When?", AnswerSpan::new("1185", 86));
        let d = project_qa(&item_for(FIGURE_1, &qa), &backend, RetryPolicy::immediate(3)).unwrap_err();
        assert_eq!(d.reason, DiscardReason::BackendError);
        assert_eq!(backend.calls.load(Ordering::SeqCst), 3);
    }

    /// Adds a quote to every text that has none: breaks unanchored segments.
    struct QuoteAdder;

    impl Translator for QuoteAdder {
        fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
            Ok(texts
                .iter()
                .map(|t| if t.contains('"') { t.clone() } else { format!("{t}\"") })
                .collect())
        }

        fn identity(&self) -> String {
            "quote-adder".into()
        }
    }

    #[test]
    fn stray_quotes_elsewhere_discard_the_item() {
        let context = format!("{} Second sentence here.", "First sentence. ".repeat(70));
        let start = context.find("Second").unwrap();
        let qa = QaRec::answerable("q", "?", AnswerSpan::new("Second", start));
        let item = item_for(&context, &qa);
        assert!(item.segments.len() >= 2);
        let d = project_qa(&item, &QuoteAdder, RetryPolicy::immediate(1)).unwrap_err();
        assert_eq!(d.reason, DiscardReason::AnchorCount);
        assert!(d.quote_count_found > 2);
    }

    #[test]
    fn long_context_round_trip_across_segments() {
        let sentence = "The harbour of the city was rebuilt in stone after the war. ";
        let context = format!(
            "{}Its walls fell in 1185 to the Normans. {}",
            sentence.repeat(20),
            sentence.repeat(10)
        );
        let start = char_len(&context[..context.find("1185").unwrap()]);
        let qa = QaRec::answerable("q", "?", AnswerSpan::new("1185", start));
        let item = item_for(&context, &qa);
        assert!(item.segments.len() >= 2);
        assert!(item.segments.iter().all(|s| s.len() < 1000));
        let t = project_qa(&item, &IdentityBackend, RetryPolicy::immediate(1)).unwrap();
        assert_eq!(t.context, context);
        assert_eq!(t.answer, Some(AnswerSpan::new("1185", start)));
    }

    #[test]
    fn pipeline_groups_and_reports() {
        let out = run_pipeline(&figure_corpus(), &IdentityBackend, &PipelineConfig::default()).unwrap();
        assert_eq!(out.report.attempted, 2);
        assert_eq!(out.report.produced, 2);
        assert!(out.report.is_conserved());
        assert!(check_spans(&out.corpus).is_clean());
        let paragraphs = &out.corpus.articles[0].paragraphs;
        assert_eq!(paragraphs.len(), 2);
        assert_eq!(paragraphs[0].qas[0].id, "a1");
        assert_eq!(paragraphs[1].qas[0].id, "u1");
        assert!(paragraphs[1].qas[0].answers.is_empty());
    }

    /// Drops a quote from the anchored segment of chosen items.
    struct DropFor(Vec<String>);

    impl Translator for DropFor {
        fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
            let doomed = self.0.iter().any(|q| texts[0].contains(q.as_str()));
            Ok(texts
                .iter()
                .map(|t| if doomed { t.replacen('"', "", 1) } else { t.clone() })
                .collect())
        }

        fn identity(&self) -> String {
            "drop-for".into()
        }
    }

    #[test]
    fn ten_items_two_forced_losses() {
        let qas: Vec<QaRec> = (0..10)
            .map(|i| QaRec::answerable(format!("q{i}"), format!("question {i}?"), AnswerSpan::new("1185", 86)))
            .collect();
        let corpus = Corpus::new(vec![Article::new("t", vec![ParagraphRec::new(FIGURE_1, qas)])]);
        let backend = DropFor(vec!["question 3?".into(), "question 7?".into()]);
        let out = run_pipeline(&corpus, &backend, &PipelineConfig::default()).unwrap();
        let r = &out.report;
        assert_eq!((r.attempted, r.produced, r.discarded), (10, 8, 2));
        assert_eq!(out.corpus.question_count(), 8);
        assert_eq!(
            out.discards.iter().map(|d| d.qa_id.as_str()).collect::<Vec<_>>(),
            ["q3", "q7"]
        );
        assert_eq!(r.discarded_by_reason[&DiscardReason::AnchorCount], 2);
        let ids: Vec<_> = out.corpus.qas().map(|(_, q)| q.id.clone()).collect();
        assert_eq!(ids, ["q0", "q1", "q2", "q4", "q5", "q6", "q8", "q9"]);
    }

    #[test]
    fn invalid_input_spans_rejected() {
        let mut corpus = figure_corpus();
        corpus.articles[0].paragraphs[0].qas[0].answers[0].answer_start = 3;
        assert!(matches!(
            run_pipeline(&corpus, &IdentityBackend, &PipelineConfig::default()),
            Err(PipelineError::InvalidSpans(_))
        ));
    }

    #[test]
    fn only_first_gold_is_projected() {
        let mut corpus = figure_corpus();
        corpus.articles[0].paragraphs[0].qas[0]
            .answers
            .push(AnswerSpan::new("1185,", 86));
        let out = run_pipeline(&corpus, &IdentityBackend, &PipelineConfig::default()).unwrap();
        assert_eq!(out.report.extra_gold_answers_ignored, 1);
        let qa = &out.corpus.articles[0].paragraphs[0].qas[0];
        assert_eq!(qa.answers, [AnswerSpan::new("1185", 86)]);
    }

    #[test]
    fn discard_log_format() {
        let line = discards_to_jsonl(&[DiscardRecord::anchor("x", 1)]);
        assert_eq!(
            line,
            "{\"qa_id\":\"x\",\"reason\":\"anchor_count\",\"quote_count_found\":1}\n"
        );
    }

    #[test]
    fn report_arithmetic_over_full_dataset_counts() {
        let discards =
            |n: usize| -> Vec<DiscardRecord> { (0..n).map(|i| DiscardRecord::anchor(&format!("d{i}"), 1)).collect() };
        let dev = PipelineReport::tally(
            "dev",
            SplitStats::from_counts(5811 + 392, 5655),
            SplitStats::from_counts(5811, 5655),
            &discards(392),
        );
        assert_eq!(dev.attempted, 11_858);
        assert_eq!(dev.produced, 11_466);
        assert!(dev.is_conserved());

        let train = PipelineReport::tally(
            "train",
            SplitStats::from_counts(83_018 + 5_574, 41_727),
            SplitStats::from_counts(83_018, 41_727),
            &discards(5_574),
        );
        assert_eq!(train.attempted, 130_319);
        assert_eq!(train.produced, 124_745);
        assert!(train.is_conserved());

        let all = train.merge(&dev);
        assert_eq!(all.attempted, 142_177);
        assert_eq!(all.discarded, 5_966);
        assert_eq!(all.discard_percent(1), 4.2);
    }
}
