//! Answer-span preserving translation of extractive QA corpora, plus the
//! sampling, agreement and scoring tools used to evaluate the result.

pub mod agreement;
pub mod anchor;
pub mod annotation;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod sampling;
pub mod segment;
pub mod text;
pub mod translate;

pub use agreement::{
    krippendorff_nominal, preference_summary, AgreementError, AgreementReport, Choice, PreferenceSummary, RatingMatrix,
    Vote,
};
pub use anchor::{
    clean_text, enclose_answer, finalize_anchor, finalize_markers, postprocess_dashes, seek_answer, AnchorError, Sought,
};
pub use corpus::{
    check_spans, parse_corpus, summarize, write_corpus, AnswerSpan, Article, Corpus, CorpusError, ParagraphRec, QaRec,
    SplitStats, ValidationReport,
};
pub use metrics::{evaluate_predictions, exact_match, normalize_answer, token_f1, EvalReport, NormalizationProfile};
pub use pipeline::{
    project_qa, run_pipeline, DiscardReason, DiscardRecord, PipelineConfig, PipelineError, PipelineItem,
    PipelineOutput, PipelineReport, RetryPolicy, TranslatedQa,
};
pub use sampling::{draw_sample, required_sample_size, SampleSpec, SamplingError};
pub use segment::{reassemble, segment_paragraph, AbbreviationLexicon, Segment, Segmenter};
pub use translate::{BackendConfig, BackendKind, TranslateError, Translator};
