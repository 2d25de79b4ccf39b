//! Exact match and token F1 with the normalization of the SQuAD evaluation
//! script, parameterized per language.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

/// ASCII punctuation, as in Python's `string.punctuation`.
pub const ASCII_PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Urdu full stop, semicolon and question mark.
pub const URDU_PUNCTUATION: [char; 3] = ['\u{06D4}', '\u{061B}', '\u{061F}'];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationProfile {
    pub name: String,
    pub lowercase: bool,
    pub strip_punctuation: BTreeSet<char>,
    /// Whole tokens removed after punctuation stripping.
    pub strip_articles: Vec<String>,
    pub collapse_whitespace: bool,
    #[serde(skip)]
    articles_re: OnceLock<Option<Regex>>,
}

impl NormalizationProfile {
    pub fn new(
        name: impl Into<String>,
        lowercase: bool,
        strip_punctuation: impl IntoIterator<Item = char>,
        strip_articles: Vec<String>,
        collapse_whitespace: bool,
    ) -> Self {
        Self {
            name: name.into(),
            lowercase,
            strip_punctuation: strip_punctuation.into_iter().collect(),
            strip_articles,
            collapse_whitespace,
            articles_re: OnceLock::new(),
        }
    }

    /// The official script's behaviour.
    pub fn english() -> Self {
        Self::new(
            "english",
            true,
            ASCII_PUNCTUATION.chars(),
            vec!["a".into(), "an".into(), "the".into()],
            true,
        )
    }

    /// English rules without articles, plus Urdu punctuation.
    pub fn urdu() -> Self {
        Self::new(
            "urdu",
            true,
            ASCII_PUNCTUATION.chars().chain(URDU_PUNCTUATION),
            Vec::new(),
            true,
        )
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "english" => Some(Self::english()),
            "urdu" => Some(Self::urdu()),
            _ => None,
        }
    }

    fn articles(&self) -> Option<&Regex> {
        self.articles_re
            .get_or_init(|| {
                if self.strip_articles.is_empty() {
                    return None;
                }
                let alternatives: Vec<String> = self.strip_articles.iter().map(|a| regex::escape(a)).collect();
                Some(Regex::new(&format!(r"\b({})\b", alternatives.join("|"))).expect("escaped alternatives"))
            })
            .as_ref()
    }
}

/// Lowercase, strip punctuation, drop articles, collapse whitespace, in that
/// order, each step only if the profile enables it.
pub fn normalize_answer(text: &str, profile: &NormalizationProfile) -> String {
    let mut s = if profile.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    if !profile.strip_punctuation.is_empty() {
        s.retain(|c| !profile.strip_punctuation.contains(&c));
    }
    if let Some(re) = profile.articles() {
        s = re.replace_all(&s, " ").into_owned();
    }
    if profile.collapse_whitespace {
        s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    s
}

fn golds_or_empty<'a>(golds: &'a [String]) -> Box<dyn Iterator<Item = &'a str> + 'a> {
    if golds.is_empty() {
        Box::new(std::iter::once(""))
    } else {
        Box::new(golds.iter().map(String::as_str))
    }
}

/// True if the normalized prediction equals any normalized gold. No golds
/// means the question is unanswerable and only an empty prediction matches.
pub fn exact_match(prediction: &str, golds: &[String], profile: &NormalizationProfile) -> bool {
    let p = normalize_answer(prediction, profile);
    golds_or_empty(golds).any(|g| normalize_answer(g, profile) == p)
}

fn f1_single(prediction: &str, gold: &str) -> f64 {
    let pred: Vec<&str> = prediction.split_whitespace().collect();
    let gold: Vec<&str> = gold.split_whitespace().collect();
    if pred.is_empty() || gold.is_empty() {
        return if pred.len() == gold.len() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for t in &pred {
        if let Some(n) = counts.get_mut(t) {
            if *n > 0 {
                *n -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-overlap F1 against any gold.
pub fn token_f1(prediction: &str, golds: &[String], profile: &NormalizationProfile) -> f64 {
    let p = normalize_answer(prediction, profile);
    golds_or_empty(golds)
        .map(|g| f1_single(&p, &normalize_answer(g, profile)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub qa_id: String,
    pub exact_match: bool,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean exact match × 100.
    pub exact_match: f64,
    /// Mean F1 × 100.
    pub f1: f64,
    pub n_evaluated: usize,
    /// Corpus questions with no prediction; scored 0.
    pub missing: Vec<String>,
    /// Predictions for ids not in the corpus; ignored.
    pub unknown: Vec<String>,
    pub per_question: Vec<QuestionScore>,
}

fn round_2dp(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl EvalReport {
    /// `{"exact_match", "f1", "n"}`, scores rounded to two decimals.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "exact_match": round_2dp(self.exact_match),
            "f1": round_2dp(self.f1),
            "n": self.n_evaluated,
        })
    }
}

/// Parses a predictions file: a JSON object mapping question id to answer.
pub fn parse_predictions(text: &str) -> Result<BTreeMap<String, String>, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn evaluate_predictions(
    predictions: &BTreeMap<String, String>,
    corpus: &Corpus,
    profile: &NormalizationProfile,
) -> EvalReport {
    let mut missing = Vec::new();
    let mut per_question = Vec::new();
    let mut seen = BTreeSet::new();
    for (_, qa) in corpus.qas() {
        seen.insert(qa.id.as_str());
        let golds: Vec<String> = if qa.is_impossible {
            Vec::new()
        } else {
            qa.answers.iter().map(|a| a.text.clone()).collect()
        };
        let (em, f1) = match predictions.get(&qa.id) {
            Some(p) => (exact_match(p, &golds, profile), token_f1(p, &golds, profile)),
            None => {
                missing.push(qa.id.clone());
                (false, 0.0)
            }
        };
        per_question.push(QuestionScore {
            qa_id: qa.id.clone(),
            exact_match: em,
            f1,
        });
    }
    let unknown: Vec<String> = predictions
        .keys()
        .filter(|k| !seen.contains(k.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        log::warn!("{} question(s) have no prediction and score 0", missing.len());
    }
    if !unknown.is_empty() {
        log::warn!("ignoring {} prediction(s) for unknown question ids", unknown.len());
    }
    let n = per_question.len();
    let (em_sum, f1_sum) = per_question.iter().fold((0.0, 0.0), |(e, f), q| {
        (e + f64::from(u8::from(q.exact_match)), f + q.f1)
    });
    let mean = |s: f64| if n == 0 { 0.0 } else { 100.0 * s / n as f64 };
    EvalReport {
        exact_match: mean(em_sum),
        f1: mean(f1_sum),
        n_evaluated: n,
        missing,
        unknown,
        per_question,
    }
}
