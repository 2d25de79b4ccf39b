//! Random SQuAD-shaped data for integration and acceptance tests.
#![allow(dead_code)]

use eats_core::{AnswerSpan, Article, Corpus, ParagraphRec, QaRec};
use rand::seq::IndexedRandom;
use rand::Rng;

const WORDS: &[&str] = &[
    "the",
    "harbour",
    "Normans",
    "army",
    "invaded",
    "Dyrrachium",
    "officials",
    "radiation",
    "1185",
    "1990",
    "x",
    "نارمن",
    "فوج",
    "حملہ",
    "۱۹۹۰",
    "शहर",
    "東京",
    "naïve",
    "café",
    "e\u{301}cole",
    "𝄞",
    "😀",
    "𐍈",
    "Dr.",
    "e.g.",
    "St.",
    "U.S.",
    "3.14",
    "A",
    "b",
];

const DECORATIONS: &[&str] = &[
    "\u{2022}",
    "\u{2022}\u{2022}",
    "\"",
    "\u{201C}",
    "\u{201D}",
    ";",
    "\u{2013}",
    "\u{2014}",
    "(",
    ")",
    ",",
    "'",
];

const TERMINATORS: &[&str] = &[".", "?", "!", "\u{06D4}", ".\"", ".)"];

/// One sentence of `words` words, with anchors, quotes, dashes and
/// multi-unit characters sprinkled in.
pub fn sentence<R: Rng>(rng: &mut R, words: usize) -> String {
    let mut out = String::new();
    for i in 0..words {
        if i > 0 {
            out.push(' ');
        }
        if rng.random_bool(0.12) {
            out.push_str(DECORATIONS.choose(rng).unwrap());
        }
        out.push_str(WORDS.choose(rng).unwrap());
        if rng.random_bool(0.12) {
            out.push_str(DECORATIONS.choose(rng).unwrap());
        }
        if rng.random_bool(0.03) {
            // Numeric range, or a dash between words.
            out.push_str(if rng.random_bool(0.5) {
                "\u{2013}1995"
            } else {
                "\u{2014}so"
            });
        }
    }
    out.push_str(TERMINATORS.choose(rng).unwrap());
    out
}

/// Sentences joined by single spaces, each with 3..=`max_words` words.
pub fn context<R: Rng>(rng: &mut R, sentences: usize, max_words: usize) -> String {
    (0..sentences.max(1))
        .map(|_| {
            let n = rng.random_range(3..=max_words.max(3));
            sentence(rng, n)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\u{201C}' | '\u{201D}')
}

/// A span of 1..=`max_len` code points that keeps at least one character
/// surviving cleaning.
pub fn answer_span<R: Rng>(rng: &mut R, context: &str, max_len: usize) -> AnswerSpan {
    let chars: Vec<char> = context.chars().collect();
    loop {
        let start = rng.random_range(0..chars.len());
        let len = rng.random_range(1..=max_len.min(chars.len() - start).max(1));
        let slice: String = chars[start..start + len].iter().collect();
        if slice.chars().any(|c| !is_quote(c)) {
            return AnswerSpan::new(slice, start);
        }
    }
}

/// A span sitting between two bullets, when the context has one.
pub fn bullet_adjacent_span(context: &str) -> Option<AnswerSpan> {
    let chars: Vec<char> = context.chars().collect();
    let open = chars.iter().position(|&c| c == '\u{2022}')?;
    let close = chars[open + 1..].iter().position(|&c| c == '\u{2022}')? + open + 1;
    let slice: String = chars[open + 1..close].iter().collect();
    (close > open + 1 && slice.chars().any(|c| !is_quote(c))).then(|| AnswerSpan::new(slice, open + 1))
}

/// `n` answerable questions spread over paragraphs of 1..=4 questions.
/// Some contexts run past 1,000 code points so segmentation is exercised.
pub fn answerable_corpus<R: Rng>(rng: &mut R, n: usize) -> Corpus {
    let mut paragraphs = Vec::new();
    let mut made = 0;
    while made < n {
        let sentences = if rng.random_bool(0.2) {
            rng.random_range(15..40)
        } else {
            rng.random_range(1..8)
        };
        let text = context(rng, sentences, 20);
        let k = rng.random_range(1..=4).min(n - made);
        let qas = (0..k)
            .map(|j| {
                let span = if j == 0 && rng.random_bool(0.3) {
                    bullet_adjacent_span(&text).unwrap_or_else(|| answer_span(rng, &text, 40))
                } else {
                    answer_span(rng, &text, 40)
                };
                QaRec::answerable(format!("q{}", made + j), format!("Question {}?", made + j), span)
            })
            .collect();
        made += k;
        paragraphs.push(ParagraphRec::new(text, qas));
    }
    let articles = paragraphs
        .chunks(10)
        .enumerate()
        .map(|(i, ps)| Article::new(format!("Article {i}"), ps.to_vec()))
        .collect();
    Corpus::new(articles)
}
