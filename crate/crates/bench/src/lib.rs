//! Seeded synthetic inputs for the benchmarks under `benches/`.

use eats_core::{AnswerSpan, Article, Corpus, ParagraphRec, QaRec};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "the",
    "harbour",
    "Normans",
    "army",
    "invaded",
    "Dyrrachium",
    "officials",
    "1185",
    "1990\u{2013}1995",
    "state;",
    "\u{201C}quoted\u{201D}",
    "\u{2014}",
    "نارمن",
    "فوج",
    "Dr.",
    "U.S.",
    "café",
    "😀",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sentences of 8 to 24 words until the text reaches `min_chars` code points.
pub fn paragraph(rng: &mut ChaCha8Rng, min_chars: usize) -> String {
    let mut text = String::new();
    while text.chars().count() < min_chars {
        if !text.is_empty() {
            text.push(' ');
        }
        let n = rng.random_range(8..=24);
        let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
        text.push_str(&words.join(" "));
        text.push('.');
    }
    text
}

/// `n` answerable questions, one per paragraph, answers 1 to 3 words long.
pub fn corpus(seed: u64, n: usize, min_chars: usize) -> Corpus {
    let mut rng = rng(seed);
    let paragraphs = (0..n)
        .map(|i| {
            let context = paragraph(&mut rng, min_chars);
            let starts: Vec<usize> = std::iter::once(0)
                .chain(
                    context
                        .chars()
                        .enumerate()
                        .filter(|&(_, c)| c == ' ')
                        .map(|(i, _)| i + 1),
                )
                .collect();
            let at = rng.random_range(0..starts.len());
            let end = starts
                .get(at + rng.random_range(1..=3))
                .map_or(context.chars().count(), |&e| e - 1);
            let text: String = context.chars().skip(starts[at]).take(end - starts[at]).collect();
            let qa = QaRec::answerable(
                format!("q{i}"),
                format!("Question {i}?"),
                AnswerSpan::new(text, starts[at]),
            );
            ParagraphRec::new(context, vec![qa])
        })
        .collect();
    Corpus::new(vec![Article::new("bench", paragraphs)])
}

/// Items by raters, three categories, roughly one rating in ten missing.
pub fn ratings(seed: u64, items: usize, raters: usize) -> Vec<Vec<Option<u8>>> {
    let mut rng = rng(seed);
    (0..items)
        .map(|_| {
            (0..raters)
                .map(|_| (!rng.random_bool(0.1)).then(|| rng.random_range(0..3)))
                .collect()
        })
        .collect()
}
