mod common;

use eats_core::anchor::{clean_text, count_quotes, postprocess_dashes, seek_answer};
use eats_core::corpus::summarize;
use eats_core::pipeline::{project_qa, PipelineConfig, PipelineItem, RetryPolicy};
use eats_core::translate::{FaultInjectionBackend, FixtureMapBackend, IdentityBackend};
use eats_core::{check_spans, parse_corpus, run_pipeline, write_corpus, Segmenter, Translator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn any_text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            4 => any::<char>(),
            1 => prop::sample::select(vec!['"', '\u{201C}', '\u{201D}', ';', '\u{2013}', '\u{2014}', '-', '\u{2022}', '1', ' ', '.']),
        ],
        0..80,
    )
    .prop_map(|cs| cs.into_iter().collect())
}

fn corpus_seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

const FORBIDDEN: [char; 6] = [';', '\u{2013}', '\u{2014}', '"', '\u{201C}', '\u{201D}'];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clean_text_idempotent_and_alphabet(t in any_text()) {
        let once = clean_text(&t);
        prop_assert_eq!(clean_text(&once), once.clone());
        prop_assert!(!once.chars().any(|c| FORBIDDEN.contains(&c)));
    }

    #[test]
    fn postprocess_leaves_no_double_hyphen(t in any_text()) {
        prop_assert!(!postprocess_dashes(&t).contains("--"));
    }

    #[test]
    fn seek_strips_all_quotes(t in any_text()) {
        if let Ok(s) = seek_answer(&t) {
            prop_assert_eq!(count_quotes(&s.context), 0);
            prop_assert!(s.span().matches(&s.context));
        }
    }

    #[test]
    fn write_then_parse_is_identity(seed in corpus_seed(), n in 1usize..30) {
        let corpus = common::answerable_corpus(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let bytes = write_corpus(&corpus).unwrap();
        prop_assert_eq!(parse_corpus(&bytes).unwrap(), corpus);
    }

    #[test]
    fn stats_are_additive(seed in corpus_seed(), n in 1usize..30) {
        let mut corpus = common::answerable_corpus(&mut ChaCha8Rng::seed_from_u64(seed), n);
        corpus.articles[0].paragraphs[0].qas.push(eats_core::QaRec::unanswerable("u", "?"));
        let s = summarize(&corpus);
        prop_assert_eq!(s.answerable + s.unanswerable, s.total_questions);
        prop_assert_eq!(s.total_questions, n + 1);
    }

    #[test]
    fn spans_are_code_point_indexed(seed in corpus_seed()) {
        let corpus = common::answerable_corpus(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        prop_assert!(check_spans(&corpus).is_clean());
        for (p, qa) in corpus.qas() {
            let a = &qa.answers[0];
            let oracle: String = p.context.chars().skip(a.answer_start).take(a.text.chars().count()).collect();
            prop_assert_eq!(&oracle, &a.text);
        }
    }

    #[test]
    fn segments_partition_and_respect_limit(seed in corpus_seed(), limit in 40usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::context(&mut rng, 12, 15);
        let span = common::answer_span(&mut rng, &text, 30);
        let protected = (span.answer_start, span.end());
        let segmenter = Segmenter { limit, ..Segmenter::default() };
        let segments = segmenter.segment(&text, Some(protected)).unwrap();

        let joined: String = segments.iter().map(|s| s.text.as_str()).collect();
        prop_assert_eq!(&joined, &text);
        prop_assert!(segments.windows(2).all(|w| w[0].origin.1 == w[1].origin.0));
        prop_assert_eq!(segments.iter().filter(|s| s.contains_anchor).count(), 1);

        let starts: Vec<usize> = segmenter.split_sentences(&text).iter().map(|s| s.start).collect();
        for s in &segments {
            let admissible_inside = starts.iter().any(|&c| {
                s.origin.0 < c && c < s.origin.1 && !(protected.0 < c && c < protected.1)
            });
            if admissible_inside {
                prop_assert!(s.len() < limit, "segment {:?} could have been cut", s.origin);
            }
        }
    }

    #[test]
    fn identity_round_trip(seed in corpus_seed()) {
        let corpus = common::answerable_corpus(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        let segmenter = Segmenter::default();
        for (p, qa) in corpus.qas() {
            let item = PipelineItem::prepare(&p.context, qa, &segmenter).unwrap();
            let t = project_qa(&item, &IdentityBackend, RetryPolicy::immediate(1)).unwrap();
            let answer = t.answer.unwrap();
            prop_assert!(answer.matches(&t.context));
            // Dash restoration is the only change beyond cleaning.
            prop_assert_eq!(clean_text(&answer.text), clean_text(&qa.answers[0].text));
            prop_assert_eq!(count_quotes(&t.context), 0);
        }
    }

    #[test]
    fn pipeline_conserves_questions(seed in corpus_seed(), p in 0.0f64..0.5) {
        let corpus = common::answerable_corpus(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let backend = FaultInjectionBackend::new(p, seed);
        let out = run_pipeline(&corpus, &backend, &PipelineConfig { parallelism: 2, ..PipelineConfig::default() }).unwrap();
        prop_assert!(out.report.is_conserved());
        prop_assert_eq!(out.report.attempted, 12);
        prop_assert!(check_spans(&out.corpus).is_clean());
    }

    #[test]
    fn local_backends_aligned_and_deterministic(texts in prop::collection::vec(any_text(), 1..10), seed in any::<u64>()) {
        let fixtures = FixtureMapBackend::new(Default::default());
        let fault = FaultInjectionBackend::new(0.5, seed);
        for backend in [&IdentityBackend as &dyn Translator, &fixtures, &fault] {
            let a = backend.translate_batch(&texts).unwrap();
            prop_assert_eq!(a.len(), texts.len());
            prop_assert_eq!(a, backend.translate_batch(&texts).unwrap());
        }
    }
}
