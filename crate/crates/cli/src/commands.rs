use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use eats_core::agreement::{parse_votes, Choice};
use eats_core::annotation::{AnnotationStore, TaskSet};
use eats_core::corpus::summarize;
use eats_core::metrics::parse_predictions;
use eats_core::pipeline::discards_to_jsonl;
use eats_core::sampling::SampleSpec;
use eats_core::segment::default_lexicon;
use eats_core::translate::{cached, DiskCache};
use eats_core::{
    check_spans, draw_sample, evaluate_predictions, krippendorff_nominal, parse_corpus, preference_summary,
    required_sample_size, run_pipeline, write_corpus, AbbreviationLexicon, BackendConfig, Corpus, NormalizationProfile,
    PipelineConfig, PipelineItem, RatingMatrix, Segment, Segmenter,
};

use crate::{server, Command};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: 1,
            error: e.into(),
        }
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

type Result<T> = std::result::Result<T, Failure>;

/// Reads a file; a missing file is a usage error.
fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        let error = anyhow!(e.to_string()).context(format!("cannot read {}", path.display()));
        if e.kind() == io::ErrorKind::NotFound {
            usage(error)
        } else {
            error.into()
        }
    })
}

fn read_string(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()).into())
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let bytes = read(path)?;
    parse_corpus(&bytes)
        .with_context(|| format!("cannot parse {}", path.display()))
        .map_err(Failure::from)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn segmenter(limit: usize, abbreviations: Option<&Path>) -> Result<Segmenter> {
    let mut lexicon = default_lexicon();
    if let Some(path) = abbreviations {
        lexicon.extend(AbbreviationLexicon::parse(&read_string(path)?));
    }
    Ok(Segmenter::new(limit, lexicon))
}

/// 12345 -> "12,345".
fn grouped(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn run(command: Command, as_json: bool) -> Result<ExitCode> {
    match command {
        Command::Split {
            input,
            output,
            limit,
            abbreviations,
        } => split(&input, &output, &segmenter(limit, abbreviations.as_deref())?, as_json),
        Command::Prepare {
            input,
            output,
            limit,
            abbreviations,
        } => prepare(&input, &output, &segmenter(limit, abbreviations.as_deref())?, as_json),
        Command::Translate {
            input,
            output,
            backend,
            report,
            discards,
            cache,
            split,
            parallelism,
            limit,
            abbreviations,
        } => {
            if !backend.exists() {
                return Err(usage(anyhow!("backend config {} not found", backend.display())));
            }
            let config = BackendConfig::from_file(&backend)?;
            let translator = match cache {
                Some(dir) => cached(&config, Arc::new(DiskCache::new(dir)))?,
                None => config.build()?,
            };
            let pipeline = PipelineConfig {
                segmenter: segmenter(limit, abbreviations.as_deref())?,
                parallelism,
                split,
                ..PipelineConfig::default()
            };
            let corpus = load_corpus(&input)?;
            let out = run_pipeline(&corpus, translator.as_ref(), &pipeline)?;
            write(&output, write_corpus(&out.corpus)?)?;
            let report_path = report.unwrap_or_else(|| sibling(&output, ".report.json"));
            write(&report_path, serde_json::to_vec_pretty(&out.report)?)?;
            let discards_path = discards.unwrap_or_else(|| sibling(&output, ".discards.jsonl"));
            write(&discards_path, discards_to_jsonl(&out.discards))?;
            if as_json {
                print_json(&out.report);
            } else {
                let r = &out.report;
                println!(
                    "attempted {}  produced {}  discarded {} ({:.1}%)",
                    grouped(r.attempted),
                    grouped(r.produced),
                    grouped(r.discarded),
                    r.discard_rate() * 100.0
                );
                for (reason, n) in &r.discarded_by_reason {
                    println!("  {:<14}{}", reason.as_str(), grouped(*n));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { corpus } => {
            let stats = summarize(&load_corpus(&corpus)?);
            if as_json {
                print_json(&stats);
            } else {
                for (label, n) in [
                    ("answerable", stats.answerable),
                    ("unanswerable", stats.unanswerable),
                    ("total", stats.total_questions),
                    ("paragraphs", stats.paragraphs),
                    ("long paragraphs", stats.long_paragraphs),
                ] {
                    println!("{label:<16}{:>10}", grouped(n));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { corpus } => {
            let report = check_spans(&load_corpus(&corpus)?);
            if as_json {
                print_json(&report);
            } else if report.is_clean() {
                println!("{} answer spans checked, all match", grouped(report.checked));
            } else {
                for m in &report.mismatches {
                    println!("{}: expected {:?}, found {:?}", m.qa_id, m.expected, m.found);
                }
                println!(
                    "{} of {} answer spans do not match",
                    report.mismatches.len(),
                    report.checked
                );
            }
            Ok(if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Sample {
            ids,
            population,
            confidence,
            margin,
            proportion,
            size,
            seed,
        } => {
            let ids: Option<Vec<String>> = match ids {
                Some(path) => Some(
                    read_string(&path)?
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(String::from)
                        .collect(),
                ),
                None => None,
            };
            let population = population
                .or(ids.as_ref().map(Vec::len))
                .ok_or_else(|| usage(anyhow!("give --population or an id file")))?;
            let spec = SampleSpec {
                proportion,
                ..SampleSpec::new(population, confidence, margin)
            };
            let exact = spec.exact_size().map_err(|e| usage(e.into()))?;
            let required = required_sample_size(&spec).map_err(|e| usage(e.into()))?;
            let drawn = match &ids {
                Some(ids) => Some(draw_sample(ids, size.unwrap_or(required), seed)?),
                None => None,
            };
            if as_json {
                print_json(&json!({
                    "population": population,
                    "confidence": confidence,
                    "margin": margin,
                    "proportion": proportion,
                    "z": spec.z(),
                    "exact_size": exact,
                    "sample_size": required,
                    "seed": seed,
                    "sample": drawn,
                }));
            } else {
                println!("sample size {required} (exact {exact:.2}, z {:.5})", spec.z());
                for id in drawn.iter().flatten() {
                    println!("{id}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Agreement { votes } => {
            let votes = parse_votes(&read_string(&votes)?)?;
            let summary = preference_summary(&votes)?;
            let agreement = krippendorff_nominal(&RatingMatrix::from_votes(&votes)?);
            if as_json {
                let (report, error) = match &agreement {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                print_json(&json!({"preferences": summary, "agreement": report, "agreement_error": error}));
            } else {
                println!("votes      {:>6}", summary.total);
                for c in Choice::ALL {
                    println!(
                        "{:<10} {:>6} {:>7.2}%",
                        c.as_str(),
                        summary.count(c),
                        summary.percent(c)
                    );
                }
                match agreement {
                    Ok(r) => println!(
                        "alpha      {:.4}{} (Do {:.4}, De {:.4}, {} pairable ratings)",
                        r.alpha,
                        if r.degenerate { " degenerate" } else { "" },
                        r.observed_disagreement,
                        r.expected_disagreement,
                        r.n_pairable
                    ),
                    Err(e) => println!("alpha      undefined: {e}"),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            predictions,
            corpus,
            profile,
        } => {
            let predictions = parse_predictions(&read_string(&predictions)?)
                .with_context(|| format!("cannot parse {}", predictions.display()))?;
            let corpus = load_corpus(&corpus)?;
            let profile = NormalizationProfile::by_name(&profile).expect("checked by clap");
            let report = evaluate_predictions(&predictions, &corpus, &profile);
            if as_json {
                print_json(&report.summary_json());
            } else {
                println!("exact_match {:.2}", report.exact_match);
                println!("f1          {:.2}", report.f1);
                println!("n           {}", report.n_evaluated);
                if !report.missing.is_empty() {
                    println!("missing     {}", report.missing.len());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ServeAnnotate {
            tasks,
            store,
            port,
            host,
            ui,
        } => {
            let tasks = match tasks {
                Some(path) => {
                    if !path.exists() {
                        return Err(usage(anyhow!("task file {} not found", path.display())));
                    }
                    Some(TaskSet::from_file(&path)?)
                }
                None => None,
            };
            let store = AnnotationStore::open(store, tasks)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(server::serve(Arc::new(store), &host, port, ui))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct PlannedSegment {
    origin: (usize, usize),
    length: usize,
    oversize: bool,
}

#[derive(Serialize)]
struct PlannedParagraph {
    article: usize,
    paragraph: usize,
    length: usize,
    segments: Vec<PlannedSegment>,
}

fn split(input: &Path, output: &Path, segmenter: &Segmenter, as_json: bool) -> Result<ExitCode> {
    let corpus = load_corpus(input)?;
    let mut plan = Vec::new();
    for (a, article) in corpus.articles.iter().enumerate() {
        for (p, paragraph) in article.paragraphs.iter().enumerate() {
            let segments = segmenter.segment(&paragraph.context, None)?;
            plan.push(PlannedParagraph {
                article: a,
                paragraph: p,
                length: paragraph.context.chars().count(),
                segments: segments
                    .iter()
                    .map(|s: &Segment| PlannedSegment {
                        origin: s.origin,
                        length: s.len(),
                        oversize: s.oversize,
                    })
                    .collect(),
            });
        }
    }
    let long = plan.iter().filter(|p| p.length >= segmenter.limit).count();
    let split_paragraphs = plan.iter().filter(|p| p.segments.len() > 1).count();
    let oversize = plan.iter().flat_map(|p| &p.segments).filter(|s| s.oversize).count();
    let summary = json!({
        "limit": segmenter.limit,
        "paragraphs": plan.len(),
        "long_paragraphs": long,
        "split_paragraphs": split_paragraphs,
        "oversize_segments": oversize,
    });
    let mut document = summary.clone();
    document["plan"] = serde_json::to_value(&plan)?;
    write(output, serde_json::to_vec(&document)?)?;
    if as_json {
        print_json(&summary);
    } else {
        println!(
            "{} paragraphs, {} long (>= {} code points), {} split, {} oversize segments",
            grouped(plan.len()),
            grouped(long),
            segmenter.limit,
            grouped(split_paragraphs),
            oversize
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct WorkItem<'a> {
    #[serde(flatten)]
    item: &'a PipelineItem,
    /// Texts to translate after the question and answer.
    units: Vec<String>,
}

fn prepare(input: &Path, output: &Path, segmenter: &Segmenter, as_json: bool) -> Result<ExitCode> {
    let corpus = load_corpus(input)?;
    let report = check_spans(&corpus);
    if !report.is_clean() {
        return Err(anyhow!("{} answer span(s) do not match their context", report.mismatches.len()).into());
    }
    let mut lines = String::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (paragraph, qa) in corpus.qas() {
        let item = PipelineItem::prepare(&paragraph.context, qa, segmenter)?;
        let units = item.context_units()?;
        *counts.entry("items").or_default() += 1;
        *counts.entry("segments").or_default() += units.len();
        lines.push_str(&serde_json::to_string(&WorkItem { item: &item, units })?);
        lines.push('\n');
    }
    write(output, lines)?;
    if as_json {
        print_json(&counts);
    } else {
        println!(
            "{} work items, {} segments",
            grouped(counts.get("items").copied().unwrap_or(0)),
            grouped(counts.get("segments").copied().unwrap_or(0))
        );
    }
    Ok(ExitCode::SUCCESS)
}
