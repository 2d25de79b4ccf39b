//! Pairwise preference votes: tallies and Krippendorff's alpha.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate vote for item {item_id} by annotator {annotator_id}")]
    DuplicateVote { item_id: String, annotator_id: String },
    #[error("no votes")]
    NoVotes,
    #[error("alpha is undefined: no item has two or more ratings")]
    NoPairableValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Choice {
    SystemA,
    SystemB,
    Same,
}

impl Choice {
    pub const ALL: [Choice; 3] = [Choice::SystemA, Choice::SystemB, Choice::Same];

    pub fn as_str(self) -> &'static str {
        match self {
            Choice::SystemA => "SYSTEM_A",
            Choice::SystemB => "SYSTEM_B",
            Choice::Same => "SAME",
        }
    }

    /// The same preference seen from the other presentation order.
    pub fn swapped(self) -> Self {
        match self {
            Choice::SystemA => Choice::SystemB,
            Choice::SystemB => Choice::SystemA,
            Choice::Same => Choice::Same,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub item_id: String,
    pub annotator_id: String,
    pub choice: Choice,
}

impl Vote {
    pub fn new(item_id: impl Into<String>, annotator_id: impl Into<String>, choice: Choice) -> Self {
        Self {
            item_id: item_id.into(),
            annotator_id: annotator_id.into(),
            choice,
        }
    }
}

/// Parses a JSON Lines votes file. Blank lines are skipped.
pub fn parse_votes(text: &str) -> Result<Vec<Vote>, AgreementError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AgreementError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn votes_to_jsonl(votes: &[Vote]) -> String {
    let mut out = String::new();
    for v in votes {
        out.push_str(&serde_json::to_string(v).expect("plain record"));
        out.push('\n');
    }
    out
}

fn check_unique(votes: &[Vote]) -> Result<(), AgreementError> {
    let mut seen = HashSet::new();
    for v in votes {
        if !seen.insert((v.item_id.as_str(), v.annotator_id.as_str())) {
            return Err(AgreementError::DuplicateVote {
                item_id: v.item_id.clone(),
                annotator_id: v.annotator_id.clone(),
            });
        }
    }
    Ok(())
}

/// `100 * count / total` rounded half up to two decimals, computed on
/// integers so that displayed values are exact.
pub fn percent_2dp(count: usize, total: usize) -> f64 {
    assert!(total > 0);
    let hundredths = (count as u128 * 20_000 + total as u128) / (2 * total as u128);
    hundredths as f64 / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSummary {
    pub total: usize,
    pub counts: BTreeMap<Choice, usize>,
    pub percentages: BTreeMap<Choice, f64>,
}

impl PreferenceSummary {
    pub fn count(&self, choice: Choice) -> usize {
        self.counts.get(&choice).copied().unwrap_or(0)
    }

    pub fn percent(&self, choice: Choice) -> f64 {
        self.percentages.get(&choice).copied().unwrap_or(0.0)
    }
}

pub fn preference_summary(votes: &[Vote]) -> Result<PreferenceSummary, AgreementError> {
    if votes.is_empty() {
        return Err(AgreementError::NoVotes);
    }
    check_unique(votes)?;
    let mut counts: BTreeMap<Choice, usize> = Choice::ALL.iter().map(|&c| (c, 0)).collect();
    for v in votes {
        *counts.get_mut(&v.choice).expect("all choices present") += 1;
    }
    let percentages = counts.iter().map(|(&c, &n)| (c, percent_2dp(n, votes.len()))).collect();
    Ok(PreferenceSummary {
        total: votes.len(),
        counts,
        percentages,
    })
}

/// Items × raters grid of optional nominal labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix<C> {
    rows: Vec<Vec<Option<C>>>,
}

impl<C: Ord + Clone> RatingMatrix<C> {
    /// One row per item, one column per rater; `None` is a missing rating.
    pub fn new(rows: Vec<Vec<Option<C>>>) -> Self {
        Self { rows }
    }

    /// Builds a matrix from complete rows (every rater rated every item).
    pub fn complete(rows: Vec<Vec<C>>) -> Self {
        Self::new(rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect())
    }

    pub fn rows(&self) -> &[Vec<Option<C>>] {
        &self.rows
    }

    pub fn items(&self) -> usize {
        self.rows.len()
    }

    /// Ratings present for one item.
    pub fn values(&self, item: usize) -> impl Iterator<Item = &C> {
        self.rows[item].iter().flatten()
    }
}

impl RatingMatrix<Choice> {
    /// Items and annotators are ordered by id.
    pub fn from_votes(votes: &[Vote]) -> Result<Self, AgreementError> {
        check_unique(votes)?;
        let annotators: BTreeSet<&str> = votes.iter().map(|v| v.annotator_id.as_str()).collect();
        let column: BTreeMap<&str, usize> = annotators.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut rows: BTreeMap<&str, Vec<Option<Choice>>> = BTreeMap::new();
        for v in votes {
            let row = rows
                .entry(v.item_id.as_str())
                .or_insert_with(|| vec![None; annotators.len()]);
            row[column[v.annotator_id.as_str()]] = Some(v.choice);
        }
        Ok(Self::new(rows.into_values().collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub alpha: f64,
    pub observed_disagreement: f64,
    pub expected_disagreement: f64,
    /// Ratings in items with at least two ratings.
    pub n_pairable: usize,
    /// All pairable ratings fall in one category, so alpha is set to 1.
    pub degenerate: bool,
}

/// Krippendorff's alpha for nominal data, via the coincidence matrix.
pub fn krippendorff_nominal<C: Ord + Clone>(ratings: &RatingMatrix<C>) -> Result<AgreementReport, AgreementError> {
    // Coincidences o[c][k], with categories indexed in sorted order.
    let categories: BTreeSet<&C> = (0..ratings.items()).flat_map(|i| ratings.values(i)).collect();
    let index: BTreeMap<&C, usize> = categories.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let k = categories.len();
    let mut coincidence = vec![vec![0.0f64; k]; k];
    let mut n_pairable = 0usize;
    for item in 0..ratings.items() {
        let mut counts = vec![0usize; k];
        let mut m = 0usize;
        for v in ratings.values(item) {
            counts[index[v]] += 1;
            m += 1;
        }
        if m < 2 {
            continue;
        }
        n_pairable += m;
        let weight = 1.0 / (m - 1) as f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d {
                    counts[c] * (counts[c] - 1)
                } else {
                    counts[c] * counts[d]
                };
                coincidence[c][d] += pairs as f64 * weight;
            }
        }
    }
    if n_pairable == 0 {
        return Err(AgreementError::NoPairableValues);
    }

    let n = n_pairable as f64;
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let mut off_diagonal = 0.0;
    let mut expected_pairs = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                off_diagonal += coincidence[c][d];
                expected_pairs += marginals[c] * marginals[d];
            }
        }
    }
    let observed = off_diagonal / n;
    let expected = expected_pairs / (n * (n - 1.0));
    if expected == 0.0 {
        return Ok(AgreementReport {
            alpha: 1.0,
            observed_disagreement: observed,
            expected_disagreement: expected,
            n_pairable,
            degenerate: true,
        });
    }
    Ok(AgreementReport {
        alpha: 1.0 - observed / expected,
        observed_disagreement: observed,
        expected_disagreement: expected,
        n_pairable,
        degenerate: false,
    })
}
