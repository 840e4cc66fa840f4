//! Reproducible clause sampling: a seeded uniform sample plus a
//! keyword-ranked "challenging" sample.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Clause, KeywordHit};
use crate::text::{normalize_whitespace, words};

pub const DEFAULT_KEYWORDS: [&str; 7] = [
    "and",
    "or",
    "upon",
    "unless",
    "provided that",
    "notwithstanding",
    "subject to",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionSpec {
    pub random_count: usize,
    pub challenging_count: usize,
    pub seed: u64,
    pub keywords: Vec<String>,
    /// Split the random sample evenly across categories instead of pooling.
    pub stratify: bool,
}

impl Default for SelectionSpec {
    fn default() -> Self {
        SelectionSpec {
            random_count: 100,
            challenging_count: 50,
            seed: 42,
            keywords: DEFAULT_KEYWORDS.iter().map(|k| k.to_string()).collect(),
            stratify: false,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("no clauses to select from")]
    EmptyInput,
    #[error("challenging_count > 0 requires at least one keyword")]
    NoKeywords,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub random_sample: Vec<Clause>,
    pub challenging_sample: Vec<Clause>,
    /// Shortfall and deduplication notes.
    pub warnings: Vec<String>,
}

impl Selection {
    /// Both samples, random first.
    pub fn all(&self) -> impl Iterator<Item = &Clause> {
        self.random_sample.iter().chain(&self.challenging_sample)
    }

    pub fn len(&self) -> usize {
        self.random_sample.len() + self.challenging_sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// SplitMix64 (Steele, Lea and Flood 2014). Chosen because it is a few lines
/// of integer arithmetic that any language reproduces bit-for-bit.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..bound` by rejection sampling; `bound` must be > 0.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let limit = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.next_u64();
            if x < limit {
                return x % bound;
            }
        }
    }
}

/// Draws `k` distinct indices of `0..n` with a partial Fisher-Yates shuffle,
/// in draw order.
pub fn sample_indices(rng: &mut SplitMix64, n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below((n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Finds each keyword as a whole-word, case-insensitive match. Multiword
/// keywords match contiguous word sequences regardless of the whitespace
/// or punctuation between them. Hits keep keyword order.
pub fn detect_challenging<S: AsRef<str>>(clause: &Clause, keywords: &[S]) -> Vec<KeywordHit> {
    keyword_hits(&clause.text, keywords)
}

pub fn keyword_hits<S: AsRef<str>>(text: &str, keywords: &[S]) -> Vec<KeywordHit> {
    let clause_words = words(text);
    let lowered: Vec<String> = clause_words.iter().map(|w| w.lower()).collect();
    let mut hits = Vec::new();
    for keyword in keywords {
        let keyword = keyword.as_ref();
        let needle: Vec<String> = words(keyword).iter().map(|w| w.lower()).collect();
        if needle.is_empty() || needle.len() > lowered.len() {
            continue;
        }
        let positions: Vec<usize> = (0..=lowered.len() - needle.len())
            .filter(|&i| lowered[i..i + needle.len()] == needle[..])
            .map(|i| clause_words[i].start)
            .collect();
        if !positions.is_empty() {
            hits.push(KeywordHit {
                keyword: keyword.to_string(),
                positions,
            });
        }
    }
    hits
}

/// Sets `flags.keyword_hits` and `flags.challenging` on the clause.
pub fn flag_challenging<S: AsRef<str>>(clause: &mut Clause, keywords: &[S]) {
    clause.flags.keyword_hits = detect_challenging(clause, keywords);
    clause.flags.challenging = !clause.flags.keyword_hits.is_empty();
}

fn distinct_hits(clause: &Clause) -> usize {
    clause
        .flags
        .keyword_hits
        .iter()
        .map(|h| h.keyword.as_str())
        .collect::<HashSet<_>>()
        .len()
}

/// Samples clauses per `spec`. Pure in `(clauses, spec)`.
///
/// Candidates are deduplicated by clause id and by whitespace-normalized text
/// (first by clause id wins), then sorted by clause id. The random sample is a
/// partial Fisher-Yates draw over that order driven by [`SplitMix64`] seeded
/// with `spec.seed`. The challenging sample ranks the remaining clauses with at
/// least one keyword hit by distinct hits (descending), then clause id.
pub fn select(clauses: &[Clause], spec: &SelectionSpec) -> Result<Selection, SelectionError> {
    if clauses.is_empty() {
        return Err(SelectionError::EmptyInput);
    }
    if spec.challenging_count > 0 && spec.keywords.is_empty() {
        return Err(SelectionError::NoKeywords);
    }

    let mut warnings = Vec::new();
    let mut sorted: Vec<&Clause> = clauses.iter().collect();
    sorted.sort_by(|a, b| a.clause_id.cmp(&b.clause_id));
    let mut seen_ids = HashSet::new();
    let mut seen_texts = HashSet::new();
    let mut candidates: Vec<Clause> = Vec::with_capacity(sorted.len());
    let mut dropped = 0usize;
    for clause in sorted {
        if !seen_ids.insert(clause.clause_id.as_str())
            || !seen_texts.insert(normalize_whitespace(&clause.text))
        {
            dropped += 1;
            continue;
        }
        let mut c = clause.clone();
        flag_challenging(&mut c, &spec.keywords);
        candidates.push(c);
    }
    if dropped > 0 {
        warnings.push(format!("{dropped} duplicate clause(s) ignored"));
    }

    let mut rng = SplitMix64::new(spec.seed);
    let random_idx = if spec.stratify {
        stratified_indices(&mut rng, &candidates, spec.random_count)
    } else {
        sample_indices(&mut rng, candidates.len(), spec.random_count)
    };
    if random_idx.len() < spec.random_count {
        warnings.push(format!(
            "random sample short: requested {}, selected {}",
            spec.random_count,
            random_idx.len()
        ));
    }
    let taken: HashSet<usize> = random_idx.iter().copied().collect();

    let mut ranked: Vec<(usize, usize)> = candidates
        .iter()
        .enumerate()
        .filter(|(i, c)| !taken.contains(i) && c.flags.challenging)
        .map(|(i, c)| (i, distinct_hits(c)))
        .collect();
    // candidates are already in clause id order, so a stable sort on the count
    // leaves ties ordered by id
    ranked.sort_by_key(|&(_, hits)| std::cmp::Reverse(hits));
    ranked.truncate(spec.challenging_count);
    if ranked.len() < spec.challenging_count {
        warnings.push(format!(
            "challenging sample short: requested {}, selected {}",
            spec.challenging_count,
            ranked.len()
        ));
    }

    Ok(Selection {
        random_sample: random_idx.iter().map(|&i| candidates[i].clone()).collect(),
        challenging_sample: ranked.iter().map(|&(i, _)| candidates[i].clone()).collect(),
        warnings,
    })
}

/// Even split of `total` across categories (sorted by name); earlier
/// categories take the remainder, and unused quota from small categories is
/// not redistributed.
fn stratified_indices(rng: &mut SplitMix64, candidates: &[Clause], total: usize) -> Vec<usize> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        groups.entry(c.category.name()).or_default().push(i);
    }
    let n_groups = groups.len().max(1);
    let mut out = Vec::new();
    for (gi, members) in groups.values().enumerate() {
        let quota = total / n_groups + usize::from(gi < total % n_groups);
        out.extend(
            sample_indices(rng, members.len(), quota)
                .into_iter()
                .map(|j| members[j]),
        );
    }
    out
}
