//! Pairwise text similarity scores on a 0–100 scale.
//!
//! Two metrics work on characters and are sensitive to ordering (sequence
//! matching and Levenshtein), two work on token bags and ignore ordering
//! (Jaccard and cosine). Every function here is pure.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

/// How tokens are carved out of a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    UnicodeWhitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub case_fold: bool,
    /// Drop every character that is neither alphanumeric nor whitespace.
    pub strip_punctuation: bool,
    pub split_rule: SplitRule,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            case_fold: true,
            strip_punctuation: true,
            split_rule: SplitRule::UnicodeWhitespace,
        }
    }
}

/// The four scores for one response pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityVector {
    pub sequence: f64,
    pub levenshtein: f64,
    pub jaccard: f64,
    pub cosine: f64,
}

impl SimilarityVector {
    pub const IDENTICAL: SimilarityVector = SimilarityVector {
        sequence: 100.0,
        levenshtein: 100.0,
        jaccard: 100.0,
        cosine: 100.0,
    };

    /// Scores in the fixed metric order: sequence, levenshtein, jaccard, cosine.
    pub fn as_array(&self) -> [f64; 4] {
        [self.sequence, self.levenshtein, self.jaccard, self.cosine]
    }
}

pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let SplitRule::UnicodeWhitespace = cfg.split_rule;
    text.split(char::is_whitespace)
        .filter_map(|raw| {
            let mut token = String::with_capacity(raw.len());
            for c in raw.chars() {
                if cfg.strip_punctuation && !c.is_alphanumeric() {
                    continue;
                }
                if cfg.case_fold {
                    token.extend(c.to_lowercase());
                } else {
                    token.push(c);
                }
            }
            (!token.is_empty()).then_some(token)
        })
        .collect()
}

/// Set overlap of the two token sets, times 100.
pub fn jaccard_similarity(a: &str, b: &str, cfg: &TokenizerConfig) -> f64 {
    let ta = tokenize(a, cfg);
    let tb = tokenize(b, cfg);
    let sa: HashSet<&str> = ta.iter().map(String::as_str).collect();
    let sb: HashSet<&str> = tb.iter().map(String::as_str).collect();
    if sa.is_empty() && sb.is_empty() {
        return 100.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    (inter as f64 * 100.0) / union as f64
}

/// Cosine of the term-frequency vectors, times 100.
pub fn cosine_similarity(a: &str, b: &str, cfg: &TokenizerConfig) -> f64 {
    let ta = tokenize(a, cfg);
    let tb = tokenize(b, cfg);
    if ta.is_empty() && tb.is_empty() {
        return 100.0;
    }
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let fa = term_frequencies(&ta);
    let fb = term_frequencies(&tb);
    let dot: u64 = fa
        .iter()
        .filter_map(|(t, &x)| fb.get(t).map(|&y| x * y))
        .sum();
    let na: u64 = fa.values().map(|&x| x * x).sum();
    let nb: u64 = fb.values().map(|&x| x * x).sum();
    // The product under one square root keeps identical bags at exactly 100.
    let denom = ((na as u128 * nb as u128) as f64).sqrt();
    (dot as f64 * 100.0 / denom).min(100.0)
}

fn term_frequencies(tokens: &[String]) -> HashMap<&str, u64> {
    let mut freq = HashMap::new();
    for t in tokens {
        *freq.entry(t.as_str()).or_insert(0) += 1;
    }
    freq
}

/// Character-level edit similarity: `(1 - dist / max_len) * 100`.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 100.0;
    }
    let dist = levenshtein_distance(&a, &b);
    (longest - dist) as f64 * 100.0 / longest as f64
}

/// Unit-cost insert/delete/substitute distance over chars.
pub fn levenshtein_distance(a: &[char], b: &[char]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }

    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            let cost = usize::from(ca != cb);
            row[j + 1] = (diag + cost).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[b.len()]
}

/// Gestalt ratio `2M / (|a| + |b|) * 100` over chars.
///
/// `M` comes from recursive longest-common-substring decomposition. Ties
/// between equally long substrings pick the earliest start in the first
/// argument, then in the second; because that choice depends on argument
/// order, the score is the larger of the two orientations.
pub fn sequence_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 100.0;
    }
    let matched = matching_characters(&a, &b).max(matching_characters(&b, &a));
    (2 * matched) as f64 * 100.0 / total as f64
}

/// Total length of the Ratcliff-Obershelp matching blocks of `a` against `b`.
pub fn matching_characters(a: &[char], b: &[char]) -> usize {
    let mut b_index: HashMap<char, Vec<usize>> = HashMap::new();
    for (j, &c) in b.iter().enumerate() {
        b_index.entry(c).or_default().push(j);
    }

    let mut matched = 0;
    let mut pending = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = pending.pop() {
        let (i, j, size) = longest_match(a, &b_index, alo, ahi, blo, bhi);
        if size == 0 {
            continue;
        }
        matched += size;
        if alo < i && blo < j {
            pending.push((alo, i, blo, j));
        }
        if i + size < ahi && j + size < bhi {
            pending.push((i + size, ahi, j + size, bhi));
        }
    }
    matched
}

/// Longest block `a[i..i+size] == b[j..j+size]` inside the given windows.
fn longest_match(
    a: &[char],
    b_index: &HashMap<char, Vec<usize>>,
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
) -> (usize, usize, usize) {
    let (mut best_i, mut best_j, mut best) = (alo, blo, 0);
    // (j, length of the match ending at a[i-1], b[j]) sorted by j.
    let mut prev: Vec<(usize, usize)> = Vec::new();
    let mut cur: Vec<(usize, usize)> = Vec::new();
    for (i, c) in a.iter().enumerate().take(ahi).skip(alo) {
        cur.clear();
        if let Some(positions) = b_index.get(c) {
            let start = positions.partition_point(|&j| j < blo);
            let mut p = 0;
            for &j in positions[start..].iter().take_while(|&&j| j < bhi) {
                let mut len = 1;
                if j > blo {
                    while p < prev.len() && prev[p].0 < j - 1 {
                        p += 1;
                    }
                    if p < prev.len() && prev[p].0 == j - 1 {
                        len = prev[p].1 + 1;
                    }
                }
                cur.push((j, len));
                if len > best {
                    best_i = i + 1 - len;
                    best_j = j + 1 - len;
                    best = len;
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (best_i, best_j, best)
}

pub fn similarity_vector(a: &str, b: &str, cfg: &TokenizerConfig) -> SimilarityVector {
    SimilarityVector {
        sequence: sequence_similarity(a, b),
        levenshtein: levenshtein_similarity(a, b),
        jaccard: jaccard_similarity(a, b, cfg),
        cosine: cosine_similarity(a, b, cfg),
    }
}
