//! Repeated-response consistency analysis.
//!
//! Each question is asked `k` times; every unordered pair of answers is
//! scored with the four similarity metrics and compared against a
//! [`ThresholdProfile`]. An [`AggregationRule`] decides how the per-metric
//! outcomes combine into a question verdict, and the question verdicts
//! combine into a model verdict through the question quota.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Benchmark;
use crate::exec::{self, Execution};
use crate::gateway::{Gateway, GatewayError};
use crate::quota;
use crate::similarity::{similarity_vector, SimilarityVector, TokenizerConfig};

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("consistency needs at least 2 responses per question, got {0}")]
    TooFewResponses(usize),
    #[error("expected {expected} pair scores for k={k}, got {found}")]
    PairCountMismatch { k: usize, expected: usize, found: usize },
    #[error("no question verdicts to aggregate")]
    NoQuestions,
    #[error("invalid fraction {name}={value}: must lie in (0, 1]")]
    InvalidFraction { name: &'static str, value: f64 },
    #[error("invalid threshold {name}={value}: must lie in [0, 100]")]
    InvalidThreshold { name: &'static str, value: f64 },
    #[error("aggregation rule needs 1 to 4 metrics, got {0}")]
    InvalidMetricCount(u8),
    #[error("run aborted at question {question_id} after {} completed questions: {source}", completed.len())]
    Aborted {
        question_id: String,
        completed: Vec<QuestionConsistencyVerdict>,
        #[source]
        source: GatewayError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Low,
    Medium,
    High,
    Custom,
}

impl ProfileName {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::Low => "low",
            ProfileName::Medium => "medium",
            ProfileName::High => "high",
            ProfileName::Custom => "custom",
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-metric minimum scores plus the pair and question quotas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    pub name: ProfileName,
    pub sequence_min: f64,
    pub levenshtein_min: f64,
    pub jaccard_min: f64,
    pub cosine_min: f64,
    pub pair_quota: f64,
    pub question_quota: f64,
}

pub const DEFAULT_PAIR_QUOTA: f64 = 0.8;
pub const DEFAULT_QUESTION_QUOTA: f64 = 0.8;

impl ThresholdProfile {
    const fn preset(name: ProfileName, order_aware: f64, bag: f64) -> Self {
        ThresholdProfile {
            name,
            sequence_min: order_aware,
            levenshtein_min: order_aware,
            jaccard_min: bag,
            cosine_min: bag,
            pair_quota: DEFAULT_PAIR_QUOTA,
            question_quota: DEFAULT_QUESTION_QUOTA,
        }
    }

    pub const fn low() -> Self {
        Self::preset(ProfileName::Low, 20.0, 70.0)
    }

    pub const fn medium() -> Self {
        Self::preset(ProfileName::Medium, 40.0, 80.0)
    }

    pub const fn high() -> Self {
        Self::preset(ProfileName::High, 60.0, 90.0)
    }

    pub fn presets() -> [ThresholdProfile; 3] {
        [Self::low(), Self::medium(), Self::high()]
    }

    /// A user-defined profile; thresholds are `[sequence, levenshtein, jaccard, cosine]`.
    pub fn custom(
        thresholds: [f64; 4],
        pair_quota: f64,
        question_quota: f64,
    ) -> Result<Self, ConsistencyError> {
        let [sequence_min, levenshtein_min, jaccard_min, cosine_min] = thresholds;
        let profile = ThresholdProfile {
            name: ProfileName::Custom,
            sequence_min,
            levenshtein_min,
            jaccard_min,
            cosine_min,
            pair_quota,
            question_quota,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Replaces the quotas, keeping the thresholds and name.
    pub fn with_quotas(mut self, pair_quota: f64, question_quota: f64) -> Result<Self, ConsistencyError> {
        self.pair_quota = pair_quota;
        self.question_quota = question_quota;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConsistencyError> {
        for (name, value) in [
            ("sequence_min", self.sequence_min),
            ("levenshtein_min", self.levenshtein_min),
            ("jaccard_min", self.jaccard_min),
            ("cosine_min", self.cosine_min),
        ] {
            if !(0.0..=100.0).contains(&value) {
                return Err(ConsistencyError::InvalidThreshold { name, value });
            }
        }
        quota::check_fraction("pair_quota", self.pair_quota)
            .map_err(|(name, value)| ConsistencyError::InvalidFraction { name, value })?;
        quota::check_fraction("question_quota", self.question_quota)
            .map_err(|(name, value)| ConsistencyError::InvalidFraction { name, value })?;
        Ok(())
    }

    /// Thresholds in metric order: sequence, levenshtein, jaccard, cosine.
    pub fn thresholds(&self) -> [f64; 4] {
        [
            self.sequence_min,
            self.levenshtein_min,
            self.jaccard_min,
            self.cosine_min,
        ]
    }

    /// Which metrics of `v` meet their threshold (inclusive).
    pub fn metric_passes(&self, v: &SimilarityVector) -> [bool; 4] {
        let t = self.thresholds();
        let s = v.as_array();
        [s[0] >= t[0], s[1] >= t[1], s[2] >= t[2], s[3] >= t[3]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationSemantics {
    /// A pair passes when at least `m` of its four scores pass; the question
    /// passes when enough pairs pass.
    PerPair,
    /// Each metric passes when enough pairs clear its threshold; the
    /// question passes when at least `m` metrics pass.
    PerMetric,
}

impl AggregationSemantics {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregationSemantics::PerPair => "per_pair",
            AggregationSemantics::PerMetric => "per_metric",
        }
    }
}

impl FromStr for AggregationSemantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "per_pair" => Ok(AggregationSemantics::PerPair),
            "per_metric" => Ok(AggregationSemantics::PerMetric),
            _ => Err(format!("unknown aggregation rule {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregationRule {
    pub semantics: AggregationSemantics,
    pub min_metrics: u8,
}

impl AggregationRule {
    pub fn new(semantics: AggregationSemantics, min_metrics: u8) -> Result<Self, ConsistencyError> {
        if !(1..=4).contains(&min_metrics) {
            return Err(ConsistencyError::InvalidMetricCount(min_metrics));
        }
        Ok(AggregationRule {
            semantics,
            min_metrics,
        })
    }

    pub fn per_metric(min_metrics: u8) -> Result<Self, ConsistencyError> {
        Self::new(AggregationSemantics::PerMetric, min_metrics)
    }

    pub fn per_pair(min_metrics: u8) -> Result<Self, ConsistencyError> {
        Self::new(AggregationSemantics::PerPair, min_metrics)
    }
}

impl Default for AggregationRule {
    /// All four per-metric counts must meet the pair quota.
    fn default() -> Self {
        AggregationRule {
            semantics: AggregationSemantics::PerMetric,
            min_metrics: 4,
        }
    }
}

/// Scores for responses `i < j` (0-based positions in the response list).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub i: usize,
    pub j: usize,
    pub scores: SimilarityVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionConsistencyVerdict {
    pub question_id: String,
    pub pair_vectors: Vec<PairScore>,
    /// Pairs meeting each threshold, in metric order.
    pub per_metric_pass_counts: [usize; 4],
    /// Pairs with at least `m` passing metrics.
    pub passing_pair_count: usize,
    pub required_pair_count: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConsistencyVerdict {
    pub provider_id: String,
    pub profile: ThresholdProfile,
    pub rule: AggregationRule,
    pub questions: Vec<QuestionConsistencyVerdict>,
    pub passed_questions: usize,
    pub consistent_question_fraction: f64,
    pub passed: bool,
}

pub fn pair_total(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Smallest pair count meeting `pair_quota` of the `k(k-1)/2` pairs.
pub fn required_pair_count(k: usize, pair_quota: f64) -> Result<usize, ConsistencyError> {
    if k < 2 {
        return Err(ConsistencyError::TooFewResponses(k));
    }
    quota::check_fraction("pair_quota", pair_quota)
        .map_err(|(name, value)| ConsistencyError::InvalidFraction { name, value })?;
    Ok(quota::min_count_meeting(pair_total(k), pair_quota))
}

pub fn score_all_pairs<S: AsRef<str> + Sync>(
    responses: &[S],
    cfg: &TokenizerConfig,
) -> Result<Vec<PairScore>, ConsistencyError> {
    score_all_pairs_with(responses, cfg, Execution::default())
}

pub fn score_all_pairs_with<S: AsRef<str> + Sync>(
    responses: &[S],
    cfg: &TokenizerConfig,
    exec: Execution,
) -> Result<Vec<PairScore>, ConsistencyError> {
    let k = responses.len();
    if k < 2 {
        return Err(ConsistencyError::TooFewResponses(k));
    }
    let texts: Vec<&str> = responses.iter().map(|r| r.as_ref().trim_end()).collect();
    let index_pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    Ok(exec::map(exec, &index_pairs, |&(i, j)| PairScore {
        i,
        j,
        scores: similarity_vector(texts[i], texts[j], cfg),
    }))
}

pub fn evaluate_question(
    question_id: &str,
    pairs: &[PairScore],
    profile: &ThresholdProfile,
    rule: &AggregationRule,
    k: usize,
) -> Result<QuestionConsistencyVerdict, ConsistencyError> {
    let required = required_pair_count(k, profile.pair_quota)?;
    let expected = pair_total(k);
    if pairs.len() != expected {
        return Err(ConsistencyError::PairCountMismatch {
            k,
            expected,
            found: pairs.len(),
        });
    }

    let m = usize::from(rule.min_metrics);
    let mut per_metric = [0usize; 4];
    let mut passing_pairs = 0;
    for pair in pairs {
        let passes = profile.metric_passes(&pair.scores);
        for (count, ok) in per_metric.iter_mut().zip(passes) {
            *count += usize::from(ok);
        }
        if passes.iter().filter(|&&ok| ok).count() >= m {
            passing_pairs += 1;
        }
    }

    let passed = match rule.semantics {
        AggregationSemantics::PerMetric => {
            per_metric.iter().filter(|&&c| c >= required).count() >= m
        }
        AggregationSemantics::PerPair => passing_pairs >= required,
    };

    Ok(QuestionConsistencyVerdict {
        question_id: question_id.to_string(),
        pair_vectors: pairs.to_vec(),
        per_metric_pass_counts: per_metric,
        passing_pair_count: passing_pairs,
        required_pair_count: required,
        passed,
    })
}

/// Scores and judges one question's responses.
pub fn evaluate_responses<S: AsRef<str> + Sync>(
    question_id: &str,
    responses: &[S],
    profile: &ThresholdProfile,
    rule: &AggregationRule,
    cfg: &TokenizerConfig,
) -> Result<QuestionConsistencyVerdict, ConsistencyError> {
    let pairs = score_all_pairs(responses, cfg)?;
    evaluate_question(question_id, &pairs, profile, rule, responses.len())
}

pub fn evaluate_model(
    provider_id: &str,
    question_verdicts: Vec<QuestionConsistencyVerdict>,
    profile: &ThresholdProfile,
    rule: &AggregationRule,
) -> Result<ModelConsistencyVerdict, ConsistencyError> {
    if question_verdicts.is_empty() {
        return Err(ConsistencyError::NoQuestions);
    }
    let passed_questions = question_verdicts.iter().filter(|v| v.passed).count();
    let fraction = passed_questions as f64 / question_verdicts.len() as f64;
    Ok(ModelConsistencyVerdict {
        provider_id: provider_id.to_string(),
        profile: *profile,
        rule: *rule,
        questions: question_verdicts,
        passed_questions,
        consistent_question_fraction: fraction,
        passed: fraction >= profile.question_quota,
    })
}

/// Re-judges an already scored model verdict under another profile or rule.
pub fn reevaluate(
    verdict: &ModelConsistencyVerdict,
    profile: &ThresholdProfile,
    rule: &AggregationRule,
) -> Result<ModelConsistencyVerdict, ConsistencyError> {
    let questions = verdict
        .questions
        .iter()
        .map(|q| {
            let k = responses_for_pairs(q.pair_vectors.len());
            evaluate_question(&q.question_id, &q.pair_vectors, profile, rule, k)
        })
        .collect::<Result<Vec<_>, _>>()?;
    evaluate_model(&verdict.provider_id, questions, profile, rule)
}

/// Inverse of [`pair_total`]; pair counts that are not triangular round down.
pub fn responses_for_pairs(pairs: usize) -> usize {
    let mut k = 1;
    while pair_total(k + 1) <= pairs {
        k += 1;
    }
    k
}

#[derive(Debug, Clone)]
pub struct ConsistencyRequest<'a> {
    pub provider_id: &'a str,
    pub benchmark: &'a Benchmark,
    pub k: usize,
    pub profile: ThresholdProfile,
    pub rule: AggregationRule,
    pub tokenizer: TokenizerConfig,
}

/// Queries every question `k` times through the gateway and judges the model.
pub fn run_consistency(
    gateway: &Gateway,
    req: &ConsistencyRequest<'_>,
) -> Result<ModelConsistencyVerdict, ConsistencyError> {
    if req.k < 2 {
        return Err(ConsistencyError::TooFewResponses(req.k));
    }
    req.profile.validate()?;

    let mut collected: Vec<(&str, Vec<String>)> = Vec::with_capacity(req.benchmark.len());
    let mut failure = None;
    for q in &req.benchmark.questions {
        match gateway.query_repeated(req.provider_id, &q.id, &q.text, req.k) {
            Ok(records) => collected.push((
                q.id.as_str(),
                records.into_iter().map(|r| r.response_text).collect(),
            )),
            Err(source) => {
                failure = Some((q.id.clone(), source));
                break;
            }
        }
    }

    let verdicts = exec::try_map(Execution::default(), &collected, |(id, texts)| {
        let pairs = score_all_pairs_with(texts, &req.tokenizer, Execution::Sequential)?;
        evaluate_question(id, &pairs, &req.profile, &req.rule, req.k)
    })?;

    if let Some((question_id, source)) = failure {
        return Err(ConsistencyError::Aborted {
            question_id,
            completed: verdicts,
            source,
        });
    }
    evaluate_model(req.provider_id, verdicts, &req.profile, &req.rule)
}
