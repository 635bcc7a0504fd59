//! Self-validation and cross-validation of answers.
//!
//! A provider's answer to a question is wrapped in a yes/no probe and put
//! back to a validator `k` times. A validator accepts the answer when its
//! "yes" share is strictly above `yes_quota`. Self-validation uses the
//! answering provider as its own validator; cross-validation uses every
//! other provider and requires strictly more than `agreement_fraction` of
//! the validator pool to accept.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Benchmark;
use crate::exec::{self, Execution};
use crate::gateway::{Gateway, GatewayError};
use crate::quota;

pub const VALIDATION_SUFFIX: &str = "correct? yes or no";

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("validation prompt needs a non-empty {0}")]
    EmptyPromptPart(&'static str),
    #[error("validation needs at least one repetition")]
    ZeroRepetitions,
    #[error("benchmark has no questions")]
    NoQuestions,
    #[error("cross-validation needs at least 2 providers, got {0}")]
    TooFewProviders(usize),
    #[error("provider {0:?} listed twice")]
    DuplicateProvider(String),
    #[error("invalid fraction {name}={value}: must lie in (0, 1]")]
    InvalidFraction { name: &'static str, value: f64 },
    #[error("provider {provider_id:?}, question {question_id}: {source}")]
    Gateway {
        provider_id: String,
        question_id: String,
        #[source]
        source: GatewayError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YesNo {
    Yes,
    No,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesNoVerdict {
    pub value: YesNo,
    pub raw_text: String,
}

/// Question, candidate answer and the fixed yes/no suffix, blank-line separated.
pub fn build_validation_prompt(question: &str, response: &str) -> Result<String, ValidationError> {
    if question.trim().is_empty() {
        return Err(ValidationError::EmptyPromptPart("question"));
    }
    if response.trim().is_empty() {
        return Err(ValidationError::EmptyPromptPart("response"));
    }
    Ok(format!("{question}\n\n{response}\n\n{VALIDATION_SUFFIX}"))
}

/// Reads a yes/no verdict from free text.
///
/// The first word decides when it is "yes" or "no". Otherwise the verdict
/// is whichever of the two appears as a standalone word, provided only one
/// of them does.
pub fn parse_yes_no(raw: &str) -> YesNoVerdict {
    let lower = raw.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let value = match words.first().copied() {
        Some("yes") => YesNo::Yes,
        Some("no") => YesNo::No,
        _ => match (words.contains(&"yes"), words.contains(&"no")) {
            (true, false) => YesNo::Yes,
            (false, true) => YesNo::No,
            _ => YesNo::Indeterminate,
        },
    };
    YesNoVerdict {
        value,
        raw_text: raw.to_string(),
    }
}

/// How the validator pool is sized when applying the agreement fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolConvention {
    /// Providers that actually vote on the answer.
    Validators,
    /// Every provider in the run, including the one being validated.
    AllProviders,
}

impl PoolConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolConvention::Validators => "validators",
            PoolConvention::AllProviders => "all_providers",
        }
    }
}

impl FromStr for PoolConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "validators" => Ok(PoolConvention::Validators),
            "all_providers" | "all" => Ok(PoolConvention::AllProviders),
            _ => Err(format!("unknown pool convention {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSettings {
    /// Probes per (answer, validator).
    pub k: usize,
    /// A validator accepts when its yes share is strictly above this.
    pub yes_quota: f64,
    /// Passed-question share needed for the overall verdict (inclusive).
    pub qthreshold: f64,
    /// Agreeing validators must be strictly above this share of the pool.
    pub agreement_fraction: f64,
    pub pool: PoolConvention,
    /// Providers at or above this indeterminate share cannot validate.
    pub non_validatable_fraction: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            k: 5,
            yes_quota: 0.8,
            qthreshold: 0.8,
            agreement_fraction: 0.66,
            pool: PoolConvention::Validators,
            non_validatable_fraction: 0.5,
        }
    }
}

impl ValidationSettings {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.k == 0 {
            return Err(ValidationError::ZeroRepetitions);
        }
        for (name, value) in [
            ("yes_quota", self.yes_quota),
            ("qthreshold", self.qthreshold),
            ("agreement_fraction", self.agreement_fraction),
            ("non_validatable_fraction", self.non_validatable_fraction),
        ] {
            quota::check_fraction(name, value)
                .map_err(|(name, value)| ValidationError::InvalidFraction { name, value })?;
        }
        Ok(())
    }
}

/// Tally of one validator's `k` probe answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeTally {
    pub verdicts: Vec<YesNoVerdict>,
    pub yes_count: usize,
    pub indeterminate_count: usize,
}

impl ProbeTally {
    fn from_texts(texts: impl IntoIterator<Item = String>) -> Self {
        let verdicts: Vec<YesNoVerdict> = texts.into_iter().map(|t| parse_yes_no(&t)).collect();
        let count = |v: YesNo| verdicts.iter().filter(|x| x.value == v).count();
        ProbeTally {
            yes_count: count(YesNo::Yes),
            indeterminate_count: count(YesNo::Indeterminate),
            verdicts,
        }
    }

    /// Whether the yes share is strictly above `yes_quota`.
    pub fn accepts(&self, yes_quota: f64) -> bool {
        quota::exceeds(self.yes_count, self.verdicts.len(), yes_quota)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfValidationQuestion {
    pub question_id: String,
    pub original_response: String,
    pub tally: ProbeTally,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfValidationReport {
    pub provider_id: String,
    pub settings: ValidationSettings,
    pub questions: Vec<SelfValidationQuestion>,
    pub passed_questions: usize,
    pub passed_fraction: f64,
    /// Share of all probe answers that were neither yes nor no.
    pub indeterminate_fraction: f64,
    pub non_validatable: bool,
    pub passed: bool,
}

fn gateway_error(provider_id: &str, question_id: &str, source: GatewayError) -> ValidationError {
    ValidationError::Gateway {
        provider_id: provider_id.to_string(),
        question_id: question_id.to_string(),
        source,
    }
}

/// The provider judges its own answers.
pub fn self_validate(
    gateway: &Gateway,
    provider_id: &str,
    benchmark: &Benchmark,
    settings: &ValidationSettings,
) -> Result<SelfValidationReport, ValidationError> {
    settings.validate()?;
    if benchmark.is_empty() {
        return Err(ValidationError::NoQuestions);
    }

    let mut questions = Vec::with_capacity(benchmark.len());
    for q in &benchmark.questions {
        let original = gateway
            .query(provider_id, &q.id, &q.text, 1)
            .map_err(|e| gateway_error(provider_id, &q.id, e))?
            .response_text;
        let probe = build_validation_prompt(&q.text, &original)?;
        let answers = gateway
            .query_repeated(provider_id, &q.id, &probe, settings.k)
            .map_err(|e| gateway_error(provider_id, &q.id, e))?;
        let tally = ProbeTally::from_texts(answers.into_iter().map(|r| r.response_text));
        questions.push(SelfValidationQuestion {
            question_id: q.id.clone(),
            original_response: original,
            passed: tally.accepts(settings.yes_quota),
            tally,
        });
    }

    let passed_questions = questions.iter().filter(|q| q.passed).count();
    let passed_fraction = passed_questions as f64 / questions.len() as f64;
    let probes: usize = questions.iter().map(|q| q.tally.verdicts.len()).sum();
    let indeterminate: usize = questions.iter().map(|q| q.tally.indeterminate_count).sum();
    let non_validatable = quota::meets(indeterminate, probes, settings.non_validatable_fraction);
    Ok(SelfValidationReport {
        provider_id: provider_id.to_string(),
        settings: *settings,
        passed_questions,
        passed_fraction,
        indeterminate_fraction: indeterminate as f64 / probes as f64,
        non_validatable,
        passed: passed_fraction >= settings.qthreshold,
        questions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorVote {
    pub validator_id: String,
    pub tally: ProbeTally,
    pub agrees: bool,
    /// False when the validator was excluded as non-validatable.
    pub counted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationQuestion {
    pub question_id: String,
    pub original_response: String,
    pub votes: Vec<ValidatorVote>,
    pub agreeing_validator_count: usize,
    pub pool_size: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderCrossValidation {
    pub provider_id: String,
    pub questions: Vec<CrossValidationQuestion>,
    pub passed_questions: usize,
    pub passed_fraction: f64,
    pub cross_validated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub settings: ValidationSettings,
    pub providers: Vec<ProviderCrossValidation>,
    /// Validators dropped from every pool for answering too few probes with yes/no.
    pub excluded_validators: Vec<String>,
}

impl CrossValidationReport {
    /// One flag per validated provider, in input order.
    pub fn flags(&self) -> Vec<bool> {
        self.providers.iter().map(|p| p.cross_validated).collect()
    }
}

/// Pool size used for the agreement test.
pub fn pool_size(voting_validators: usize, total_providers: usize, pool: PoolConvention) -> usize {
    match pool {
        PoolConvention::Validators => voting_validators,
        PoolConvention::AllProviders => total_providers,
    }
}

/// `agreeing > agreement_fraction * pool_size`.
pub fn question_agreed(agreeing: usize, pool_size: usize, agreement_fraction: f64) -> bool {
    quota::exceeds(agreeing, pool_size, agreement_fraction)
}

/// Every provider's answers are judged by all the others.
pub fn cross_validate(
    gateway: &Gateway,
    providers: &[String],
    benchmark: &Benchmark,
    settings: &ValidationSettings,
) -> Result<CrossValidationReport, ValidationError> {
    cross_validate_with(gateway, providers, benchmark, settings, Execution::default())
}

pub fn cross_validate_with(
    gateway: &Gateway,
    providers: &[String],
    benchmark: &Benchmark,
    settings: &ValidationSettings,
    exec: Execution,
) -> Result<CrossValidationReport, ValidationError> {
    settings.validate()?;
    if providers.len() < 2 {
        return Err(ValidationError::TooFewProviders(providers.len()));
    }
    let mut seen = BTreeSet::new();
    for p in providers {
        if !seen.insert(p) {
            return Err(ValidationError::DuplicateProvider(p.clone()));
        }
    }
    if benchmark.is_empty() {
        return Err(ValidationError::NoQuestions);
    }

    // originals[i][q]
    let originals: Vec<Vec<String>> = exec::try_map(exec, providers, |p| {
        benchmark
            .questions
            .iter()
            .map(|q| {
                gateway
                    .query(p, &q.id, &q.text, 1)
                    .map(|r| r.response_text)
                    .map_err(|e| gateway_error(p, &q.id, e))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    // tallies[j][i][q] for validator j judging provider i (None when i == j).
    let tallies: Vec<Vec<Option<Vec<ProbeTally>>>> = exec::try_map(exec, providers, |validator| {
        providers
            .iter()
            .zip(&originals)
            .map(|(answerer, answers)| {
                if answerer == validator {
                    return Ok(None);
                }
                benchmark
                    .questions
                    .iter()
                    .zip(answers)
                    .map(|(q, answer)| {
                        let probe = build_validation_prompt(&q.text, answer)?;
                        let records = gateway
                            .query_repeated(validator, &q.id, &probe, settings.k)
                            .map_err(|e| gateway_error(validator, &q.id, e))?;
                        Ok(ProbeTally::from_texts(records.into_iter().map(|r| r.response_text)))
                    })
                    .collect::<Result<Vec<_>, ValidationError>>()
                    .map(Some)
            })
            .collect::<Result<Vec<_>, ValidationError>>()
    })?;

    let excluded: Vec<bool> = tallies
        .iter()
        .map(|per_answerer| {
            let all = per_answerer.iter().flatten().flatten();
            let (probes, indeterminate) = all.fold((0, 0), |(n, u), t| {
                (n + t.verdicts.len(), u + t.indeterminate_count)
            });
            quota::meets(indeterminate, probes, settings.non_validatable_fraction)
        })
        .collect();

    let results = providers
        .iter()
        .enumerate()
        .map(|(i, provider_id)| {
            let questions: Vec<CrossValidationQuestion> = benchmark
                .questions
                .iter()
                .enumerate()
                .map(|(qi, q)| {
                    let votes: Vec<ValidatorVote> = providers
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(j, validator_id)| {
                            let tally = tallies[j][i].as_ref().expect("validator differs from answerer")[qi].clone();
                            ValidatorVote {
                                validator_id: validator_id.clone(),
                                agrees: tally.accepts(settings.yes_quota),
                                counted: !excluded[j],
                                tally,
                            }
                        })
                        .collect();
                    let voting = votes.iter().filter(|v| v.counted).count();
                    let agreeing = votes.iter().filter(|v| v.counted && v.agrees).count();
                    let pool = pool_size(voting, providers.len(), settings.pool);
                    CrossValidationQuestion {
                        question_id: q.id.clone(),
                        original_response: originals[i][qi].clone(),
                        votes,
                        agreeing_validator_count: agreeing,
                        pool_size: pool,
                        passed: question_agreed(agreeing, pool, settings.agreement_fraction),
                    }
                })
                .collect();
            let passed_questions = questions.iter().filter(|q| q.passed).count();
            let passed_fraction = passed_questions as f64 / questions.len() as f64;
            ProviderCrossValidation {
                provider_id: provider_id.clone(),
                questions,
                passed_questions,
                passed_fraction,
                cross_validated: passed_fraction >= settings.qthreshold,
            }
        })
        .collect();

    Ok(CrossValidationReport {
        settings: *settings,
        providers: results,
        excluded_validators: providers
            .iter()
            .zip(&excluded)
            .filter(|(_, &x)| x)
            .map(|(p, _)| p.clone())
            .collect(),
    })
}
