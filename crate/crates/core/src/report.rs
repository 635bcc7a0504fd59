//! Aggregate tables, chart series and the on-disk report format.
//!
//! Every report is a single table with a version, a kind, string metadata
//! and rows in a fixed column order. The JSON form has sorted keys and is
//! newline terminated; the CSV form carries the version and metadata in
//! leading `#` lines. Score cells are rounded to two decimals when a report
//! is built, so identical inputs always produce byte-identical files.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::{
    evaluate_model, evaluate_question, responses_for_pairs, AggregationRule, ConsistencyError,
    ModelConsistencyVerdict, PairScore, ProfileName, ThresholdProfile,
};
use crate::corpus::{Benchmark, QuestionKind};
use crate::similarity::SimilarityVector;
use crate::validation::{CrossValidationReport, SelfValidationReport};

pub const REPORT_FORMAT_VERSION: u32 = 1;

pub const SCORE_COLUMNS: [&str; 5] = ["provider", "sequence", "levenshtein", "jaccard", "cosine"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write or read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("unsupported report format version {0}")]
    UnsupportedVersion(u32),
    #[error("expected a {expected} report, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("malformed report row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("pass-rate series needs verdicts for m = 1, 2, 3, 4 on identical responses: {0}")]
    MismatchedVerdicts(String),
    #[error("pass-rate series is not non-increasing in m: {0:?}")]
    NotMonotone([f64; 4]),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
}

/// Half-away-from-zero rounding to two decimals.
pub fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    /// A 0–100 score shown with two decimals.
    pub fn score(x: f64) -> Cell {
        Cell::Float(round2(x))
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn int(n: usize) -> Cell {
        Cell::Int(n as i64)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(x) => Some(x),
            Cell::Int(n) => Some(n as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub kind: String,
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl Report {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Report {
            format_version: REPORT_FORMAT_VERSION,
            kind: kind.to_string(),
            metadata: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_json(&self) -> String {
        // Going through Value sorts object keys.
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Report, ReportError> {
        let report: Report = serde_json::from_str(text)?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(ReportError::UnsupportedVersion(report.format_version));
        }
        Ok(report)
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut out = format!(
            "# llm-audit report format_version={} kind={}\n",
            self.format_version, self.kind
        );
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={}\n", v.replace('\n', " ")));
        }
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|c| c.to_string()))?;
        }
        let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, ReportError> {
        match format {
            ReportFormat::Json => Ok(self.to_json()),
            ReportFormat::Csv => self.to_csv(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Report, ReportError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Report::from_json(&text)
    }

    fn expect_kind(&self, kind: &str) -> Result<(), ReportError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(ReportError::WrongKind {
                expected: kind.to_string(),
                found: self.kind.clone(),
            })
        }
    }
}

/// Writes `report` to `path` in the requested format.
pub fn emit_report(report: &Report, format: ReportFormat, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    let body = report.render(format)?;
    fs::write(path, body).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Pair scores for one question of one provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredQuestion {
    pub question_id: String,
    pub kind: QuestionKind,
    pub pairs: Vec<PairScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderPairs {
    pub provider_id: String,
    pub questions: Vec<ScoredQuestion>,
}

impl ProviderPairs {
    /// Questions missing from `benchmark` are skipped.
    pub fn from_verdict(verdict: &ModelConsistencyVerdict, benchmark: &Benchmark) -> Self {
        ProviderPairs {
            provider_id: verdict.provider_id.clone(),
            questions: verdict
                .questions
                .iter()
                .filter_map(|q| {
                    benchmark.question(&q.question_id).map(|b| ScoredQuestion {
                        question_id: q.question_id.clone(),
                        kind: b.kind,
                        pairs: q.pair_vectors.clone(),
                    })
                })
                .collect(),
        }
    }

    fn filtered(&self, kind: Option<QuestionKind>) -> impl Iterator<Item = &ScoredQuestion> {
        self.questions
            .iter()
            .filter(move |q| kind.is_none_or(|k| q.kind == k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub sequence: f64,
    pub levenshtein: f64,
    pub jaccard: f64,
    pub cosine: f64,
}

impl MetricMeans {
    fn as_array(&self) -> [f64; 4] {
        [self.sequence, self.levenshtein, self.jaccard, self.cosine]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageScoreRow {
    pub provider_id: String,
    pub means: MetricMeans,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AverageScores {
    pub rows: Vec<AverageScoreRow>,
    pub warnings: Vec<String>,
}

/// Per-provider means over all pair vectors of the selected questions, pooled.
pub fn average_scores(inputs: &[ProviderPairs], kind: Option<QuestionKind>) -> AverageScores {
    let mut out = AverageScores::default();
    for provider in inputs {
        let vectors: Vec<SimilarityVector> = provider
            .filtered(kind)
            .flat_map(|q| q.pairs.iter().map(|p| p.scores))
            .collect();
        if vectors.is_empty() {
            out.warnings.push(format!(
                "provider {} has no scored pairs{}; omitted",
                provider.provider_id,
                kind.map(|k| format!(" for {k} questions")).unwrap_or_default()
            ));
            continue;
        }
        let n = vectors.len() as f64;
        let mean = |f: fn(&SimilarityVector) -> f64| vectors.iter().map(f).sum::<f64>() / n;
        out.rows.push(AverageScoreRow {
            provider_id: provider.provider_id.clone(),
            means: MetricMeans {
                sequence: mean(|v| v.sequence),
                levenshtein: mean(|v| v.levenshtein),
                jaccard: mean(|v| v.jaccard),
                cosine: mean(|v| v.cosine),
            },
            pair_count: vectors.len(),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceRow {
    pub provider_id: String,
    /// First table minus second table, per metric.
    pub delta: MetricMeans,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DifferenceTable {
    pub rows: Vec<DifferenceRow>,
    pub warnings: Vec<String>,
}

/// `info - situation` per provider and metric, in the order of `info`.
pub fn score_difference(info: &[AverageScoreRow], situation: &[AverageScoreRow]) -> DifferenceTable {
    let by_id: HashMap<&str, &AverageScoreRow> =
        situation.iter().map(|r| (r.provider_id.as_str(), r)).collect();
    let mut out = DifferenceTable::default();
    for row in info {
        match by_id.get(row.provider_id.as_str()) {
            Some(other) => {
                let (a, b) = (&row.means, &other.means);
                out.rows.push(DifferenceRow {
                    provider_id: row.provider_id.clone(),
                    delta: MetricMeans {
                        sequence: a.sequence - b.sequence,
                        levenshtein: a.levenshtein - b.levenshtein,
                        jaccard: a.jaccard - b.jaccard,
                        cosine: a.cosine - b.cosine,
                    },
                });
            }
            None => out.warnings.push(format!(
                "provider {} missing from the second table; omitted",
                row.provider_id
            )),
        }
    }
    for row in situation {
        if !info.iter().any(|r| r.provider_id == row.provider_id) {
            out.warnings.push(format!(
                "provider {} missing from the first table; omitted",
                row.provider_id
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassRateSeries {
    pub provider_id: String,
    pub profile: ProfileName,
    /// Share of questions passing with at least m = 1, 2, 3, 4 metrics.
    pub rates: [f64; 4],
}

/// Builds the series from four verdicts judged with m = 1..=4, in that order.
pub fn pass_rate_series(verdicts: &[ModelConsistencyVerdict]) -> Result<PassRateSeries, ReportError> {
    let mismatch = |why: String| Err(ReportError::MismatchedVerdicts(why));
    if verdicts.len() != 4 {
        return mismatch(format!("got {} verdicts", verdicts.len()));
    }
    let first = &verdicts[0];
    let mut rates = [0.0; 4];
    for (idx, v) in verdicts.iter().enumerate() {
        if usize::from(v.rule.min_metrics) != idx + 1 || v.rule.semantics != first.rule.semantics {
            return mismatch(format!("verdict {idx} uses rule {:?}", v.rule));
        }
        if v.provider_id != first.provider_id || v.profile != first.profile {
            return mismatch(format!("verdict {idx} has a different provider or profile"));
        }
        let same_pairs = v.questions.len() == first.questions.len()
            && v.questions.iter().zip(&first.questions).all(|(a, b)| {
                a.question_id == b.question_id && a.pair_vectors == b.pair_vectors
            });
        if !same_pairs {
            return mismatch(format!("verdict {idx} was scored on different responses"));
        }
        rates[idx] = v.consistent_question_fraction;
    }
    if rates.windows(2).any(|w| w[1] > w[0]) {
        return Err(ReportError::NotMonotone(rates));
    }
    Ok(PassRateSeries {
        provider_id: first.provider_id.clone(),
        profile: first.profile.name,
        rates,
    })
}

/// Judges stored pair scores under `profile` for m = 1..=4 and builds the series.
///
/// Returns `None` when no question of the requested kind exists.
pub fn pass_rate_series_from_pairs(
    provider: &ProviderPairs,
    profile: &ThresholdProfile,
    semantics: crate::consistency::AggregationSemantics,
    kind: Option<QuestionKind>,
) -> Result<Option<PassRateSeries>, ReportError> {
    let questions: Vec<&ScoredQuestion> = provider.filtered(kind).collect();
    if questions.is_empty() {
        return Ok(None);
    }
    let verdicts = (1..=4u8)
        .map(|m| {
            let rule = AggregationRule::new(semantics, m)?;
            let judged = questions
                .iter()
                .map(|q| {
                    let k = responses_for_pairs(q.pairs.len());
                    evaluate_question(&q.question_id, &q.pairs, profile, &rule, k)
                })
                .collect::<Result<Vec<_>, _>>()?;
            evaluate_model(&provider.provider_id, judged, profile, &rule)
        })
        .collect::<Result<Vec<_>, ConsistencyError>>()?;
    pass_rate_series(&verdicts).map(Some)
}

fn score_cells(provider: &str, values: [f64; 4]) -> Vec<Cell> {
    let mut row = vec![Cell::text(provider)];
    row.extend(values.into_iter().map(Cell::score));
    row
}

pub fn average_scores_report(table: &AverageScores, kind: Option<QuestionKind>) -> Report {
    let mut report = Report::new("average_scores", &SCORE_COLUMNS)
        .meta("question_kind", kind.map_or("all", QuestionKind::as_str))
        .meta("averaging", "pooled_pairs");
    for row in &table.rows {
        report.push(score_cells(&row.provider_id, row.means.as_array()));
    }
    report
}

/// Reads an `average_scores` report back into rows (at presentation precision).
pub fn average_rows_from_report(report: &Report) -> Result<Vec<AverageScoreRow>, ReportError> {
    report.expect_kind("average_scores")?;
    report
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let bad = |reason: &str| ReportError::BadRow {
                row: i,
                reason: reason.to_string(),
            };
            let provider = row.first().and_then(Cell::as_str).ok_or_else(|| bad("provider"))?;
            let num = |c: usize| row.get(c).and_then(Cell::as_f64).ok_or_else(|| bad("score"));
            Ok(AverageScoreRow {
                provider_id: provider.to_string(),
                means: MetricMeans {
                    sequence: num(1)?,
                    levenshtein: num(2)?,
                    jaccard: num(3)?,
                    cosine: num(4)?,
                },
                pair_count: 0,
            })
        })
        .collect()
}

pub fn difference_report(table: &DifferenceTable) -> Report {
    let mut report = Report::new("score_difference", &SCORE_COLUMNS)
        .meta("minuend", "informational")
        .meta("subtrahend", "situational");
    for row in &table.rows {
        report.push(score_cells(&row.provider_id, row.delta.as_array()));
    }
    report
}

pub fn pass_rate_report(series: &[(PassRateSeries, Option<QuestionKind>)]) -> Report {
    let mut report = Report::new(
        "pass_rates",
        &["provider", "profile", "question_kind", "m1", "m2", "m3", "m4"],
    );
    for (s, kind) in series {
        let mut row = vec![
            Cell::text(&s.provider_id),
            Cell::text(s.profile.as_str()),
            Cell::text(kind.map_or("all", QuestionKind::as_str)),
        ];
        row.extend(s.rates.iter().map(|&r| Cell::Float(r)));
        report.push(row);
    }
    report
}

fn profile_meta(report: Report, profile: &ThresholdProfile, rule: &AggregationRule) -> Report {
    report
        .meta("profile", profile.name)
        .meta("sequence_min", profile.sequence_min)
        .meta("levenshtein_min", profile.levenshtein_min)
        .meta("jaccard_min", profile.jaccard_min)
        .meta("cosine_min", profile.cosine_min)
        .meta("pair_quota", profile.pair_quota)
        .meta("question_quota", profile.question_quota)
        .meta("rule", rule.semantics.as_str())
        .meta("min_metrics", rule.min_metrics)
}

/// Per-question detail of one model verdict.
pub fn consistency_report(verdict: &ModelConsistencyVerdict, benchmark: &Benchmark) -> Report {
    let report = Report::new(
        "consistency",
        &[
            "question_id",
            "question_kind",
            "pairs",
            "required_pairs",
            "sequence_pass",
            "levenshtein_pass",
            "jaccard_pass",
            "cosine_pass",
            "passing_pairs",
            "passed",
        ],
    )
    .meta("provider", &verdict.provider_id)
    .meta("passed_questions", verdict.passed_questions)
    .meta("questions", verdict.questions.len())
    .meta("consistent_question_fraction", verdict.consistent_question_fraction)
    .meta("passed", verdict.passed);
    let mut report = profile_meta(report, &verdict.profile, &verdict.rule);
    for q in &verdict.questions {
        let kind = benchmark
            .question(&q.question_id)
            .map_or("unknown", |b| b.kind.as_str());
        let mut row = vec![
            Cell::text(&q.question_id),
            Cell::text(kind),
            Cell::int(q.pair_vectors.len()),
            Cell::int(q.required_pair_count),
        ];
        row.extend(q.per_metric_pass_counts.iter().map(|&c| Cell::int(c)));
        row.push(Cell::int(q.passing_pair_count));
        row.push(Cell::Bool(q.passed));
        report.push(row);
    }
    report
}

pub fn consistency_summary_report(verdicts: &[ModelConsistencyVerdict]) -> Report {
    let mut report = Report::new(
        "consistency_summary",
        &[
            "provider",
            "profile",
            "rule",
            "min_metrics",
            "passed_questions",
            "questions",
            "fraction",
            "passed",
        ],
    );
    for v in verdicts {
        report.push(vec![
            Cell::text(&v.provider_id),
            Cell::text(v.profile.name.as_str()),
            Cell::text(v.rule.semantics.as_str()),
            Cell::int(usize::from(v.rule.min_metrics)),
            Cell::int(v.passed_questions),
            Cell::int(v.questions.len()),
            Cell::Float(v.consistent_question_fraction),
            Cell::Bool(v.passed),
        ]);
    }
    report
}

const PAIR_COLUMNS: [&str; 9] = [
    "provider",
    "question_id",
    "question_kind",
    "i",
    "j",
    "sequence",
    "levenshtein",
    "jaccard",
    "cosine",
];

/// Raw pair scores at full precision, the input of the aggregate tables.
pub fn pair_scores_report(inputs: &[ProviderPairs]) -> Report {
    let mut report = Report::new("pair_scores", &PAIR_COLUMNS).meta("precision", "full");
    for p in inputs {
        for q in &p.questions {
            for pair in &q.pairs {
                let mut row = vec![
                    Cell::text(&p.provider_id),
                    Cell::text(&q.question_id),
                    Cell::text(q.kind.as_str()),
                    Cell::int(pair.i),
                    Cell::int(pair.j),
                ];
                row.extend(pair.scores.as_array().into_iter().map(Cell::Float));
                report.push(row);
            }
        }
    }
    report
}

/// Inverse of [`pair_scores_report`]; providers and questions keep first-seen order.
pub fn pairs_from_report(report: &Report) -> Result<Vec<ProviderPairs>, ReportError> {
    report.expect_kind("pair_scores")?;
    if report.columns != PAIR_COLUMNS {
        return Err(ReportError::BadRow {
            row: 0,
            reason: format!("unexpected columns {:?}", report.columns),
        });
    }
    let mut out: Vec<ProviderPairs> = Vec::new();
    for (n, row) in report.rows.iter().enumerate() {
        let bad = |reason: &str| ReportError::BadRow {
            row: n,
            reason: reason.to_string(),
        };
        if row.len() != PAIR_COLUMNS.len() {
            return Err(bad("wrong cell count"));
        }
        let text = |c: usize| row[c].as_str().ok_or_else(|| bad(PAIR_COLUMNS[c]));
        let num = |c: usize| row[c].as_f64().ok_or_else(|| bad(PAIR_COLUMNS[c]));
        let provider = text(0)?;
        let question = text(1)?;
        let kind: QuestionKind = text(2)?.parse().map_err(|_| bad("question_kind"))?;
        let pair = PairScore {
            i: num(3)? as usize,
            j: num(4)? as usize,
            scores: SimilarityVector {
                sequence: num(5)?,
                levenshtein: num(6)?,
                jaccard: num(7)?,
                cosine: num(8)?,
            },
        };
        let entry = match out.iter_mut().position(|p| p.provider_id == provider) {
            Some(i) => &mut out[i],
            None => {
                out.push(ProviderPairs {
                    provider_id: provider.to_string(),
                    questions: Vec::new(),
                });
                out.last_mut().expect("just pushed")
            }
        };
        match entry.questions.iter_mut().find(|q| q.question_id == question) {
            Some(q) => q.pairs.push(pair),
            None => entry.questions.push(ScoredQuestion {
                question_id: question.to_string(),
                kind,
                pairs: vec![pair],
            }),
        }
    }
    Ok(out)
}

fn validation_meta(report: Report, s: &crate::validation::ValidationSettings) -> Report {
    report
        .meta("k", s.k)
        .meta("yes_quota", s.yes_quota)
        .meta("qthreshold", s.qthreshold)
}

pub fn self_validation_report(reports: &[SelfValidationReport]) -> Report {
    let mut report = Report::new(
        "self_validation",
        &["provider", "question_id", "probes", "yes", "indeterminate", "passed"],
    );
    if let Some(first) = reports.first() {
        report = validation_meta(report, &first.settings);
    }
    for r in reports {
        for q in &r.questions {
            report.push(vec![
                Cell::text(&r.provider_id),
                Cell::text(&q.question_id),
                Cell::int(q.tally.verdicts.len()),
                Cell::int(q.tally.yes_count),
                Cell::int(q.tally.indeterminate_count),
                Cell::Bool(q.passed),
            ]);
        }
    }
    report
}

pub fn self_validation_summary_report(reports: &[SelfValidationReport]) -> Report {
    let mut report = Report::new(
        "self_validation_summary",
        &[
            "provider",
            "passed_questions",
            "questions",
            "fraction",
            "indeterminate_fraction",
            "non_validatable",
            "passed",
        ],
    );
    if let Some(first) = reports.first() {
        report = validation_meta(report, &first.settings)
            .meta("non_validatable_fraction", first.settings.non_validatable_fraction);
    }
    for r in reports {
        report.push(vec![
            Cell::text(&r.provider_id),
            Cell::int(r.passed_questions),
            Cell::int(r.questions.len()),
            Cell::Float(r.passed_fraction),
            Cell::Float(r.indeterminate_fraction),
            Cell::Bool(r.non_validatable),
            Cell::Bool(r.passed),
        ]);
    }
    report
}

fn cross_meta(report: Report, cv: &CrossValidationReport) -> Report {
    validation_meta(report, &cv.settings)
        .meta("agreement_fraction", cv.settings.agreement_fraction)
        .meta("pool", cv.settings.pool.as_str())
        .meta("excluded_validators", cv.excluded_validators.join(","))
}

/// Per question: agreeing validators, pool size and verdict.
pub fn cross_validation_report(cv: &CrossValidationReport) -> Report {
    let mut report = cross_meta(
        Report::new(
            "cross_validation",
            &["provider", "question_id", "agreeing", "pool_size", "passed"],
        ),
        cv,
    );
    for p in &cv.providers {
        for q in &p.questions {
            report.push(vec![
                Cell::text(&p.provider_id),
                Cell::text(&q.question_id),
                Cell::int(q.agreeing_validator_count),
                Cell::int(q.pool_size),
                Cell::Bool(q.passed),
            ]);
        }
    }
    report
}

/// Every validator's tally on every answer.
pub fn cross_validation_votes_report(cv: &CrossValidationReport) -> Report {
    let mut report = cross_meta(
        Report::new(
            "cross_validation_votes",
            &[
                "provider",
                "question_id",
                "validator",
                "probes",
                "yes",
                "indeterminate",
                "agrees",
                "counted",
            ],
        ),
        cv,
    );
    for p in &cv.providers {
        for q in &p.questions {
            for v in &q.votes {
                report.push(vec![
                    Cell::text(&p.provider_id),
                    Cell::text(&q.question_id),
                    Cell::text(&v.validator_id),
                    Cell::int(v.tally.verdicts.len()),
                    Cell::int(v.tally.yes_count),
                    Cell::int(v.tally.indeterminate_count),
                    Cell::Bool(v.agrees),
                    Cell::Bool(v.counted),
                ]);
            }
        }
    }
    report
}

pub fn cross_validation_summary_report(cv: &CrossValidationReport) -> Report {
    let mut report = cross_meta(
        Report::new(
            "cross_validation_summary",
            &["provider", "passed_questions", "questions", "fraction", "cross_validated"],
        ),
        cv,
    );
    for p in &cv.providers {
        report.push(vec![
            Cell::text(&p.provider_id),
            Cell::int(p.passed_questions),
            Cell::int(p.questions.len()),
            Cell::Float(p.passed_fraction),
            Cell::Bool(p.cross_validated),
        ]);
    }
    report
}
