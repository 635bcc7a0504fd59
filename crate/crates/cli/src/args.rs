use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use llm_audit::consistency::{AggregationRule, AggregationSemantics, ThresholdProfile};
use llm_audit::gateway::RunMode;
use llm_audit::report::ReportFormat;
use llm_audit::validation::{PoolConvention, ValidationSettings};

/// Audits LLM providers for answer consistency and hallucination.
///
/// Exit status: 0 when every audited provider passes, 1 when any fails,
/// 2 on configuration or operational errors.
#[derive(Debug, Parser)]
#[command(name = "llm-audit", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ask every question k times and judge how similar the answers are.
    Consistency(ConsistencyArgs),
    /// Let each provider judge its own answers.
    SelfValidate(ValidateArgs),
    /// Let every provider judge every other provider's answers.
    CrossValidate(CrossValidateArgs),
    /// Build average-score tables and pass-rate series from stored pair scores.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    LiveRecord,
    Replay,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::LiveRecord => RunMode::LiveRecord,
            ModeArg::Replay => RunMode::Replay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Low,
    Medium,
    High,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    PerMetric,
    PerPair,
}

impl From<RuleArg> for AggregationSemantics {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::PerMetric => AggregationSemantics::PerMetric,
            RuleArg::PerPair => AggregationSemantics::PerPair,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolArg {
    Validators,
    AllProviders,
}

impl From<PoolArg> for PoolConvention {
    fn from(p: PoolArg) -> Self {
        match p {
            PoolArg::Validators => PoolConvention::Validators,
            PoolArg::AllProviders => PoolConvention::AllProviders,
        }
    }
}

/// Settings shared by every command that talks to providers.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Provider configuration (TOML, `[[provider]]` entries).
    #[arg(long, value_name = "FILE")]
    pub providers: PathBuf,
    /// Restrict the run to these provider ids (repeatable). Defaults to all.
    #[arg(long = "provider", value_name = "ID")]
    pub only: Vec<String>,
    /// Benchmark file. Defaults to the bundled 40-question corpus.
    #[arg(long, value_name = "FILE")]
    pub benchmark: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "live-record")]
    pub mode: ModeArg,
    /// Response cache journal.
    #[arg(long, value_name = "FILE")]
    pub cache: PathBuf,
    /// Directory for report files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[arg(long, value_enum, default_value = "medium")]
    pub profile: ProfileArg,
    #[arg(long, value_name = "SCORE")]
    pub sequence_min: Option<f64>,
    #[arg(long, value_name = "SCORE")]
    pub levenshtein_min: Option<f64>,
    #[arg(long, value_name = "SCORE")]
    pub jaccard_min: Option<f64>,
    #[arg(long, value_name = "SCORE")]
    pub cosine_min: Option<f64>,
    /// Share of pairs that must pass a metric.
    #[arg(long, default_value_t = 0.8)]
    pub pair_quota: f64,
    /// Share of questions that must pass for the model verdict.
    #[arg(long, default_value_t = 0.8)]
    pub question_quota: f64,
}

impl ProfileArgs {
    pub fn profile(&self) -> anyhow::Result<ThresholdProfile> {
        let custom = [
            self.sequence_min,
            self.levenshtein_min,
            self.jaccard_min,
            self.cosine_min,
        ];
        let base = match self.profile {
            ProfileArg::Low => ThresholdProfile::low(),
            ProfileArg::Medium => ThresholdProfile::medium(),
            ProfileArg::High => ThresholdProfile::high(),
            ProfileArg::Custom => {
                let names = ["--sequence-min", "--levenshtein-min", "--jaccard-min", "--cosine-min"];
                let mut values = [0.0; 4];
                for ((slot, value), name) in values.iter_mut().zip(custom).zip(names) {
                    *slot = value.ok_or_else(|| anyhow::anyhow!("--profile custom requires {name}"))?;
                }
                return Ok(ThresholdProfile::custom(values, self.pair_quota, self.question_quota)?);
            }
        };
        if custom.iter().any(Option::is_some) {
            anyhow::bail!("per-metric minimums are only accepted with --profile custom");
        }
        Ok(base.with_quotas(self.pair_quota, self.question_quota)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConsistencyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Answers collected per question.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub thresholds: ProfileArgs,
    #[arg(long, value_enum, default_value = "per-metric")]
    pub rule: RuleArg,
    /// Metrics that must pass (1 to 4).
    #[arg(long, default_value_t = 4)]
    pub min_metrics: u8,
}

impl ConsistencyArgs {
    pub fn rule(&self) -> anyhow::Result<AggregationRule> {
        Ok(AggregationRule::new(self.rule.into(), self.min_metrics)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Yes/no probes per answer.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// A validator accepts when its yes share is strictly above this.
    #[arg(long, default_value_t = 0.8)]
    pub yes_quota: f64,
    /// Share of questions that must pass for the provider verdict.
    #[arg(long, default_value_t = 0.8)]
    pub qthreshold: f64,
    /// Indeterminate share at which a provider cannot act as validator.
    #[arg(long, default_value_t = 0.5)]
    pub non_validatable_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CrossValidateArgs {
    #[command(flatten)]
    pub validate: ValidateArgs,
    /// Agreeing validators must exceed this share of the pool.
    #[arg(long, default_value_t = 0.66)]
    pub agreement_fraction: f64,
    #[arg(long, value_enum, default_value = "validators")]
    pub pool: PoolArg,
}

impl ValidateArgs {
    pub fn settings(&self) -> ValidationSettings {
        ValidationSettings {
            k: self.k,
            yes_quota: self.yes_quota,
            qthreshold: self.qthreshold,
            non_validatable_fraction: self.non_validatable_fraction,
            ..ValidationSettings::default()
        }
    }
}

impl CrossValidateArgs {
    pub fn settings(&self) -> ValidationSettings {
        ValidationSettings {
            agreement_fraction: self.agreement_fraction,
            pool: self.pool.into(),
            ..self.validate.settings()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Pair-score files written by `consistency` (repeatable).
    #[arg(long = "pairs", value_name = "FILE", required = true)]
    pub pairs: Vec<PathBuf>,
    /// Directory for report files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Profile for the pass-rate series. Defaults to low, medium and high.
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    #[arg(long, value_name = "SCORE")]
    pub sequence_min: Option<f64>,
    #[arg(long, value_name = "SCORE")]
    pub levenshtein_min: Option<f64>,
    #[arg(long, value_name = "SCORE")]
    pub jaccard_min: Option<f64>,
    #[arg(long, value_name = "SCORE")]
    pub cosine_min: Option<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub pair_quota: f64,
    #[arg(long, default_value_t = 0.8)]
    pub question_quota: f64,
    #[arg(long, value_enum, default_value = "per-metric")]
    pub rule: RuleArg,
}

impl ReportArgs {
    pub fn profiles(&self) -> anyhow::Result<Vec<ThresholdProfile>> {
        match self.profile {
            None => {
                let custom = [self.sequence_min, self.levenshtein_min, self.jaccard_min, self.cosine_min];
                if custom.iter().any(Option::is_some) {
                    anyhow::bail!("per-metric minimums are only accepted with --profile custom");
                }
                ThresholdProfile::presets()
                    .into_iter()
                    .map(|p| Ok(p.with_quotas(self.pair_quota, self.question_quota)?))
                    .collect()
            }
            Some(profile) => ProfileArgs {
                profile,
                sequence_min: self.sequence_min,
                levenshtein_min: self.levenshtein_min,
                jaccard_min: self.jaccard_min,
                cosine_min: self.cosine_min,
                pair_quota: self.pair_quota,
                question_quota: self.question_quota,
            }
            .profile()
            .map(|p| vec![p]),
        }
    }
}
