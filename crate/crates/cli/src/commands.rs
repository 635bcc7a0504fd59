use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use llm_audit::consistency::{
    reevaluate, run_consistency, AggregationRule, ConsistencyRequest, ModelConsistencyVerdict,
};
use llm_audit::corpus::{Benchmark, QuestionKind};
use llm_audit::exec::{self, Execution};
use llm_audit::gateway::{Gateway, ProviderConfig, ProviderSpec, ResponseCache, RunMode};
use llm_audit::report::{self, ProviderPairs, Report, ReportFormat};
use llm_audit::similarity::TokenizerConfig;
use llm_audit::validation::{cross_validate, self_validate};

use crate::args::{Command, ConsistencyArgs, CrossValidateArgs, ReportArgs, RunArgs, ValidateArgs};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_all(passed: impl IntoIterator<Item = bool>) -> Self {
        if passed.into_iter().all(|p| p) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

pub fn dispatch(command: Command) -> Result<Verdict> {
    match command {
        Command::Consistency(args) => cmd_consistency(&args),
        Command::SelfValidate(args) => cmd_self_validate(&args),
        Command::CrossValidate(args) => cmd_cross_validate(&args),
        Command::Report(args) => cmd_report(&args),
    }
}

struct Session {
    gateway: Gateway,
    specs: Vec<ProviderSpec>,
    benchmark: Benchmark,
    benchmark_source: String,
    out: PathBuf,
    format: ReportFormat,
}

impl Session {
    fn open(run: &RunArgs) -> Result<Session> {
        let config = ProviderConfig::load(&run.providers)?;
        let specs: Vec<ProviderSpec> = if run.only.is_empty() {
            config.providers
        } else {
            run.only
                .iter()
                .map(|id| {
                    config
                        .providers
                        .iter()
                        .find(|s| &s.provider_id == id)
                        .cloned()
                        .with_context(|| format!("--provider {id:?} is not in {}", run.providers.display()))
                })
                .collect::<Result<_>>()?
        };
        if specs.is_empty() {
            bail!("{} defines no providers", run.providers.display());
        }

        let (benchmark, benchmark_source) = match &run.benchmark {
            Some(path) => (Benchmark::load(path)?, path.display().to_string()),
            None => (Benchmark::default_corpus(), "bundled".to_string()),
        };

        let mode = RunMode::from(run.mode);
        let cache = if mode == RunMode::Replay && !run.cache.exists() {
            eprintln!(
                "warning: cache {} does not exist; every lookup will miss",
                run.cache.display()
            );
            ResponseCache::in_memory()
        } else {
            ResponseCache::open(&run.cache)
                .with_context(|| format!("opening cache {}", run.cache.display()))?
        };
        for problem in cache.problems() {
            eprintln!(
                "warning: cache line {} skipped: {}",
                problem.line, problem.reason
            );
        }

        let mut gateway = Gateway::new(mode, cache);
        if mode == RunMode::LiveRecord {
            gateway = gateway.with_session_id(uuid::Uuid::new_v4().to_string());
        }
        for spec in &specs {
            gateway.add_from_spec(spec.clone())?;
        }

        fs::create_dir_all(&run.out)
            .with_context(|| format!("creating output directory {}", run.out.display()))?;
        Ok(Session {
            gateway,
            specs,
            benchmark,
            benchmark_source,
            out: run.out.clone(),
            format: run.format.into(),
        })
    }

    fn provider_ids(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.provider_id.clone()).collect()
    }

    fn write(&self, name: &str, report: &Report) -> Result<()> {
        write_report(&self.out, name, report, self.format)
    }

    /// Run settings plus the interval the served answers were collected in.
    fn write_manifest(&self, command: &str, settings: serde_json::Value) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            format_version: u32,
            tool_version: &'static str,
            command: &'a str,
            mode: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            session_id: Option<&'a str>,
            collected_from: Option<String>,
            collected_to: Option<String>,
            benchmark: serde_json::Value,
            providers: &'a [ProviderSpec],
            settings: serde_json::Value,
        }
        let window = self.gateway.served_window();
        let manifest = Manifest {
            format_version: report::REPORT_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            mode: self.gateway.mode().as_str(),
            session_id: (self.gateway.mode() == RunMode::LiveRecord).then(|| self.gateway.session_id()),
            collected_from: window.map(|(lo, _)| lo.to_rfc3339()),
            collected_to: window.map(|(_, hi)| hi.to_rfc3339()),
            benchmark: json!({
                "name": self.benchmark.name,
                "source": self.benchmark_source,
                "questions": self.benchmark.len(),
            }),
            providers: &self.specs,
            settings,
        };
        let mut text = serde_json::to_string_pretty(&serde_json::to_value(&manifest)?)?;
        text.push('\n');
        let path = self.out.join(MANIFEST_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn write_report(out: &Path, name: &str, report: &Report, format: ReportFormat) -> Result<()> {
    let path = out.join(format!("{name}.{}", format.extension()));
    report::emit_report(report, format, &path)?;
    Ok(())
}

/// Keeps provider ids usable as file name components.
fn file_stem(provider_id: &str) -> String {
    provider_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_consistency(args: &ConsistencyArgs) -> Result<Verdict> {
    let profile = args.thresholds.profile()?;
    let rule = args.rule()?;
    if args.k < 2 {
        bail!("--k must be at least 2 for consistency analysis, got {}", args.k);
    }
    let session = Session::open(&args.run)?;
    let ids = session.provider_ids();

    let results = exec::map(Execution::default(), &ids, |id| {
        let req = ConsistencyRequest {
            provider_id: id,
            benchmark: &session.benchmark,
            k: args.k,
            profile,
            rule,
            tokenizer: TokenizerConfig::default(),
        };
        run_consistency(&session.gateway, &req)
    });
    session.gateway.flush()?;
    let verdicts = ids
        .iter()
        .zip(results)
        .map(|(id, r)| r.with_context(|| format!("provider {id:?}")))
        .collect::<Result<Vec<ModelConsistencyVerdict>>>()?;

    let mut series = Vec::with_capacity(verdicts.len());
    for v in &verdicts {
        session.write(&format!("consistency_{}", file_stem(&v.provider_id)), &report::consistency_report(v, &session.benchmark))?;
        let by_m = (1..=4u8)
            .map(|m| Ok(reevaluate(v, &profile, &AggregationRule::new(rule.semantics, m)?)?))
            .collect::<Result<Vec<_>>>()?;
        series.push((report::pass_rate_series(&by_m)?, None));
    }
    session.write("consistency_summary", &report::consistency_summary_report(&verdicts))?;
    session.write("pass_rates", &report::pass_rate_report(&series))?;
    let pairs: Vec<ProviderPairs> = verdicts
        .iter()
        .map(|v| ProviderPairs::from_verdict(v, &session.benchmark))
        .collect();
    write_report(&session.out, "pair_scores", &report::pair_scores_report(&pairs), ReportFormat::Json)?;
    session.write_manifest(
        "consistency",
        json!({ "k": args.k, "profile": profile, "rule": rule }),
    )?;

    for v in &verdicts {
        println!(
            "{}: {} ({}/{} questions consistent)",
            v.provider_id,
            status(v.passed),
            v.passed_questions,
            v.questions.len()
        );
    }
    Ok(Verdict::from_all(verdicts.iter().map(|v| v.passed)))
}

fn cmd_self_validate(args: &ValidateArgs) -> Result<Verdict> {
    let settings = args.settings();
    settings.validate()?;
    let session = Session::open(&args.run)?;
    let ids = session.provider_ids();
    let results = exec::map(Execution::default(), &ids, |id| {
        self_validate(&session.gateway, id, &session.benchmark, &settings)
    });
    session.gateway.flush()?;
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    session.write("self_validation", &report::self_validation_report(&reports))?;
    session.write("self_validation_summary", &report::self_validation_summary_report(&reports))?;
    session.write_manifest("self-validate", json!({ "validation": settings }))?;

    for r in &reports {
        println!(
            "{}: {} ({}/{} questions self-validated){}",
            r.provider_id,
            status(r.passed),
            r.passed_questions,
            r.questions.len(),
            if r.non_validatable { ", non-validatable" } else { "" }
        );
    }
    Ok(Verdict::from_all(reports.iter().map(|r| r.passed)))
}

fn cmd_cross_validate(args: &CrossValidateArgs) -> Result<Verdict> {
    let settings = args.settings();
    settings.validate()?;
    let session = Session::open(&args.validate.run)?;
    let ids = session.provider_ids();
    if ids.len() < 2 {
        bail!("cross-validation needs at least 2 providers, got {}", ids.len());
    }
    let cv = cross_validate(&session.gateway, &ids, &session.benchmark, &settings)?;
    session.gateway.flush()?;

    session.write("cross_validation", &report::cross_validation_report(&cv))?;
    session.write("cross_validation_votes", &report::cross_validation_votes_report(&cv))?;
    session.write("cross_validation_summary", &report::cross_validation_summary_report(&cv))?;
    session.write_manifest("cross-validate", json!({ "validation": settings }))?;

    for p in &cv.providers {
        println!(
            "{}: {} ({}/{} questions cross-validated)",
            p.provider_id,
            status(p.cross_validated),
            p.passed_questions,
            p.questions.len()
        );
    }
    for id in &cv.excluded_validators {
        println!("{id}: excluded as validator (non-validatable)");
    }
    Ok(Verdict::from_all(cv.flags()))
}

fn cmd_report(args: &ReportArgs) -> Result<Verdict> {
    let profiles = args.profiles()?;
    let mut merged: BTreeMap<String, usize> = BTreeMap::new();
    let mut providers: Vec<ProviderPairs> = Vec::new();
    for path in &args.pairs {
        let loaded = Report::load(path)
            .and_then(|r| report::pairs_from_report(&r))
            .with_context(|| format!("reading pair scores {}", path.display()))?;
        for p in loaded {
            match merged.get(&p.provider_id) {
                Some(&i) => providers[i].questions.extend(p.questions),
                None => {
                    merged.insert(p.provider_id.clone(), providers.len());
                    providers.push(p);
                }
            }
        }
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let format = ReportFormat::from(args.format);

    let info = report::average_scores(&providers, Some(QuestionKind::Informational));
    let situ = report::average_scores(&providers, Some(QuestionKind::Situational));
    let diff = report::score_difference(&info.rows, &situ.rows);
    for warning in info.warnings.iter().chain(&situ.warnings).chain(&diff.warnings) {
        eprintln!("warning: {warning}");
    }
    write_report(&args.out, "average_scores_informational", &report::average_scores_report(&info, Some(QuestionKind::Informational)), format)?;
    write_report(&args.out, "average_scores_situational", &report::average_scores_report(&situ, Some(QuestionKind::Situational)), format)?;
    write_report(&args.out, "score_difference", &report::difference_report(&diff), format)?;

    let mut series = Vec::new();
    for p in &providers {
        for profile in &profiles {
            for kind in [QuestionKind::Informational, QuestionKind::Situational] {
                if let Some(s) = report::pass_rate_series_from_pairs(p, profile, args.rule.into(), Some(kind))? {
                    series.push((s, Some(kind)));
                }
            }
        }
    }
    write_report(&args.out, "pass_rates", &report::pass_rate_report(&series), format)?;
    println!(
        "{} providers, {} pass-rate series written to {}",
        providers.len(),
        series.len(),
        args.out.display()
    );
    Ok(Verdict::Pass)
}
