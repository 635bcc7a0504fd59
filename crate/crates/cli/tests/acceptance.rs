//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p llm-audit-cli --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use llm_audit::consistency::{
    evaluate_question, required_pair_count, run_consistency, score_all_pairs, AggregationRule,
    AggregationSemantics, ConsistencyRequest, ThresholdProfile,
};
use llm_audit::corpus::Benchmark;
use llm_audit::gateway::{Gateway, MockBehavior, ProviderSpec, ResponseCache, RunMode, ScriptRule};
use llm_audit::report::{self, AverageScoreRow, Cell, MetricMeans};
use llm_audit::similarity::{
    cosine_similarity, jaccard_similarity, levenshtein_similarity, sequence_similarity,
    similarity_vector, SimilarityVector, TokenizerConfig,
};
use llm_audit::validation::{
    cross_validate, pool_size, question_agreed, self_validate, PoolConvention, ValidationSettings,
    VALIDATION_SUFFIX,
};

const SEED: u64 = 0x5eed_a11d;

fn main() {
    let suite_start = Instant::now();
    let criteria: [(u8, &str, Option<u64>, fn() -> Result<String>); 10] = [
        (1, "metric oracle equivalence", Some(30), c1_oracles),
        (2, "metric property suite", Some(10), c2_properties),
        (3, "worked metric values", None, c3_worked_values),
        (4, "per-metric m=4 rule matches brute force", None, c4_rule_fidelity),
        (5, "threshold and m monotonicity", None, c5_monotonicity),
        (6, "deterministic mock behavior", None, c6_mocks),
        (7, "self-validation boundaries", None, c7_self_validation),
        (8, "cross-validation scenario and pools", None, c8_cross_validation),
        (9, "information minus situation table", None, c9_difference_table),
        (10, "replay determinism through the CLI", None, c10_replay),
    ];

    let mut failures = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(anyhow::anyhow!("panicked: {}", panic_text(&p))));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(secs)) if elapsed > Duration::from_secs(secs) => {
                Err(anyhow::anyhow!("took {elapsed:.2?}, limit {secs}s"))
            }
            (o, _) => o,
        };
        let outcome = match outcome {
            Ok(detail) if id == 10 && suite_start.elapsed() > Duration::from_secs(120) => Err(anyhow::anyhow!(
                "{detail}; full suite took {:.2?}, limit 120s",
                suite_start.elapsed()
            )),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("PASS [{id:>2}] {name} ({elapsed:.2?}): {detail}"),
            Err(e) => {
                failures += 1;
                println!("FAIL [{id:>2}] {name} ({elapsed:.2?}): {e:#}");
            }
        }
    }
    println!(
        "acceptance: {} of 10 criteria passed in {:.2?}",
        10 - failures,
        suite_start.elapsed()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- 1

/// Full-matrix edit distance, no shortcuts.
fn naive_levenshtein(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn oracle_levenshtein_similarity(a: &str, b: &str) -> f64 {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 100.0;
    }
    (longest - naive_levenshtein(&a, &b)) as f64 / longest as f64 * 100.0
}

fn distinct(tokens: &[String]) -> Vec<&String> {
    let mut out: Vec<&String> = Vec::new();
    for t in tokens {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

fn oracle_jaccard(a: &[String], b: &[String]) -> f64 {
    let (sa, sb) = (distinct(a), distinct(b));
    if sa.is_empty() && sb.is_empty() {
        return 100.0;
    }
    let inter = sa.iter().filter(|t| sb.contains(t)).count();
    inter as f64 / (sa.len() + sb.len() - inter) as f64 * 100.0
}

fn oracle_cosine(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 100.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let all: Vec<String> = a.iter().chain(b).cloned().collect();
    let vocab = distinct(&all);
    let count = |list: &[String], w: &String| list.iter().filter(|t| *t == w).count() as f64;
    let va: Vec<f64> = vocab.iter().map(|w| count(a, w)).collect();
    let vb: Vec<f64> = vocab.iter().map(|w| count(b, w)).collect();
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(&va) * norm(&vb)) * 100.0
}

fn random_abc(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(0..=12);
    (0..len).map(|_| ['a', 'b', 'c'][rng.random_range(0..3)]).collect()
}

fn random_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    let len = rng.random_range(0..=10);
    (0..len).map(|_| format!("w{}", rng.random_range(0..15))).collect()
}

/// Tokens joined by spaces, with random capitalisation the tokenizer must fold.
fn render(tokens: &[String], rng: &mut ChaCha8Rng) -> String {
    tokens
        .iter()
        .map(|t| if rng.random_bool(0.3) { t.to_uppercase() } else { t.clone() })
        .collect::<Vec<_>>()
        .join(" ")
}

fn c1_oracles() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cfg = TokenizerConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (a, b) = (random_abc(&mut rng), random_abc(&mut rng));
        let diff = (levenshtein_similarity(&a, &b) - oracle_levenshtein_similarity(&a, &b)).abs();
        worst = worst.max(diff);
        ensure!(diff <= 1e-9, "levenshtein {a:?} {b:?}: off by {diff}");
    }
    for _ in 0..10_000 {
        let (ta, tb) = (random_tokens(&mut rng), random_tokens(&mut rng));
        let (a, b) = (render(&ta, &mut rng), render(&tb, &mut rng));
        let j = jaccard_similarity(&a, &b, &cfg);
        let c = cosine_similarity(&a, &b, &cfg);
        ensure!(close(j, oracle_jaccard(&ta, &tb), 1e-9), "jaccard {a:?} {b:?}: {j}");
        ensure!(close(c, oracle_cosine(&ta, &tb), 1e-9), "cosine {a:?} {b:?}: {c}");
        worst = worst.max((j - oracle_jaccard(&ta, &tb)).abs());
        worst = worst.max((c - oracle_cosine(&ta, &tb)).abs());
    }
    Ok(format!("30000 comparisons, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- 2

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'D', 'e', '1', ' ', ' ', ',', '.', '!', 'é', '中', '\n'];
    let len = rng.random_range(0..=40);
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

fn c2_properties() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let cfg = TokenizerConfig::default();
    let in_range = |v: &SimilarityVector| v.as_array().iter().all(|x| (0.0..=100.0).contains(x));
    for _ in 0..10_000 {
        let (a, b) = (random_text(&mut rng), random_text(&mut rng));
        let ab = similarity_vector(&a, &b, &cfg);
        let ba = similarity_vector(&b, &a, &cfg);
        ensure!(in_range(&ab), "out of range for {a:?} {b:?}: {ab:?}");
        for (x, y) in ab.as_array().iter().zip(ba.as_array()) {
            ensure!(close(*x, y, 1e-9), "asymmetric for {a:?} {b:?}: {ab:?} vs {ba:?}");
        }
        ensure!(
            similarity_vector(&a, &a, &cfg) == SimilarityVector::IDENTICAL,
            "identity fails for {a:?}"
        );

        // Words over a..m against words over n..z share no token.
        let word = |rng: &mut ChaCha8Rng, lo: u8| -> String {
            (0..rng.random_range(1..6)).map(|_| (lo + rng.random_range(0..13)) as char).collect()
        };
        let left: Vec<String> = (0..rng.random_range(1..8)).map(|_| word(&mut rng, b'a')).collect();
        let right: Vec<String> = (0..rng.random_range(1..8)).map(|_| word(&mut rng, b'n')).collect();
        let (l, r) = (left.join(" "), right.join(" "));
        ensure!(jaccard_similarity(&l, &r, &cfg) == 0.0, "jaccard of disjoint {l:?} {r:?}");
        ensure!(cosine_similarity(&l, &r, &cfg) == 0.0, "cosine of disjoint {l:?} {r:?}");
    }
    ensure!(similarity_vector("", "", &cfg) == SimilarityVector::IDENTICAL, "both empty");
    Ok("10000 random pairs plus 10000 disjoint-vocabulary pairs".into())
}

// ---------------------------------------------------------------- 3

fn c3_worked_values() -> Result<String> {
    let cfg = TokenizerConfig::default();
    let lev = levenshtein_similarity("kitten", "sitting");
    let seq = sequence_similarity("abcd", "bcde");
    let cos = cosine_similarity("a a b", "a b b", &cfg);
    let jac = jaccard_similarity("a b c", "b c d", &cfg);
    ensure!(close(lev, 57.142857, 1e-6), "levenshtein(kitten, sitting) = {lev}");
    ensure!(close(seq, 75.0, 1e-9), "sequence(abcd, bcde) = {seq}");
    ensure!(close(cos, 80.0, 1e-9), "cosine(a a b, a b b) = {cos}");
    ensure!(close(jac, 50.0, 1e-9), "jaccard(a b c, b c d) = {jac}");
    Ok(format!("{lev:.6} / {seq} / {cos} / {jac}"))
}

// ---------------------------------------------------------------- 4, 5

const WORDS: &[&str] = &[
    "encrypt", "the", "data", "firewall", "blocks", "traffic", "use", "strong", "passwords",
    "report", "phishing", "email", "patch", "systems", "quickly", "and",
];

/// A base answer and `k` noisy copies of it; noise level varies per set.
fn response_set(rng: &mut ChaCha8Rng) -> Vec<String> {
    let k = rng.random_range(2..=8);
    let base: Vec<&str> = (0..rng.random_range(4..14))
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect();
    let noise = rng.random_range(0.0..0.6);
    (0..k)
        .map(|_| {
            let mut words = Vec::new();
            for &w in &base {
                if rng.random_bool(noise) {
                    match rng.random_range(0..3) {
                        0 => {}
                        1 => words.push(WORDS[rng.random_range(0..WORDS.len())]),
                        _ => {
                            words.push(w);
                            words.push(WORDS[rng.random_range(0..WORDS.len())]);
                        }
                    }
                } else {
                    words.push(w);
                }
            }
            if words.is_empty() {
                words.push(base[0]);
            }
            words.join(" ")
        })
        .collect()
}

fn c4_rule_fidelity() -> Result<String> {
    ensure!(required_pair_count(5, 0.8)? == 8, "npt(5, 0.8) = {}", required_pair_count(5, 0.8)?);
    let cfg = TokenizerConfig::default();
    let rule = AggregationRule::per_metric(4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut passed, mut failed) = (0, 0);
    for _ in 0..1_000 {
        let responses = response_set(&mut rng);
        let k = responses.len();
        // Brute force: every unordered pair, counted per metric.
        let mut vectors = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                vectors.push(similarity_vector(&responses[i], &responses[j], &cfg));
            }
        }
        let total = vectors.len();
        // Smallest c with c / total >= 4/5, in integers.
        let npt = (0..=total).find(|c| 5 * c >= 4 * total).expect("total itself qualifies");
        ensure!(npt == required_pair_count(k, 0.8)?, "npt mismatch for k={k}");
        let pairs = score_all_pairs(&responses, &cfg)?;
        for profile in ThresholdProfile::presets() {
            let th = profile.thresholds();
            let counts: Vec<usize> = (0..4)
                .map(|m| vectors.iter().filter(|v| v.as_array()[m] >= th[m]).count())
                .collect();
            let expected = counts.iter().all(|&c| c >= npt);
            let got = evaluate_question("Q", &pairs, &profile, &rule, k)?;
            ensure!(
                got.passed == expected,
                "k={k} profile {} counts {counts:?} npt {npt}: engine says {}",
                profile.name,
                got.passed
            );
            if expected {
                passed += 1;
            } else {
                failed += 1;
            }
        }
    }
    ensure!(passed > 0 && failed > 0, "fixture too one-sided: {passed} pass, {failed} fail");
    Ok(format!("1000 sets x 3 profiles agree ({passed} pass, {failed} fail); npt(5, 0.8) = 8"))
}

fn c5_monotonicity() -> Result<String> {
    let cfg = TokenizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let profiles = [ThresholdProfile::high(), ThresholdProfile::medium(), ThresholdProfile::low()];
    let mut checks = 0;
    let mut violations = Vec::new();
    for n in 0..1_000 {
        let responses = response_set(&mut rng);
        let k = responses.len();
        let pairs = score_all_pairs(&responses, &cfg)?;
        for semantics in [AggregationSemantics::PerMetric, AggregationSemantics::PerPair] {
            // verdict[p][m-1] for profiles high, medium, low.
            let mut verdict = [[false; 4]; 3];
            for (p, profile) in profiles.iter().enumerate() {
                for m in 1..=4u8 {
                    let rule = AggregationRule::new(semantics, m)?;
                    verdict[p][usize::from(m) - 1] = evaluate_question("Q", &pairs, profile, &rule, k)?.passed;
                }
            }
            for m in 0..4 {
                for p in 0..2 {
                    checks += 1;
                    if verdict[p][m] && !verdict[p + 1][m] {
                        violations.push(format!("set {n} {semantics:?} m={} profile order", m + 1));
                    }
                }
            }
            for row in &verdict {
                for m in 0..3 {
                    checks += 1;
                    if row[m + 1] && !row[m] {
                        violations.push(format!("set {n} {semantics:?} m={} over m={}", m + 2, m + 1));
                    }
                }
            }
        }
    }
    if !violations.is_empty() {
        bail!("{} violations, first: {}", violations.len(), violations[0]);
    }
    Ok(format!("{checks} implications checked, 0 violations"))
}

// ---------------------------------------------------------------- 6, 7, 8

fn mock_gateway(providers: Vec<(&str, MockBehavior)>) -> Result<Gateway> {
    let mut gw = Gateway::new(RunMode::LiveRecord, ResponseCache::in_memory());
    for (id, behavior) in providers {
        gw.add_from_spec(ProviderSpec::mock(id, behavior))?;
    }
    Ok(gw)
}

fn c6_mocks() -> Result<String> {
    let benchmark = Benchmark::default_corpus();
    ensure!(benchmark.len() == 40, "bundled corpus has {} questions", benchmark.len());
    let gw = mock_gateway(vec![
        ("constant", MockBehavior::Constant { text: "Always the same answer.".into() }),
        ("disjoint", MockBehavior::Disjoint { words: 8 }),
    ])?;
    let request = |id, profile, m| -> Result<_> {
        Ok(ConsistencyRequest {
            provider_id: id,
            benchmark: &benchmark,
            k: 5,
            profile,
            rule: AggregationRule::per_metric(m)?,
            tokenizer: TokenizerConfig::default(),
        })
    };
    let constant = run_consistency(&gw, &request("constant", ThresholdProfile::high(), 4)?)?;
    ensure!(
        constant.passed && constant.passed_questions == 40,
        "constant mock passed {}/40 at high, m=4",
        constant.passed_questions
    );
    let disjoint = run_consistency(&gw, &request("disjoint", ThresholdProfile::low(), 1)?)?;
    ensure!(!disjoint.passed, "disjoint mock passed low at m=1");
    Ok(format!(
        "constant 40/40 at high m=4; disjoint {}/40 at low m=1",
        disjoint.passed_questions
    ))
}

fn scripted(rules: Vec<(&str, &str)>, default: &[&str]) -> MockBehavior {
    MockBehavior::Scripted {
        rules: rules
            .into_iter()
            .map(|(c, r)| ScriptRule { contains: c.into(), responses: vec![r.into()] })
            .collect(),
        default: default.iter().map(|s| s.to_string()).collect(),
        fail_on_repetition: None,
    }
}

fn c7_self_validation() -> Result<String> {
    let benchmark = Benchmark::default_corpus();
    let settings = ValidationSettings::default();
    let gw = mock_gateway(vec![
        ("yes", MockBehavior::YesSayer),
        ("four-of-five", scripted(vec![], &["Yes", "Yes", "Yes", "Yes", "No"])),
        ("refuser", MockBehavior::Refuser),
    ])?;
    let yes = self_validate(&gw, "yes", &benchmark, &settings)?;
    ensure!(yes.passed && yes.passed_questions == 40, "yes-sayer passed {}/40", yes.passed_questions);
    let four = self_validate(&gw, "four-of-five", &benchmark, &settings)?;
    ensure!(
        four.passed_questions == 0 && four.questions.iter().all(|q| q.tally.yes_count == 4),
        "4-of-5 mock passed {} questions",
        four.passed_questions
    );
    let refuser = self_validate(&gw, "refuser", &benchmark, &settings)?;
    ensure!(refuser.non_validatable && !refuser.passed, "refuser not flagged");
    Ok("yes-sayer 40/40, 4-of-5 0/40, refuser non-validatable".into())
}

fn c8_cross_validation() -> Result<String> {
    const WRONG: &str = "CIA stands for the Central Intelligence Agency.";
    let benchmark = Benchmark::default_corpus();
    let target = benchmark
        .questions
        .iter()
        .find(|q| q.text.contains("CIA triad"))
        .map(|q| q.text.clone())
        .ok_or_else(|| anyhow::anyhow!("no CIA triad question in corpus"))?;
    let critic = || scripted(vec![(WRONG, "No, that is not correct.")], &["Yes."]);
    let gw = mock_gateway(vec![
        ("answerer", scripted(vec![(VALIDATION_SUFFIX, "Yes."), (&target, WRONG)], &["A sound answer."])),
        ("v1", critic()),
        ("v2", critic()),
        ("v3", critic()),
        ("v4", critic()),
        ("v5", MockBehavior::YesSayer),
    ])?;
    let ids: Vec<String> = ["answerer", "v1", "v2", "v3", "v4", "v5"].map(String::from).to_vec();
    let cv = cross_validate(&gw, &ids, &benchmark, &ValidationSettings::default())?;
    let answerer = &cv.providers[0];
    let failed: Vec<_> = answerer.questions.iter().filter(|q| !q.passed).collect();
    ensure!(failed.len() == 1, "{} questions failed, expected 1", failed.len());
    ensure!(
        failed[0].original_response == WRONG && failed[0].agreeing_validator_count == 1 && failed[0].pool_size == 5,
        "wrong answer tallied {} of {}",
        failed[0].agreeing_validator_count,
        failed[0].pool_size
    );

    // Pool arithmetic at 0.66 for six providers (five validators) and five (four).
    let cases = [
        (4, 5, 6, PoolConvention::Validators, true),
        (3, 5, 6, PoolConvention::Validators, false),
        (4, 5, 6, PoolConvention::AllProviders, true),
        (3, 5, 6, PoolConvention::AllProviders, false),
        (3, 4, 5, PoolConvention::Validators, true),
        (3, 4, 5, PoolConvention::AllProviders, false),
    ];
    for (agreeing, voting, total, pool, expected) in cases {
        let size = pool_size(voting, total, pool);
        ensure!(
            question_agreed(agreeing, size, 0.66) == expected,
            "{agreeing} agreeing of pool {size} ({pool:?})"
        );
    }
    Ok("wrong answer rejected 4 of 5; both pool conventions checked".into())
}

// ---------------------------------------------------------------- 9

fn row(name: &str, v: [f64; 4]) -> AverageScoreRow {
    AverageScoreRow {
        provider_id: name.into(),
        means: MetricMeans { sequence: v[0], levenshtein: v[1], jaccard: v[2], cosine: v[3] },
        pair_count: 0,
    }
}

fn c9_difference_table() -> Result<String> {
    let info = [
        row("GPT 4o Mini", [30.21, 46.54, 89.75, 89.29]),
        row("GPT 3.5", [30.82, 50.56, 89.49, 84.63]),
        row("Gemini", [10.22, 32.5, 86.62, 82.1]),
        row("Cohere", [13.33, 33.35, 79.45, 81.03]),
        row("Llama3", [14.2, 33.88, 84.97, 81.24]),
    ];
    let situation = [
        row("GPT 4o Mini", [23.31, 43.62, 86.79, 81.84]),
        row("GPT 3.5", [33.02, 46.68, 84.22, 81.51]),
        row("Gemini", [12.31, 34.24, 83.9, 79.69]),
        row("Cohere", [10.6, 31.9, 73.87, 72.57]),
        row("Llama3", [13.86, 32.09, 80.63, 73.39]),
    ];
    let published: BTreeMap<&str, [f64; 4]> = BTreeMap::from([
        ("GPT 4o Mini", [6.9, 2.92, 2.96, 7.45]),
        ("GPT 3.5", [-2.2, 3.88, 5.27, 3.12]),
        ("Gemini", [-2.09, -1.74, 2.72, 2.41]),
        ("Cohere", [2.73, 1.45, 5.58, 8.46]),
        ("Llama3", [0.34, 1.79, 4.34, 7.85]),
    ]);
    let diff = report::score_difference(&info, &situation);
    ensure!(diff.rows.len() == 5 && diff.warnings.is_empty(), "unexpected table shape");
    let table = report::difference_report(&diff);
    let mut entries = 0;
    for (r, cells) in diff.rows.iter().zip(&table.rows) {
        let want = published[r.provider_id.as_str()];
        let got = [r.delta.sequence, r.delta.levenshtein, r.delta.jaccard, r.delta.cosine];
        for m in 0..4 {
            ensure!(close(got[m], want[m], 0.005), "{} metric {m}: {} vs {}", r.provider_id, got[m], want[m]);
            ensure!(cells[m + 1] == Cell::Float(want[m]), "{} presented as {:?}", r.provider_id, cells[m + 1]);
            entries += 1;
        }
    }
    Ok(format!("{entries} entries within 0.005"))
}

// ---------------------------------------------------------------- 10

const MOCKS: &str = r#"
[[provider]]
provider_id = "steady"
request_shape = "mock"
mock = { kind = "constant", text = "Use multi-factor authentication and strong passwords." }

[[provider]]
provider_id = "flip"
request_shape = "mock"
mock = { kind = "cycling", texts = ["Patch your systems promptly.", "Patch systems promptly and often."] }

[[provider]]
provider_id = "noise"
request_shape = "mock"
mock = { kind = "disjoint" }

[[provider]]
provider_id = "yes"
request_shape = "mock"
mock = { kind = "yes_sayer" }

[[provider]]
provider_id = "shy"
request_shape = "mock"
mock = { kind = "refuser" }
"#;

fn llm_audit(args: &[&str]) -> Result<i32> {
    let out = Command::new(env!("CARGO_BIN_EXE_llm-audit")).args(args).output()?;
    let code = out.status.code().unwrap_or(-1);
    if code == 2 {
        bail!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    Ok(code)
}

/// Every provider command plus `report`, writing under `root/<label>`.
fn full_run(providers: &Path, cache: &Path, root: &Path, mode: &str) -> Result<Vec<i32>> {
    let (p, c) = (providers.to_str().unwrap(), cache.to_str().unwrap());
    let dir = |name: &str| root.join(name).display().to_string();
    let mut codes = Vec::new();
    for command in ["consistency", "self-validate", "cross-validate"] {
        for format in ["json", "csv"] {
            let out = dir(&format!("{command}-{format}"));
            codes.push(llm_audit(&[command, "--providers", p, "--cache", c, "--out", &out, "--mode", mode, "--format", format])?);
        }
    }
    let pairs = root.join("consistency-json/pair_scores.json");
    codes.push(llm_audit(&["report", "--pairs", pairs.to_str().unwrap(), "--out", &dir("report")])?);
    Ok(codes)
}

fn tree(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root)?.to_path_buf(), fs::read(&path)?);
            }
        }
    }
    Ok(files)
}

fn c10_replay() -> Result<String> {
    let tmp = tempfile::tempdir()?;
    let providers = tmp.path().join("providers.toml");
    let cache = tmp.path().join("cache.jsonl");
    fs::write(&providers, MOCKS)?;

    let recorded = full_run(&providers, &cache, &tmp.path().join("record"), "live-record")?;
    let journal = fs::read(&cache)?;
    let first = full_run(&providers, &cache, &tmp.path().join("replay-1"), "replay")?;
    let second = full_run(&providers, &cache, &tmp.path().join("replay-2"), "replay")?;
    ensure!(fs::read(&cache)? == journal, "replay modified the cache");
    ensure!(first == second && first == recorded, "exit codes differ: {recorded:?} {first:?} {second:?}");

    let (a, b) = (tree(&tmp.path().join("replay-1"))?, tree(&tmp.path().join("replay-2"))?);
    ensure!(a.keys().eq(b.keys()), "replays wrote different file sets");
    for (path, bytes) in &a {
        ensure!(&b[path] == bytes, "{} differs between replays", path.display());
    }
    let rec = tree(&tmp.path().join("record"))?;
    let mut compared = 0;
    for (path, bytes) in &rec {
        if path.file_name().is_some_and(|n| n == "manifest.json") {
            continue;
        }
        ensure!(a.get(path) == Some(bytes), "{} differs between record and replay", path.display());
        compared += 1;
    }
    Ok(format!(
        "{} files byte-identical across two replays, {compared} report files match the recording",
        a.len()
    ))
}
