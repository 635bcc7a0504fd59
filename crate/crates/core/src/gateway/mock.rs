//! Deterministic in-process providers for tests and offline demos.
//!
//! Every answer depends only on the prompt and the repetition index, never
//! on call order, so concurrent runs and replays agree.

use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Provider, ProviderError};

pub const YES_TEXT: &str = "Yes, that answer is correct.";
pub const NO_TEXT: &str = "No, that answer is not correct.";
pub const REFUSAL_TEXT: &str = "I think it's a good question.";

const DISJOINT_BASE: u32 = 0x4E00;
const DISJOINT_BLOCK: u32 = 32;
const DISJOINT_BLOCKS: u32 = 640;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MockBehavior {
    /// Repeats the prompt.
    Echo,
    Constant { text: String },
    /// Repetition `r` answers `texts[(r - 1) % len]`.
    Cycling { texts: Vec<String> },
    /// Gibberish whose characters come from a block reserved for the
    /// repetition index, so different repetitions share no token and no
    /// character other than the word separator.
    Disjoint {
        #[serde(default = "default_disjoint_words")]
        words: usize,
    },
    YesSayer,
    NoSayer,
    /// Never commits to yes or no.
    Refuser,
    /// The first rule whose `contains` occurs in the prompt picks the
    /// answer list, otherwise `default`; lists cycle by repetition.
    Scripted {
        #[serde(default)]
        rules: Vec<ScriptRule>,
        default: Vec<String>,
        /// Fails every call with this repetition index (transient error).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fail_on_repetition: Option<u32>,
    },
}

fn default_disjoint_words() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptRule {
    pub contains: String,
    pub responses: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MockCall {
    pub prompt: String,
    pub repetition_index: u32,
    pub at: Instant,
}

#[derive(Debug)]
pub struct MockProvider {
    behavior: MockBehavior,
    calls: Mutex<Vec<MockCall>>,
}

impl MockProvider {
    pub fn new(behavior: MockBehavior) -> Self {
        MockProvider {
            behavior,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn behavior(&self) -> &MockBehavior {
        &self.behavior
    }

    pub fn call_log(&self) -> Vec<MockCall> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn answer(&self, prompt: &str, repetition_index: u32) -> Result<String, ProviderError> {
        let rep = repetition_index.max(1) as usize;
        let pick = |list: &[String]| -> Result<String, ProviderError> {
            if list.is_empty() {
                return Err(ProviderError::Malformed("mock has no responses".into()));
            }
            Ok(list[(rep - 1) % list.len()].clone())
        };
        match &self.behavior {
            MockBehavior::Echo => Ok(prompt.to_string()),
            MockBehavior::Constant { text } => Ok(text.clone()),
            MockBehavior::Cycling { texts } => pick(texts),
            MockBehavior::Disjoint { words } => Ok(disjoint_text(prompt, repetition_index, *words)),
            MockBehavior::YesSayer => Ok(YES_TEXT.to_string()),
            MockBehavior::NoSayer => Ok(NO_TEXT.to_string()),
            MockBehavior::Refuser => Ok(REFUSAL_TEXT.to_string()),
            MockBehavior::Scripted {
                rules,
                default,
                fail_on_repetition,
            } => {
                if *fail_on_repetition == Some(repetition_index) {
                    return Err(ProviderError::Transient(format!(
                        "scripted failure at repetition {repetition_index}"
                    )));
                }
                match rules.iter().find(|r| prompt.contains(&r.contains)) {
                    Some(rule) => pick(&rule.responses),
                    None => pick(default),
                }
            }
        }
    }
}

impl Provider for MockProvider {
    fn complete(&self, prompt: &str, repetition_index: u32) -> Result<String, ProviderError> {
        self.calls
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(MockCall {
                prompt: prompt.to_string(),
                repetition_index,
                at: Instant::now(),
            });
        self.answer(prompt, repetition_index)
    }
}

fn disjoint_text(prompt: &str, repetition_index: u32, words: usize) -> String {
    let block = DISJOINT_BASE + (repetition_index.saturating_sub(1) % DISJOINT_BLOCKS) * DISJOINT_BLOCK;
    // FNV-1a over the prompt seeds a small LCG for the character choice.
    let mut state = prompt
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
    let mut next = || {
        state = state
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        ((state >> 33) % u64::from(DISJOINT_BLOCK)) as u32
    };
    (0..words.max(1))
        .map(|_| {
            (0..5)
                .map(|_| char::from_u32(block + next()).expect("CJK block is valid"))
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn disjoint_repetitions_share_no_characters() {
        let m = MockProvider::new(MockBehavior::Disjoint { words: 8 });
        let a = m.answer("What is a VPN?", 1).unwrap();
        let b = m.answer("What is a VPN?", 2).unwrap();
        assert_eq!(a, m.answer("What is a VPN?", 1).unwrap());
        let ca: HashSet<char> = a.chars().filter(|c| *c != ' ').collect();
        let cb: HashSet<char> = b.chars().filter(|c| *c != ' ').collect();
        assert!(ca.is_disjoint(&cb));
        assert_eq!(a.split(' ').count(), 8);
    }

    #[test]
    fn scripted_rules_and_failures() {
        let m = MockProvider::new(MockBehavior::Scripted {
            rules: vec![ScriptRule {
                contains: "Central Intelligence Agency".into(),
                responses: vec!["No.".into()],
            }],
            default: vec!["Yes.".into(), "Yes!".into()],
            fail_on_repetition: Some(4),
        });
        assert_eq!(m.answer("... the Central Intelligence Agency ...", 2).unwrap(), "No.");
        assert_eq!(m.answer("other", 2).unwrap(), "Yes!");
        assert!(m.answer("other", 4).unwrap_err().is_transient());
    }

    #[test]
    fn call_log_records_every_call() {
        let m = MockProvider::new(MockBehavior::YesSayer);
        m.complete("a", 1).unwrap();
        m.complete("b", 2).unwrap();
        let log = m.call_log();
        assert_eq!(log.len(), 2);
        assert_eq!(log[1].prompt, "b");
        assert_eq!(log[1].repetition_index, 2);
    }

    #[test]
    fn behaviors_deserialize_from_tagged_form() {
        let b: MockBehavior = serde_json::from_str(r#"{"kind":"disjoint"}"#).unwrap();
        assert_eq!(b, MockBehavior::Disjoint { words: 8 });
        let b: MockBehavior = serde_json::from_str(r#"{"kind":"yes_sayer"}"#).unwrap();
        assert_eq!(b, MockBehavior::YesSayer);
    }
}
