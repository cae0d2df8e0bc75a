//! The single entry point engines use to talk to a model: renders the
//! prompt, enforces the call budget, retries transient failures and keeps a
//! transcript of every attempt.

use super::catalog::{render, Bindings, RenderError};
use super::proposal::{Proposal, Shape};
use super::provider::{ChatProvider, ChatRequest, ProviderError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("LLM call budget exhausted ({used}/{cap})")]
pub struct CallBudgetExhausted {
    pub used: u64,
    pub cap: u64,
}

/// Completed model round-trips. Failed attempts are not charged; they show
/// up in the transcript instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallLedger {
    used: u64,
    cap: u64,
    per_template: BTreeMap<String, u64>,
}

impl CallLedger {
    pub fn new(cap: u64) -> Self {
        CallLedger { used: 0, cap, per_template: BTreeMap::new() }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn remaining(&self) -> u64 {
        self.cap - self.used
    }

    pub fn per_template(&self) -> &BTreeMap<String, u64> {
        &self.per_template
    }

    fn check(&self) -> Result<(), CallBudgetExhausted> {
        if self.used >= self.cap {
            return Err(CallBudgetExhausted { used: self.used, cap: self.cap });
        }
        Ok(())
    }

    fn commit(&mut self, template_id: &str) {
        self.used += 1;
        *self.per_template.entry(template_id.to_owned()).or_default() += 1;
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Budget(#[from] CallBudgetExhausted),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("provider failed after {attempts} attempt(s): {source}")]
    Provider { attempts: u32, source: ProviderError },
    #[error("prompt for `{template}` is {len} bytes, over the {cap}-byte cap")]
    PromptTooLarge { template: String, len: usize, cap: usize },
    #[error("transcript: {0}")]
    Transcript(String),
}

/// One attempt, successful or not, as written to the transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub template: String,
    pub attempt: u32,
    pub system: String,
    pub user: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Text appended to every user message that does not already contain
/// `marker`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub marker: String,
    pub block: String,
}

pub struct Gateway {
    provider: Box<dyn ChatProvider>,
    ledger: CallLedger,
    max_retries: u32,
    prompt_cap: Option<usize>,
    injection: Option<Injection>,
    transcript: Vec<TranscriptEntry>,
    sink: Option<Box<dyn Write + Send>>,
    seq: u64,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("ledger", &self.ledger).field("transcript", &self.transcript.len()).finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(provider: Box<dyn ChatProvider>, call_cap: u64) -> Self {
        Gateway {
            provider,
            ledger: CallLedger::new(call_cap),
            max_retries: 0,
            prompt_cap: None,
            injection: None,
            transcript: Vec::new(),
            sink: None,
            seq: 0,
        }
    }

    pub fn with_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    pub fn with_prompt_cap(mut self, cap: usize) -> Self {
        self.prompt_cap = Some(cap);
        self
    }

    pub fn with_injection(mut self, injection: Injection) -> Self {
        self.injection = Some(injection);
        self
    }

    /// Stream transcript entries as JSON lines in addition to keeping them.
    pub fn with_sink(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn ledger(&self) -> &CallLedger {
        &self.ledger
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    fn record(&mut self, entry: TranscriptEntry) -> Result<(), GatewayError> {
        if let Some(sink) = &mut self.sink {
            let line = serde_json::to_string(&entry).expect("transcript entries serialize");
            writeln!(sink, "{line}").and_then(|()| sink.flush()).map_err(|e| GatewayError::Transcript(e.to_string()))?;
        }
        self.transcript.push(entry);
        Ok(())
    }

    /// Render `template_id`, make one charged round-trip and parse the reply
    /// into `shape`. An incomplete parse is returned as is; it is not an
    /// error here.
    pub fn propose(&mut self, template_id: &str, bindings: &Bindings, shape: Shape) -> Result<Proposal, GatewayError> {
        self.ledger.check()?;
        let prompt = render(template_id, bindings)?;
        let mut user = prompt.user;
        if let Some(inj) = &self.injection {
            if !user.contains(&inj.marker) {
                user.push_str(&inj.block);
            }
        }
        if let Some(cap) = self.prompt_cap {
            let len = prompt.system.len() + user.len();
            if len > cap {
                return Err(GatewayError::PromptTooLarge { template: template_id.to_owned(), len, cap });
            }
        }
        let request = ChatRequest { template_id: prompt.template_id, system: prompt.system, user, shape };
        self.seq += 1;
        let mut attempt = 0;
        loop {
            attempt += 1;
            let result = self.provider.complete(&request);
            let entry = TranscriptEntry {
                seq: self.seq,
                template: request.template_id.clone(),
                attempt,
                system: request.system.clone(),
                user: request.user.clone(),
                response: result.as_ref().ok().map(|r| r.text.clone()),
                error: result.as_ref().err().map(ToString::to_string),
            };
            self.record(entry)?;
            match result {
                Ok(response) => {
                    self.ledger.commit(&request.template_id);
                    return Ok(Proposal::parse(&response.text, shape, response.usage));
                }
                Err(e) if e.is_transient() && attempt <= self.max_retries => {
                    std::thread::sleep(std::time::Duration::from_millis(250 << attempt.min(6)));
                }
                Err(source) => return Err(GatewayError::Provider { attempts: attempt, source }),
            }
        }
    }
}

/// Stable digest of a binding set for event logs.
pub fn bindings_hash(bindings: &Bindings) -> String {
    let mut h = Sha256::new();
    for (k, v) in bindings {
        h.update((k.len() as u64).to_le_bytes());
        h.update(k.as_bytes());
        h.update((v.len() as u64).to_le_bytes());
        h.update(v.as_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::super::catalog::template;
    use super::super::provider::{ChatResponse, Fixture, FixtureEntry, ReplayProvider};
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn full_bindings(id: &str) -> Bindings {
        template(id).unwrap().placeholders().into_iter().map(|p| (p.to_owned(), format!("<{p}>"))).collect()
    }

    fn replay(entries: Vec<FixtureEntry>) -> Box<ReplayProvider> {
        Box::new(ReplayProvider::new(Fixture { entries, ..Fixture::default() }, "x = 0"))
    }

    #[test]
    fn each_round_trip_is_charged_once() {
        let mut g = Gateway::new(replay(vec![]), 3);
        let b = full_bindings("reevo_td/init");
        for _ in 0..3 {
            g.propose("reevo_td/init", &b, Shape::KnowledgeCode).unwrap();
        }
        assert_eq!(g.ledger().used(), 3);
        assert_eq!(g.ledger().per_template()["reevo_td/init"], 3);
        assert!(matches!(g.propose("reevo_td/init", &b, Shape::KnowledgeCode), Err(GatewayError::Budget(_))));
        assert_eq!(g.transcript().len(), 3);
    }

    #[test]
    fn render_errors_are_not_charged() {
        let mut g = Gateway::new(replay(vec![]), 3);
        assert!(matches!(g.propose("reevo_td/init", &Bindings::new(), Shape::Code), Err(GatewayError::Render(_))));
        assert_eq!(g.ledger().used(), 0);
    }

    struct Flaky(AtomicU32);
    impl ChatProvider for Flaky {
        fn complete(&self, _: &ChatRequest) -> Result<ChatResponse, ProviderError> {
            if self.0.fetch_add(1, Ordering::SeqCst) == 0 {
                Err(ProviderError::Transport("reset".into()))
            } else {
                Ok(ChatResponse { text: "```\nx = 1\n```".into(), usage: None })
            }
        }
    }

    #[test]
    fn retries_show_in_the_transcript_only() {
        let mut g = Gateway::new(Box::new(Flaky(AtomicU32::new(0))), 5).with_retries(1);
        let p = g.propose("dual/init-code", &full_bindings("dual/init-code"), Shape::Code).unwrap();
        assert_eq!(p.code.as_deref(), Some("x = 1"));
        assert_eq!(g.ledger().used(), 1);
        assert_eq!(g.transcript().iter().map(|e| e.attempt).collect::<Vec<_>>(), [1, 2]);
        assert!(g.transcript()[0].error.is_some());
    }

    #[test]
    fn injection_and_cap() {
        let inj = Injection { marker: "# Source code".into(), block: "\n# Source code\nSRC".into() };
        let mut g = Gateway::new(replay(vec![]), 5).with_injection(inj);
        g.propose("dual/init-code", &full_bindings("dual/init-code"), Shape::Code).unwrap();
        assert!(g.transcript()[0].user.ends_with("# Source code\nSRC"));
        let mut g = Gateway::new(replay(vec![]), 5).with_prompt_cap(10);
        assert!(matches!(
            g.propose("dual/init-code", &full_bindings("dual/init-code"), Shape::Code),
            Err(GatewayError::PromptTooLarge { .. })
        ));
        assert_eq!(g.ledger().used(), 0);
    }

    #[test]
    fn bindings_hash_depends_on_boundaries() {
        let a: Bindings = [("ab".to_owned(), "c".to_owned())].into();
        let b: Bindings = [("a".to_owned(), "bc".to_owned())].into();
        assert_ne!(bindings_hash(&a), bindings_hash(&b));
        assert_eq!(bindings_hash(&a), bindings_hash(&a.clone()));
    }
}
