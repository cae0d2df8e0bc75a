//! Prompt catalog, model providers and the call-budgeted gateway.

mod catalog;
mod gateway;
mod proposal;
mod provider;

pub use catalog::{fill, render, role_of, template, template_ids, Bindings, PromptTemplate, RenderError, RenderedPrompt, Role};
pub use gateway::{bindings_hash, CallBudgetExhausted, CallLedger, Gateway, GatewayError, Injection, TranscriptEntry};
pub use proposal::{Proposal, Shape, Usage};
pub use provider::{
    parse_completion, ChatProvider, ChatRequest, ChatResponse, Fallback, Fixture, FixtureEntry, HttpConfig, HttpProvider,
    ProviderError, ReplayProvider, FALLBACK_KNOWLEDGE,
};
