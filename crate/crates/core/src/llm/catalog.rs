//! The prompt catalog and placeholder substitution.
//!
//! Templates are plain text with `{name}` slots. Substitution is a single
//! pass, so bound values may themselves contain braces (code usually does).

use std::collections::BTreeMap;
use thiserror::Error;

/// Who speaks in a call: generators write heuristics, reflectors write
/// hints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Generator,
    Reflector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    /// `family/name`, e.g. `reevo_td/crossover`.
    pub id: &'static str,
    pub user_text: &'static str,
    /// Id of the system prompt sent alongside.
    pub system_id: &'static str,
    /// Written for this crate rather than taken from the published catalog.
    pub authored: bool,
}

impl PromptTemplate {
    pub fn system_text(&self) -> &'static str {
        text_of(self.system_id).expect("system prompt ids are in the catalog")
    }

    /// Distinct placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&'static str> {
        let mut seen = Vec::new();
        for piece in scan(self.user_text) {
            if let Piece::Slot(name) = piece {
                if !seen.contains(&name) {
                    seen.push(name);
                }
            }
        }
        seen
    }
}

macro_rules! prompt {
    ($id:literal) => {
        ($id, include_str!(concat!("../../assets/prompts/", $id, ".txt")))
    };
}

static TEXTS: &[(&str, &str)] = &[
    prompt!("funsearch_td/system"),
    prompt!("funsearch_td/brainstorm"),
    prompt!("funsearch_td/implement"),
    prompt!("reevo_td/generator-system"),
    prompt!("reevo_td/reflector-system"),
    prompt!("reevo_td/init"),
    prompt!("reevo_td/short-term-reflection"),
    prompt!("reevo_td/long-term-reflection"),
    prompt!("reevo_td/crossover"),
    prompt!("reevo_td/mutation"),
    prompt!("mcts_td/generator-system"),
    prompt!("mcts_td/i1"),
    prompt!("mcts_td/e1"),
    prompt!("mcts_td/e2"),
    prompt!("mcts_td/m1"),
    prompt!("mcts_td/m2"),
    prompt!("mcts_td/s1"),
    prompt!("mcts_td/implement"),
    prompt!("reevo_cpt/transfer-system"),
    prompt!("reevo_cpt/transfer-reflector-system"),
    prompt!("reevo_cpt/init"),
    prompt!("reevo_cpt/short-term-reflection"),
    prompt!("reevo_cpt/long-term-reflection"),
    prompt!("reevo_cpt/crossover"),
    prompt!("reevo_cpt/mutation"),
    prompt!("mcts_cpt/transfer-system"),
    prompt!("mcts_cpt/transfer-reflector-system"),
    prompt!("mcts_cpt/i1"),
    prompt!("mcts_cpt/e1"),
    prompt!("mcts_cpt/e2"),
    prompt!("mcts_cpt/m1"),
    prompt!("mcts_cpt/m2"),
    prompt!("mcts_cpt/s1"),
    prompt!("mcts_cpt/implement"),
    prompt!("dual/generator-system"),
    prompt!("dual/reflector-system"),
    prompt!("dual/init-knowledge"),
    prompt!("dual/init-code"),
    prompt!("dual/implement"),
    prompt!("dual/knowledge-crossover"),
    prompt!("dual/code-crossover"),
    prompt!("dual/grounding"),
    prompt!("dual/distillation"),
    prompt!("dual/short-term-knowledge-reflection"),
    prompt!("dual/short-term-code-reflection"),
    prompt!("dual/long-term-reflection"),
    prompt!("sparse/bottom-up-uncertain-short-term-reflection"),
    prompt!("sparse/top-down-uncertain-short-term-reflection"),
    prompt!("sparse/bottom-up-uncertain-crossover"),
    prompt!("sparse/top-down-uncertain-crossover"),
    prompt!("reevo_bu/mutation"),
    prompt!("mcts_bu/i1"),
    prompt!("mcts_bu/e1"),
    prompt!("mcts_bu/e2"),
    prompt!("mcts_bu/m1"),
    prompt!("mcts_bu/m2"),
    prompt!("mcts_bu/s1"),
    prompt!("mcts_bu/describe"),
    prompt!("transfer/source-code-block"),
    prompt!("transfer/source-knowledge-block"),
];

const AUTHORED_FAMILIES: [&str; 3] = ["reevo_bu/", "mcts_bu/", "transfer/"];

fn text_of(id: &str) -> Option<&'static str> {
    TEXTS.iter().find(|(k, _)| *k == id).map(|(_, t)| *t)
}

fn system_for(id: &str) -> &'static str {
    let family = id.split('/').next().unwrap_or_default();
    let reflective = id.contains("reflection");
    match (family, reflective) {
        ("funsearch_td", _) => "funsearch_td/system",
        ("reevo_cpt", false) => "reevo_cpt/transfer-system",
        ("reevo_cpt", true) => "reevo_cpt/transfer-reflector-system",
        ("mcts_cpt", _) => "mcts_cpt/transfer-system",
        ("mcts_td" | "mcts_bu", _) => "mcts_td/generator-system",
        ("dual", false) => "dual/generator-system",
        ("dual", true) => "dual/reflector-system",
        (_, false) => "reevo_td/generator-system",
        (_, true) => "reevo_td/reflector-system",
    }
}

/// Look up a user-message template. System prompts are not templates.
pub fn template(id: &str) -> Option<PromptTemplate> {
    if id.ends_with("system") {
        return None;
    }
    let (id, user_text) = *TEXTS.iter().find(|(k, _)| *k == id)?;
    Some(PromptTemplate {
        id,
        user_text,
        system_id: system_for(id),
        authored: AUTHORED_FAMILIES.iter().any(|f| id.starts_with(f)),
    })
}

/// Every user-message template id.
pub fn template_ids() -> impl Iterator<Item = &'static str> {
    TEXTS.iter().map(|(k, _)| *k).filter(|k| !k.ends_with("system"))
}

pub fn role_of(id: &str) -> Role {
    if id.contains("reflection") {
        Role::Reflector
    } else {
        Role::Generator
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` is missing bindings for: {}", missing.join(", "))]
    MissingBindings { template: String, missing: Vec<String> },
}

pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub template_id: String,
    pub system: String,
    pub user: String,
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn scan(text: &str) -> impl Iterator<Item = Piece<'_>> {
    let mut rest = text;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        if let Some(after) = rest.strip_prefix('{') {
            let len = after.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(after.len());
            if len > 0 && after[len..].starts_with('}') {
                let name = &after[..len];
                rest = &after[len + 1..];
                return Some(Piece::Slot(name));
            }
            let (lit, tail) = rest.split_at(1);
            rest = tail;
            return Some(Piece::Text(lit));
        }
        let end = rest.find('{').unwrap_or(rest.len());
        let (lit, tail) = rest.split_at(end);
        rest = tail;
        Some(Piece::Text(lit))
    })
}

/// Substitute every slot of `text`. Extra bindings are ignored.
pub fn fill(template_id: &str, text: &str, bindings: &Bindings) -> Result<String, RenderError> {
    let mut out = String::with_capacity(text.len() * 2);
    let mut missing = Vec::new();
    for piece in scan(text) {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(name) => match bindings.get(name) {
                Some(v) => out.push_str(v),
                None if !missing.iter().any(|m| m == name) => missing.push(name.to_owned()),
                None => {}
            },
        }
    }
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(RenderError::MissingBindings { template: template_id.to_owned(), missing })
    }
}

pub fn render(template_id: &str, bindings: &Bindings) -> Result<RenderedPrompt, RenderError> {
    let t = template(template_id).ok_or_else(|| RenderError::UnknownTemplate(template_id.to_owned()))?;
    Ok(RenderedPrompt {
        template_id: t.id.to_owned(),
        system: t.system_text().to_owned(),
        user: fill(t.id, t.user_text, bindings)?,
    })
}
