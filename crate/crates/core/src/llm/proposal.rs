//! Turning a raw model response into knowledge and code fields.

use serde::{Deserialize, Serialize};

/// What a call is expected to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Code,
    KnowledgeCode,
    Knowledge,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub knowledge: Option<String>,
    pub code: Option<String>,
    pub raw: String,
    pub usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Structured {
    knowledge: Option<String>,
    code: Option<String>,
}

fn nonempty(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_owned())
}

/// First fenced block: (text before the fence, block body).
fn first_fence(text: &str) -> Option<(&str, &str)> {
    let open = text.find("```")?;
    let after = &text[open + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let close = body.find("```").unwrap_or(body.len());
    Some((&text[..open], &body[..close]))
}

/// First occurrence of `label` not glued to a preceding word.
fn find_label(text: &str, label: &str) -> Option<usize> {
    text.match_indices(label)
        .map(|(i, _)| i)
        .find(|&i| !text[..i].ends_with(|c: char| c.is_alphanumeric() || c == '_'))
}

/// `KNOWLEDGE:` (or `K:`) and `CODE:` labeled sections. The code section
/// may itself be fenced.
fn labeled(text: &str) -> Option<(Option<String>, Option<String>)> {
    let code_at = find_label(text, "CODE:");
    let k_label = ["KNOWLEDGE:", "K:"]
        .iter()
        .filter_map(|l| find_label(text, l).map(|i| (i, l.len())))
        .filter(|&(i, _)| code_at.is_none_or(|c| i < c))
        .min();
    if k_label.is_none() && code_at.is_none() {
        return None;
    }
    let knowledge = k_label.map(|(i, len)| {
        let end = code_at.unwrap_or(text.len());
        text[i + len..end].trim().trim_end_matches(';').to_owned()
    });
    let code = code_at.map(|c| {
        let section = &text[c + 5..];
        match first_fence(section) {
            Some((_, body)) => body.to_owned(),
            None => section.to_owned(),
        }
    });
    Some((knowledge.and_then(|k| nonempty(&k)), code.and_then(|c| nonempty(&c))))
}

impl Proposal {
    /// Parse in order of preference: a JSON object with `knowledge`/`code`
    /// fields, labeled sections, then the first fenced block as code with
    /// the prose before it as knowledge. A missing field stays `None`; the
    /// caller decides whether that invalidates the candidate.
    pub fn parse(raw: &str, shape: Shape, usage: Option<Usage>) -> Proposal {
        let (knowledge, code) = if let Ok(s) = serde_json::from_str::<Structured>(raw.trim()) {
            (s.knowledge.and_then(|k| nonempty(&k)), s.code.and_then(|c| nonempty(&c)))
        } else if let Some(parts) = labeled(raw) {
            parts
        } else if let Some((before, body)) = first_fence(raw) {
            (nonempty(before), nonempty(body))
        } else {
            (nonempty(raw), None)
        };
        let (knowledge, code) = match shape {
            Shape::Code => (None, code),
            Shape::KnowledgeCode => (knowledge, code),
            // A reflection is the whole answer unless it was explicitly labeled.
            Shape::Knowledge => (knowledge.or_else(|| nonempty(raw)), None),
        };
        Proposal { knowledge, code, raw: raw.to_owned(), usage }
    }

    /// Whether the fields the shape asks for are all present.
    pub fn is_complete(&self, shape: Shape) -> bool {
        match shape {
            Shape::Code => self.code.is_some(),
            Shape::KnowledgeCode => self.code.is_some() && self.knowledge.is_some(),
            Shape::Knowledge => self.knowledge.is_some(),
        }
    }
}
