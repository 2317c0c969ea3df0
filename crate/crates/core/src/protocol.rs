//! Prompt rendering and strict parsing of the four-tag response grammar.
//!
//! A memory-agent emission must contain exactly one `<think>`, `<check>`,
//! `<update>`, and `<next>` block, in that order, with `<check>` restricted to
//! yes/no and `<next>` to continue/end. Anything else is malformed; malformed
//! turns fall back to no-update, no-exit so the workflow can keep running
//! while the format reward punishes the output.

use crate::types::TurnOutput;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::LazyLock;

/// Literal rendered into the memory block when no memory has been written yet.
pub const EMPTY_MEMORY_TEXT: &str = "No previous memory";

const MEMORY_TEMPLATE: &str = include_str!("../templates/memory_agent.txt");
const ANSWER_TEMPLATE: &str = include_str!("../templates/answer_agent.txt");

static EMBEDDED: LazyLock<PromptTemplate> = LazyLock::new(|| {
    PromptTemplate::new(MEMORY_TEMPLATE, ANSWER_TEMPLATE).expect("embedded templates are valid")
});

/// The tag pairs of the response grammar, in required order.
const BLOCKS: [(&str, &str); 4] = [
    ("<think>", "</think>"),
    ("<check>", "</check>"),
    ("<update>", "</update>"),
    ("<next>", "</next>"),
];

/// The two prompt templates with `{prompt}`, `{memory}`, `{chunk}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub memory_agent_template: String,
    pub answer_agent_template: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("failed to read template file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("template {name} is missing the {placeholder} placeholder")]
    MissingPlaceholder {
        name: &'static str,
        placeholder: &'static str,
    },
}

impl PromptTemplate {
    /// Builds a template pair, checking every required placeholder is present.
    /// A single trailing newline (editor artifact) is stripped from each file.
    pub fn new(memory: &str, answer: &str) -> Result<Self, TemplateError> {
        let memory = memory.strip_suffix('\n').unwrap_or(memory).to_string();
        let answer = answer.strip_suffix('\n').unwrap_or(answer).to_string();
        let required: [(&'static str, &str, &[&'static str]); 2] = [
            (
                "memory_agent",
                &memory,
                &["{prompt}", "{memory}", "{chunk}"],
            ),
            ("answer_agent", &answer, &["{prompt}", "{memory}"]),
        ];
        for (name, template, placeholders) in required {
            for &placeholder in placeholders {
                if !template.contains(placeholder) {
                    return Err(TemplateError::MissingPlaceholder { name, placeholder });
                }
            }
        }
        Ok(PromptTemplate {
            memory_agent_template: memory,
            answer_agent_template: answer,
        })
    }

    /// The templates bundled with the crate.
    pub fn embedded() -> &'static PromptTemplate {
        &EMBEDDED
    }

    /// Loads `memory_agent.txt` / `answer_agent.txt` from a directory,
    /// overriding the embedded resources.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let memory = read("memory_agent.txt")?;
        let answer = read("answer_agent.txt")?;
        PromptTemplate::new(&memory, &answer)
    }

    /// Renders the memory-agent prompt. An empty memory renders as the
    /// literal "No previous memory".
    pub fn render_memory_prompt(&self, question: &str, memory: &str, chunk: &str) -> String {
        self.memory_agent_template
            .replace("{prompt}", question)
            .replace("{memory}", displayed_memory(memory))
            .replace("{chunk}", chunk)
    }

    /// Renders the answer-agent prompt from the terminal memory.
    pub fn render_answer_prompt(&self, question: &str, memory: &str) -> String {
        self.answer_agent_template
            .replace("{prompt}", question)
            .replace("{memory}", displayed_memory(memory))
    }
}

fn displayed_memory(memory: &str) -> &str {
    if memory.is_empty() {
        EMPTY_MEMORY_TEXT
    } else {
        memory
    }
}

/// Renders the memory-agent prompt with the embedded template.
pub fn render_memory_prompt(question: &str, memory: &str, chunk: &str) -> String {
    PromptTemplate::embedded().render_memory_prompt(question, memory, chunk)
}

/// Renders the answer-agent prompt with the embedded template.
pub fn render_answer_prompt(question: &str, memory: &str) -> String {
    PromptTemplate::embedded().render_answer_prompt(question, memory)
}

/// Byte offset of `needle` in `haystack` iff it occurs exactly once.
fn find_single(haystack: &str, needle: &str) -> Option<usize> {
    let first = haystack.find(needle)?;
    if haystack[first + needle.len()..].contains(needle) {
        return None;
    }
    Some(first)
}

/// Parses a raw memory-agent emission against the strict tag grammar.
///
/// Never fails: malformed input yields `well_formed = false` with the
/// fallback gates (no update, no exit) and an empty candidate memory.
pub fn parse_turn(raw: &str) -> TurnOutput {
    let malformed = || TurnOutput {
        think: String::new(),
        update_flag: false,
        candidate_memory: String::new(),
        exit_flag: false,
        raw: raw.to_string(),
        well_formed: false,
    };

    let mut payloads = Vec::with_capacity(4);
    let mut cursor_min = 0usize;
    for (open, close) in BLOCKS {
        let (Some(open_at), Some(close_at)) = (find_single(raw, open), find_single(raw, close))
        else {
            return malformed();
        };
        let content_start = open_at + open.len();
        // Blocks must be properly nested and appear in grammar order.
        if open_at < cursor_min || close_at < content_start {
            return malformed();
        }
        payloads.push(&raw[content_start..close_at]);
        cursor_min = close_at + close.len();
    }

    let think = payloads[0].trim();
    let check = payloads[1].trim();
    let update_payload = payloads[2].trim();
    let next = payloads[3].trim();

    let update_flag = if check.eq_ignore_ascii_case("yes") {
        true
    } else if check.eq_ignore_ascii_case("no") {
        false
    } else {
        return malformed();
    };
    let exit_flag = if next.eq_ignore_ascii_case("end") {
        true
    } else if next.eq_ignore_ascii_case("continue") {
        false
    } else {
        return malformed();
    };

    TurnOutput {
        think: think.to_string(),
        update_flag,
        candidate_memory: update_payload.to_string(),
        exit_flag,
        raw: raw.to_string(),
        well_formed: true,
    }
}

/// Composes a grammar-valid emission in the canonical block layout.
///
/// The texts must not themselves contain any of the grammar tags, or the
/// result will (correctly) parse as malformed.
pub fn compose_turn(think: &str, update: bool, candidate_memory: &str, exit: bool) -> String {
    format!(
        "<think>{think}</think>\n\n<check>{}</check>\n\n<update>{candidate_memory}</update>\n\n<next>{}</next>",
        if update { "yes" } else { "no" },
        if exit { "end" } else { "continue" },
    )
}

/// Extracts the content of the last `boxed{...}` occurrence (with or without
/// a leading backslash), scanning braces for balance. Returns `None` when no
/// balanced occurrence exists.
pub fn extract_boxed_answer(raw: &str) -> Option<String> {
    const MARKER: &str = "boxed{";
    let mut candidates: Vec<usize> = raw.match_indices(MARKER).map(|(i, _)| i).collect();
    while let Some(start) = candidates.pop() {
        let content_start = start + MARKER.len();
        let mut depth = 1usize;
        for (offset, ch) in raw[content_start..].char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(raw[content_start..content_start + offset].to_string());
                    }
                }
                _ => {}
            }
        }
        // Unbalanced: fall back to the previous occurrence.
    }
    None
}
