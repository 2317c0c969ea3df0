//! Approximate token counting and splitting of a task's concatenated context
//! into fixed-budget chunks with derived evidence flags.
//!
//! Splits happen at document boundaries whenever a document fits the budget,
//! and at whitespace inside a document only when the document alone exceeds
//! it. Chunk texts always concatenate back to the exact context bytes.

use crate::types::{Chunk, Task};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Approximate token counter used for chunk planning and memory-size series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenCounter {
    /// Whitespace-delimited word count. Deterministic and corpus-independent.
    #[default]
    Words,
    /// `ceil(chars / 4)` estimator.
    CharsDiv4,
}

impl TokenCounter {
    pub fn count(self, text: &str) -> usize {
        match self {
            TokenCounter::Words => text.split_whitespace().count(),
            TokenCounter::CharsDiv4 => text.chars().count().div_ceil(4),
        }
    }

    /// Token count of `a ⊕ b` given the parts and their counts, without
    /// touching the concatenated string.
    fn concat_count(self, a: &str, count_a: usize, b: &str, count_b: usize) -> usize {
        match self {
            TokenCounter::Words => {
                let merges = !a.is_empty()
                    && !b.is_empty()
                    && !a.ends_with(char::is_whitespace)
                    && !b.starts_with(char::is_whitespace);
                count_a + count_b - usize::from(merges)
            }
            TokenCounter::CharsDiv4 => (a.chars().count() + b.chars().count()).div_ceil(4),
        }
    }

    /// Byte index at which to cut `text` so the prefix stays within `budget`
    /// tokens. Prefers the whitespace boundary right at the budget; falls back
    /// to a bare char boundary only when no whitespace exists before it.
    /// Callers guarantee `count(text) > budget` and `budget >= 1`.
    fn cut_point(self, text: &str, budget: usize) -> usize {
        match self {
            TokenCounter::Words => {
                let mut words_seen = 0usize;
                let mut in_word = false;
                for (idx, ch) in text.char_indices() {
                    if ch.is_whitespace() {
                        if in_word {
                            in_word = false;
                            if words_seen == budget {
                                return idx;
                            }
                        }
                    } else if !in_word {
                        in_word = true;
                        words_seen += 1;
                    }
                }
                text.len()
            }
            TokenCounter::CharsDiv4 => {
                let max_chars = budget * 4;
                let mut boundary = 0usize;
                let mut last_ws = None;
                for (chars_seen, (idx, ch)) in text.char_indices().enumerate() {
                    if chars_seen >= max_chars {
                        break;
                    }
                    boundary = idx + ch.len_utf8();
                    if ch.is_whitespace() {
                        last_ws = Some(idx + ch.len_utf8());
                    }
                }
                last_ws.unwrap_or(boundary).max(1)
            }
        }
    }
}

/// Counts approximate tokens with the default whitespace-word counter.
pub fn count_tokens(text: &str) -> usize {
    TokenCounter::Words.count(text)
}

/// The chunking of one task's context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub chunk_size_s: usize,
    pub chunks: Vec<Chunk>,
    /// Total chunk count; the loop bound of the recurrent workflow.
    #[serde(rename = "T")]
    pub total_chunks: usize,
}

impl ChunkPlan {
    /// 1-based index of the chunk holding the last evidence, if any.
    pub fn t_last_evidence(&self) -> Option<usize> {
        self.chunks
            .iter()
            .find(|c| c.is_last_evidence)
            .map(|c| c.index)
    }

    pub fn chunk(&self, index: usize) -> Option<&Chunk> {
        self.chunks.get(index.checked_sub(1)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ChunkingError {
    #[error("chunk size must be at least 1")]
    InvalidChunkSize,
    #[error("context is empty: no document contains any text")]
    EmptyContext,
}

/// Splits the task context into chunks of at most `s` tokens using the
/// default word counter.
pub fn plan_chunks(task: &Task, s: usize) -> Result<ChunkPlan, ChunkingError> {
    plan_chunks_with(task, s, TokenCounter::Words)
}

/// As [`plan_chunks`] with an explicit counter.
pub fn plan_chunks_with(
    task: &Task,
    s: usize,
    counter: TokenCounter,
) -> Result<ChunkPlan, ChunkingError> {
    if s == 0 {
        return Err(ChunkingError::InvalidChunkSize);
    }
    if task.documents.iter().all(|d| d.is_empty()) {
        return Err(ChunkingError::EmptyContext);
    }

    let mut texts: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut current_count = 0usize;

    for doc in &task.documents {
        if doc.is_empty() {
            continue;
        }
        let doc_count = counter.count(doc);
        if doc_count > s {
            // Oversized document: close the open chunk, then split the
            // document at whitespace. The tail stays open for later documents.
            if !current.is_empty() {
                texts.push(std::mem::take(&mut current));
            }
            let mut rest: &str = doc;
            let mut rest_count = doc_count;
            while rest_count > s {
                let cut = counter.cut_point(rest, s);
                texts.push(rest[..cut].to_string());
                rest = &rest[cut..];
                rest_count = counter.count(rest);
            }
            current = rest.to_string();
            current_count = rest_count;
        } else {
            let merged = counter.concat_count(&current, current_count, doc, doc_count);
            if current.is_empty() || merged <= s {
                current.push_str(doc);
                current_count = merged;
            } else {
                texts.push(std::mem::take(&mut current));
                current = doc.clone();
                current_count = doc_count;
            }
        }
    }
    if !current.is_empty() {
        texts.push(current);
    }

    let marked = marked_docs_by_chunk(task, &texts);
    let last_evidence_chunk = marked.iter().rposition(|docs| !docs.is_empty());

    let chunks: Vec<Chunk> = texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            let token_count = counter.count(&text);
            debug_assert!(token_count <= s);
            Chunk {
                index: i + 1,
                token_count,
                contains_evidence: !marked[i].is_empty(),
                is_last_evidence: Some(i) == last_evidence_chunk,
                text,
            }
        })
        .collect();

    let total_chunks = chunks.len();
    Ok(ChunkPlan {
        chunk_size_s: s,
        chunks,
        total_chunks,
    })
}

/// Byte spans of each document within the concatenated context.
pub fn document_spans(documents: &[String]) -> Vec<Range<usize>> {
    let mut spans = Vec::with_capacity(documents.len());
    let mut offset = 0usize;
    for doc in documents {
        spans.push(offset..offset + doc.len());
        offset += doc.len();
    }
    spans
}

/// For each chunk (in order), the indices of marked documents overlapping it.
pub fn evidence_docs_by_chunk(task: &Task, plan: &ChunkPlan) -> Vec<Vec<usize>> {
    let texts: Vec<String> = plan.chunks.iter().map(|c| c.text.clone()).collect();
    marked_docs_by_chunk(task, &texts)
}

fn marked_docs_by_chunk(task: &Task, chunk_texts: &[String]) -> Vec<Vec<usize>> {
    let doc_spans = document_spans(&task.documents);
    let mut chunk_spans = Vec::with_capacity(chunk_texts.len());
    let mut offset = 0usize;
    for text in chunk_texts {
        chunk_spans.push(offset..offset + text.len());
        offset += text.len();
    }

    chunk_spans
        .iter()
        .map(|chunk| {
            task.evidence_marks
                .iter()
                .filter_map(|mark| {
                    let doc = doc_spans.get(mark.document_index)?;
                    let overlaps = doc.start < chunk.end && chunk.start < doc.end;
                    overlaps.then_some(mark.document_index)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{EvidenceMark, TaskKind};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn task_with_docs(documents: Vec<String>, marks: Vec<usize>) -> Task {
        Task {
            id: "chunk-test".into(),
            question: "q".into(),
            documents,
            gold_answers: BTreeSet::from(["x".to_string()]),
            evidence_marks: marks
                .into_iter()
                .enumerate()
                .map(|(i, document_index)| EvidenceMark {
                    document_index,
                    needle_id: format!("n{i}"),
                })
                .collect(),
            task_kind: TaskKind::External,
            requires_full_scan: false,
        }
    }

    fn words(n: usize, tag: &str) -> String {
        (0..n).map(|i| format!("{tag}{i} ")).collect::<String>()
    }

    #[test]
    fn count_tokens_examples() {
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("hello world"), 2);
        assert_eq!(count_tokens("  spaced\tout\nwords  "), 3);
        assert_eq!(TokenCounter::CharsDiv4.count(""), 0);
        assert_eq!(TokenCounter::CharsDiv4.count("abcd"), 1);
        assert_eq!(TokenCounter::CharsDiv4.count("abcde"), 2);
    }

    #[test]
    fn twelve_thousand_tokens_split_into_three_chunks() {
        // Ceiling-division oracle: 12_000 words at s = 5000 need ceil(12000/5000) = 3 chunks.
        let task = task_with_docs(vec![words(12_000, "w")], vec![]);
        let plan = plan_chunks(&task, 5000).unwrap();
        assert_eq!(plan.total_chunks, 3);
        assert!(plan.chunks.iter().all(|c| c.token_count <= 5000));
        let reassembled: String = plan.chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(reassembled, task.context());
    }

    #[test]
    fn small_single_document_is_one_chunk() {
        let task = task_with_docs(vec![words(10, "w")], vec![]);
        let plan = plan_chunks(&task, 5000).unwrap();
        assert_eq!(plan.total_chunks, 1);
        assert_eq!(plan.chunks[0].text, task.documents[0]);
    }

    #[test]
    fn empty_context_is_an_error() {
        let task = task_with_docs(vec![String::new(), String::new()], vec![]);
        assert!(matches!(
            plan_chunks(&task, 10),
            Err(ChunkingError::EmptyContext)
        ));
    }

    #[test]
    fn last_evidence_lands_on_the_last_marked_chunk() {
        // Eight 300-word documents at s = 600 pack two documents per chunk.
        // Marks on documents 2 and 3 (0-based) both land in chunk 2 of 4;
        // an independent scan over cumulative document offsets must agree.
        let docs: Vec<String> = (0..8).map(|i| words(300, &format!("d{i}x"))).collect();
        let task = task_with_docs(docs, vec![2, 3]);
        let plan = plan_chunks(&task, 600).unwrap();
        assert_eq!(plan.total_chunks, 4);

        // Brute-force oracle: locate each marked document by byte offset.
        let mut doc_starts = vec![0usize];
        for d in &task.documents {
            doc_starts.push(doc_starts.last().unwrap() + d.len());
        }
        let mut chunk_starts = vec![0usize];
        for c in &plan.chunks {
            chunk_starts.push(chunk_starts.last().unwrap() + c.text.len());
        }
        let chunk_of = |doc_idx: usize| {
            let start = doc_starts[doc_idx];
            (0..plan.total_chunks)
                .find(|&i| start >= chunk_starts[i] && start < chunk_starts[i + 1])
                .unwrap()
                + 1
        };
        let last_marked_chunk = task
            .evidence_marks
            .iter()
            .map(|m| chunk_of(m.document_index))
            .max()
            .unwrap();
        assert_eq!(last_marked_chunk, 2);
        assert_eq!(plan.t_last_evidence(), Some(2));
        assert!(plan.chunks[1].contains_evidence);
        assert!(plan.chunks[1].is_last_evidence);
        assert_eq!(plan.chunks.iter().filter(|c| c.is_last_evidence).count(), 1);
    }

    #[test]
    fn oversized_document_splits_at_whitespace() {
        let task = task_with_docs(vec![words(25, "long")], vec![0]);
        let plan = plan_chunks(&task, 10).unwrap();
        assert_eq!(plan.total_chunks, 3);
        assert!(plan.chunks.iter().all(|c| c.token_count <= 10));
        let reassembled: String = plan.chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(reassembled, task.context());
        // The split document is marked, so every overlapping chunk carries evidence.
        assert!(plan.chunks.iter().all(|c| c.contains_evidence));
    }

    #[test]
    fn chars_div4_counter_respects_budget() {
        let task = task_with_docs(vec![words(400, "w")], vec![]);
        let plan = plan_chunks_with(&task, 50, TokenCounter::CharsDiv4).unwrap();
        assert!(plan
            .chunks
            .iter()
            .all(|c| TokenCounter::CharsDiv4.count(&c.text) <= 50));
        let reassembled: String = plan.chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(reassembled, task.context());
    }

    fn doc_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just(" ".to_string()),
                Just("\n".to_string()),
                "[a-z]{1,8}".prop_map(|w| w + " "),
                "[a-z]{1,8}",
            ],
            0..30,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn reassembly_is_lossless(
            docs in proptest::collection::vec(doc_strategy(), 1..12),
            s in 1usize..40,
        ) {
            let task = task_with_docs(docs, vec![]);
            if task.documents.iter().all(|d| d.is_empty()) {
                return Ok(());
            }
            let plan = plan_chunks(&task, s).unwrap();
            let reassembled: String = plan.chunks.iter().map(|c| c.text.as_str()).collect();
            prop_assert_eq!(reassembled, task.context());
            prop_assert!(plan.chunks.iter().all(|c| c.token_count <= s));
            prop_assert_eq!(plan.total_chunks, plan.chunks.len());

            // Determinism: identical inputs produce an identical plan.
            let again = plan_chunks(&task, s).unwrap();
            prop_assert_eq!(plan, again);
        }

        #[test]
        fn marked_small_documents_stay_whole(
            n_docs in 2usize..10,
            mark in 0usize..10,
            s in 5usize..20,
        ) {
            let mark = mark % n_docs;
            let docs: Vec<String> = (0..n_docs).map(|i| words(4, &format!("d{i}q"))).collect();
            let marked_text = docs[mark].clone();
            let task = task_with_docs(docs, vec![mark]);
            let plan = plan_chunks(&task, s).unwrap();
            // A marked document within budget must sit wholly inside one chunk.
            let hits = plan
                .chunks
                .iter()
                .filter(|c| c.text.contains(marked_text.trim_end()))
                .count();
            prop_assert!(hits >= 1);
            let flagged = plan.chunks.iter().filter(|c| c.contains_evidence).count();
            prop_assert_eq!(flagged, 1);
        }

        #[test]
        fn counting_is_monotone_under_concatenation(a in ".{0,40}", b in ".{0,40}") {
            for counter in [TokenCounter::Words, TokenCounter::CharsDiv4] {
                let joined = format!("{a}{b}");
                prop_assert!(counter.count(&joined) <= counter.count(&a) + counter.count(&b) + 1);
            }
        }
    }
}
