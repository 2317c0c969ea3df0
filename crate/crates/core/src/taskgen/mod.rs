//! Deterministic synthesis of needle-retrieval task suites with controllable
//! length, difficulty, and evidence placement.
//!
//! Needles are statements of the form `One of the special magic uuids for
//! {key} is: {value}.`, each occupying its own document so chunking can never
//! split one. Difficulty lifts through decoy phrasing (level 2) and
//! near-duplicate keys (level 3); multi-key kinds add distractor needles.

mod corpus;

pub use corpus::{ESSAY_PARAGRAPHS, KEY_ADJECTIVES, KEY_NOUNS, LOREM_WORDS};

use crate::chunking::count_tokens;
use crate::rewards::normalize_answer;
use crate::types::{EvidenceMark, Task, TaskKind};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Where filler documents come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FillerSource {
    /// Bundled essay-style paragraphs, shuffled at paragraph granularity.
    #[default]
    #[serde(rename = "ESSAY_CORPUS")]
    EssayCorpus,
    /// Seeded lorem-style word salad; needs no bundled assets.
    #[serde(rename = "LOREM")]
    Lorem,
}

impl std::str::FromStr for FillerSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ESSAY_CORPUS" | "ESSAY" => Ok(FillerSource::EssayCorpus),
            "LOREM" => Ok(FillerSource::Lorem),
            other => Err(format!("unknown filler source: {other}")),
        }
    }
}

/// Parameters for generating one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub task_kind: TaskKind,
    /// Target size of the concatenated context, in planner tokens (±2%).
    pub context_tokens: usize,
    /// Needle count; values per key for MV, 1 elsewhere.
    pub num_needles: usize,
    /// Distinct keys asked about (MQ only; 1 elsewhere).
    pub num_queries: usize,
    /// Unmarked near-miss needles (MK kinds).
    pub distractor_needles: usize,
    /// Evidence documents land within the first `ceil(cap * num_documents)`
    /// documents; 1.0 places them uniformly.
    pub evidence_position_cap: f64,
    pub seed: u64,
    pub filler_source: FillerSource,
}

impl GenSpec {
    /// Sensible per-kind defaults: MQ asks four keys, MV hides four values,
    /// MK difficulty scales the distractor count.
    pub fn for_kind(task_kind: TaskKind, context_tokens: usize, seed: u64) -> GenSpec {
        let (num_needles, num_queries, distractor_needles) = match task_kind {
            TaskKind::MQ => (1, 4, 0),
            TaskKind::MV => (4, 1, 0),
            TaskKind::MK1 => (1, 1, 2),
            TaskKind::MK2 => (1, 1, 4),
            TaskKind::MK3 => (1, 1, 6),
            _ => (1, 1, 0),
        };
        GenSpec {
            task_kind,
            context_tokens,
            num_needles,
            num_queries,
            distractor_needles,
            evidence_position_cap: 1.0,
            seed,
            filler_source: FillerSource::EssayCorpus,
        }
    }

    fn validate(&self) -> Result<(), TaskGenError> {
        if self.task_kind == TaskKind::External {
            return Err(TaskGenError::InvalidSpec(
                "EXTERNAL tasks are loaded, not generated".into(),
            ));
        }
        if !(self.evidence_position_cap > 0.0 && self.evidence_position_cap <= 1.0) {
            return Err(TaskGenError::InvalidSpec(format!(
                "evidence_position_cap must lie in (0, 1], got {}",
                self.evidence_position_cap
            )));
        }
        if self.num_needles == 0 || self.num_queries == 0 {
            return Err(TaskGenError::InvalidSpec(
                "num_needles and num_queries must be at least 1".into(),
            ));
        }
        match self.task_kind {
            TaskKind::MQ if self.num_queries < 2 => Err(TaskGenError::InvalidSpec(
                "MQ tasks need at least 2 queries".into(),
            )),
            TaskKind::MV if self.num_needles < 2 => Err(TaskGenError::InvalidSpec(
                "MV tasks need at least 2 values".into(),
            )),
            TaskKind::MK1 | TaskKind::MK2 | TaskKind::MK3 if self.distractor_needles == 0 => Err(
                TaskGenError::InvalidSpec("MK tasks need at least 1 distractor needle".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TaskGenError {
    #[error("context too small: {0}")]
    SpecTooSmall(String),
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
}

/// The suite grid: every (kind, length) cell generates `n_per_cell` tasks.
/// The optional counts override the per-kind defaults where set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub kinds: Vec<TaskKind>,
    pub lengths: Vec<usize>,
    pub n_per_cell: usize,
    pub seed: u64,
    pub evidence_position_cap: f64,
    pub filler_source: FillerSource,
    pub num_needles: Option<usize>,
    pub num_queries: Option<usize>,
    pub distractor_needles: Option<usize>,
}

impl SuiteSpec {
    pub fn new(kinds: Vec<TaskKind>, lengths: Vec<usize>, n_per_cell: usize, seed: u64) -> Self {
        SuiteSpec {
            kinds,
            lengths,
            n_per_cell,
            seed,
            evidence_position_cap: 1.0,
            filler_source: FillerSource::EssayCorpus,
            num_needles: None,
            num_queries: None,
            distractor_needles: None,
        }
    }
}

/// Record of what a suite generation produced, one cell per (kind, length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub seed: u64,
    pub cells: Vec<SuiteCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCell {
    pub task_kind: TaskKind,
    pub context_tokens: usize,
    pub n_tasks: usize,
    pub base_spec: GenSpec,
    pub task_ids: Vec<String>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn mixed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6761746564u64, |acc, &p| splitmix64(acc ^ p))
}

fn kind_tag(kind: TaskKind) -> u64 {
    match kind {
        TaskKind::SK1 => 1,
        TaskKind::SK2 => 2,
        TaskKind::SK3 => 3,
        TaskKind::MK1 => 4,
        TaskKind::MK2 => 5,
        TaskKind::MK3 => 6,
        TaskKind::MQ => 7,
        TaskKind::MV => 8,
        TaskKind::External => 9,
    }
}

fn fresh_uuid(rng: &mut ChaCha8Rng) -> String {
    let bytes: [u8; 16] = rng.gen();
    uuid::Builder::from_random_bytes(bytes)
        .into_uuid()
        .hyphenated()
        .to_string()
}

fn needle_statement(key: &str, value: &str) -> String {
    format!("One of the special magic uuids for {key} is: {value}.\n\n")
}

/// Distinct adjective-noun keys drawn from the bundled word lists.
fn draw_keys(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    let pool = KEY_ADJECTIVES.len() * KEY_NOUNS.len();
    sample(rng, pool, count.min(pool))
        .into_iter()
        .map(|i| {
            format!(
                "{}-{}",
                KEY_ADJECTIVES[i / KEY_NOUNS.len()],
                KEY_NOUNS[i % KEY_NOUNS.len()]
            )
        })
        .collect()
}

/// Near-duplicate of a key: same adjective, suffix-mutated noun.
fn near_key(key: &str, variant: usize) -> String {
    const SUFFIXES: [&str; 6] = ["s", "ry", "ship", "hood", "dom", "kin"];
    format!("{key}{}", SUFFIXES[variant % SUFFIXES.len()])
}

struct FillerStream<'a> {
    source: FillerSource,
    order: Vec<usize>,
    cursor: usize,
    rng: &'a mut ChaCha8Rng,
}

impl<'a> FillerStream<'a> {
    fn new(source: FillerSource, rng: &'a mut ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..ESSAY_PARAGRAPHS.len()).collect();
        // Fisher-Yates with the task RNG so paragraph order is seed-stable.
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        FillerStream {
            source,
            order,
            cursor: 0,
            rng,
        }
    }

    fn next_paragraph(&mut self) -> String {
        match self.source {
            FillerSource::EssayCorpus => {
                let idx = self.order[self.cursor % self.order.len()];
                self.cursor += 1;
                format!("{}\n\n", ESSAY_PARAGRAPHS[idx])
            }
            FillerSource::Lorem => {
                let len = self.rng.gen_range(60..100);
                let words: Vec<&str> = (0..len)
                    .map(|_| LOREM_WORDS[self.rng.gen_range(0..LOREM_WORDS.len())])
                    .collect();
                let mut text = words.join(" ");
                if let Some(first) = text.get_mut(0..1) {
                    first.make_ascii_uppercase();
                }
                format!("{text}.\n\n")
            }
        }
    }
}

/// Generates one task with an id derived from the spec.
pub fn generate(spec: &GenSpec) -> Result<Task, TaskGenError> {
    let id = format!("{}-c{}-s{}", spec.task_kind, spec.context_tokens, spec.seed);
    generate_with_id(spec, id)
}

/// Generates one task under an explicit id.
pub fn generate_with_id(spec: &GenSpec, id: String) -> Result<Task, TaskGenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mixed(&[spec.seed, kind_tag(spec.task_kind)]));

    // True keys and their needle values.
    let keys = draw_keys(
        &mut rng,
        spec.num_queries.max(1) + spec.distractor_needles + 8,
    );
    let (true_keys, spare_keys) = keys.split_at(spec.num_queries.max(1));
    let needles: Vec<(String, String)> = match spec.task_kind {
        TaskKind::MQ => true_keys
            .iter()
            .map(|k| (k.clone(), fresh_uuid(&mut rng)))
            .collect(),
        TaskKind::MV => (0..spec.num_needles)
            .map(|_| (true_keys[0].clone(), fresh_uuid(&mut rng)))
            .collect(),
        _ => vec![(true_keys[0].clone(), fresh_uuid(&mut rng))],
    };

    // Unmarked extra documents: distractor needles and decoy echoes.
    let mut extras: Vec<String> = Vec::new();
    match spec.task_kind {
        TaskKind::MK1 => {
            for key in spare_keys.iter().take(spec.distractor_needles) {
                let value = fresh_uuid(&mut rng);
                extras.push(needle_statement(key, &value));
            }
        }
        TaskKind::MK2 => {
            let adjective = true_keys[0].split('-').next().unwrap_or("plain");
            for (i, key) in spare_keys.iter().take(spec.distractor_needles).enumerate() {
                let noun = key
                    .split('-')
                    .nth(1)
                    .unwrap_or(KEY_NOUNS[i % KEY_NOUNS.len()]);
                let value = fresh_uuid(&mut rng);
                extras.push(needle_statement(&format!("{adjective}-{noun}"), &value));
            }
        }
        TaskKind::MK3 => {
            for i in 0..spec.distractor_needles {
                let value = fresh_uuid(&mut rng);
                extras.push(needle_statement(&near_key(&true_keys[0], i), &value));
            }
        }
        TaskKind::SK2 => {
            for key in spare_keys.iter().take(4) {
                extras.push(format!(
                    "Travelers repeat that the special magic of {key} is hard to pin down, and no ledger in this archive records a number for it.\n\n"
                ));
            }
        }
        TaskKind::SK3 => {
            for i in 0..4 {
                extras.push(format!(
                    "The registry also lists {}, though its entry carries an ordinary catalogue number rather than anything magic.\n\n",
                    near_key(&true_keys[0], i)
                ));
            }
            for key in spare_keys.iter().take(4) {
                extras.push(format!(
                    "Travelers repeat that the special magic of {key} is hard to pin down, and no ledger in this archive records a number for it.\n\n"
                ));
            }
        }
        _ => {}
    }

    let needle_docs: Vec<String> = needles
        .iter()
        .map(|(k, v)| needle_statement(k, v))
        .collect();
    let special_tokens: usize = needle_docs
        .iter()
        .chain(extras.iter())
        .map(|d| count_tokens(d))
        .sum();
    let filler_budget = spec
        .context_tokens
        .checked_sub(special_tokens)
        .ok_or_else(|| {
            TaskGenError::SpecTooSmall(format!(
                "context of {} tokens cannot host {} tokens of needles and decoys",
                spec.context_tokens, special_tokens
            ))
        })?;

    // Filler paragraphs up to the budget, the last one trimmed to land the
    // total context exactly on target.
    let mut filler_docs: Vec<String> = Vec::new();
    let mut filler_tokens = 0usize;
    let mut stream = FillerStream::new(spec.filler_source, &mut rng);
    while filler_tokens < filler_budget {
        let paragraph = stream.next_paragraph();
        filler_tokens += count_tokens(&paragraph);
        filler_docs.push(paragraph);
    }
    if filler_tokens > filler_budget {
        let excess = filler_tokens - filler_budget;
        let last = filler_docs.pop().expect("overshoot implies a paragraph");
        let keep = count_tokens(&last) - excess;
        if keep > 0 {
            let trimmed: Vec<&str> = last.split_whitespace().take(keep).collect();
            filler_docs.push(format!("{}\n\n", trimmed.join(" ")));
        }
    }

    // Slot the special documents into the filler sequence.
    let num_documents = filler_docs.len() + needle_docs.len() + extras.len();
    let window = if spec.evidence_position_cap < 1.0 {
        ((spec.evidence_position_cap * num_documents as f64).ceil() as usize).min(num_documents)
    } else {
        num_documents
    };
    if window < needle_docs.len() {
        return Err(TaskGenError::SpecTooSmall(format!(
            "position cap {} leaves only {window} slots for {} needles",
            spec.evidence_position_cap,
            needle_docs.len()
        )));
    }
    let mut evidence_positions: Vec<usize> = sample(&mut rng, window, needle_docs.len()).into_vec();
    evidence_positions.sort_unstable();
    let taken: BTreeSet<usize> = evidence_positions.iter().copied().collect();
    let open_slots: Vec<usize> = (0..num_documents).filter(|p| !taken.contains(p)).collect();
    if open_slots.len() < extras.len() {
        return Err(TaskGenError::SpecTooSmall(format!(
            "context of {} tokens has no room for {} decoy documents",
            spec.context_tokens,
            extras.len()
        )));
    }
    let mut extra_positions: Vec<usize> = sample(&mut rng, open_slots.len(), extras.len())
        .into_iter()
        .map(|i| open_slots[i])
        .collect();
    extra_positions.sort_unstable();

    let mut documents: Vec<String> = Vec::with_capacity(num_documents);
    let mut evidence_marks = Vec::with_capacity(needle_docs.len());
    let mut needle_iter = needle_docs.into_iter().enumerate();
    let mut extra_iter = extras.into_iter();
    let mut filler_iter = filler_docs.into_iter();
    for position in 0..num_documents {
        if taken.contains(&position) {
            let (ordinal, doc) = needle_iter.next().expect("one needle per slot");
            evidence_marks.push(EvidenceMark {
                document_index: position,
                needle_id: format!("needle-{ordinal}"),
            });
            documents.push(doc);
        } else if extra_positions.binary_search(&position).is_ok() {
            documents.push(extra_iter.next().expect("one extra per slot"));
        } else {
            documents.push(filler_iter.next().expect("one filler per slot"));
        }
    }

    let gold_answers: BTreeSet<String> = match spec.task_kind {
        TaskKind::MQ | TaskKind::MV => needles.iter().map(|(_, v)| normalize_answer(v)).collect(),
        _ => [normalize_answer(&needles[0].1)].into_iter().collect(),
    };

    let question = match spec.task_kind {
        TaskKind::MQ => {
            let listed = join_keys(true_keys);
            format!(
                "Some special magic uuids are hidden within the following text. Make sure to memorize them. What are the special magic uuids for {listed} mentioned in the provided text?"
            )
        }
        TaskKind::MV => format!(
            "Some special magic uuids are hidden within the following text. Make sure to memorize them. What are all the special magic uuids for {} mentioned in the provided text?",
            true_keys[0]
        ),
        _ => format!(
            "A special magic uuid is hidden within the following text. Make sure to memorize it. What is the special magic uuid for {} mentioned in the provided text?",
            true_keys[0]
        ),
    };

    Ok(Task {
        id,
        question,
        documents,
        gold_answers,
        evidence_marks,
        task_kind: spec.task_kind,
        requires_full_scan: spec.task_kind == TaskKind::MV,
    })
}

fn join_keys(keys: &[String]) -> String {
    match keys.len() {
        0 => String::new(),
        1 => keys[0].clone(),
        2 => format!("{} and {}", keys[0], keys[1]),
        _ => {
            let head = keys[..keys.len() - 1].join(", ");
            format!("{head}, and {}", keys[keys.len() - 1])
        }
    }
}

/// Generates the full grid of tasks for a suite spec, with a manifest
/// recording every cell.
pub fn generate_suite(suite: &SuiteSpec) -> Result<(Vec<Task>, SuiteManifest), TaskGenError> {
    let mut tasks = Vec::new();
    let mut cells = Vec::new();
    for &kind in &suite.kinds {
        for &length in &suite.lengths {
            let cell_seed = mixed(&[suite.seed, kind_tag(kind), length as u64]);
            let mut base_spec = GenSpec::for_kind(kind, length, cell_seed);
            base_spec.evidence_position_cap = suite.evidence_position_cap;
            base_spec.filler_source = suite.filler_source;
            if let Some(n) = suite.num_needles {
                base_spec.num_needles = n;
            }
            if let Some(n) = suite.num_queries {
                base_spec.num_queries = n;
            }
            if let Some(n) = suite.distractor_needles {
                base_spec.distractor_needles = n;
            }
            let mut task_ids = Vec::with_capacity(suite.n_per_cell);
            for i in 0..suite.n_per_cell {
                let spec = GenSpec {
                    seed: mixed(&[cell_seed, i as u64]),
                    ..base_spec.clone()
                };
                let task_id = format!("{kind}-L{length}-i{i:03}");
                let task = generate_with_id(&spec, task_id.clone())?;
                task_ids.push(task_id);
                tasks.push(task);
            }
            cells.push(SuiteCell {
                task_kind: kind,
                context_tokens: length,
                n_tasks: suite.n_per_cell,
                base_spec,
                task_ids,
            });
        }
    }
    Ok((
        tasks,
        SuiteManifest {
            seed: suite.seed,
            cells,
        },
    ))
}
