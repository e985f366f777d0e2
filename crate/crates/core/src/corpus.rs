//! Argument / key-point corpus: JSONL loading, grouping by (topic, stance),
//! and consistency diagnostics.
//!
//! Three newline-delimited files make up a dataset:
//!
//! | file               | record                                              |
//! |--------------------|-----------------------------------------------------|
//! | `arguments.jsonl`  | `{"arg_id", "topic", "stance", "text"}`             |
//! | `keypoints.jsonl`  | `{"kp_id", "topic", "stance", "text"}`              |
//! | `labels.jsonl`     | `{"arg_id", "kp_id", "label": 0 \| 1}`              |
//!
//! Groups are keyed by `(topic, stance)`; inside a group arguments, key points
//! and labels are sorted by id so every downstream stage sees the same order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

pub const ARGUMENTS_FILE: &str = "arguments.jsonl";
pub const KEYPOINTS_FILE: &str = "keypoints.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: label references unknown {kind} \"{id}\"")]
    DanglingReference {
        path: PathBuf,
        line: usize,
        kind: &'static str,
        id: String,
    },
    #[error("duplicate argument id \"{0}\"")]
    DuplicateArgument(String),
    #[error("duplicate key point id \"{0}\"")]
    DuplicateKeyPoint(String),
    #[error("duplicate label for (\"{arg_id}\", \"{kp_id}\")")]
    DuplicateLabel { arg_id: String, kp_id: String },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

// =============================================================================
// Domain types
// =============================================================================

/// Polarity of an argument or key point toward its topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stance {
    Pro,
    Con,
}

impl Stance {
    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Pro => "pro",
            Stance::Con => "con",
        }
    }

    /// Word used when the stance is rendered into a model input.
    pub fn template_word(self) -> &'static str {
        match self {
            Stance::Pro => "positive",
            Stance::Con => "negative",
        }
    }

    /// Accepts the common spellings found in converted corpora
    /// (`pro`/`con`, `positive`/`negative`, `1`/`-1`, ...), case-insensitively.
    pub fn parse(raw: &str) -> Option<Stance> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "pro" | "positive" | "support" | "for" | "1" | "+1" => Some(Stance::Pro),
            "con" | "negative" | "oppose" | "against" | "-1" => Some(Stance::Con),
            _ => None,
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Stance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Stance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Value::deserialize(d)?;
        let text = match &raw {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => return Err(serde::de::Error::custom(format!("invalid stance {other}"))),
        };
        Stance::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("unknown stance \"{text}\"")))
    }
}

/// Identifies one topic-stance group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub topic: String,
    pub stance: Stance,
}

impl GroupKey {
    pub fn new(topic: impl Into<String>, stance: Stance) -> Self {
        Self {
            topic: topic.into(),
            stance,
        }
    }

    /// Scope string for seeded sub-streams: `"topic|stance"`.
    pub fn scope(&self) -> String {
        format!("{}|{}", self.topic, self.stance.as_str())
    }

    /// Filesystem-safe, collision-resistant name for per-group artifacts:
    /// a short slug of the topic, a hash of the full topic, and the stance.
    pub fn file_stem(&self) -> String {
        let mut slug = String::new();
        for c in self.topic.chars().flat_map(char::to_lowercase) {
            if c.is_ascii_alphanumeric() {
                slug.push(c);
            } else if !slug.is_empty() && !slug.ends_with('-') {
                slug.push('-');
            }
            if slug.len() >= 40 {
                break;
            }
        }
        let slug = slug.trim_end_matches('-');
        let hash = crate::seed::fnv1a(0, self.topic.as_bytes()) as u32;
        let slug = if slug.is_empty() { "topic" } else { slug };
        format!("{slug}-{hash:08x}-{}", self.stance.as_str())
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.topic, self.stance)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub arg_id: String,
    pub topic: String,
    pub stance: Stance,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPoint {
    pub kp_id: String,
    pub topic: String,
    pub stance: Stance,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchLabel {
    pub arg_id: String,
    pub kp_id: String,
    #[serde(serialize_with = "label_to_int", deserialize_with = "label_from_any")]
    pub label: bool,
}

fn label_to_int<S: Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

fn label_from_any<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    match Value::deserialize(d)? {
        Value::Bool(b) => Ok(b),
        Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
        Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
        other => Err(serde::de::Error::custom(format!("label must be 0 or 1, got {other}"))),
    }
}

/// All arguments, reference key points and gold labels of one (topic, stance).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicStanceGroup {
    pub topic: String,
    pub stance: Stance,
    /// Sorted by `arg_id`.
    pub arguments: Vec<Argument>,
    /// Sorted by `kp_id`.
    pub reference_kps: Vec<KeyPoint>,
    /// Sorted by `(arg_id, kp_id)`.
    pub labels: Vec<MatchLabel>,
}

impl TopicStanceGroup {
    pub fn key(&self) -> GroupKey {
        GroupKey::new(self.topic.clone(), self.stance)
    }

    pub fn argument(&self, arg_id: &str) -> Option<&Argument> {
        self.arguments
            .binary_search_by(|a| a.arg_id.as_str().cmp(arg_id))
            .ok()
            .map(|i| &self.arguments[i])
    }

    pub fn contains_argument(&self, arg_id: &str) -> bool {
        self.argument(arg_id).is_some()
    }

    pub fn key_point(&self, kp_id: &str) -> Option<&KeyPoint> {
        self.reference_kps
            .binary_search_by(|k| k.kp_id.as_str().cmp(kp_id))
            .ok()
            .map(|i| &self.reference_kps[i])
    }

    /// Texts of the reference key points positively matched to `arg_id`.
    /// Labels pointing at key points of another group are skipped.
    pub fn gold_kp_texts(&self, arg_id: &str) -> BTreeSet<&str> {
        self.labels
            .iter()
            .filter(|l| l.label && l.arg_id == arg_id)
            .filter_map(|l| self.key_point(&l.kp_id))
            .map(|kp| kp.text.as_str())
            .collect()
    }

    /// Lexicographically smallest key-point text matched to both arguments.
    pub fn smallest_shared_kp(&self, a: &str, b: &str) -> Option<String> {
        let left = self.gold_kp_texts(a);
        let right = self.gold_kp_texts(b);
        left.intersection(&right).next().map(|s| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    /// Sorted by `(topic, stance)`.
    pub groups: Vec<TopicStanceGroup>,
}

impl Dataset {
    pub fn group(&self, key: &GroupKey) -> Option<&TopicStanceGroup> {
        self.groups
            .iter()
            .find(|g| g.topic == key.topic && g.stance == key.stance)
    }

    pub fn num_arguments(&self) -> usize {
        self.groups.iter().map(|g| g.arguments.len()).sum()
    }

    /// Groups records into a dataset. Labels are attached to the group of
    /// their argument.
    pub fn from_records(
        arguments: Vec<Argument>,
        key_points: Vec<KeyPoint>,
        labels: Vec<MatchLabel>,
    ) -> Result<Dataset> {
        let mut groups: BTreeMap<GroupKey, TopicStanceGroup> = BTreeMap::new();
        let mut arg_group: HashMap<String, GroupKey> = HashMap::new();
        let mut kp_ids = BTreeSet::new();

        let entry = |key: GroupKey| -> TopicStanceGroup {
            TopicStanceGroup {
                topic: key.topic,
                stance: key.stance,
                arguments: Vec::new(),
                reference_kps: Vec::new(),
                labels: Vec::new(),
            }
        };

        for arg in arguments {
            let key = GroupKey::new(arg.topic.clone(), arg.stance);
            if arg_group.insert(arg.arg_id.clone(), key.clone()).is_some() {
                return Err(CorpusError::DuplicateArgument(arg.arg_id));
            }
            groups
                .entry(key.clone())
                .or_insert_with(|| entry(key))
                .arguments
                .push(arg);
        }
        for kp in key_points {
            if !kp_ids.insert(kp.kp_id.clone()) {
                return Err(CorpusError::DuplicateKeyPoint(kp.kp_id));
            }
            let key = GroupKey::new(kp.topic.clone(), kp.stance);
            groups
                .entry(key.clone())
                .or_insert_with(|| entry(key))
                .reference_kps
                .push(kp);
        }
        let mut seen = BTreeSet::new();
        for label in labels {
            if !seen.insert((label.arg_id.clone(), label.kp_id.clone())) {
                return Err(CorpusError::DuplicateLabel {
                    arg_id: label.arg_id,
                    kp_id: label.kp_id,
                });
            }
            let key = arg_group
                .get(&label.arg_id)
                .ok_or_else(|| CorpusError::DanglingReference {
                    path: PathBuf::new(),
                    line: 0,
                    kind: "arg_id",
                    id: label.arg_id.clone(),
                })?;
            if !kp_ids.contains(&label.kp_id) {
                return Err(CorpusError::DanglingReference {
                    path: PathBuf::new(),
                    line: 0,
                    kind: "kp_id",
                    id: label.kp_id,
                });
            }
            groups.get_mut(key).expect("argument group exists").labels.push(label);
        }

        let mut groups: Vec<_> = groups.into_values().collect();
        for g in &mut groups {
            g.arguments.sort_by(|a, b| a.arg_id.cmp(&b.arg_id));
            g.reference_kps.sort_by(|a, b| a.kp_id.cmp(&b.kp_id));
            g.labels
                .sort_by(|a, b| (&a.arg_id, &a.kp_id).cmp(&(&b.arg_id, &b.kp_id)));
        }
        Ok(Dataset { groups })
    }
}

// =============================================================================
// Loading
// =============================================================================

#[derive(Deserialize)]
struct RawArgument {
    arg_id: String,
    topic: String,
    stance: Stance,
    text: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawKeyPoint {
    kp_id: String,
    topic: String,
    stance: Stance,
    text: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawLabel {
    arg_id: String,
    kp_id: String,
    #[serde(deserialize_with = "label_from_any")]
    label: bool,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

/// Reads a JSONL file into `(line_number, record)` pairs. Blank lines are
/// skipped; line numbers are 1-based.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let body = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, rec));
    }
    Ok(out)
}

fn non_empty(path: &Path, line: usize, field: &str, text: String) -> Result<String> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("field \"{field}\" is empty"),
        });
    }
    Ok(trimmed.to_string())
}

fn note_extra(warnings: &mut Vec<String>, path: &Path, line: usize, extra: &BTreeMap<String, Value>) {
    if !extra.is_empty() {
        let names: Vec<_> = extra.keys().map(String::as_str).collect();
        warnings.push(format!(
            "{}:{line}: ignoring unknown field(s) {}",
            path.display(),
            names.join(", ")
        ));
    }
}

/// Loads the three corpus files, returning the dataset together with
/// non-fatal warnings (unknown fields).
pub fn load_dataset_with_warnings(
    args_path: &Path,
    kps_path: &Path,
    labels_path: &Path,
) -> Result<(Dataset, Vec<String>)> {
    load_parts(args_path, kps_path, Some(labels_path))
}

fn load_parts(args_path: &Path, kps_path: &Path, labels_path: Option<&Path>) -> Result<(Dataset, Vec<String>)> {
    let mut warnings = Vec::new();

    let mut arguments = Vec::new();
    let mut arg_lines = HashMap::new();
    for (line, raw) in read_jsonl::<RawArgument>(args_path)? {
        note_extra(&mut warnings, args_path, line, &raw.extra);
        if arg_lines.insert(raw.arg_id.clone(), line).is_some() {
            return Err(CorpusError::DuplicateArgument(raw.arg_id));
        }
        arguments.push(Argument {
            text: non_empty(args_path, line, "text", raw.text)?,
            arg_id: raw.arg_id,
            topic: raw.topic.trim().to_string(),
            stance: raw.stance,
        });
    }

    let mut key_points = Vec::new();
    let mut kp_lines = HashMap::new();
    for (line, raw) in read_jsonl::<RawKeyPoint>(kps_path)? {
        note_extra(&mut warnings, kps_path, line, &raw.extra);
        if kp_lines.insert(raw.kp_id.clone(), line).is_some() {
            return Err(CorpusError::DuplicateKeyPoint(raw.kp_id));
        }
        key_points.push(KeyPoint {
            text: non_empty(kps_path, line, "text", raw.text)?,
            kp_id: raw.kp_id,
            topic: raw.topic.trim().to_string(),
            stance: raw.stance,
        });
    }

    let mut labels = Vec::new();
    let raw_labels = match labels_path {
        Some(p) => read_jsonl::<RawLabel>(p)?,
        None => Vec::new(),
    };
    let labels_path = labels_path.unwrap_or(Path::new(LABELS_FILE));
    for (line, raw) in raw_labels {
        note_extra(&mut warnings, labels_path, line, &raw.extra);
        for (kind, id, known) in [
            ("arg_id", &raw.arg_id, arg_lines.contains_key(&raw.arg_id)),
            ("kp_id", &raw.kp_id, kp_lines.contains_key(&raw.kp_id)),
        ] {
            if !known {
                return Err(CorpusError::DanglingReference {
                    path: labels_path.to_path_buf(),
                    line,
                    kind,
                    id: id.clone(),
                });
            }
        }
        labels.push(MatchLabel {
            arg_id: raw.arg_id,
            kp_id: raw.kp_id,
            label: raw.label,
        });
    }

    Ok((Dataset::from_records(arguments, key_points, labels)?, warnings))
}

pub fn load_dataset(args_path: &Path, kps_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (dataset, warnings) = load_dataset_with_warnings(args_path, kps_path, labels_path)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(dataset)
}

/// Loads `arguments.jsonl`, `keypoints.jsonl` and `labels.jsonl` from `dir`.
/// A missing labels file is treated as empty (inference-only corpora).
pub fn load_dataset_dir(dir: &Path) -> Result<Dataset> {
    let labels = dir.join(LABELS_FILE);
    let labels = labels.exists().then_some(labels);
    let (dataset, warnings) = load_parts(&dir.join(ARGUMENTS_FILE), &dir.join(KEYPOINTS_FILE), labels.as_deref())?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(dataset)
}

/// Writes a slice of records as JSONL.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)
}

/// Writes the dataset back as the three corpus files under `dir`.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let args: Vec<_> = dataset.groups.iter().flat_map(|g| &g.arguments).collect();
    let kps: Vec<_> = dataset.groups.iter().flat_map(|g| &g.reference_kps).collect();
    let labels: Vec<_> = dataset.groups.iter().flat_map(|g| &g.labels).collect();
    write_jsonl(&dir.join(ARGUMENTS_FILE), &args)?;
    write_jsonl(&dir.join(KEYPOINTS_FILE), &kps)?;
    write_jsonl(&dir.join(LABELS_FILE), &labels)
}

// =============================================================================
// Validation
// =============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }
}

/// Diagnoses arguments without a gold key point, key points without an
/// argument and labels that cross group boundaries. Only positive labels count.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut issues = Vec::new();
    let mut kp_group: HashMap<&str, GroupKey> = HashMap::new();
    for g in &dataset.groups {
        for kp in &g.reference_kps {
            kp_group.insert(&kp.kp_id, g.key());
        }
    }
    let mut referenced: BTreeSet<&str> = BTreeSet::new();

    for g in &dataset.groups {
        let key = g.key();
        let mut matched: BTreeSet<&str> = BTreeSet::new();
        for l in g.labels.iter().filter(|l| l.label) {
            referenced.insert(&l.kp_id);
            matched.insert(&l.arg_id);
            if kp_group.get(l.kp_id.as_str()) != Some(&key) {
                issues.push(Issue {
                    severity: Severity::Error,
                    message: format!(
                        "cross-stance label: argument \"{}\" ({key}) matched to key point \"{}\" of another group",
                        l.arg_id, l.kp_id
                    ),
                });
            }
        }
        for a in &g.arguments {
            if !matched.contains(a.arg_id.as_str()) {
                issues.push(Issue {
                    severity: Severity::Warning,
                    message: format!("argument without key point: \"{}\"", a.arg_id),
                });
            }
        }
    }
    for g in &dataset.groups {
        for kp in &g.reference_kps {
            if !referenced.contains(kp.kp_id.as_str()) {
                issues.push(Issue {
                    severity: Severity::Warning,
                    message: format!("unreferenced key point: \"{}\"", kp.kp_id),
                });
            }
        }
    }
    ValidationReport { issues }
}
