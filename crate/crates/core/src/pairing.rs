//! Unordered argument pairs, their gold labels, the text templates fed to and
//! produced by the pair generator, and the sharing score computed from the
//! generator's first-step Yes/No logits.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::{GroupKey, Stance, TopicStanceGroup};
use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairingError {
    #[error("pair of identical arguments \"{0}\"")]
    SelfPair(String),
    #[error("argument \"{arg_id}\" is not part of group {group}")]
    OutsideGroup { arg_id: String, group: GroupKey },
    #[error("group {0} has no gold labels")]
    NoLabels(GroupKey),
    #[error("intra-cluster label for ({0}) has no shared key point text")]
    MissingKeyPoint(String),
    #[error("unparseable model output: {0:?}")]
    UnparseableOutput(String),
    #[error("non-finite logits (yes={yes}, no={no})")]
    NonFiniteLogits { yes: f64, no: f64 },
}

pub type Result<T, E = PairingError> = std::result::Result<T, E>;

/// Unordered pair of arguments of the same group, stored with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArgumentPair {
    pub group: GroupKey,
    pub i: String,
    pub j: String,
}

impl ArgumentPair {
    /// Builds the pair, swapping `a` and `b` if needed so that `i < j`.
    pub fn new(group: GroupKey, a: impl Into<String>, b: impl Into<String>) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Self { group, i: a, j: b }),
            std::cmp::Ordering::Greater => Ok(Self { group, i: b, j: a }),
            std::cmp::Ordering::Equal => Err(PairingError::SelfPair(a)),
        }
    }

    pub fn contains(&self, arg_id: &str) -> bool {
        self.i == arg_id || self.j == arg_id
    }

    pub fn ensure_in(&self, group: &TopicStanceGroup) -> Result<()> {
        for id in [&self.i, &self.j] {
            if self.group != group.key() || !group.contains_argument(id) {
                return Err(PairingError::OutsideGroup {
                    arg_id: id.clone(),
                    group: group.key(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ArgumentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.i, self.j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairLabel {
    pub pair: ArgumentPair,
    pub intra_cluster: bool,
    pub shared_kp_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub pair_id: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitPair {
    pub logit_yes: f64,
    pub logit_no: f64,
}

/// A scored pair: the bridge from pair scoring to graph construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPrediction {
    pub pair: ArgumentPair,
    pub share_score: f64,
    pub key_point: Option<String>,
}

// =============================================================================
// Pair enumeration and labelling
// =============================================================================

/// Every unordered pair of the group's arguments in lexicographic `(i, j)` order.
pub fn enumerate_pairs(group: &TopicStanceGroup) -> Vec<ArgumentPair> {
    let key = group.key();
    let args = &group.arguments;
    let mut pairs = Vec::with_capacity(args.len() * args.len().saturating_sub(1) / 2);
    for (a, left) in args.iter().enumerate() {
        for right in &args[a + 1..] {
            pairs.push(ArgumentPair {
                group: key.clone(),
                i: left.arg_id.clone(),
                j: right.arg_id.clone(),
            });
        }
    }
    pairs
}

/// Labels pairs as intra-cluster (sharing at least one gold key point) or
/// inter-cluster, capping how often any argument appears in a retained
/// intra-cluster pair.
///
/// Arguments are visited in `arg_id` order; whenever one appears in more than
/// `max_intra_per_arg` retained intra-cluster pairs, the surplus is dropped by
/// seeded uniform sampling over its pairs. Inter-cluster pairs are all kept.
/// `None` disables the cap.
pub fn label_pairs(
    pairs: &[ArgumentPair],
    group: &TopicStanceGroup,
    max_intra_per_arg: Option<usize>,
    seed: u64,
) -> Result<Vec<PairLabel>> {
    if group.labels.is_empty() {
        return Err(PairingError::NoLabels(group.key()));
    }
    let mut labels = Vec::with_capacity(pairs.len());
    for pair in pairs {
        pair.ensure_in(group)?;
        let shared = group.smallest_shared_kp(&pair.i, &pair.j);
        labels.push(PairLabel {
            pair: pair.clone(),
            intra_cluster: shared.is_some(),
            shared_kp_text: shared,
        });
    }

    let Some(cap) = max_intra_per_arg else {
        return Ok(labels);
    };

    let mut dropped: HashSet<usize> = HashSet::new();
    let mut rng = seed::rng(seed);
    for arg in &group.arguments {
        let mine: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(idx, l)| l.intra_cluster && !dropped.contains(idx) && l.pair.contains(&arg.arg_id))
            .map(|(idx, _)| idx)
            .collect();
        if mine.len() > cap {
            for k in index::sample(&mut rng, mine.len(), mine.len() - cap) {
                dropped.insert(mine[k]);
            }
        }
    }
    Ok(labels
        .into_iter()
        .enumerate()
        .filter(|(idx, _)| !dropped.contains(idx))
        .map(|(_, l)| l)
        .collect())
}

/// How many retained intra-cluster labels each argument appears in.
pub fn intra_counts(labels: &[PairLabel]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for l in labels.iter().filter(|l| l.intra_cluster) {
        *counts.entry(l.pair.i.as_str()).or_default() += 1;
        *counts.entry(l.pair.j.as_str()).or_default() += 1;
    }
    counts
}

// =============================================================================
// Templates
// =============================================================================

/// `{topic} | {stance_i}. {arg_i} | {stance_j}. {arg_j}` with stances rendered
/// as "positive" / "negative". Nothing is escaped.
pub fn format_input(topic: &str, stance_i: Stance, arg_i: &str, stance_j: Stance, arg_j: &str) -> String {
    format!(
        "{topic} | {}. {arg_i} | {}. {arg_j}",
        stance_i.template_word(),
        stance_j.template_word()
    )
}

pub fn format_output(label: &PairLabel) -> Result<String> {
    if !label.intra_cluster {
        return Ok("No.".to_string());
    }
    match label.shared_kp_text.as_deref().map(str::trim) {
        Some(kp) if !kp.is_empty() => Ok(format!("Yes. {kp}")),
        _ => Err(PairingError::MissingKeyPoint(label.pair.to_string())),
    }
}

/// Splits a generated answer into its yes/no decision and the key point
/// following a "Yes.". The leading token is matched case-insensitively.
pub fn parse_output(text: &str) -> Result<(bool, Option<String>)> {
    let t = text.trim_start();
    let token_end = t
        .find(|c: char| c == '.' || c == ',' || c == ':' || c.is_whitespace())
        .unwrap_or(t.len());
    let token = &t[..token_end];
    let rest = t[token_end..].strip_prefix(['.', ',', ':']).unwrap_or(&t[token_end..]);
    if token.eq_ignore_ascii_case("yes") {
        let kp = rest.trim();
        Ok((true, (!kp.is_empty()).then(|| kp.to_string())))
    } else if token.eq_ignore_ascii_case("no") {
        Ok((false, None))
    } else {
        Err(PairingError::UnparseableOutput(text.to_string()))
    }
}

/// Training pair for the generator: the rendered input and its target output.
pub fn training_record(label: &PairLabel, group: &TopicStanceGroup) -> Result<TrainingRecord> {
    label.pair.ensure_in(group)?;
    let a = group.argument(&label.pair.i).expect("checked");
    let b = group.argument(&label.pair.j).expect("checked");
    Ok(TrainingRecord {
        pair_id: format!("{}::{}", a.arg_id, b.arg_id),
        input: format_input(&group.topic, a.stance, &a.text, b.stance, &b.text),
        output: format_output(label)?,
    })
}

// =============================================================================
// Sharing score
// =============================================================================

/// `exp(yes) / (exp(yes) + exp(no))`, evaluated after subtracting the larger
/// logit so neither exponential overflows.
pub fn share_score(l: LogitPair) -> Result<f64> {
    let (yes, no) = (l.logit_yes, l.logit_no);
    if !yes.is_finite() || !no.is_finite() {
        return Err(PairingError::NonFiniteLogits { yes, no });
    }
    let m = yes.max(no);
    let ey = (yes - m).exp();
    let en = (no - m).exp();
    Ok(ey / (ey + en))
}

/// What to do with a generated answer that is neither "Yes..." nor "No...".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnparseablePolicy {
    #[default]
    TreatAsNo,
    Error,
}

/// Combines first-step logits and the decoded answer into a prediction.
/// A "Yes" without key point text cannot form an edge and is downgraded to
/// having no key point.
pub fn prediction_from_generation(
    pair: ArgumentPair,
    logits: LogitPair,
    output: &str,
    policy: UnparseablePolicy,
) -> Result<PairPrediction> {
    let share_score = share_score(logits)?;
    let key_point = match parse_output(output) {
        Ok((true, None)) => {
            log::warn!("pair ({pair}): \"Yes\" without a key point, no edge");
            None
        }
        Ok((true, kp)) => kp,
        Ok((false, _)) => None,
        Err(e) => match policy {
            UnparseablePolicy::TreatAsNo => {
                log::warn!("pair ({pair}): {e}, treated as \"No\"");
                None
            }
            UnparseablePolicy::Error => return Err(e),
        },
    };
    Ok(PairPrediction {
        pair,
        share_score,
        key_point,
    })
}

/// Distinct arguments touched by a list of pairs.
pub fn arguments_of(pairs: &[ArgumentPair]) -> BTreeSet<&str> {
    pairs.iter().flat_map(|p| [p.i.as_str(), p.j.as_str()]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Argument, Dataset, KeyPoint, MatchLabel};
    use proptest::prelude::*;

    fn group(n: usize, gold: &[(&str, &str)], kps: &[&str]) -> TopicStanceGroup {
        let d = Dataset::from_records(
            (1..=n)
                .map(|i| Argument {
                    arg_id: format!("a{i:02}"),
                    topic: "T".into(),
                    stance: Stance::Pro,
                    text: format!("argument {i}"),
                })
                .collect(),
            kps.iter()
                .map(|k| KeyPoint {
                    kp_id: format!("kp_{k}"),
                    topic: "T".into(),
                    stance: Stance::Pro,
                    text: k.to_string(),
                })
                .collect(),
            gold.iter()
                .map(|(a, k)| MatchLabel {
                    arg_id: a.to_string(),
                    kp_id: format!("kp_{k}"),
                    label: true,
                })
                .collect(),
        )
        .unwrap();
        d.groups.into_iter().next().unwrap_or(TopicStanceGroup {
            topic: "T".into(),
            stance: Stance::Pro,
            arguments: vec![],
            reference_kps: vec![],
            labels: vec![],
        })
    }

    #[test]
    fn pair_counts_and_order() {
        assert_eq!(enumerate_pairs(&group(4, &[], &[])).len(), 6);
        assert!(enumerate_pairs(&group(1, &[], &[])).is_empty());
        let ids: Vec<_> = enumerate_pairs(&group(3, &[], &[]))
            .into_iter()
            .map(|p| (p.i, p.j))
            .collect();
        let s = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert_eq!(ids, vec![s("a01", "a02"), s("a01", "a03"), s("a02", "a03")]);
    }

    #[test]
    fn pair_normalizes_order() {
        let k = GroupKey::new("T", Stance::Pro);
        let p = ArgumentPair::new(k.clone(), "b", "a").unwrap();
        assert_eq!((p.i.as_str(), p.j.as_str()), ("a", "b"));
        assert!(ArgumentPair::new(k, "a", "a").is_err());
    }

    #[test]
    fn labels_intra_and_inter() {
        let g = group(
            3,
            &[("a01", "B"), ("a01", "A"), ("a02", "A"), ("a02", "B")],
            &["A", "B"],
        );
        let labels = label_pairs(&enumerate_pairs(&g), &g, Some(5), 0).unwrap();
        assert_eq!(labels[0].shared_kp_text.as_deref(), Some("A"));
        assert!(labels[0].intra_cluster);
        assert!(!labels[1].intra_cluster);
        assert_eq!(labels[1].shared_kp_text, None);
    }

    #[test]
    fn cap_limits_hub_argument() {
        // a01 shares "K" with 7 partners
        let gold: Vec<(String, &str)> = (1..=8).map(|i| (format!("a{i:02}"), "K")).collect();
        let gold: Vec<(&str, &str)> = gold.iter().map(|(a, k)| (a.as_str(), *k)).collect();
        let g = group(8, &gold, &["K"]);
        let pairs = enumerate_pairs(&g);
        let labels = label_pairs(&pairs, &g, Some(5), 7).unwrap();
        let counts = intra_counts(&labels);
        assert!(counts.values().all(|&c| c <= 5), "{counts:?}");
        let uncapped = label_pairs(&pairs, &g, None, 7).unwrap();
        assert_eq!(uncapped.len(), 28);
        assert_eq!(label_pairs(&pairs, &g, Some(5), 7).unwrap(), labels);
    }

    #[test]
    fn labelling_rejects_foreign_pairs_and_unlabelled_groups() {
        let g = group(2, &[("a01", "K")], &["K"]);
        let foreign = ArgumentPair::new(g.key(), "a01", "zz").unwrap();
        assert!(matches!(
            label_pairs(&[foreign], &g, Some(5), 0),
            Err(PairingError::OutsideGroup { .. })
        ));
        let bare = group(2, &[], &[]);
        assert!(matches!(
            label_pairs(&enumerate_pairs(&bare), &bare, Some(5), 0),
            Err(PairingError::NoLabels(_))
        ));
    }

    #[test]
    fn input_template() {
        assert_eq!(
            format_input("T", Stance::Pro, "a", Stance::Con, "b"),
            "T | positive. a | negative. b"
        );
        assert_eq!(
            format_input(
                "We should adopt atheism.",
                Stance::Pro,
                "if we adopt atheism then maybe people will start believing in the scientific community again.",
                Stance::Pro,
                "we should adopt atheism because science can explain how we got here without needing a god to explain it."
            ),
            "We should adopt atheism. | positive. if we adopt atheism then maybe people will start believing in the scientific community again. | positive. we should adopt atheism because science can explain how we got here without needing a god to explain it."
        );
        assert_eq!(
            format_input("a|b", Stance::Con, "x", Stance::Con, "y"),
            "a|b | negative. x | negative. y"
        );
    }

    #[test]
    fn output_template() {
        let pair = ArgumentPair::new(GroupKey::new("T", Stance::Pro), "a", "b").unwrap();
        let yes = PairLabel {
            pair: pair.clone(),
            intra_cluster: true,
            shared_kp_text: Some("Science can adequately explain the Universe".into()),
        };
        assert_eq!(
            format_output(&yes).unwrap(),
            "Yes. Science can adequately explain the Universe"
        );
        let no = PairLabel {
            pair: pair.clone(),
            intra_cluster: false,
            shared_kp_text: None,
        };
        assert_eq!(format_output(&no).unwrap(), "No.");
        let broken = PairLabel {
            pair,
            intra_cluster: true,
            shared_kp_text: Some(String::new()),
        };
        assert!(matches!(format_output(&broken), Err(PairingError::MissingKeyPoint(_))));
    }

    #[test]
    fn output_parsing() {
        assert_eq!(
            parse_output("Yes. Science can adequately explain the Universe").unwrap(),
            (true, Some("Science can adequately explain the Universe".into()))
        );
        assert_eq!(parse_output("No.").unwrap(), (false, None));
        assert_eq!(parse_output("no").unwrap(), (false, None));
        assert_eq!(parse_output("YES.").unwrap(), (true, None));
        assert!(parse_output("Maybe.").is_err());
        assert!(parse_output("Nothing in common").is_err());
        assert!(parse_output("").is_err());
    }

    #[test]
    fn score_values() {
        let s = |y, n| {
            share_score(LogitPair {
                logit_yes: y,
                logit_no: n,
            })
            .unwrap()
        };
        for x in [-50.0, 0.0, 50.0] {
            assert!((s(x, x) - 0.5).abs() < 1e-12);
        }
        // 1 / (1 + e^-2) and 1 / (1 + e^3)
        assert!((s(2.0, 0.0) - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert!((s(0.0, 3.0) - 0.047_425_873_177_566_78).abs() < 1e-12);
        assert!((s(700.0, -700.0) - 1.0).abs() < 1e-12);
        assert!(share_score(LogitPair {
            logit_yes: f64::NAN,
            logit_no: 0.0
        })
        .is_err());
    }

    #[test]
    fn generation_policy() {
        let pair = ArgumentPair::new(GroupKey::new("T", Stance::Pro), "a", "b").unwrap();
        let l = LogitPair {
            logit_yes: 1.0,
            logit_no: 0.0,
        };
        let p = prediction_from_generation(pair.clone(), l, "Yes. K", UnparseablePolicy::TreatAsNo).unwrap();
        assert_eq!(p.key_point.as_deref(), Some("K"));
        let p = prediction_from_generation(pair.clone(), l, "Yes.", UnparseablePolicy::TreatAsNo).unwrap();
        assert_eq!(p.key_point, None);
        let p = prediction_from_generation(pair.clone(), l, "???", UnparseablePolicy::TreatAsNo).unwrap();
        assert_eq!(p.key_point, None);
        assert!(prediction_from_generation(pair, l, "???", UnparseablePolicy::Error).is_err());
    }

    proptest! {
        #[test]
        fn score_is_monotone_in_margin(a in -50.0f64..50.0, b in -50.0f64..50.0, d in 0.01f64..5.0) {
            let lo = share_score(LogitPair { logit_yes: a, logit_no: b }).unwrap();
            let hi = share_score(LogitPair { logit_yes: a + d, logit_no: b }).unwrap();
            prop_assert!(hi >= lo);
            if (a - b).abs() < 20.0 {
                prop_assert!(hi > lo);
            }
        }

        #[test]
        fn enumeration_covers_each_pair_once(n in 0usize..25) {
            let g = group(n, &[], &[]);
            let pairs = enumerate_pairs(&g);
            let set: HashSet<_> = pairs.iter().map(|p| (p.i.clone(), p.j.clone())).collect();
            prop_assert_eq!(set.len(), pairs.len());
            prop_assert_eq!(pairs.len(), n * n.saturating_sub(1) / 2);
            prop_assert!(pairs.iter().all(|p| p.i < p.j));
        }
    }
}
