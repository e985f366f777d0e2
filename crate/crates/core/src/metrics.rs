//! Key-point set evaluation: Rouge-N over concatenated key points and soft
//! precision / recall / F1 under a pluggable similarity.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, GroupKey, Stance};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("{0} key point list is empty")]
    EmptyList(&'static str),
    #[error("group {0} is not in the dataset")]
    UnknownGroup(GroupKey),
    #[error("group {0} has no reference key points")]
    NoReference(GroupKey),
    #[error("similarity {name} returned {value} for ({a:?}, {b:?}), outside [0, 1]")]
    OutOfRange {
        name: String,
        value: f64,
        a: String,
        b: String,
    },
    #[error("similarity backend: {0}")]
    Backend(String),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

/// Lowercases, turns every non-alphanumeric, non-space character into a
/// space, and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect::<String>()
        .to_lowercase();
    cleaned.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Rouge-N with clipped n-gram overlap. Empty n-gram sets score zero.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Prf {
    let cand_tokens = tokenize(candidate);
    let ref_tokens = tokenize(reference);
    let cand = ngram_counts(&cand_tokens, n);
    let refs = ngram_counts(&ref_tokens, n);
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refs.values().sum();
    let overlap: usize = cand
        .iter()
        .map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    let precision = if cand_total == 0 {
        0.0
    } else {
        overlap as f64 / cand_total as f64
    };
    let recall = if ref_total == 0 {
        0.0
    } else {
        overlap as f64 / ref_total as f64
    };
    Prf {
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

/// Unigram F1 between two texts; two token-less texts count as identical.
pub fn token_f1_sim(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokenize(a), tokenize(b));
    match (ta.is_empty(), tb.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => rouge_n(a, b, 1).f1,
    }
}

// =============================================================================
// Similarities
// =============================================================================

/// Scores how well a generated key point matches a reference one, in `[0, 1]`.
pub trait Similarity {
    fn name(&self) -> String;
    fn score(&self, reference: &str, generated: &str) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TokenF1;

impl Similarity for TokenF1 {
    fn name(&self) -> String {
        "token-f1".into()
    }
    fn score(&self, reference: &str, generated: &str) -> Result<f64> {
        Ok(token_f1_sim(reference, generated))
    }
}

/// 1 for identical (whitespace-trimmed) strings, 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl Similarity for ExactMatch {
    fn name(&self) -> String {
        "exact".into()
    }
    fn score(&self, reference: &str, generated: &str) -> Result<f64> {
        Ok(if reference.trim() == generated.trim() { 1.0 } else { 0.0 })
    }
}

fn checked(sim: &dyn Similarity, reference: &str, generated: &str) -> Result<f64> {
    let value = sim.score(reference, generated)?;
    if !(0.0..=1.0).contains(&value) {
        return Err(MetricsError::OutOfRange {
            name: sim.name(),
            value,
            a: reference.to_string(),
            b: generated.to_string(),
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SoftPrf {
    #[serde(rename = "sP")]
    pub sp: f64,
    #[serde(rename = "sR")]
    pub sr: f64,
    #[serde(rename = "sF1")]
    pub sf1: f64,
}

/// Soft precision is the mean over generated key points of their best
/// similarity to any reference; soft recall is the mean over references of
/// their best similarity to any generated key point; sF1 is their harmonic
/// mean.
pub fn soft_prf(generated: &[String], reference: &[String], sim: &dyn Similarity) -> Result<SoftPrf> {
    if generated.is_empty() {
        return Err(MetricsError::EmptyList("generated"));
    }
    if reference.is_empty() {
        return Err(MetricsError::EmptyList("reference"));
    }
    let mut matrix = vec![vec![0.0; generated.len()]; reference.len()];
    for (r, kp) in reference.iter().enumerate() {
        for (g, gen) in generated.iter().enumerate() {
            matrix[r][g] = checked(sim, kp, gen)?;
        }
    }
    let sp = (0..generated.len())
        .map(|g| matrix.iter().map(|row| row[g]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / generated.len() as f64;
    let sr = matrix
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(SoftPrf {
        sp,
        sr,
        sf1: harmonic(sp, sr),
    })
}

// =============================================================================
// Report
// =============================================================================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub topic: String,
    pub stance: Stance,
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "sP")]
    pub sp: f64,
    #[serde(rename = "sR")]
    pub sr: f64,
    #[serde(rename = "sF1")]
    pub sf1: f64,
    /// Set when the group had no generated key point and scored zero.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroScores {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "sP")]
    pub sp: f64,
    #[serde(rename = "sR")]
    pub sr: f64,
    #[serde(rename = "sF1")]
    pub sf1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub sim: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub groups: Vec<GroupScores>,
    #[serde(rename = "macro")]
    pub macro_avg: MacroScores,
    pub config: ReportConfig,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Key points are joined with ". " before Rouge is computed.
pub const CONCAT_JOINER: &str = ". ";

/// Scores every group in `generated` against its reference key points (in
/// `kp_id` order) and macro-averages over groups.
pub fn evaluate(
    generated: &BTreeMap<GroupKey, Vec<String>>,
    dataset: &Dataset,
    sim: &dyn Similarity,
) -> Result<EvalReport> {
    let mut groups = Vec::with_capacity(generated.len());
    for (key, gen) in generated {
        let group = dataset
            .group(key)
            .ok_or_else(|| MetricsError::UnknownGroup(key.clone()))?;
        let reference: Vec<String> = group.reference_kps.iter().map(|k| k.text.clone()).collect();
        if reference.is_empty() {
            return Err(MetricsError::NoReference(key.clone()));
        }
        if gen.is_empty() {
            log::warn!("{key}: no generated key points, scored 0");
            groups.push(GroupScores {
                topic: key.topic.clone(),
                stance: key.stance,
                rouge1: 0.0,
                rouge2: 0.0,
                sp: 0.0,
                sr: 0.0,
                sf1: 0.0,
                flagged: true,
            });
            continue;
        }
        let cand = gen.join(CONCAT_JOINER);
        let refs = reference.join(CONCAT_JOINER);
        let soft = soft_prf(gen, &reference, sim)?;
        groups.push(GroupScores {
            topic: key.topic.clone(),
            stance: key.stance,
            rouge1: rouge_n(&cand, &refs, 1).f1,
            rouge2: rouge_n(&cand, &refs, 2).f1,
            sp: soft.sp,
            sr: soft.sr,
            sf1: soft.sf1,
            flagged: false,
        });
    }
    Ok(EvalReport {
        macro_avg: macro_average(&groups),
        groups,
        config: ReportConfig { sim: sim.name() },
    })
}

fn macro_average(groups: &[GroupScores]) -> MacroScores {
    if groups.is_empty() {
        return MacroScores::default();
    }
    let n = groups.len() as f64;
    let mean = |f: fn(&GroupScores) -> f64| groups.iter().map(f).sum::<f64>() / n;
    MacroScores {
        rouge1: mean(|g| g.rouge1),
        rouge2: mean(|g| g.rouge2),
        sp: mean(|g| g.sp),
        sr: mean(|g| g.sr),
        sf1: mean(|g| g.sf1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::KeyPoint;
    use proptest::prelude::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenization() {
        assert_eq!(tokenize("Don't STOP, believing!"), ["don", "t", "stop", "believing"]);
        assert!(tokenize(" ... ").is_empty());
    }

    #[test]
    fn unigram_worked_example() {
        // overlap {vaccination, saves, lives}
        let r = rouge_n("mandatory vaccination saves lives", "vaccination saves many lives", 1);
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.75);
        assert_eq!(r.f1, 0.75);
    }

    #[test]
    fn rouge_degenerate_cases() {
        for n in [1, 2] {
            let r = rouge_n("a b c", "a b c", n);
            assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
            assert_eq!(rouge_n("a b", "c d", n), Prf::default());
        }
        assert_eq!(rouge_n("", "a b", 1), Prf::default());
        assert_eq!(rouge_n("a", "a", 2), Prf::default());
    }

    #[test]
    fn token_f1_values() {
        assert_eq!(token_f1_sim("Science explains it", "science explains it."), 1.0);
        assert!((token_f1_sim("a b c", "a b d") - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(token_f1_sim("a b", "c d"), 0.0);
        assert_eq!(token_f1_sim("", "x"), 0.0);
        assert_eq!(token_f1_sim("", "!"), 1.0);
    }

    #[test]
    fn soft_worked_examples() {
        let refs = strings(&["k1", "k2", "k3"]);
        let s = soft_prf(&refs, &refs, &ExactMatch).unwrap();
        assert_eq!((s.sp, s.sr, s.sf1), (1.0, 1.0, 1.0));

        let s = soft_prf(&strings(&["k1", "k2"]), &strings(&["k1", "k3"]), &ExactMatch).unwrap();
        assert_eq!((s.sp, s.sr, s.sf1), (0.5, 0.5, 0.5));

        assert!((harmonic(0.6, 0.4) - 0.48).abs() < 1e-15);
        assert!(soft_prf(&[], &refs, &ExactMatch).is_err());
        assert!(soft_prf(&refs, &[], &ExactMatch).is_err());
    }

    struct Broken;
    impl Similarity for Broken {
        fn name(&self) -> String {
            "broken".into()
        }
        fn score(&self, _: &str, _: &str) -> Result<f64> {
            Ok(1.5)
        }
    }

    #[test]
    fn similarity_range_checked() {
        let x = strings(&["x"]);
        assert!(matches!(
            soft_prf(&x, &x, &Broken),
            Err(MetricsError::OutOfRange { .. })
        ));
    }

    fn dataset(groups: &[(&str, &[&str])]) -> Dataset {
        let mut kps = Vec::new();
        for (topic, texts) in groups {
            for (i, t) in texts.iter().enumerate() {
                kps.push(KeyPoint {
                    kp_id: format!("{topic}-{i}"),
                    topic: topic.to_string(),
                    stance: Stance::Pro,
                    text: t.to_string(),
                });
            }
        }
        Dataset::from_records(vec![], kps, vec![]).unwrap()
    }

    #[test]
    fn evaluate_groups_and_macro() {
        let d = dataset(&[("t1", &["alpha beta", "gamma"]), ("t2", &["delta"]), ("t3", &["x"])]);
        let k = |t: &str| GroupKey::new(t, Stance::Pro);
        let mut gen = BTreeMap::new();
        gen.insert(k("t1"), strings(&["alpha beta", "gamma"]));
        let r = evaluate(&gen, &d, &ExactMatch).unwrap();
        let g = &r.groups[0];
        assert_eq!((g.rouge1, g.rouge2, g.sp, g.sr, g.sf1), (1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!(r.config.sim, "exact");

        gen.insert(k("t2"), strings(&["delta", "omega"]));
        gen.insert(k("t3"), vec![]);
        let r = evaluate(&gen, &d, &ExactMatch).unwrap();
        assert!(r.groups[2].flagged);
        assert_eq!(r.groups[2].sf1, 0.0);
        // sF1 per group: 1, 2/3, 0
        assert!((r.macro_avg.sf1 - (1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);

        let mut unknown = BTreeMap::new();
        unknown.insert(k("nope"), strings(&["x"]));
        assert!(matches!(
            evaluate(&unknown, &d, &ExactMatch),
            Err(MetricsError::UnknownGroup(_))
        ));
    }

    #[test]
    fn macro_of_two_groups() {
        let mk = |sf1| GroupScores {
            topic: "t".into(),
            stance: Stance::Pro,
            rouge1: 0.0,
            rouge2: 0.0,
            sp: 0.0,
            sr: 0.0,
            sf1,
            flagged: false,
        };
        assert!((macro_average(&[mk(0.4), mk(0.6)]).sf1 - 0.5).abs() < 1e-15);
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["a", "b", "c", "d", "e"]).prop_map(String::from)
    }

    fn phrase() -> impl Strategy<Value = String> {
        prop::collection::vec(word(), 1..4).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn swapping_lists_swaps_precision_and_recall(
            gen in prop::collection::vec(phrase(), 1..5),
            refs in prop::collection::vec(phrase(), 1..5),
        ) {
            // the argument order of token F1 does not matter, so swapping roles is exact
            let a = soft_prf(&gen, &refs, &TokenF1).unwrap();
            let b = soft_prf(&refs, &gen, &TokenF1).unwrap();
            prop_assert_eq!(a.sp, b.sr);
            prop_assert_eq!(a.sr, b.sp);
            prop_assert!((a.sf1 - b.sf1).abs() < 1e-15);
        }

        #[test]
        fn adding_an_unmatched_reference_never_lowers_recall(
            gen in prop::collection::vec(phrase(), 1..5),
            refs in prop::collection::vec(phrase(), 1..5),
            pick in 0usize..5,
        ) {
            let before = soft_prf(&gen, &refs, &ExactMatch).unwrap();
            let target = refs[pick % refs.len()].clone();
            let mut more = gen.clone();
            more.push(target);
            let after = soft_prf(&more, &refs, &ExactMatch).unwrap();
            prop_assert!(after.sr >= before.sr);
        }

        #[test]
        fn rouge_self_match(x in phrase()) {
            let r = rouge_n(&x, &x, 1);
            prop_assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        }

        #[test]
        fn soft_scores_ignore_list_order(
            gen in prop::collection::vec(phrase(), 1..5),
            refs in prop::collection::vec(phrase(), 1..5),
        ) {
            let a = soft_prf(&gen, &refs, &TokenF1).unwrap();
            let mut g2 = gen.clone();
            g2.reverse();
            let mut r2 = refs.clone();
            r2.rotate_left(1);
            let b = soft_prf(&g2, &r2, &TokenF1).unwrap();
            prop_assert!((a.sp - b.sp).abs() < 1e-12 && (a.sr - b.sr).abs() < 1e-12);
        }
    }
}
