//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use kpa_core::corpus::{self, Argument, Dataset, KeyPoint, MatchLabel, Stance};
use kpa_core::pairing::enumerate_pairs;
use kpa_core::scorer::PredictionRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn word(rng: &mut ChaCha8Rng) -> String {
    (0..6).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

pub struct Shape {
    pub topics: usize,
    pub kps_per_group: usize,
    pub args_per_kp: usize,
    /// Every `double_every`-th argument of a key point (starting with the
    /// first) also matches the next key point. 0 disables.
    pub double_every: usize,
}

/// 3 topics x 2 stances, 8 key points per group, 5 arguments per key point,
/// one argument in five matched to a second key point.
pub const ORACLE_SHAPE: Shape = Shape {
    topics: 3,
    kps_per_group: 8,
    args_per_kp: 5,
    double_every: 5,
};

/// Planted-cluster corpus. Each key point owns five random words; its
/// arguments repeat those words plus one word of their own, so arguments of
/// one key point embed close together and far from the others. Argument
/// texts only carry their primary key point's words.
pub fn synthetic(shape: &Shape, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut args, mut kps, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..shape.topics {
        let topic = format!("Topic {t}: we should {} the {}", word(&mut rng), word(&mut rng));
        for stance in [Stance::Pro, Stance::Con] {
            let tag = format!("t{t}{}", stance.as_str());
            let vocab: Vec<Vec<String>> = (0..shape.kps_per_group)
                .map(|_| (0..5).map(|_| word(&mut rng)).collect())
                .collect();
            for (k, words) in vocab.iter().enumerate() {
                kps.push(KeyPoint {
                    kp_id: format!("{tag}-kp{k:02}"),
                    topic: topic.clone(),
                    stance,
                    text: format!("Key point {k}: {}", words.join(" ")),
                });
            }
            for k in 0..shape.kps_per_group {
                for a in 0..shape.args_per_kp {
                    let arg_id = format!("{tag}-a{k:02}{a:02}");
                    args.push(Argument {
                        arg_id: arg_id.clone(),
                        topic: topic.clone(),
                        stance,
                        text: format!("{} {}", vocab[k].join(" "), word(&mut rng)),
                    });
                    let mut matched = vec![k];
                    if shape.double_every > 0 && a % shape.double_every == 0 && shape.kps_per_group > 1 {
                        matched.push((k + 1) % shape.kps_per_group);
                    }
                    for j in 0..shape.kps_per_group {
                        let label = matched.contains(&j);
                        // all positives plus one explicit negative per argument
                        if label || j == (k + 2) % shape.kps_per_group {
                            labels.push(MatchLabel {
                                arg_id: arg_id.clone(),
                                kp_id: format!("{tag}-kp{j:02}"),
                                label,
                            });
                        }
                    }
                }
            }
        }
    }
    Dataset::from_records(args, kps, labels).expect("consistent synthetic corpus")
}

/// Predictions with random weights: intra-cluster pairs get a key point and a
/// high score, inter-cluster pairs are "Yes" with probability `noise`.
pub fn noisy_predictions(dataset: &Dataset, noise: f64, seed: u64) -> Vec<PredictionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for g in &dataset.groups {
        for p in enumerate_pairs(g) {
            let shared = g.smallest_shared_kp(&p.i, &p.j);
            let (score, kp) = match shared {
                Some(kp) => (rng.random_range(0.5..1.0), Some(kp)),
                None if rng.random_bool(noise) => (rng.random_range(0.0..0.7), Some("spurious".to_string())),
                None => (rng.random_range(0.0..0.5), None),
            };
            out.push(PredictionRecord {
                topic: g.topic.clone(),
                stance: g.stance,
                arg_i: p.i,
                arg_j: p.j,
                share_score: score,
                key_point: kp,
            });
        }
    }
    out
}

pub fn write_corpus(dataset: &Dataset, dir: &Path) {
    corpus::write_dataset(dataset, dir).unwrap();
}
