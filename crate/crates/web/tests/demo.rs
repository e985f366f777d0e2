use kpa_web::{evaluate_json, partition_demo_json, score_curve_json, DemoParams};
use serde_json::Value;

fn params(seed: u64) -> DemoParams {
    DemoParams {
        clusters: 4,
        per_cluster: 8,
        noise: 0.3,
        threshold: 0.008,
        max_steps: 200,
        seed,
    }
}

#[test]
fn curve_is_monotone_and_centered() {
    let v: Value = serde_json::from_str(&score_curve_json(-6.0, 6.0, 12).unwrap()).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 13);
    assert_eq!(pts[6]["score"], 0.5);
    let scores: Vec<f64> = pts.iter().map(|p| p["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] < w[1]));
    assert!(score_curve_json(1.0, 1.0, 5).is_err());
}

#[test]
fn demo_partition_covers_vertices_and_never_loses_weight() {
    for seed in 0..5 {
        let v: Value = serde_json::from_str(&partition_demo_json(params(seed)).unwrap()).unwrap();
        assert_eq!(v["vertices"].as_array().unwrap().len(), 32);
        let refined = v["refined"].as_array().unwrap();
        assert_eq!(refined.len(), 4);
        let mut covered: Vec<u64> = refined
            .iter()
            .flat_map(|s| s.as_array().unwrap().iter().map(|x| x.as_u64().unwrap()))
            .collect();
        covered.sort();
        covered.dedup();
        assert_eq!(covered.len(), 32);
        let (a, b) = (
            v["initial_weight"].as_f64().unwrap(),
            v["refined_weight"].as_f64().unwrap(),
        );
        assert!(b + 1e-12 >= a, "seed {seed}: {a} -> {b}");
    }
    assert_eq!(
        partition_demo_json(params(3)).unwrap(),
        partition_demo_json(params(3)).unwrap()
    );
    assert!(partition_demo_json(DemoParams {
        clusters: 1,
        ..params(0)
    })
    .is_err());
}

#[test]
fn zero_steps_keeps_the_initial_partition() {
    let v: Value = serde_json::from_str(
        &partition_demo_json(DemoParams {
            max_steps: 0,
            ..params(1)
        })
        .unwrap(),
    )
    .unwrap();
    assert_eq!(v["initial"], v["refined"]);
    assert!(v["moves"].as_array().unwrap().is_empty());
}

#[test]
fn text_evaluation() {
    let v: Value = serde_json::from_str(&evaluate_json("k1\nk2\n", "k1\nk3", "exact").unwrap()).unwrap();
    assert_eq!(
        (v["sP"].as_f64(), v["sR"].as_f64(), v["sF1"].as_f64()),
        (Some(0.5), Some(0.5), Some(0.5))
    );
    assert_eq!(v["matrix"], serde_json::json!([[1.0, 0.0], [0.0, 0.0]]));
    assert!(evaluate_json("", "k1", "exact").is_err());
    assert!(evaluate_json("a", "a", "bleurt").is_err());
}
