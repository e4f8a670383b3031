//! The demo's JSON surface, exercised natively.

use dualmem_wasm::{
    circle_corpus, explore_gate, explore_recollection, gate_report, parse_scores, playground_report,
};
use serde_json::Value;

#[test]
fn parses_score_lists() {
    assert_eq!(parse_scores("0.9, 0.5 0.1").unwrap(), vec![0.9, 0.5, 0.1]);
    assert!(parse_scores("0.9, x").is_err());
}

#[test]
fn gate_report_explains_the_decision() {
    let r = gate_report("0.9, 0.5, 0.1", 20.0, 0.6, 0.3, 0.2).unwrap();
    assert!((r.distribution[0] - 0.999_664_537_409_836_2).abs() < 1e-12);
    assert!((r.mean - 0.5).abs() < 1e-15);
    assert_eq!(r.reason, "entropy-low");
    assert_eq!(r.curve.len(), 101);
    assert!((r.curve[0].entropy - 3f64.ln()).abs() < 1e-12);
    assert!(r.curve.windows(2).all(|w| w[1].p_max >= w[0].p_max));
    assert!(r.p_max >= r.certificate);

    let low = gate_report("0.1, 0.1", 20.0, 0.6, 0.3, 0.2).unwrap();
    assert_eq!(low.reason, "low");
}

#[test]
fn exported_functions_return_json() {
    let v: Value = serde_json::from_str(&explore_gate("0.7 0.7 0.7", 20.0, 0.6, 0.3, 0.2)).unwrap();
    assert_eq!(v["strategy"], "familiarity");
    assert_eq!(v["reason"], "high");

    let err: Value = serde_json::from_str(&explore_gate("", 20.0, 0.6, 0.3, 0.2)).unwrap();
    assert!(err["error"].is_string());
    let err: Value = serde_json::from_str(&explore_gate("0.5", 20.0, 0.2, 0.3, 0.2)).unwrap();
    assert!(err["error"].as_str().unwrap().contains("theta_low"));

    let v: Value =
        serde_json::from_str(&explore_recollection(60, 4, 0.6, 1, 0.3, 3, 2, 3, 0.5, 10)).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 60);
    assert_eq!(v["familiarity"].as_array().unwrap().len(), 10);
}

#[test]
fn circle_points_stay_in_their_arcs() {
    let pts = circle_corpus(40, 4, 0.5, 7);
    assert_eq!(pts.len(), 40);
    assert!(pts
        .iter()
        .all(|p| (0.0..std::f64::consts::TAU).contains(&p.angle)));
    assert_eq!(circle_corpus(40, 4, 0.5, 7)[13].angle, pts[13].angle);
}

#[test]
fn pure_single_beam_matches_familiarity() {
    let r = playground_report(80, 5, 0.8, 3, 1.0, 1, 10, 2, 1.0, 10).unwrap();
    assert_eq!(r.familiarity, r.recollection);
    assert!(r.rays.iter().all(|ray| (ray.angle - 1.0).abs() < 1e-9));
}

#[test]
fn playground_rays_mark_kept_beams() {
    let r = playground_report(120, 6, 0.7, 11, 2.0, 3, 2, 3, 0.5, 10).unwrap();
    assert!(!r.rays.is_empty());
    let rounds = r.bagged_per_round.len();
    for round in 0..rounds {
        let kept = r.rays.iter().filter(|x| x.round == round && x.kept).count();
        assert!((1..=3).contains(&kept));
    }
    let bagged: usize = r.bagged_per_round.iter().map(Vec::len).sum();
    assert!(r.recollection.len() <= bagged.min(10));
}
