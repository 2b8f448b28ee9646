mod common;

use proptest::prelude::*;

use common::{oracle_phase, phase_rank};
use vocab_tutor::learner::{
    transition, update_score, Dimension, LearnerWordState, ModelError, ModelParams, Phase,
    PhaseThresholds,
};

fn start(phase: Phase, score: f64) -> LearnerWordState {
    let mut st = LearnerWordState::parked("ana".into(), "octagon".into(), Dimension::Listening);
    st.phase = phase;
    st.score = score;
    st
}

fn run(st: &LearnerWordState, responses: &[f64]) -> Vec<LearnerWordState> {
    let params = ModelParams::default();
    let mut out = Vec::new();
    let mut cur = st.clone();
    for (i, s) in responses.iter().enumerate() {
        cur = update_score(&cur, *s, &params, i as u64).unwrap();
        out.push(cur.clone());
    }
    out
}

#[test]
fn ninth_correct_answer_reaches_learned() {
    let trail = run(&start(Phase::Learning, 0.0), &[1.0; 9]);
    for (i, st) in trail.iter().enumerate() {
        let expected = 1.0 - 0.8f64.powi(i as i32 + 1);
        assert!((st.score - expected).abs() < 1e-12, "step {}", i + 1);
    }
    assert_eq!(trail[7].phase, Phase::Learning);
    assert!((trail[7].score - 0.832_227_84).abs() < 1e-8);
    assert_eq!(trail[8].phase, Phase::Learned);
}

#[test]
fn second_miss_leaves_learned() {
    let learned = run(&start(Phase::Learning, 0.0), &[1.0; 9]).pop().unwrap();
    let trail = run(&learned, &[0.0, 0.0]);
    assert_eq!(trail[0].phase, Phase::Learned);
    assert!((trail[1].score - 0.64 * (1.0 - 0.8f64.powi(9))).abs() < 1e-12);
    assert!(trail[1].score < 0.56);
    assert_eq!(trail[1].phase, Phase::Learning);
}

#[test]
fn counters_track_responses() {
    let trail = run(&start(Phase::Learning, 0.0), &[1.0, 0.0, 0.5]);
    let last = trail.last().unwrap();
    assert_eq!(last.assessment_count, 3);
    assert!((last.correct_total - 1.5).abs() < 1e-15);
    assert_eq!(last.last_updated, 2);
}

#[test]
fn rejects_bad_inputs() {
    let st = start(Phase::Learning, 0.5);
    assert!(matches!(
        update_score(&st, 1.5, &ModelParams::default(), 0),
        Err(ModelError::ScoreOutOfRange(_))
    ));
    assert!(PhaseThresholds::new(0.5, 0.86, 0.6, 0.56).is_err());
    assert!(PhaseThresholds::new(0.9, 0.86, 0.5, 0.5).is_err());
    let bad = r#"{"toAssessmentOnly":0.5,"toLearned":0.5,"backToLearning":0.7,"outOfLearned":0.4}"#;
    assert!(serde_json::from_str::<PhaseThresholds>(bad).is_err());
    let bad_alpha = ModelParams {
        alpha: 1.0,
        ..ModelParams::default()
    };
    assert!(bad_alpha.validate().is_err());
}

fn any_phase() -> impl Strategy<Value = Phase> {
    prop_oneof![
        Just(Phase::Parked),
        Just(Phase::Learning),
        Just(Phase::AssessmentOnly),
        Just(Phase::Learned),
    ]
}

fn any_thresholds() -> impl Strategy<Value = PhaseThresholds> {
    (0.2f64..0.95, 0.0f64..1.0, 0.05f64..0.95, 0.05f64..0.95).prop_map(|(t1, up, d3, d4)| {
        let t2 = t1 + (0.99 - t1) * up;
        PhaseThresholds::new(t1, t2, t1 * d3, t2 * d4).unwrap()
    })
}

proptest! {
    #[test]
    fn transition_matches_table(phase in any_phase(), score in 0.0f64..=1.0, t in any_thresholds()) {
        prop_assert_eq!(transition(phase, score, &t), oracle_phase(phase, score, &t));
    }

    #[test]
    fn transition_is_a_fixpoint(phase in any_phase(), score in 0.0f64..=1.0, t in any_thresholds()) {
        let once = transition(phase, score, &t);
        prop_assert_eq!(transition(once, score, &t), once);
    }

    #[test]
    fn updates_stay_in_range_and_move_one_way(
        phase in any_phase(),
        score in 0.0f64..=1.0,
        responses in proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], 1..40),
    ) {
        let params = ModelParams::default();
        // Only consistent (reachable) states.
        let mut cur = start(transition(phase, score, &params.thresholds), score);
        for s in responses {
            let next = update_score(&cur, s, &params, 0).unwrap();
            prop_assert!((0.0..=1.0).contains(&next.score));
            let expected = params.alpha * cur.score + (1.0 - params.alpha) * s;
            prop_assert!((next.score - expected).abs() < 1e-15);
            let (r0, r1) = (phase_rank(cur.phase), phase_rank(next.phase));
            if next.score > cur.score { prop_assert!(r1 >= r0); }
            if next.score < cur.score { prop_assert!(r1 <= r0); }
            prop_assert_eq!(cur.phase == Phase::Parked, next.phase == Phase::Parked);
            cur = next;
        }
    }
}
