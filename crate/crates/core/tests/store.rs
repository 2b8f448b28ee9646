mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use common::small_config;
use vocab_tutor::sim::{build_pilot, build_pilot_with_log, run_pilot, PilotRun, RunOptions};
use vocab_tutor::store::{
    read_jsonl, read_jsonl_file, replay, word_status_for_class, word_status_for_learner, EventBody,
    EventLog, StoreError,
};
use vocab_tutor::{ClassId, Dimension, Phase, WordId};

const L: Dimension = Dimension::Listening;

fn pilot(seed: u64) -> PilotRun {
    run_pilot(
        build_pilot(small_config(seed)).unwrap(),
        RunOptions::default(),
    )
    .unwrap()
}

#[test]
fn file_log_round_trips_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let scenario = build_pilot_with_log(small_config(5), EventLog::create(&path).unwrap()).unwrap();
    let run = run_pilot(scenario, RunOptions::default()).unwrap();
    let from_disk = read_jsonl_file(&path).unwrap();
    assert_eq!(from_disk.as_slice(), run.engine.events());

    let rebuilt = replay(run.engine.web_arc(), *run.engine.config(), &from_disk).unwrap();
    assert_eq!(rebuilt.state(), run.engine.state());

    // Reopening appends after the last sequence number.
    let mut reopened = EventLog::open(&path).unwrap();
    assert_eq!(reopened.next_seq(), from_disk.len() as u64 + 1);
    let body = from_disk[0].body.clone();
    let _ = reopened.append(99, body);
    drop(reopened);
    assert_eq!(read_jsonl_file(&path).unwrap().len(), from_disk.len() + 1);
}

#[test]
fn prefix_replay_matches_daily_snapshots() {
    let run = pilot(6);
    let events = run.engine.events();
    for day in [1u32, 7, 15, 28] {
        let cut = events.iter().take_while(|e| e.ts <= u64::from(day)).count();
        let engine = replay(run.engine.web_arc(), *run.engine.config(), &events[..cut]).unwrap();
        let mut compared = 0;
        for snap in run.snapshots_on(day) {
            let st = engine
                .word_state(&snap.learner_id, &snap.word_id, L)
                .unwrap();
            assert_eq!(st.phase, snap.phase, "day {day} {}", snap.learner_id);
            assert_eq!(st.score.to_bits(), snap.score.to_bits());
            compared += 1;
        }
        assert_eq!(compared, 40 * 20);
    }
}

#[test]
fn tampered_score_is_reported_at_its_sequence() {
    let run = pilot(7);
    let mut events = run.engine.events().to_vec();
    let victim = events
        .iter()
        .position(|e| matches!(e.body, EventBody::AssessmentResponse(_)))
        .unwrap();
    if let EventBody::AssessmentResponse(r) = &mut events[victim].body {
        r.score = (r.score + 0.01).min(1.0) - if r.score > 0.99 { 0.02 } else { 0.0 };
    }
    let seq = events[victim].seq;
    match replay(run.engine.web_arc(), *run.engine.config(), &events) {
        Err(StoreError::CorruptLog { seq: at, .. }) => assert_eq!(at, seq),
        other => panic!("expected corrupt log, got {:?}", other.map(|_| ())),
    }

    let mut reordered = run.engine.events().to_vec();
    reordered.swap(3, 4);
    let bad = reordered[4].seq;
    match replay(run.engine.web_arc(), *run.engine.config(), &reordered) {
        Err(StoreError::CorruptLog { seq, .. }) => assert_eq!(seq, bad),
        other => panic!("expected corrupt log, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn unparseable_line_is_located() {
    let run = pilot(8);
    let mut buf = Vec::new();
    run.engine.log().write_jsonl(&mut buf).unwrap();
    let good = read_jsonl(buf.as_slice()).unwrap();
    assert_eq!(good.as_slice(), run.engine.events());
    writeln!(buf, "{{\"seq\": \"nope\"}}").unwrap();
    match read_jsonl(buf.as_slice()) {
        Err(StoreError::Parse { line, .. }) => assert_eq!(line, good.len() + 1),
        other => panic!("{:?}", other.map(|v| v.len())),
    }
}

#[test]
fn class_ranking_matches_event_log() {
    let run = pilot(9);
    let web = run.engine.web();
    for plan in &run.classes {
        let members: BTreeSet<_> = plan.learners.iter().collect();
        // word -> (correct, responses), straight from the log.
        let mut tally: BTreeMap<WordId, (u64, u64)> = web
            .curriculum()
            .iter()
            .map(|w| (w.clone(), (0, 0)))
            .collect();
        for e in run.engine.events() {
            if let EventBody::AssessmentResponse(r) = &e.body {
                if r.dimension == L && members.contains(&r.learner_id) {
                    let t = tally.get_mut(&r.word_id).unwrap();
                    t.0 += u64::from(r.s == 1.0);
                    t.1 += 1;
                }
            }
        }
        let mut expected: Vec<(WordId, (u64, u64))> = tally.into_iter().collect();
        expected.sort_by(|(wa, (ca, na)), (wb, (cb, nb))| {
            let by_rate = match (*na, *nb) {
                (0, 0) => std::cmp::Ordering::Equal,
                (0, _) => std::cmp::Ordering::Greater,
                (_, 0) => std::cmp::Ordering::Less,
                _ => (ca * nb).cmp(&(cb * na)),
            };
            by_rate.then_with(|| web.lemma(wa).cmp(web.lemma(wb)))
        });
        let rows = word_status_for_class(&run.engine, &plan.class_id, L).unwrap();
        let got: Vec<&WordId> = rows.iter().map(|r| &r.word_id).collect();
        let want: Vec<&WordId> = expected.iter().map(|(w, _)| w).collect();
        assert_eq!(got, want, "{}", plan.class_id);
        for (row, (_, (c, n))) in rows.iter().zip(&expected) {
            assert_eq!(row.responses, *n);
            if *n > 0 {
                assert!((row.correct_rate.unwrap() - *c as f64 / *n as f64).abs() < 1e-12);
            }
            assert_eq!(
                row.phase_histogram.values().sum::<usize>(),
                plan.learners.len()
            );
        }
        assert_eq!(rows.last().unwrap().intervention_priority_rank, web.len());
    }
    assert!(word_status_for_class(&run.engine, &ClassId::from("nobody"), L).is_err());
}

#[test]
fn learner_report_agrees_with_phase_queries() {
    let run = pilot(10);
    for plan in run.classes.iter().take(2) {
        for l in &plan.learners {
            let rows = word_status_for_learner(&run.engine, l, L).unwrap();
            assert_eq!(rows.len(), 20);
            for phase in Phase::ALL {
                let from_rows: BTreeSet<&WordId> = rows
                    .iter()
                    .filter(|r| r.phase == phase)
                    .map(|r| &r.word_id)
                    .collect();
                let queried = run.engine.words_in_phase(l, L, phase).unwrap();
                assert_eq!(from_rows, queried.iter().collect::<BTreeSet<_>>());
            }
            assert!(rows.windows(2).all(|w| w[0].phase < w[1].phase
                || (w[0].phase == w[1].phase && w[0].score >= w[1].score)));
        }
    }
}
