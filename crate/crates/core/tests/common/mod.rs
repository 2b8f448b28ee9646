//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vocab_tutor::learner::{Dimension, Phase, PhaseThresholds};
use vocab_tutor::tutor::{apportion, Engine, EngineConfig, TutorError};
use vocab_tutor::wordweb::{MediaAsset, MediaKind, Relation, RelationKind, WordNode, WordWeb};
use vocab_tutor::{AssetId, GroupId, LearnerId, WordId};

// ---------------------------------------------------------------- numerics

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, fa, m, fm, lm, flm, left, eps / 2.0, depth - 1)
        + simpson_rec(f, m, fm, b, fb, rm, frm, right, eps / 2.0, depth - 1)
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    simpson_rec(f, a, fa, b, fb, m, fm, whole, eps, 60)
}

/// Upper tail of Student's t by quadrature. With t = sqrt(df) tan(theta)
/// the density becomes proportional to cos^(df-1)(theta), so
/// P(T > t) = 1/2 - int_0^phi cos^(df-1) / (2 int_0^(pi/2) cos^(df-1)).
pub fn t_upper_tail_quadrature(t: f64, df: f64) -> f64 {
    assert!(df >= 1.0, "oracle needs df >= 1");
    let f = move |theta: f64| theta.cos().max(0.0).powf(df - 1.0);
    let total = adaptive_simpson(&f, 0.0, std::f64::consts::FRAC_PI_2, 1e-13);
    let phi = (t / df.sqrt()).atan();
    let part = if phi >= 0.0 {
        adaptive_simpson(&f, 0.0, phi, 1e-13)
    } else {
        -adaptive_simpson(&f, phi, 0.0, 1e-13)
    };
    0.5 - part / (2.0 * total)
}

/// D+ by evaluating both empirical CDFs with linear scans at every pooled point.
pub fn ks_d_plus_brute(g1: &[f64], g2: &[f64]) -> f64 {
    let ecdf = |xs: &[f64], x: f64| xs.iter().filter(|v| **v <= x).count() as f64 / xs.len() as f64;
    g1.iter()
        .chain(g2)
        .map(|&x| ecdf(g1, x) - ecdf(g2, x))
        .fold(0.0, f64::max)
}

pub fn welch_by_hand(g1: &[f64], g2: &[f64]) -> (f64, f64) {
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (n1, m1, v1) = stats(g1);
    let (n2, m2, v2) = stats(g2);
    let se2 = v1 / n1 + v2 / n2;
    let t = (m2 - m1) / se2.sqrt();
    let df = se2.powi(2) / ((v1 / n1).powi(2) / (n1 - 1.0) + (v2 / n2).powi(2) / (n2 - 1.0));
    (t, df)
}

// ---------------------------------------------------------------- graphs

pub const LEMMAS: [&str; 16] = [
    "otter", "badger", "heron", "lynx", "walrus", "gecko", "bison", "crane", "ferret", "ibis",
    "jackal", "koala", "lemur", "marmot", "newt", "panda",
];

pub struct RandomWeb {
    pub web: WordWeb,
    pub ids: Vec<WordId>,
    /// kinds[i][j]: relation kinds between word i and word j (either direction).
    pub kinds: Vec<Vec<BTreeSet<RelationKind>>>,
    pub weights: Vec<Vec<f64>>,
}

/// `n` words with shuffled lemmas (so id order differs from lemma order) and
/// random typed, weighted relations.
pub fn random_web(rng: &mut ChaCha8Rng, n: usize, edge_p: f64) -> RandomWeb {
    assert!(n <= LEMMAS.len());
    let mut lemmas: Vec<&str> = LEMMAS[..n].to_vec();
    lemmas.shuffle(rng);
    let ids: Vec<WordId> = (0..n).map(|i| WordId::new(format!("w{i:02}"))).collect();
    let mut web = WordWeb::new();
    for (id, lemma) in ids.iter().zip(&lemmas) {
        let image = AssetId::new(format!("img-{id}"));
        web.add_media(MediaAsset {
            asset_id: image.clone(),
            kind: MediaKind::Image,
            uri: format!("{lemma}.png"),
            age_appropriate: true,
        })
        .unwrap();
        let mut node = WordNode::new(id.clone(), *lemma);
        node.image_ids = vec![image];
        web.add_word(node).unwrap();
    }
    let mut kinds = vec![vec![BTreeSet::new(); n]; n];
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || !rng.random_bool(edge_p / 2.0) {
                continue;
            }
            let kind = *RelationKind::ALL.choose(rng).unwrap();
            if kinds[i][j].contains(&kind) {
                continue;
            }
            let weight = [0.25, 0.5, 0.75, 1.0][rng.random_range(0..4)];
            let added = web.add_relation(Relation {
                from_word_id: ids[i].clone(),
                to_word_id: ids[j].clone(),
                kind,
                weight,
            });
            if added.is_ok() {
                kinds[i][j].insert(kind);
                kinds[j][i].insert(kind);
                weights[i][j] += weight;
                weights[j][i] += weight;
            }
        }
    }
    RandomWeb {
        web,
        ids,
        kinds,
        weights,
    }
}

/// Shortest hop counts by repeated relaxation over the adjacency matrix.
pub fn hop_distances(
    kinds: &[Vec<BTreeSet<RelationKind>>],
    start: usize,
    allowed: &BTreeSet<RelationKind>,
) -> Vec<Option<usize>> {
    let n = kinds.len();
    let mut dist = vec![None; n];
    dist[start] = Some(0);
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                let linked = kinds[i][j].iter().any(|k| allowed.contains(k));
                if let (true, Some(di)) = (linked, dist[i]) {
                    if dist[j].is_none_or(|dj| di + 1 < dj) {
                        dist[j] = Some(di + 1);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

// ---------------------------------------------------------------- phases

pub fn phase_rank(p: Phase) -> u8 {
    match p {
        Phase::Parked => 0,
        Phase::Learning => 1,
        Phase::AssessmentOnly => 2,
        Phase::Learned => 3,
    }
}

/// Phase rules written out as a table walk, independent of the library.
pub fn oracle_phase(from: Phase, score: f64, t: &PhaseThresholds) -> Phase {
    match from {
        Phase::Parked => Phase::Parked,
        Phase::Learning => {
            if score >= t.to_assessment_only {
                if score >= t.to_learned {
                    Phase::Learned
                } else {
                    Phase::AssessmentOnly
                }
            } else {
                Phase::Learning
            }
        }
        Phase::AssessmentOnly => {
            if score >= t.to_learned {
                Phase::Learned
            } else if score < t.back_to_learning {
                Phase::Learning
            } else {
                Phase::AssessmentOnly
            }
        }
        Phase::Learned => {
            if score >= t.out_of_learned {
                Phase::Learned
            } else if score < t.back_to_learning {
                Phase::Learning
            } else {
                Phase::AssessmentOnly
            }
        }
    }
}

// ---------------------------------------------------------------- traces

const DIMS: [Dimension; 2] = [Dimension::Listening, Dimension::Reading];

#[derive(Debug, Default, Clone, Copy)]
pub struct TraceStats {
    pub ops: usize,
    pub updates: usize,
    pub exposures: usize,
    pub blend_checks: usize,
    pub replays: usize,
}

/// Runs one random operation trace and checks every engine invariant along
/// the way. Returns a description of the first violation.
pub fn run_trace(seed: u64) -> Result<TraceStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_words = rng.random_range(4..=12);
    let rw = random_web(&mut rng, n_words, 0.3);
    let web = Arc::new(rw.web);
    let words = rw.ids;
    let config = EngineConfig {
        target_size: rng.random_range(1..=6),
        ..EngineConfig::default()
    };
    let thresholds = config.model.thresholds;
    let alpha = config.model.alpha;
    let mut engine = Engine::new(web.clone(), config).map_err(|e| e.to_string())?;
    let learners: Vec<LearnerId> = (0..rng.random_range(1..=3))
        .map(|i| LearnerId::new(format!("l{i}")))
        .collect();
    for (i, l) in learners.iter().enumerate() {
        let class = format!("k{}", i % 2);
        engine
            .register_learner(l.clone(), class.as_str().into())
            .map_err(|e| e.to_string())?;
    }

    let mut stats = TraceStats::default();
    let mut checkpoint = None;
    let n_ops = rng.random_range(20..=70);
    let checkpoint_at = rng.random_range(0..n_ops);
    let fractions = config.blend.fractions();

    for op in 0..n_ops {
        stats.ops += 1;
        let l = learners.choose(&mut rng).unwrap().clone();
        let dim = *DIMS.choose(&mut rng).unwrap();
        let ctx = |what: &str| format!("seed {seed} op {op} ({what}) learner {l} {dim}");
        engine.set_clock(op as u64);
        match rng.random_range(0..9) {
            0 | 1 => {
                let n = rng.random_range(1..=5);
                let before = learnable_working(&engine, &l, dim);
                let got = engine
                    .next_learning_words(&l, dim, n)
                    .map_err(|e| format!("{}: {e}", ctx("learning")))?;
                let after = learnable_working(&engine, &l, dim);
                if after > before.max(config.target_size) {
                    return Err(format!("{}: working set grew to {after}", ctx("learning")));
                }
                if got.len() > n || distinct(&got) != got.len() {
                    return Err(format!("{}: bad selection {got:?}", ctx("learning")));
                }
                for w in &got {
                    if !engine.is_learnable(&l, w) {
                        return Err(format!("{}: gated word {w} offered", ctx("learning")));
                    }
                    engine
                        .record_learning_exposure(&l, w, dim)
                        .map_err(|e| format!("{}: {e}", ctx("exposure")))?;
                    stats.exposures += 1;
                }
            }
            2 | 3 => {
                let n = rng.random_range(1..=6);
                let buckets = engine
                    .assessment_buckets(&l, dim)
                    .map_err(|e| format!("{}: {e}", ctx("buckets")))?;
                let got = engine
                    .next_assessment_words(&l, dim, n)
                    .map_err(|e| format!("{}: {e}", ctx("assessment")))?;
                if distinct(&got) != got.len() || got.len() > n {
                    return Err(format!("{}: bad selection {got:?}", ctx("assessment")));
                }
                let available: usize = buckets.iter().map(Vec::len).sum();
                if got.len() != n.min(available) {
                    return Err(format!("{}: short selection {got:?}", ctx("assessment")));
                }
                let quotas = apportion(n, &fractions);
                if quotas.iter().zip(&buckets).all(|(q, b)| b.len() >= *q) {
                    stats.blend_checks += 1;
                    let counts: Vec<usize> = buckets
                        .iter()
                        .map(|b| got.iter().filter(|w| b.contains(w)).count())
                        .collect();
                    if counts != quotas {
                        return Err(format!(
                            "{}: blend {counts:?} != {quotas:?}",
                            ctx("assessment")
                        ));
                    }
                }
                for w in &got {
                    if !engine.is_assessable(&l, w) {
                        return Err(format!("{}: unassessable {w}", ctx("assessment")));
                    }
                    let s = random_response(&mut rng);
                    checked_update(&mut engine, &l, w, dim, s, alpha, &thresholds)
                        .map_err(|e| format!("{}: {e}", ctx("update")))?;
                    stats.updates += 1;
                }
            }
            4 => {
                let w = words.choose(&mut rng).unwrap().clone();
                let s = random_response(&mut rng);
                checked_update(&mut engine, &l, &w, dim, s, alpha, &thresholds)
                    .map_err(|e| format!("{}: {e}", ctx("direct update")))?;
                stats.updates += 1;
            }
            5 => {
                let w = words.choose(&mut rng).unwrap().clone();
                let phase = engine.word_state(&l, &w, dim).unwrap().phase;
                let permitted = phase == Phase::Learning && engine.is_learnable(&l, &w);
                let result = engine.record_learning_exposure(&l, &w, dim);
                match (permitted, result) {
                    (true, Ok(())) => stats.exposures += 1,
                    (false, Err(TutorError::LearningNotPermitted { .. })) => {}
                    (p, r) => return Err(format!("{}: permitted={p} got {r:?}", ctx("exposure"))),
                }
            }
            6 => {
                let group = GroupId::new(if rng.random_bool(0.5) { "G1" } else { "G2" });
                let members: BTreeSet<LearnerId> = learners
                    .iter()
                    .filter(|_| rng.random_bool(0.5))
                    .cloned()
                    .collect();
                let assessable: BTreeSet<WordId> = words
                    .iter()
                    .filter(|_| rng.random_bool(0.7))
                    .cloned()
                    .collect();
                let learnable: BTreeSet<WordId> = assessable
                    .iter()
                    .filter(|_| rng.random_bool(0.5))
                    .cloned()
                    .collect();
                let conflict = members
                    .iter()
                    .any(|m| engine.group_of(m).is_some_and(|g| g.group_id != group));
                let result = engine.assign_words_to_learner_group(
                    group.clone(),
                    members,
                    learnable,
                    assessable,
                );
                match (conflict, result) {
                    (false, Ok(())) => {}
                    (true, Err(TutorError::ConflictingAssignment { .. })) => {}
                    (c, r) => return Err(format!("{}: conflict={c} got {r:?}", ctx("assign"))),
                }
            }
            7 => {
                if let Some(g) = engine.group_of(&l).map(|g| g.group_id.clone()) {
                    engine
                        .remove_from_group(&g, &l)
                        .map_err(|e| format!("{}: {e}", ctx("remove")))?;
                    if engine.group_of(&l).is_some() {
                        return Err(format!("{}: still grouped", ctx("remove")));
                    }
                }
            }
            _ => {
                let chosen: Vec<WordId> = words
                    .iter()
                    .filter(|_| rng.random_bool(0.3))
                    .cloned()
                    .collect();
                engine
                    .introduce_words(std::slice::from_ref(&l), &chosen)
                    .map_err(|e| format!("{}: {e}", ctx("introduce")))?;
                let before = learnable_working(&engine, &l, dim);
                engine
                    .refill_working_set(&l, dim)
                    .map_err(|e| format!("{}: {e}", ctx("refill")))?;
                let after = learnable_working(&engine, &l, dim);
                if after > before.max(config.target_size) {
                    return Err(format!("{}: refill overshoot {after}", ctx("refill")));
                }
            }
        }
        check_books(&engine, &words).map_err(|e| format!("seed {seed} op {op}: {e}"))?;
        if op == checkpoint_at {
            checkpoint = Some((engine.events().len(), engine.state().clone()));
        }
    }

    let replayed = Engine::replay(web.clone(), config, engine.events())
        .map_err(|e| format!("seed {seed}: replay failed: {e}"))?;
    if replayed.state() != engine.state() {
        return Err(format!(
            "seed {seed}: replayed state differs from live state"
        ));
    }
    stats.replays += 1;
    if let Some((len, state)) = checkpoint {
        let prefix = Engine::replay(web, config, &engine.events()[..len])
            .map_err(|e| format!("seed {seed}: prefix replay failed: {e}"))?;
        if prefix.state() != &state {
            return Err(format!(
                "seed {seed}: prefix replay differs at {len} events"
            ));
        }
        stats.replays += 1;
    }
    Ok(stats)
}

fn distinct(words: &[WordId]) -> usize {
    words.iter().collect::<BTreeSet<_>>().len()
}

fn random_response(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => 0.0,
        1 | 2 => 1.0,
        _ => rng.random_range(0.0..=1.0),
    }
}

fn learnable_working(engine: &Engine, l: &LearnerId, dim: Dimension) -> usize {
    engine
        .learner(l)
        .unwrap()
        .book
        .states(dim)
        .filter(|s| s.phase.in_working_set() && engine.is_learnable(l, &s.word_id))
        .count()
}

fn checked_update(
    engine: &mut Engine,
    l: &LearnerId,
    w: &WordId,
    dim: Dimension,
    s: f64,
    alpha: f64,
    thresholds: &PhaseThresholds,
) -> Result<(), String> {
    let before = engine
        .word_state(l, w, dim)
        .map_err(|e| e.to_string())?
        .clone();
    let after = engine
        .update_word_performance(l, w, dim, s)
        .map_err(|e| e.to_string())?;
    let expected = alpha * before.score + (1.0 - alpha) * s;
    if (after.score - expected).abs() > 1e-12 {
        return Err(format!("score {} != {expected}", after.score));
    }
    let phase = oracle_phase(before.phase, after.score, thresholds);
    if after.phase != phase {
        return Err(format!(
            "{:?} at {} went to {:?}, expected {:?}",
            before.phase, after.score, after.phase, phase
        ));
    }
    let (r0, r1) = (phase_rank(before.phase), phase_rank(after.phase));
    if (after.score > before.score && r1 < r0) || (after.score < before.score && r1 > r0) {
        return Err(format!(
            "phase moved against the score: {:?} -> {:?}",
            before.phase, after.phase
        ));
    }
    if after.assessment_count != before.assessment_count + 1 {
        return Err("assessment count not incremented".into());
    }
    Ok(())
}

fn check_books(engine: &Engine, words: &[WordId]) -> Result<(), String> {
    for (l, record) in engine.learners() {
        for dim in Dimension::ALL {
            let states: BTreeMap<&WordId, Phase> = record
                .book
                .states(dim)
                .map(|s| (&s.word_id, s.phase))
                .collect();
            if states.len() != words.len() {
                return Err(format!(
                    "{l} {dim}: {} states for {} words",
                    states.len(),
                    words.len()
                ));
            }
            for s in record.book.states(dim) {
                if !(0.0..=1.0).contains(&s.score) {
                    return Err(format!("{l} {dim} {}: score {}", s.word_id, s.score));
                }
                if s.phase == Phase::Parked && s.learning_exposures > 0 {
                    return Err(format!("{l} {dim} {}: parked word was taught", s.word_id));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- sim

/// A pilot small enough for debug-mode tests.
pub fn small_config(seed: u64) -> vocab_tutor::sim::SimConfig {
    vocab_tutor::sim::SimConfig {
        num_classes: 4,
        num_learners: 40,
        num_words: 20,
        duration_days: 28,
        rng_seed: seed,
        ..Default::default()
    }
}
