//! HTTP endpoints over a shared engine.
//!
//! The engine is single-writer, so every request takes one lock for its
//! whole duration; that also serializes operations per learner.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use vocab_tutor::learner::LearnerWordState;
use vocab_tutor::store::{word_status_for_class, word_status_for_learner};
use vocab_tutor::tutor::ActivityType;
use vocab_tutor::wordweb::AssessmentItem;
use vocab_tutor::{ClassId, Dimension, Engine, GroupId, LearnerId, TutorError, WordId};

struct AppState {
    engine: Mutex<Engine>,
    wall_clock: bool,
}

type Shared = Arc<AppState>;

impl AppState {
    fn lock(&self) -> MutexGuard<'_, Engine> {
        let mut engine = self.engine.lock().unwrap_or_else(|p| p.into_inner());
        if self.wall_clock {
            let now = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            engine.set_clock(now);
        }
        engine
    }
}

/// Builds the router. With `wall_clock` set, events are stamped with Unix
/// seconds; otherwise the engine clock is left alone.
pub fn router(engine: Engine, wall_clock: bool) -> Router {
    let state = Arc::new(AppState {
        engine: Mutex::new(engine),
        wall_clock,
    });
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/learners", post(register_learner))
        .route("/learners/{learner}/next-activity", get(next_activity))
        .route(
            "/learners/{learner}/next-learning-words",
            get(next_learning_words),
        )
        .route(
            "/learners/{learner}/next-assessment-words",
            get(next_assessment_words),
        )
        .route(
            "/learners/{learner}/learning-exposures",
            post(learning_exposure),
        )
        .route("/learners/{learner}/word-status", get(learner_status))
        .route("/classes/{class}/word-status", get(class_status))
        .route("/word-performance", post(word_performance))
        .route("/group-assignment", post(group_assignment))
        .route("/groups/{group}/members/{learner}", delete(remove_member))
        .route("/word-introduction", post(word_introduction))
        .with_state(state)
}

pub struct ApiError(TutorError);

impl From<TutorError> for ApiError {
    fn from(e: TutorError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            TutorError::UnknownLearner(_) => (StatusCode::NOT_FOUND, "unknownLearner"),
            TutorError::UnknownWord(_) => (StatusCode::NOT_FOUND, "unknownWord"),
            TutorError::UnknownClass(_) => (StatusCode::NOT_FOUND, "unknownClass"),
            TutorError::DuplicateLearner(_) => (StatusCode::CONFLICT, "duplicateLearner"),
            TutorError::ConflictingAssignment { .. } => {
                (StatusCode::CONFLICT, "conflictingAssignment")
            }
            TutorError::NotInGroup { .. } => (StatusCode::CONFLICT, "notInGroup"),
            TutorError::LearningNotPermitted { .. } => {
                (StatusCode::FORBIDDEN, "learningNotPermitted")
            }
            TutorError::ScoreOutOfRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "scoreOutOfRange"),
            TutorError::InvalidWordSets(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalidWordSets"),
            TutorError::InvalidArgument(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalidArgument"),
            TutorError::Model(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalidModel"),
            TutorError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storageFailure"),
        };
        let body = json!({ "error": code, "message": self.0.to_string() });
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
struct DimQuery {
    #[serde(default = "listening")]
    dimension: Dimension,
    #[serde(default = "five")]
    n: usize,
}

fn listening() -> Dimension {
    Dimension::Listening
}

fn five() -> usize {
    5
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RegisterBody {
    learner_id: LearnerId,
    class_id: ClassId,
}

async fn register_learner(
    State(app): State<Shared>,
    Json(body): Json<RegisterBody>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    app.lock()
        .register_learner(body.learner_id.clone(), body.class_id.clone())?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "learnerId": body.learner_id, "classId": body.class_id })),
    ))
}

async fn next_activity(
    State(app): State<Shared>,
    Path(learner): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let kind = app.lock().next_activity_type(&LearnerId::new(learner))?;
    let name = match kind {
        ActivityType::Learning => "learning",
        ActivityType::Assessment => "assessment",
    };
    Ok(Json(json!({ "activityType": name })))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct WordList {
    learner_id: LearnerId,
    dimension: Dimension,
    words: Vec<WordId>,
}

async fn next_learning_words(
    State(app): State<Shared>,
    Path(learner): Path<String>,
    Query(q): Query<DimQuery>,
) -> ApiResult<Json<WordList>> {
    let learner = LearnerId::new(learner);
    let words = app.lock().next_learning_words(&learner, q.dimension, q.n)?;
    Ok(Json(WordList {
        learner_id: learner,
        dimension: q.dimension,
        words,
    }))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct AssessmentSlot {
    word_id: WordId,
    /// An approved picture question, when one exists.
    item: Option<AssessmentItem>,
}

async fn next_assessment_words(
    State(app): State<Shared>,
    Path(learner): Path<String>,
    Query(q): Query<DimQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let learner = LearnerId::new(learner);
    let engine = app.lock();
    let words = engine.next_assessment_words(&learner, q.dimension, q.n)?;
    let slots: Vec<AssessmentSlot> = words
        .into_iter()
        .map(|w| AssessmentSlot {
            item: engine.assessment_item(&w).cloned(),
            word_id: w,
        })
        .collect();
    Ok(Json(json!({
        "learnerId": learner,
        "dimension": q.dimension,
        "words": slots,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ExposureBody {
    word_id: WordId,
    #[serde(default = "listening")]
    dimension: Dimension,
}

async fn learning_exposure(
    State(app): State<Shared>,
    Path(learner): Path<String>,
    Json(body): Json<ExposureBody>,
) -> ApiResult<StatusCode> {
    app.lock()
        .record_learning_exposure(&LearnerId::new(learner), &body.word_id, body.dimension)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PerformanceBody {
    learner_id: LearnerId,
    word_id: WordId,
    #[serde(default = "listening")]
    dimension: Dimension,
    s: f64,
}

async fn word_performance(
    State(app): State<Shared>,
    Json(body): Json<PerformanceBody>,
) -> ApiResult<Json<LearnerWordState>> {
    let state = app.lock().update_word_performance(
        &body.learner_id,
        &body.word_id,
        body.dimension,
        body.s,
    )?;
    Ok(Json(state))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GroupBody {
    group_id: GroupId,
    learner_ids: BTreeSet<LearnerId>,
    learnable_word_set: BTreeSet<WordId>,
    assessable_word_set: BTreeSet<WordId>,
}

async fn group_assignment(
    State(app): State<Shared>,
    Json(body): Json<GroupBody>,
) -> ApiResult<StatusCode> {
    app.lock().assign_words_to_learner_group(
        body.group_id,
        body.learner_ids,
        body.learnable_word_set,
        body.assessable_word_set,
    )?;
    Ok(StatusCode::CREATED)
}

async fn remove_member(
    State(app): State<Shared>,
    Path((group, learner)): Path<(String, String)>,
) -> ApiResult<StatusCode> {
    app.lock()
        .remove_from_group(&GroupId::new(group), &LearnerId::new(learner))?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct IntroductionBody {
    learner_ids: Vec<LearnerId>,
    word_ids: Vec<WordId>,
}

async fn word_introduction(
    State(app): State<Shared>,
    Json(body): Json<IntroductionBody>,
) -> ApiResult<StatusCode> {
    app.lock()
        .introduce_words(&body.learner_ids, &body.word_ids)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn learner_status(
    State(app): State<Shared>,
    Path(learner): Path<String>,
    Query(q): Query<DimQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let engine = app.lock();
    let rows = word_status_for_learner(&engine, &LearnerId::new(learner), q.dimension)?;
    Ok(Json(json!(rows)))
}

async fn class_status(
    State(app): State<Shared>,
    Path(class): Path<String>,
    Query(q): Query<DimQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let engine = app.lock();
    let rows = word_status_for_class(&engine, &ClassId::new(class), q.dimension)?;
    Ok(Json(json!(rows)))
}
