use axum::body::Body;
use axum::http::{Request, StatusCode};
use dialogic::dialogue::{Game, MoveDescriptor};
use dialogic::gkk::SearchLimits;
use dialogic::parse::{parse_formula, parse_term};
use dialogic::translate::find_winning_strategy;
use dialogic_server::play::{Match, Status};
use dialogic_server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use std::time::Duration;
use tower::ServiceExt;

const FIGURE: [&str; 3] = [
    "forall x. a(x) | exists x. ~a(x)",
    "exists x. (a(x) -> forall y. a(y))",
    "forall x. (a(x) & b(x)) -> forall x. a(x) & forall x. b(x)",
];
const DRINKER: &str = FIGURE[1];

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn create(app: &axum::Router, formula: &str) -> Value {
    let (status, body) = call(app, "POST", "/v1/sessions", Some(json!({ "formula": formula }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body
}

fn app() -> axum::Router {
    router(AppState::default())
}

#[tokio::test]
async fn drinker_session_has_a_strategy() {
    let app = app();
    let s = create(&app, DRINKER).await;
    assert_eq!(s["machine_strategy"], true);
    assert_eq!(s["status"], "AwaitingHuman");
    assert_eq!(s["game"]["moves"][0]["content"], parse_formula(DRINKER).unwrap().to_string());
    let id = s["id"].as_str().unwrap();
    let (status, moves) = call(&app, "GET", &format!("/v1/sessions/{id}/moves"), None).await;
    assert_eq!(status, StatusCode::OK);
    let moves = moves.as_array().unwrap();
    assert_eq!(moves.len(), 1);
    assert_eq!(moves[0]["move"]["content"]["kind"], "exists");

    let (status, after) = call(&app, "POST", &format!("/v1/sessions/{id}/moves"), Some(json!({ "choice": 0 }))).await;
    assert_eq!(status, StatusCode::OK, "{after}");
    let defence = after["game"]["moves"][2]["content"].as_str().unwrap().to_string();
    let asserted = parse_formula(&defence).unwrap();
    let dialogic::formula::Formula::Implies(antecedent, _) = asserted else { panic!("{defence}") };

    let (_, moves) = call(&app, "GET", &format!("/v1/sessions/{id}/moves"), None).await;
    let attack = moves
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["move"]["content"]["kind"] == "formula")
        .expect("attack on the implication");
    assert_eq!(attack["move"]["content"]["formula"], antecedent.to_string());
}

#[tokio::test]
async fn invalid_implication_plays_without_strategy() {
    let app = app();
    let s = create(&app, "a -> b").await;
    assert_eq!(s["machine_strategy"], false);
    assert_eq!(s["fallback"], true);
    let id = s["id"].as_str().unwrap();
    let (_, after) = call(&app, "POST", &format!("/v1/sessions/{id}/moves"), Some(json!({ "choice": 0 }))).await;
    assert_eq!(after["status"], "FinishedOWin");
    let (status, err) = call(&app, "GET", &format!("/v1/sessions/{id}/moves"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["reason"], "wrong-turn");
}

#[tokio::test]
async fn malformed_formula_is_a_client_error() {
    let app = app();
    let (status, err) = call(&app, "POST", "/v1/sessions", Some(json!({ "formula": "a & & b" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["reason"], "parse");
    assert!(err["error"].as_str().is_some());
    let (status, _) = call(&app, "POST", "/v1/sessions", Some(json!({ "formula": "a(x)" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let (status, err) = call(&app(), "GET", "/v1/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["reason"], "not-found");
}

#[tokio::test]
async fn illegal_explicit_move_reports_its_reason() {
    let app = app();
    let s = create(&app, "a & b").await;
    let id = s["id"].as_str().unwrap();
    let bad = json!({ "move": { "polarity": "?", "content": { "kind": "or" }, "enabler": 0 } });
    let (status, err) = call(&app, "POST", &format!("/v1/sessions/{id}/moves"), Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["reason"], "justification");
    let (status, err) =
        call(&app, "POST", &format!("/v1/sessions/{id}/moves"), Some(json!({ "choice": 9 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["reason"], "no-such-choice");
}

#[tokio::test]
async fn exotic_terms_through_http() {
    let app = app();
    let s = create(&app, FIGURE[2]).await;
    let id = s["id"].as_str().unwrap().to_string();
    let mut status = s["status"].clone();
    let mut turns = 0;
    while status == "AwaitingHuman" {
        let (_, moves) = call(&app, "GET", &format!("/v1/sessions/{id}/moves"), None).await;
        let last = moves.as_array().unwrap().len() - 1;
        let body = json!({ "choice": last, "term": "f(g(c(), c()))" });
        let (code, after) = call(&app, "POST", &format!("/v1/sessions/{id}/moves"), Some(body)).await;
        assert_eq!(code, StatusCode::OK, "{after}");
        status = after["status"].clone();
        turns += 1;
        assert!(turns < 20);
    }
    assert_eq!(status, "FinishedPWin");
    let (_, s) = call(&app, "GET", &format!("/v1/sessions/{id}"), None).await;
    let game: dialogic::json::GameJson = serde_json::from_value(s["game"].clone()).unwrap();
    assert!(game.to_game().is_ok());
}

#[tokio::test]
async fn idle_sessions_expire() {
    let state = AppState::new(Duration::from_millis(20), SearchLimits::default());
    let app = router(state.clone());
    create(&app, "a -> a").await;
    assert_eq!(state.sweep().await, 0);
    tokio::time::sleep(Duration::from_millis(40)).await;
    assert_eq!(state.sweep().await, 1);
    assert_eq!(state.session_count(), 0);
}

/// Every human line of play with terms drawn from the game's own terms, a
/// fresh variable and a few closed terms.
fn explore(m: &Match, depth: usize, finished: &mut usize) {
    assert!(Game::from_moves(m.game.root().clone(), m.game.moves()).is_ok());
    if m.status != Status::AwaitingHuman {
        assert_eq!(m.status, Status::FinishedPWin, "{:?}", m.game.moves());
        *finished += 1;
        return;
    }
    assert!(depth < 12, "game too long: {:?}", m.game.moves());
    let mut terms = m.game.term_universe();
    terms.push(dialogic::formula::Term::var(m.game.fresh_variable()));
    for t in ["c()", "f(c())"] {
        let t = parse_term(t).unwrap();
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    for (i, d) in m.legal_moves().unwrap().iter().enumerate() {
        let choices: Vec<Option<&dialogic::formula::Term>> = match d {
            MoveDescriptor::Concrete(_) => vec![None],
            _ => terms.iter().map(Some).collect(),
        };
        for t in choices {
            let mut next = m.clone();
            next.play_choice(i, t).unwrap();
            explore(&next, depth + 1, finished);
        }
    }
}

#[test]
fn every_small_human_line_loses_on_the_figure_formulas() {
    for text in FIGURE {
        let f = parse_formula(text).unwrap();
        let s = find_winning_strategy(&f, &SearchLimits::default()).unwrap();
        assert!(s.is_some());
        let m = Match::new(f, s, SearchLimits::default());
        let mut finished = 0;
        explore(&m, 0, &mut finished);
        assert!(finished > 1, "{text}");
    }
}
