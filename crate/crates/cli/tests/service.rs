//! The HTTP service driven in-process through its router.

mod common;

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use c4_cli::service::{router, AppState, EvalResponse, Health};
use c4_core::encoding::Player;
use c4_core::store::{board_dir, layer_path, LayerRole, Wdl, WdlStore};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use tower::ServiceExt;

use common::{solved_store, Oracle};

fn make_app(store: Option<WdlStore>, budget: Duration) -> Router {
    router(AppState::new(store, budget))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().uri(uri).body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn get_json<T: DeserializeOwned>(app: &Router, uri: &str) -> T {
    let (status, body) = get(app, uri).await;
    assert_eq!(status, StatusCode::OK, "{uri}: {}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

#[tokio::test]
async fn health_without_a_store() {
    let app = make_app(None, Duration::from_secs(1));
    let h: Health = get_json(&app, "/health").await;
    assert_eq!(h.status, "ok");
    assert!(!h.store_loaded);
    assert_eq!(h.plies_loaded, 0);
    let (status, _) = get(&app, "/eval?moves=").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn health_echoes_the_store_geometry() {
    let tmp = tempfile::tempdir().unwrap();
    let app = make_app(Some(solved_store(tmp.path(), 5, 4)), Duration::from_secs(1));
    let h: Health = get_json(&app, "/health").await;
    assert_eq!((h.width, h.height, h.max_ply), (Some(5), Some(4), Some(20)));
    assert_eq!(h.encoding.as_deref(), Some("compressed"));
    let _: EvalResponse = get_json(&app, "/eval?moves=3").await;
    let h: Health = get_json(&app, "/health").await;
    assert!(h.plies_loaded >= 1 && h.plies_loaded <= 21);
}

#[tokio::test]
async fn cors_allows_any_origin() {
    let tmp = tempfile::tempdir().unwrap();
    let app = make_app(Some(solved_store(tmp.path(), 3, 3)), Duration::from_secs(1));
    let req = Request::builder().uri("/health").header("origin", "http://example.test").body(Body::empty()).unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}

#[tokio::test]
async fn full_3x3_board_is_a_draw_without_moves() {
    let tmp = tempfile::tempdir().unwrap();
    let app = make_app(Some(solved_store(tmp.path(), 3, 3)), Duration::from_secs(1));
    let r: EvalResponse = get_json(&app, "/eval?moves=123123123&search=true").await;
    assert_eq!(r.wdl, Wdl::Draw);
    assert!(r.terminal);
    assert!(r.columns.is_empty());
    assert_eq!(r.best, None);
    assert_eq!(r.ply, 9);
}

#[tokio::test]
async fn error_statuses() {
    let tmp = tempfile::tempdir().unwrap();
    let store = solved_store(tmp.path(), 4, 4);
    let app = make_app(Some(store), Duration::from_secs(1));
    for bad in ["5", "0", "x", "11111"] {
        let (status, body) = get(&app, &format!("/eval?moves={bad}")).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(String::from_utf8_lossy(&body).contains("error"));
    }

    let dir = board_dir(tmp.path(), c4_core::BoardGeometry::new(4, 4).unwrap());
    std::fs::remove_file(layer_path(&dir, 6, LayerRole::Win)).unwrap();
    let damaged = make_app(Some(WdlStore::open(&dir).unwrap()), Duration::from_secs(1));
    let (status, _) = get(&damaged, "/eval?moves=112233").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    // A position one ply earlier needs ply 6 for its moves.
    let (status, _) = get(&damaged, "/eval?moves=11223").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&damaged, "/eval?moves=1122").await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn expired_budget_gives_a_partial_answer() {
    let tmp = tempfile::tempdir().unwrap();
    let app = make_app(Some(solved_store(tmp.path(), 5, 4)), Duration::ZERO);
    let r: EvalResponse = get_json(&app, "/eval?moves=&search=true").await;
    assert!(r.partial);
    assert!(!r.searched);
    assert!(r.columns.iter().all(|c| c.score.is_none()));
    // Store values are still there.
    assert_eq!(r.columns.len(), 5);
    assert_eq!(Some(r.wdl), r.columns.iter().map(|c| c.wdl).max());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn every_4x4_response_agrees_with_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let app = make_app(Some(solved_store(tmp.path(), 4, 4)), Duration::from_secs(60));
    let oracle = Oracle::build(4, 4);
    assert_eq!(oracle.entries.len(), 161_029);
    for (i, e) in oracle.entries.iter().enumerate() {
        // Searching every position is slow; every 97th one is enough.
        let search = i % 97 == 0;
        let r: EvalResponse = get_json(&app, &format!("/eval?moves={}&search={search}", e.moves)).await;
        assert_eq!(r.moves, e.moves);
        assert_eq!(r.ply as usize, e.ply);
        assert_eq!(r.side_to_move, if e.ply % 2 == 0 { Player::First } else { Player::Second });
        assert_eq!(r.wdl, Wdl::of_score(e.score), "{}", e.moves);
        assert_eq!(r.terminal, e.terminal);
        assert_eq!(r.columns.len(), e.children.len());
        for (got, &(col, score)) in r.columns.iter().zip(&e.children) {
            assert_eq!(got.column, col);
            assert_eq!(got.wdl, Wdl::of_score(score), "{} then {col}", e.moves);
            if search {
                assert_eq!(got.score, Some(score), "{} then {col}", e.moves);
            }
        }
        match r.best {
            None => assert!(e.terminal),
            Some(b) => {
                let best_wdl = r.columns.iter().map(|c| c.wdl).max().unwrap();
                let chosen = &e.children.iter().find(|c| c.0 == b).unwrap();
                assert_eq!(Wdl::of_score(chosen.1), best_wdl, "{}", e.moves);
                if search {
                    assert_eq!(chosen.1, e.score, "{}", e.moves);
                    assert_eq!(r.score, Some(e.score));
                    assert!(r.searched);
                }
            }
        }
    }
}
