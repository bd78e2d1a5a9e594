//! The review API: a local HTTP endpoint with JSON bodies, consumed by
//! the browser front-end. Writes are serialized through the store's lock
//! and its append-only log; classifier artifacts are never mutated.

use crate::commands::classify;
use crate::config::PipelineConfig;
use crate::failure::Failure;
use postmortem::review::{
    ItemSeed, ReviewEvent, ReviewStatus, ReviewStore, SortOrder, DEFAULT_PAGE_SIZE,
};
use postmortem::Category;
use serde::Deserialize;
use serde_json::json;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

pub struct ReviewServer {
    pub addr: SocketAddr,
    server: Arc<tiny_http::Server>,
    store: Arc<Mutex<ReviewStore>>,
    export_path: PathBuf,
}

pub fn run(config: &PipelineConfig, port: u16) -> Result<(), Failure> {
    let out_root = config.output_dir()?.to_path_buf();
    let mut seeds = classify::read_review_seeds(&out_root)?;
    attach_cam_paths(&mut seeds, &out_root);
    let server = ReviewServer::bind(
        seeds,
        &out_root.join("review_log.jsonl"),
        &out_root.join("export_labels.csv"),
        &format!("127.0.0.1:{port}"),
    )?;
    println!("review API listening on http://{}", server.addr);
    server.handle_requests();
    Ok(())
}

/// Wires in overlays from the localize stage when they exist.
pub fn attach_cam_paths(seeds: &mut [ItemSeed], out_root: &std::path::Path) {
    for seed in seeds {
        let candidate = out_root.join("localize").join(format!("{}__cam.png", seed.id));
        if candidate.exists() {
            seed.cam_path = Some(candidate.to_string_lossy().into_owned());
        }
    }
}

impl ReviewServer {
    pub fn bind(
        seeds: Vec<ItemSeed>,
        log_path: &std::path::Path,
        export_path: &std::path::Path,
        addr: &str,
    ) -> Result<ReviewServer, Failure> {
        let store = ReviewStore::open(seeds, log_path)?;
        let server = tiny_http::Server::http(addr)
            .map_err(|e| Failure::Runtime(anyhow::anyhow!("cannot bind {addr}: {e}")))?;
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(a) => a,
            _ => return Err(Failure::Runtime(anyhow::anyhow!("expected a TCP listener"))),
        };
        Ok(ReviewServer {
            addr,
            server: Arc::new(server),
            store: Arc::new(Mutex::new(store)),
            export_path: export_path.to_path_buf(),
        })
    }

    /// Blocks serving requests on a small worker pool.
    pub fn handle_requests(&self) {
        let mut workers = Vec::new();
        for _ in 0..4 {
            let server = Arc::clone(&self.server);
            let store = Arc::clone(&self.store);
            let export_path = self.export_path.clone();
            workers.push(std::thread::spawn(move || {
                while let Ok(request) = server.recv() {
                    handle(request, &store, &export_path);
                }
            }));
        }
        for worker in workers {
            let _ = worker.join();
        }
    }

    /// Serves in background threads; used by tests.
    pub fn spawn(self) -> SocketAddr {
        let addr = self.addr;
        std::thread::spawn(move || self.handle_requests());
        addr
    }
}

#[derive(Deserialize)]
struct DecisionBody {
    rater_id: String,
    category: Category,
}

#[derive(Deserialize)]
struct ResolutionBody {
    category: Category,
}

#[derive(Deserialize)]
struct TriageBody {
    accept: bool,
}

fn handle(mut request: tiny_http::Request, store: &Mutex<ReviewStore>, export_path: &Path) {
    let url = request.url().to_string();
    let (path, query) = match url.split_once('?') {
        Some((p, q)) => (p.to_string(), q.to_string()),
        None => (url, String::new()),
    };
    let segments: Vec<String> = path
        .split('/')
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
        .collect();
    let method = request.method().clone();
    let mut body = String::new();
    let _ = request.as_reader().read_to_string(&mut body);

    let response = route(&method, &segments, &query, &body, store, export_path);
    let _ = match response {
        Ok(Reply::Json(status, value)) => request.respond(
            tiny_http::Response::from_string(value.to_string())
                .with_status_code(tiny_http::StatusCode(status))
                .with_header(
                    tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                        .expect("static header"),
                ),
        ),
        Ok(Reply::Png(bytes)) => request.respond(
            tiny_http::Response::from_data(bytes).with_header(
                tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"image/png"[..])
                    .expect("static header"),
            ),
        ),
        Err((status, message)) => request.respond(
            tiny_http::Response::from_string(json!({ "error": message }).to_string())
                .with_status_code(tiny_http::StatusCode(status))
                .with_header(
                    tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                        .expect("static header"),
                ),
        ),
    };
}

enum Reply {
    Json(u16, serde_json::Value),
    Png(Vec<u8>),
}

type RouteResult = Result<Reply, (u16, String)>;

fn route(
    method: &tiny_http::Method,
    segments: &[String],
    query: &str,
    body: &str,
    store: &Mutex<ReviewStore>,
    export_path: &Path,
) -> RouteResult {
    use tiny_http::Method::{Get, Post};
    let names: Vec<&str> = segments.iter().map(|s| s.as_str()).collect();
    match (method, names.as_slice()) {
        (Get, ["items"]) => list_items(query, store),
        (Get, ["items", id]) => {
            let store = store.lock().expect("store lock");
            let item = store.item(id).map_err(map_store_err)?;
            Ok(Reply::Json(200, serde_json::to_value(item).expect("serializable")))
        }
        (Get, ["items", id, "cam"]) => {
            let cam_path = {
                let store = store.lock().expect("store lock");
                store.item(id).map_err(map_store_err)?.cam_path.clone()
            };
            let cam_path = cam_path.ok_or((404, format!("item {id} has no overlay")))?;
            let bytes =
                std::fs::read(&cam_path).map_err(|e| (404, format!("overlay unreadable: {e}")))?;
            Ok(Reply::Png(bytes))
        }
        (Post, ["items", id, "decision"]) => {
            let parsed: DecisionBody = parse_body(body)?;
            submit(
                store,
                ReviewEvent::RaterDecision {
                    item_id: id.to_string(),
                    rater_id: parsed.rater_id,
                    category: parsed.category,
                },
            )
        }
        (Post, ["items", id, "resolution"]) => {
            let parsed: ResolutionBody = parse_body(body)?;
            submit(
                store,
                ReviewEvent::ExpertResolution {
                    item_id: id.to_string(),
                    category: parsed.category,
                },
            )
        }
        (Post, ["items", id, "triage"]) => {
            let parsed: TriageBody = parse_body(body)?;
            submit(
                store,
                ReviewEvent::Triage {
                    item_id: id.to_string(),
                    accept: parsed.accept,
                },
            )
        }
        (Get, ["stats", "kappa"]) => {
            let store = store.lock().expect("store lock");
            match store.kappa() {
                Ok(result) => Ok(Reply::Json(
                    200,
                    json!({
                        "kappa": result.kappa,
                        "observed": result.observed,
                        "expected": result.expected,
                        "n_pairs": result.n,
                    }),
                )),
                Err(_) => Ok(Reply::Json(
                    200,
                    json!({ "kappa": null, "observed": null, "expected": null, "n_pairs": 0 }),
                )),
            }
        }
        (Post, ["export"]) => {
            let store = store.lock().expect("store lock");
            let count = store
                .write_export_csv(export_path)
                .map_err(map_store_err)?;
            Ok(Reply::Json(
                200,
                json!({ "count": count, "path": export_path.to_string_lossy() }),
            ))
        }
        (Get, ["status"]) => {
            let store = store.lock().expect("store lock");
            Ok(Reply::Json(
                200,
                json!({ "items": store.len(), "by_status": store.status_counts() }),
            ))
        }
        _ => Err((404, format!("no route for {method} /{}", names.join("/")))),
    }
}

fn list_items(query: &str, store: &Mutex<ReviewStore>) -> RouteResult {
    let mut status = None;
    let mut order = SortOrder::Asc;
    let mut page = 0usize;
    let mut page_size = DEFAULT_PAGE_SIZE;
    for pair in query.split('&').filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
        match key {
            "status" => {
                status = Some(match value {
                    "pending" => ReviewStatus::Pending,
                    "accepted" => ReviewStatus::Accepted,
                    "rejected" => ReviewStatus::Rejected,
                    "disputed" => ReviewStatus::Disputed,
                    other => return Err((400, format!("unknown status {other:?}"))),
                })
            }
            "sort" => {
                order = match value {
                    "asc" => SortOrder::Asc,
                    "desc" => SortOrder::Desc,
                    other => return Err((400, format!("unknown sort {other:?}"))),
                }
            }
            "page" => page = value.parse().map_err(|_| (400, "bad page".to_string()))?,
            "page_size" => {
                page_size = value
                    .parse()
                    .map_err(|_| (400, "bad page_size".to_string()))?
            }
            other => return Err((400, format!("unknown query parameter {other:?}"))),
        }
    }
    let store = store.lock().expect("store lock");
    let items = store.list(status, order, page, page_size);
    let total: usize = match status {
        Some(_) => store.list(status, order, 0, usize::MAX).len(),
        None => store.len(),
    };
    Ok(Reply::Json(
        200,
        json!({
            "items": items,
            "page": page,
            "page_size": page_size,
            "total_matching": total,
        }),
    ))
}

fn submit(store: &Mutex<ReviewStore>, event: ReviewEvent) -> RouteResult {
    let mut store = store.lock().expect("store lock");
    let item = store.submit(event).map_err(map_store_err)?;
    Ok(Reply::Json(200, serde_json::to_value(item).expect("serializable")))
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, (u16, String)> {
    serde_json::from_str(body).map_err(|e| (400, format!("bad request body: {e}")))
}

fn map_store_err(err: postmortem::Error) -> (u16, String) {
    match &err {
        postmortem::Error::NotFound(_) => (404, err.to_string()),
        postmortem::Error::Conflict(_) => (409, err.to_string()),
        _ => (500, err.to_string()),
    }
}
