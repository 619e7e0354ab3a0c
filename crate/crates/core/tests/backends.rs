mod common;

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use dualtile::inpaint::quilt::{block_error, quilt, QuiltParams};
use dualtile::inpaint::remote::{decode_png, encode_png, WireRequest, WireResponse};
use dualtile::inpaint::{
    harmonic_inpaint, inpaint, noisy_harmonic, Backend, BackendDescriptor, BackendKind, InpaintRequest, Inpainter,
    RemoteClient,
};
use dualtile::pipeline::{generate_tileset, Scheme};
use dualtile::{Error, Mask, Raster};

use common::{config, exemplar};

#[derive(Clone, Copy)]
enum Reply {
    Echo,
    /// Fails with this status for the first `n` calls, then echoes.
    FailFirst(u16, usize),
    Shrink,
    Garbage,
}

struct Mock {
    reply: Reply,
    calls: AtomicUsize,
    last: Mutex<Option<WireRequest>>,
}

async fn handle(State(m): State<Arc<Mock>>, Json(req): Json<WireRequest>) -> Result<Json<serde_json::Value>, StatusCode> {
    let n = m.calls.fetch_add(1, Ordering::SeqCst);
    let image = req.image.clone();
    *m.last.lock().unwrap() = Some(req);
    match m.reply {
        Reply::FailFirst(code, k) if n < k => Err(StatusCode::from_u16(code).unwrap()),
        Reply::Echo | Reply::FailFirst(..) => Ok(Json(serde_json::to_value(WireResponse { image }).unwrap())),
        Reply::Shrink => {
            let r = decode_png(&image).unwrap();
            let small = r.crop(0, 0, r.width() - 1, r.height()).unwrap();
            Ok(Json(serde_json::to_value(WireResponse { image: encode_png(&small) }).unwrap()))
        }
        Reply::Garbage => Ok(Json(serde_json::json!({ "picture": 1 }))),
    }
}

/// Starts a mock inpainting service on an ephemeral port.
fn serve(reply: Reply) -> (String, Arc<Mock>) {
    let mock = Arc::new(Mock {
        reply,
        calls: AtomicUsize::new(0),
        last: Mutex::new(None),
    });
    let app = Router::new().route("/inpaint", post(handle)).with_state(mock.clone());
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    let addr = rx.recv().unwrap();
    (format!("http://{addr}"), mock)
}

fn client(url: &str, retries: u32) -> RemoteClient {
    RemoteClient::new(url, Duration::from_secs(10), retries, 2).with_backoff(Duration::from_millis(1))
}

fn request(size: usize) -> InpaintRequest {
    let image = exemplar(size, size);
    let mask = Mask::from_fn(size, size, |x, y| (4..size - 4).contains(&x) && (4..size - 4).contains(&y));
    InpaintRequest::new(image, mask, 17)
}

#[test]
fn echo_service_returns_input() {
    let (url, mock) = serve(Reply::Echo);
    let req = request(32).with_prompt("stone wall");
    let out = client(&url, 0).inpaint(&req).unwrap();
    assert_eq!(out, req.image);
    let sent = mock.last.lock().unwrap().take().unwrap();
    assert_eq!(sent.steps, 40);
    assert_eq!(sent.guidance, 7.5);
    assert_eq!(sent.seed, 17);
    assert_eq!(sent.prompt, "stone wall");
    assert_eq!(Mask::from_raster(&decode_png(&sent.mask).unwrap()), req.mask);
}

#[test]
fn wire_request_omits_absent_negative_prompt() {
    let v = serde_json::to_value(WireRequest::from_request(&request(8))).unwrap();
    assert!(v.get("negative_prompt").is_none());
    assert_eq!(v["steps"], 40);
    assert_eq!(v["guidance"], 7.5);
}

#[test]
fn backend_keeps_boundary_through_remote() {
    let (url, _) = serve(Reply::Echo);
    let req = request(24);
    let out = Backend::new(BackendDescriptor::remote(url), None).unwrap().inpaint(&req).unwrap();
    for y in 0..24 {
        for x in 0..24 {
            if !req.mask.get(x, y) {
                assert_eq!(out.get(x, y), req.image.get(x, y));
            }
        }
    }
}

#[test]
fn server_errors_are_retried() {
    let (url, mock) = serve(Reply::FailFirst(503, 2));
    let req = request(16);
    assert_eq!(client(&url, 3).inpaint(&req).unwrap(), req.image);
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_are_bounded() {
    let (url, mock) = serve(Reply::FailFirst(500, usize::MAX));
    assert!(matches!(client(&url, 2).inpaint(&request(16)), Err(Error::Remote(_))));
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_fail_fast() {
    let (url, mock) = serve(Reply::FailFirst(422, usize::MAX));
    assert!(matches!(client(&url, 3).inpaint(&request(16)), Err(Error::Remote(_))));
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_and_resized_responses_are_errors() {
    let (url, mock) = serve(Reply::Garbage);
    assert!(matches!(client(&url, 3).inpaint(&request(16)), Err(Error::Remote(_))));
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
    let (url, _) = serve(Reply::Shrink);
    assert!(matches!(client(&url, 0).inpaint(&request(16)), Err(Error::Remote(_))));
}

#[test]
fn unreachable_service_is_an_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    assert!(matches!(client(&url, 1).inpaint(&request(16)), Err(Error::Remote(_))));
}

#[test]
fn pipeline_runs_against_remote_service() {
    let (url, mock) = serve(Reply::Echo);
    let mut cfg = config(Scheme::Wang, 2, 8);
    cfg.backend = BackendDescriptor::remote(url);
    let set = generate_tileset(&cfg, &exemplar(64, 64)).unwrap();
    assert!(set.is_complete());
    assert_eq!(mock.calls.load(Ordering::SeqCst), 16);
    let sent = mock.last.lock().unwrap().take().unwrap();
    assert_eq!(decode_png(&sent.image).unwrap().dims(), (16, 16));
}

#[test]
fn empty_mask_is_identity_for_every_local_backend() {
    let ex = Arc::new(exemplar(64, 64));
    let req = InpaintRequest::new(exemplar(20, 20), Mask::new(20, 20), 3);
    for kind in [BackendKind::Harmonic, BackendKind::Noisy, BackendKind::Quilt] {
        let out = inpaint(&BackendDescriptor::of_kind(kind), Some(ex.clone()), &req).unwrap();
        assert_eq!(out, req.image, "{kind:?}");
    }
}

#[test]
fn local_backends_are_deterministic() {
    let ex = Arc::new(exemplar(64, 64));
    let req = request(32);
    for kind in [BackendKind::Harmonic, BackendKind::Noisy, BackendKind::Quilt] {
        let desc = BackendDescriptor::of_kind(kind);
        let a = inpaint(&desc, Some(ex.clone()), &req).unwrap();
        let b = inpaint(&desc, Some(ex.clone()), &req).unwrap();
        assert_eq!(a, b, "{kind:?}");
    }
}

#[test]
fn noisy_reduces_to_harmonic_without_amplitude() {
    let req = request(24);
    let h = harmonic_inpaint(&req.image, &req.mask, 1e-6).unwrap();
    let n = noisy_harmonic(&req.image, &req.mask, 9, 0.0, 8.0, 1e-6).unwrap();
    assert_eq!(h, n);
    let a = noisy_harmonic(&req.image, &req.mask, 1, 0.1, 4.0, 1e-6).unwrap();
    let b = noisy_harmonic(&req.image, &req.mask, 2, 0.1, 4.0, 1e-6).unwrap();
    assert_ne!(a, b);
}

#[test]
fn quilt_pastes_the_best_single_patch() {
    let ex = exemplar(40, 40);
    let image = Raster::from_fn(24, 24, |x, y| ex.get((x + 11) % 40, (y * 3 + 5) % 40));
    let mask = Mask::from_fn(24, 24, |x, y| (4..20).contains(&x) && (4..20).contains(&y));
    let params = QuiltParams {
        patch: 24,
        overlap: 4,
        candidates: usize::MAX,
        tolerance: 0.0,
    };
    let out = quilt(&image, &mask, &ex, 5, &params).unwrap();
    let known: Vec<bool> = mask.bits().iter().map(|&m| !m).collect();
    let span = ex.width() - 24 + 1;
    let mut best = (f64::INFINITY, (0, 0));
    for sy in 0..span {
        for sx in 0..span {
            let e = block_error(&image, &known, &ex, (0, 0), (sx, sy), 24);
            if e < best.0 {
                best = (e, (sx, sy));
            }
        }
    }
    let (sx, sy) = best.1;
    for y in 0..24 {
        for x in 0..24 {
            let k = y * 24 + x;
            if mask.get(x, y) {
                assert_eq!(out.provenance[k], Some(((sx + x) as u32, (sy + y) as u32)));
                assert_eq!(out.image.get(x, y), ex.get(sx + x, sy + y));
            } else {
                assert_eq!(out.provenance[k], None);
            }
        }
    }
}

#[test]
fn quilt_copies_exemplar_texels() {
    let ex = exemplar(80, 80);
    let req = request(64);
    let params = QuiltParams {
        patch: 16,
        overlap: 4,
        ..Default::default()
    };
    let a = quilt(&req.image, &req.mask, &ex, 1, &params).unwrap();
    for y in 0..64 {
        for x in 0..64 {
            match a.provenance[y * 64 + x] {
                Some((sx, sy)) => assert_eq!(a.image.get(x, y), ex.get(sx as usize, sy as usize)),
                None => assert!(!req.mask.get(x, y)),
            }
        }
    }
    let b = quilt(&req.image, &req.mask, &ex, 2, &params).unwrap();
    assert_ne!(a.provenance, b.provenance);
}
