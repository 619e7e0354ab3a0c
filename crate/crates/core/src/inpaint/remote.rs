//! Client for a remote inpainting service.
//!
//! `POST {url}/inpaint` with `{image, mask, prompt, negative_prompt?, seed,
//! steps, guidance}` (images as base64 PNG, mask white where to inpaint)
//! answered by `{image}`.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

use super::InpaintRequest;

#[derive(Debug, Serialize, Deserialize)]
pub struct WireRequest {
    pub image: String,
    pub mask: String,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub negative_prompt: Option<String>,
    pub seed: u64,
    pub steps: u32,
    pub guidance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WireResponse {
    pub image: String,
}

impl WireRequest {
    pub fn from_request(req: &InpaintRequest) -> WireRequest {
        WireRequest {
            image: encode_png(&req.image),
            mask: encode_png(&req.mask.to_raster()),
            prompt: req.prompt.clone(),
            negative_prompt: req.negative_prompt.clone(),
            seed: req.seed,
            steps: req.steps,
            guidance: req.guidance,
        }
    }
}

pub fn encode_png(r: &Raster) -> String {
    STANDARD.encode(r.to_png_bytes())
}

pub fn decode_png(s: &str) -> Result<Raster> {
    let bytes = STANDARD
        .decode(s.trim())
        .map_err(|e| Error::Remote(format!("bad base64 image: {e}")))?;
    Raster::from_image_bytes(&bytes)
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    limit: usize,
    count: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a InFlight);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

pub struct RemoteClient {
    url: String,
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
    in_flight: InFlight,
}

impl RemoteClient {
    pub fn new(url: &str, timeout: Duration, retries: u32, max_in_flight: usize) -> RemoteClient {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteClient {
            url: url.trim_end_matches('/').to_string(),
            agent,
            retries,
            backoff: Duration::from_millis(200),
            in_flight: InFlight {
                limit: max_in_flight.max(1),
                count: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn inpaint(&self, req: &InpaintRequest) -> Result<Raster> {
        let body = WireRequest::from_request(req);
        let _permit = self.in_flight.acquire();
        let mut attempt = 0;
        loop {
            match self.post(&body) {
                Ok(r) => {
                    if r.dims() != req.image.dims() {
                        return Err(Error::Remote(format!(
                            "response is {:?}, request was {:?}",
                            r.dims(),
                            req.image.dims()
                        )));
                    }
                    return Ok(r);
                }
                Err(e) if attempt < self.retries && retryable(&e) => {
                    log::warn!("inpaint request failed ({e}); retrying");
                    std::thread::sleep(self.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn post(&self, body: &WireRequest) -> Result<Raster> {
        let url = format!("{}/inpaint", self.url);
        let resp = self.agent.post(&url).send_json(body).map_err(|e| Error::Remote(e.to_string()))?;
        let parsed: WireResponse = resp
            .into_body()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_json()
            .map_err(|e| Error::Remote(format!("malformed response: {e}")))?;
        decode_png(&parsed.image)
    }
}

fn retryable(e: &Error) -> bool {
    match e {
        Error::Remote(msg) => !msg.starts_with("malformed") && !msg.contains("http status: 4"),
        _ => false,
    }
}
