//! Shared helpers for the service tests.
#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use image::{Rgb, RgbImage};
use serde_json::Value;
use tower::ServiceExt;

pub const WIDTH: u32 = 64;
pub const HEIGHT: u32 = 48;

/// Planted objects per frame: `(class color, x, y, w, h)`.
pub const COLORS: [[u8; 3]; 3] = [[230, 40, 40], [40, 200, 60], [50, 70, 220]];

/// Black image with solid rectangles.
pub fn canvas(rects: &[([u8; 3], u32, u32, u32, u32)]) -> RgbImage {
    let mut img = RgbImage::new(WIDTH, HEIGHT);
    for &(c, x, y, w, h) in rects {
        for yy in y..y + h {
            for xx in x..x + w {
                img.put_pixel(xx, yy, Rgb(c));
            }
        }
    }
    img
}

/// Writes `n` PNG frames `frame_000.png…`, each with a red and a green
/// rectangle that drift right by one pixel per frame.
pub fn write_frames(dir: &Path, n: usize) {
    for i in 0..n as u32 {
        let img = canvas(&[(COLORS[0], 4 + i, 6, 14, 10), (COLORS[1], 36 + i, 24, 10, 16)]);
        img.save(dir.join(format!("frame_{i:03}.png"))).unwrap();
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>, headers: &[(&str, &str)]) -> (StatusCode, axum::http::HeaderMap, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let json = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(format!("<{} bytes>", bytes.len())))
    };
    (status, headers, json)
}
