//! Two bundled synthetic clips through ingest, process, review and analyze,
//! offline. The review decision goes over a real loopback socket.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};

use face_affect::affect::{read_series_csv, read_summary_csv, SIMPLEX_EPS};
use face_affect::identity::ResolutionStatus;
use face_affect::pipeline::{self, server, PipelineConfig, ProcessOptions, VideoStatus, Workspace};

use crate::{Check, Tally};

fn smoke_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/smoke")
}

/// Minimal HTTP/1.1 exchange; returns status code and body.
fn http(addr: SocketAddr, method: &str, path: &str, body: &str) -> std::io::Result<(u16, String)> {
    let mut s = TcpStream::connect(addr)?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut raw = String::new();
    s.read_to_string(&mut raw)?;
    let status = raw
        .split_whitespace()
        .nth(1)
        .and_then(|c| c.parse().ok())
        .unwrap_or(0);
    let body = raw.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    Ok((status, body))
}

fn summary_ids(path: &Path) -> Vec<String> {
    read_summary_csv(path)
        .map(|rows| rows.into_iter().map(|r| r.video_id).collect())
        .unwrap_or_default()
}

pub fn run() -> Check {
    let out = tempfile::tempdir().map_err(|e| vec![e.to_string()])?;
    let dir = smoke_dir();
    let mut cfg = PipelineConfig::new(dir.join("manifest.csv"), dir.join("labels.csv"), out.path().to_path_buf());
    cfg.seed = 7;
    let ws = Workspace::new(out.path());
    let fail = |e: face_affect::Error| vec![e.to_string()];
    let mut t = Tally::default();

    let ingest = pipeline::ingest(&cfg).map_err(fail)?;
    t.truth("both clips ready after ingest", ingest.media_ready == 2 && ingest.media_failed.is_empty());

    let report = pipeline::process(&cfg, ProcessOptions { force: false, jobs: Some(2) }).map_err(fail)?;
    t.truth(
        &format!("run accounting: {}", report.summary_line()),
        report.processed + report.failed + report.review_pending + report.discarded == report.manifest_size,
    );
    let status = |id: &str| report.videos.iter().find(|v| v.video_id == id).map(|v| v.status);
    t.truth("single-face clip processed", status("smoke_solo") == Some(VideoStatus::Processed));
    let solo = report.videos.iter().find(|v| v.video_id == "smoke_solo");
    t.truth(
        "single-face clip resolved without review",
        solo.and_then(|v| v.resolution.as_ref()).map(|r| r.status) == Some(ResolutionStatus::AutoConfirmed),
    );
    t.truth("two-face clip flagged for review", status("smoke_duo") == Some(VideoStatus::ReviewPending));

    let series_path = ws.series(cfg.strategy, "smoke_solo");
    match read_series_csv(&series_path, "smoke_solo") {
        Ok(series) => {
            t.truth("series has every sampled frame", series.len() == 10);
            let ok = series.frames().iter().all(|f| {
                let v = f.scores.values();
                v.iter().all(|x| (0.0..=1.0).contains(x)) && (v.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_EPS
            });
            t.truth("every series row on the simplex", ok);
        }
        Err(e) => t.truth(&format!("series readable: {e}"), false),
    }

    let before = pipeline::analyze(&cfg, cfg.strategy).map_err(fail)?;
    t.truth("analysis before review covers one video", before.report.videos == 1);
    t.truth(
        "summary before review is the single-face clip only",
        summary_ids(&ws.summary(cfg.strategy)) == ["smoke_solo"],
    );

    // review over a real socket
    let rt = tokio::runtime::Runtime::new().map_err(|e| vec![e.to_string()])?;
    let listener = rt.block_on(server::bind(0)).map_err(fail)?;
    let addr = listener.local_addr().map_err(|e| vec![e.to_string()])?;
    rt.spawn(server::serve(listener, ws.review_root(cfg.strategy)));
    let queue = http(addr, "GET", "/api/videos", "").map_err(|e| vec![e.to_string()])?;
    t.truth(
        &format!("queue lists the two-face clip: {}", queue.1),
        queue.0 == 200 && queue.1.contains("\"video_id\":\"smoke_duo\"") && !queue.1.contains("smoke_solo"),
    );
    let posted = http(addr, "POST", "/api/videos/smoke_duo/verify", r#"{"action":"select","track_id":2}"#)
        .map_err(|e| vec![e.to_string()])?;
    t.truth(&format!("verification accepted: {posted:?}"), posted.0 == 200);
    let empty = http(addr, "GET", "/api/videos", "").map_err(|e| vec![e.to_string()])?;
    t.truth("queue empty after verification", empty == (200, "[]".to_string()));
    rt.shutdown_background();

    let after = pipeline::analyze(&cfg, cfg.strategy).map_err(fail)?;
    t.truth("analysis after review covers both videos", after.report.videos == 2);
    t.truth(
        "summary after review includes the verified clip",
        summary_ids(&ws.summary(cfg.strategy)) == ["smoke_solo", "smoke_duo"],
    );

    let again = pipeline::process(&cfg, ProcessOptions::default()).map_err(fail)?;
    t.truth("re-run recomputes nothing", again.recomputed == 0 && again.processed == 2);
    t.finish(format!("{} processed after review", again.processed))
}
