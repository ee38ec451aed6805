use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::VideoManifestEntry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FetchStatus {
    Ok,
    Failed,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryRecord {
    pub local_path: Option<PathBuf>,
    pub fetch_status: FetchStatus,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Local media registry persisted as JSON (`video_id -> record`).
#[derive(Debug, Default)]
pub struct Registry {
    path: Option<PathBuf>,
    records: Mutex<BTreeMap<String, RegistryRecord>>,
}

impl Registry {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: &Path) -> Result<Self> {
        let records = if path.exists() {
            crate::io::read_json(path)?
        } else {
            BTreeMap::new()
        };
        Ok(Registry {
            path: Some(path.to_path_buf()),
            records: Mutex::new(records),
        })
    }

    pub fn get(&self, video_id: &str) -> Option<RegistryRecord> {
        self.records.lock().unwrap().get(video_id).cloned()
    }

    pub fn snapshot(&self) -> BTreeMap<String, RegistryRecord> {
        self.records.lock().unwrap().clone()
    }

    /// Records the outcome for one video and persists the whole registry.
    pub fn record(&self, video_id: &str, record: RegistryRecord) -> Result<()> {
        let mut guard = self.records.lock().unwrap();
        guard.insert(video_id.to_string(), record);
        if let Some(path) = &self.path {
            crate::io::write_json_atomic(path, &*guard)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchFailure {
    /// Transient failure (network, rate limit); try again later.
    Retriable(String),
    /// The video is gone upstream.
    Removed(String),
}

/// External media download boundary.
pub trait MediaFetcher: Send + Sync {
    fn fetch(&self, entry: &VideoManifestEntry, dest: &Path) -> std::result::Result<(), FetchFailure>;
}

/// Runs an external downloader. `{url}` and `{dest}` in the argument
/// template are substituted per video.
#[derive(Debug, Clone)]
pub struct CommandFetcher {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandFetcher {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        CommandFetcher {
            program: program.into(),
            args,
        }
    }
}

const REMOVED_MARKERS: [&str; 4] = ["unavailable", "removed", "private video", "terminated"];

impl MediaFetcher for CommandFetcher {
    fn fetch(&self, entry: &VideoManifestEntry, dest: &Path) -> std::result::Result<(), FetchFailure> {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                a.replace("{url}", &entry.source_url)
                    .replace("{dest}", &dest.display().to_string())
            })
            .collect();
        let output = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| FetchFailure::Retriable(format!("cannot run {}: {e}", self.program)))?;
        if output.status.success() && dest.exists() {
            return Ok(());
        }
        let stderr = String::from_utf8_lossy(&output.stderr).to_lowercase();
        if REMOVED_MARKERS.iter().any(|m| stderr.contains(m)) {
            Err(FetchFailure::Removed(stderr.trim().to_string()))
        } else {
            Err(FetchFailure::Retriable(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                stderr.trim()
            )))
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Ensures the media file for `entry` is present under `media_dir`.
///
/// Already-present files are returned without calling the fetcher.
pub fn fetch_media(
    entry: &VideoManifestEntry,
    fetcher: &dyn MediaFetcher,
    registry: &Registry,
    media_dir: &Path,
) -> Result<PathBuf> {
    if let Some(p) = entry.local_path.as_ref().filter(|p| p.exists()) {
        return Ok(p.clone());
    }
    if let Some(rec) = registry.get(&entry.video_id) {
        match (rec.fetch_status, rec.local_path) {
            (FetchStatus::Ok, Some(p)) if p.exists() => return Ok(p),
            (FetchStatus::Removed, _) => {
                return Err(Error::FetchPermanent {
                    video_id: entry.video_id.clone(),
                    reason: rec.reason.unwrap_or_else(|| "removed upstream".into()),
                })
            }
            _ => {}
        }
    }
    if !entry.source_url.contains("://") {
        return Err(Error::FetchRetriable {
            video_id: entry.video_id.clone(),
            url: entry.source_url.clone(),
            reason: "malformed source URL".into(),
        });
    }
    std::fs::create_dir_all(media_dir).map_err(|e| Error::io(media_dir, e))?;
    let dest = media_dir.join(format!("{}.mp4", entry.video_id));
    if dest.exists() {
        registry.record(
            &entry.video_id,
            RegistryRecord {
                local_path: Some(dest.clone()),
                fetch_status: FetchStatus::Ok,
                timestamp: now(),
                reason: None,
            },
        )?;
        return Ok(dest);
    }
    match fetcher.fetch(entry, &dest) {
        Ok(()) => {
            registry.record(
                &entry.video_id,
                RegistryRecord {
                    local_path: Some(dest.clone()),
                    fetch_status: FetchStatus::Ok,
                    timestamp: now(),
                    reason: None,
                },
            )?;
            Ok(dest)
        }
        Err(FetchFailure::Retriable(reason)) => {
            registry.record(
                &entry.video_id,
                RegistryRecord {
                    local_path: None,
                    fetch_status: FetchStatus::Failed,
                    timestamp: now(),
                    reason: Some(reason.clone()),
                },
            )?;
            Err(Error::FetchRetriable {
                video_id: entry.video_id.clone(),
                url: entry.source_url.clone(),
                reason,
            })
        }
        Err(FetchFailure::Removed(reason)) => {
            registry.record(
                &entry.video_id,
                RegistryRecord {
                    local_path: None,
                    fetch_status: FetchStatus::Removed,
                    timestamp: now(),
                    reason: Some(reason.clone()),
                },
            )?;
            Err(Error::FetchPermanent {
                video_id: entry.video_id.clone(),
                reason,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Stub {
        calls: AtomicUsize,
        outcome: std::result::Result<(), FetchFailure>,
    }

    impl MediaFetcher for Stub {
        fn fetch(&self, _: &VideoManifestEntry, dest: &Path) -> std::result::Result<(), FetchFailure> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.outcome.is_ok() {
                std::fs::write(dest, b"media").unwrap();
            }
            self.outcome.clone()
        }
    }

    fn entry() -> VideoManifestEntry {
        VideoManifestEntry {
            video_id: "v1".into(),
            source_url: "https://example.org/v1".into(),
            leader_name: "L".into(),
            party_name: "P".into(),
            country_iso: "HR".into(),
            local_path: None,
        }
    }

    #[test]
    fn second_fetch_is_a_no_op() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(&dir.path().join("registry.json")).unwrap();
        let stub = Stub {
            calls: AtomicUsize::new(0),
            outcome: Ok(()),
        };
        let p1 = fetch_media(&entry(), &stub, &reg, dir.path()).unwrap();
        let p2 = fetch_media(&entry(), &stub, &reg, dir.path()).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
        let reopened = Registry::open(&dir.path().join("registry.json")).unwrap();
        assert_eq!(reopened.get("v1").unwrap().fetch_status, FetchStatus::Ok);
    }

    #[test]
    fn unreachable_url_is_retriable() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::in_memory();
        let stub = Stub {
            calls: AtomicUsize::new(0),
            outcome: Err(FetchFailure::Retriable("timeout".into())),
        };
        let err = fetch_media(&entry(), &stub, &reg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::FetchRetriable { .. }));
        assert_eq!(reg.get("v1").unwrap().fetch_status, FetchStatus::Failed);
    }

    #[test]
    fn removed_video_is_recorded_permanently() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::in_memory();
        let stub = Stub {
            calls: AtomicUsize::new(0),
            outcome: Err(FetchFailure::Removed("Video unavailable".into())),
        };
        assert!(matches!(
            fetch_media(&entry(), &stub, &reg, dir.path()),
            Err(Error::FetchPermanent { .. })
        ));
        assert_eq!(reg.get("v1").unwrap().fetch_status, FetchStatus::Removed);
        // a removed record short-circuits further attempts
        assert!(fetch_media(&entry(), &stub, &reg, dir.path()).is_err());
        assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn command_fetcher_maps_exit_status() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("v.mp4");
        let ok = CommandFetcher::new("sh", vec!["-c".into(), "echo x > {dest}".into()]);
        assert!(ok.fetch(&entry(), &dest).is_ok());
        let gone = CommandFetcher::new(
            "sh",
            vec!["-c".into(), "echo 'ERROR: Video unavailable' >&2; exit 1".into()],
        );
        assert!(matches!(gone.fetch(&entry(), &dir.path().join("w.mp4")), Err(FetchFailure::Removed(_))));
        let flaky = CommandFetcher::new("sh", vec!["-c".into(), "exit 3".into()]);
        assert!(matches!(flaky.fetch(&entry(), &dir.path().join("z.mp4")), Err(FetchFailure::Retriable(_))));
    }
}
