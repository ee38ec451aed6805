use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CommandFetcher, FetchFailure, MediaFetcher, VideoManifestEntry};
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::identity::{ResolutionPolicy, TrackingConfig};
use crate::models::ModelPaths;
use crate::sampler::{FfmpegProvider, FrameProvider, SamplingStrategy, Y4mProvider};
use crate::stats::TTestVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetcherConfig {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

/// The single declarative run configuration. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub labels: PathBuf,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub strategy: SamplingStrategy,
    #[serde(default = "default_min_face")]
    pub min_face_px: u32,
    /// Stage thresholds; `min_size` here is replaced by `min_face_px`.
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub tracking: TrackingConfig,
    #[serde(default = "default_coverage")]
    pub auto_coverage: f64,
    #[serde(default = "ModelPaths::bundled")]
    pub models: ModelPaths,
    #[serde(default)]
    pub decoder: FfmpegProvider,
    #[serde(default)]
    pub fetcher: Option<FetcherConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub t_test: TTestVariant,
    /// Reuse a decision made under the other sampling strategy when the
    /// same track can be located again.
    #[serde(default = "yes")]
    pub carry_over_verifications: bool,
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_min_face() -> u32 {
    50
}

fn default_coverage() -> f64 {
    ResolutionPolicy::default().auto_coverage
}

impl PipelineConfig {
    pub fn new(manifest: PathBuf, labels: PathBuf, out_dir: PathBuf) -> PipelineConfig {
        PipelineConfig {
            manifest,
            labels,
            out_dir,
            strategy: SamplingStrategy::default(),
            min_face_px: default_min_face(),
            detector: DetectorConfig::default(),
            tracking: TrackingConfig::default(),
            auto_coverage: default_coverage(),
            models: ModelPaths::bundled(),
            decoder: FfmpegProvider::default(),
            fetcher: None,
            seed: 0,
            jobs: None,
            t_test: TTestVariant::default(),
            carry_over_verifications: true,
        }
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        fix(&mut self.labels);
        fix(&mut self.out_dir);
        for m in [
            &mut self.models.pnet,
            &mut self.models.rnet,
            &mut self.models.onet,
            &mut self.models.emotion,
        ] {
            fix(&mut m.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        if self.min_face_px < 12 {
            return Err(Error::Config(format!(
                "min_face_px {} is below the detector's 12 px floor",
                self.min_face_px
            )));
        }
        if !(self.auto_coverage > 0.0 && self.auto_coverage <= 1.0) {
            return Err(Error::Config(format!("auto_coverage {} not in (0,1]", self.auto_coverage)));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        self.detector_config().validate()
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            min_size: self.min_face_px,
            ..self.detector.clone()
        }
    }

    pub fn policy(&self) -> ResolutionPolicy {
        ResolutionPolicy {
            auto_coverage: self.auto_coverage,
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Y4M files are read in-process; anything else goes through the external decoder.
    pub fn provider_for(&self, path: &Path) -> Box<dyn FrameProvider> {
        let is_y4m = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("y4m"));
        if is_y4m {
            Box::new(Y4mProvider)
        } else {
            Box::new(self.decoder.clone())
        }
    }

    pub fn fetcher(&self) -> Box<dyn MediaFetcher> {
        match &self.fetcher {
            Some(f) => Box::new(CommandFetcher::new(f.program.clone(), f.args.clone())),
            None => Box::new(NoFetcher),
        }
    }
}

struct NoFetcher;

impl MediaFetcher for NoFetcher {
    fn fetch(&self, _: &VideoManifestEntry, _: &Path) -> std::result::Result<(), FetchFailure> {
        Err(FetchFailure::Retriable("no fetcher configured".into()))
    }
}
