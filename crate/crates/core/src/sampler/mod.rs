//! Frame index selection and frame decoding.

mod ffmpeg;
mod provider;
mod y4m;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::ffmpeg::FfmpegProvider;
pub use self::y4m::Y4mProvider;
pub use provider::{extract_frames, stream_frames, Extraction, FrameProvider, FrameSample, SkipRecord, VideoInfo};

/// Evenly spread indices `floor(i * total / n)`; every frame when `total <= n`.
pub fn uniform_indices(total_frames: u64, n: u64) -> Vec<u64> {
    if total_frames <= n {
        return (0..total_frames).collect();
    }
    let mut out: Vec<u64> = (0..n)
        .map(|i| (i as u128 * total_frames as u128 / n as u128) as u64)
        .collect();
    out.dedup();
    out
}

/// Every `k`-th frame starting at 0.
pub fn stride_indices(total_frames: u64, k: u64) -> Vec<u64> {
    let k = k.max(1);
    (0..total_frames).step_by(k as usize).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SamplingStrategy {
    UniformN { n: u64 },
    StrideK { k: u64 },
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        SamplingStrategy::UniformN { n: 300 }
    }
}

impl SamplingStrategy {
    pub const STRIDE_DEFAULT: SamplingStrategy = SamplingStrategy::StrideK { k: 50 };

    pub fn validate(self) -> Result<Self> {
        match self {
            SamplingStrategy::UniformN { n: 0 } | SamplingStrategy::StrideK { k: 0 } => {
                Err(Error::Config(format!("sampling parameter must be >= 1 in {self}")))
            }
            s => Ok(s),
        }
    }

    pub fn indices(self, total_frames: u64) -> Vec<u64> {
        match self {
            SamplingStrategy::UniformN { n } => uniform_indices(total_frames, n),
            SamplingStrategy::StrideK { k } => stride_indices(total_frames, k),
        }
    }
}

impl fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingStrategy::UniformN { n } => write!(f, "uniform{n}"),
            SamplingStrategy::StrideK { k } => write!(f, "stride{k}"),
        }
    }
}

impl FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |digits: &str| {
            digits
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("unknown sampling strategy `{s}`")))
        };
        let strategy = if let Some(n) = s.strip_prefix("uniform") {
            SamplingStrategy::UniformN { n: parse(n)? }
        } else if let Some(k) = s.strip_prefix("stride") {
            SamplingStrategy::StrideK { k: parse(k)? }
        } else {
            return Err(Error::Config(format!("unknown sampling strategy `{s}`")));
        };
        strategy.validate()
    }
}

impl TryFrom<String> for SamplingStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SamplingStrategy> for String {
    fn from(s: SamplingStrategy) -> String {
        s.to_string()
    }
}
