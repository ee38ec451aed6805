//! Bundled network artifacts and their pinned content hashes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::Model;

pub const PNET_SHA256: &str = "5a4d50d25635215aaeae457cdc382aeae1790fe137de72273e7a58d77f0618f3";
pub const RNET_SHA256: &str = "f3fe36aa0b8aa80ac78d0062e0628e476f1b81c683b571aa41d23ead3381a540";
pub const ONET_SHA256: &str = "a65de8802be159bdee56b1aee0756a870be2604c1dabf84607c8e3282daf38fb";
pub const EMOTION_SHA256: &str = "3fa8c83329e3e7d137f44b89f0d0aafbad2f7a90d71a8431f5bd0ac3990441c8";

/// Directory holding the models shipped with the source tree.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join("models")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub path: PathBuf,
    pub sha256: String,
}

impl ModelFile {
    pub fn load(&self) -> Result<Model> {
        Model::load(&self.path, Some(&self.sha256))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPaths {
    pub pnet: ModelFile,
    pub rnet: ModelFile,
    pub onet: ModelFile,
    pub emotion: ModelFile,
}

impl ModelPaths {
    pub fn bundled() -> Self {
        Self::in_dir(&bundled_dir())
    }

    pub fn in_dir(dir: &Path) -> Self {
        let file = |name: &str, sha: &str| ModelFile {
            path: dir.join(name),
            sha256: sha.to_string(),
        };
        ModelPaths {
            pnet: file("pnet.onnx", PNET_SHA256),
            rnet: file("rnet.onnx", RNET_SHA256),
            onet: file("onet.onnx", ONET_SHA256),
            emotion: file("emotion.onnx", EMOTION_SHA256),
        }
    }
}
