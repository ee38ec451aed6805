//! Video manifest, party labels and the labeled corpus they join into.

mod registry;

pub use registry::{
    fetch_media, CommandFetcher, FetchFailure, FetchStatus, MediaFetcher, Registry, RegistryRecord,
};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_COLUMNS: [&str; 5] = ["video_id", "url", "leader", "party", "country_iso"];
pub const LABEL_COLUMNS: [&str; 4] = ["party", "country_iso", "populism_category", "populism_scale"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoManifestEntry {
    pub video_id: String,
    pub source_url: String,
    pub leader_name: String,
    pub party_name: String,
    pub country_iso: String,
    pub local_path: Option<PathBuf>,
}

/// Four-level ordinal party populism category: 1 strongly pluralist ..
/// 4 strongly populist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PopulismCategory(u8);

impl PopulismCategory {
    pub const ALL: [PopulismCategory; 4] = [
        PopulismCategory(1),
        PopulismCategory(2),
        PopulismCategory(3),
        PopulismCategory(4),
    ];

    pub fn new(level: u8) -> Result<Self> {
        if (1..=4).contains(&level) {
            Ok(PopulismCategory(level))
        } else {
            Err(Error::InvalidParameter(format!(
                "populism category must be 1..4, got {level}"
            )))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn binary_group(self) -> BinaryGroup {
        if self.0 <= 2 {
            BinaryGroup::Pluralist
        } else {
            BinaryGroup::Populist
        }
    }

    pub fn label(self) -> &'static str {
        match self.0 {
            1 => "strongly pluralist",
            2 => "moderately pluralist",
            3 => "moderately populist",
            _ => "strongly populist",
        }
    }
}

impl TryFrom<u8> for PopulismCategory {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        PopulismCategory::new(v)
    }
}

impl From<PopulismCategory> for u8 {
    fn from(c: PopulismCategory) -> u8 {
        c.0
    }
}

impl fmt::Display for PopulismCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryGroup {
    Pluralist,
    Populist,
}

impl BinaryGroup {
    pub const ALL: [BinaryGroup; 2] = [BinaryGroup::Pluralist, BinaryGroup::Populist];

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryGroup::Pluralist => "pluralist",
            BinaryGroup::Populist => "populist",
        }
    }
}

impl fmt::Display for BinaryGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyLabel {
    pub party_name: String,
    pub country_iso: String,
    pub populism_category: PopulismCategory,
    pub populism_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledVideo {
    pub entry: VideoManifestEntry,
    pub populism_category: PopulismCategory,
    pub binary_group: BinaryGroup,
}

fn normalize_iso(raw: &str, file: &str, row: usize) -> Result<String> {
    let iso = raw.trim().to_ascii_uppercase();
    if iso.len() != 2 || !iso.bytes().all(|b| b.is_ascii_uppercase()) {
        return Err(Error::Row {
            file: file.to_string(),
            row,
            reason: format!("country_iso `{raw}` is not a two-letter ISO code"),
        });
    }
    Ok(iso)
}

fn column_index(headers: &csv::StringRecord, file: &str, column: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Schema {
            file: file.to_string(),
            column: column.to_string(),
        })
}

fn field<'a>(
    record: &'a csv::StringRecord,
    idx: usize,
    file: &str,
    row: usize,
    column: &str,
) -> Result<&'a str> {
    match record.get(idx).map(str::trim) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::Row {
            file: file.to_string(),
            row,
            reason: format!("missing value for `{column}`"),
        }),
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<VideoManifestEntry>> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx: Vec<usize> = MANIFEST_COLUMNS
        .iter()
        .map(|c| column_index(&headers, &file, c))
        .collect::<Result<_>>()?;
    let local_idx = headers.iter().position(|h| h.trim() == "local_path");

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let get = |k: usize| field(&record, idx[k], &file, row, MANIFEST_COLUMNS[k]);
        let video_id = get(0)?.to_string();
        if !seen.insert(video_id.clone()) {
            return Err(Error::DuplicateVideo(video_id));
        }
        let local_path = local_idx
            .and_then(|k| record.get(k))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from);
        entries.push(VideoManifestEntry {
            video_id,
            source_url: get(1)?.to_string(),
            leader_name: get(2)?.to_string(),
            party_name: get(3)?.to_string(),
            country_iso: normalize_iso(get(4)?, &file, row)?,
            local_path,
        });
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[VideoManifestEntry]) -> Result<()> {
    let with_paths = entries.iter().any(|e| e.local_path.is_some());
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(entries.len() + 1);
    let mut header: Vec<String> = MANIFEST_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_paths {
        header.push("local_path".into());
    }
    rows.push(header);
    for e in entries {
        let mut row = vec![
            e.video_id.clone(),
            e.source_url.clone(),
            e.leader_name.clone(),
            e.party_name.clone(),
            e.country_iso.clone(),
        ];
        if with_paths {
            row.push(
                e.local_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            );
        }
        rows.push(row);
    }
    crate::io::write_csv_atomic(path, &rows)
}

pub fn load_labels(path: &Path) -> Result<Vec<PartyLabel>> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx: Vec<usize> = LABEL_COLUMNS[..3]
        .iter()
        .map(|c| column_index(&headers, &file, c))
        .collect::<Result<_>>()?;
    let scale_idx = headers.iter().position(|h| h.trim() == LABEL_COLUMNS[3]);

    let mut seen = HashMap::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let party = field(&record, idx[0], &file, row, "party")?.to_string();
        let iso = normalize_iso(field(&record, idx[1], &file, row, "country_iso")?, &file, row)?;
        let raw_cat = field(&record, idx[2], &file, row, "populism_category")?;
        let category = raw_cat
            .parse::<u8>()
            .ok()
            .and_then(|c| PopulismCategory::new(c).ok())
            .ok_or_else(|| Error::Row {
                file: file.clone(),
                row,
                reason: format!("populism_category `{raw_cat}` is not one of 1..4"),
            })?;
        let scale = match scale_idx.and_then(|k| record.get(k)).map(str::trim) {
            None | Some("") | Some("NA") => None,
            Some(s) => Some(s.parse::<f64>().map_err(|_| Error::Row {
                file: file.clone(),
                row,
                reason: format!("populism_scale `{s}` is not a number"),
            })?),
        };
        if let Some(prev) = seen.insert((party.clone(), iso.clone()), category) {
            if prev != category {
                return Err(Error::Row {
                    file: file.clone(),
                    row,
                    reason: format!("conflicting categories for party `{party}` ({iso})"),
                });
            }
            continue;
        }
        labels.push(PartyLabel {
            party_name: party,
            country_iso: iso,
            populism_category: category,
            populism_scale: scale,
        });
    }
    Ok(labels)
}

/// Joins manifest rows to party labels on exact `(party, country_iso)`
/// after whitespace trimming.
pub fn join_labels(manifest: &[VideoManifestEntry], labels: &[PartyLabel]) -> Result<Vec<LabeledVideo>> {
    let index: HashMap<(&str, &str), PopulismCategory> = labels
        .iter()
        .map(|l| ((l.party_name.trim(), l.country_iso.as_str()), l.populism_category))
        .collect();
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(manifest.len());
    for entry in manifest {
        match index.get(&(entry.party_name.trim(), entry.country_iso.as_str())) {
            Some(&category) => out.push(LabeledVideo {
                entry: entry.clone(),
                populism_category: category,
                binary_group: category.binary_group(),
            }),
            None => missing.push(format!(
                "{} ({}, {})",
                entry.video_id, entry.party_name, entry.country_iso
            )),
        }
    }
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(Error::Join(missing))
    }
}
