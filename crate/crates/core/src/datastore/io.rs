use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, JudgmentSet, Rating, RatingScale, RequestCase, Venue};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxonomyFormat {
    /// Flat `{"id", "label", "parent", "level"}` array.
    #[default]
    Flat,
    /// Nested `{"id", "name", "categories": [..]}` export.
    Nested,
}

/// Contents of `dataset.json`. File names are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetManifest {
    pub taxonomy: String,
    pub taxonomy_format: TaxonomyFormat,
    pub taxonomy_depth: u32,
    pub venues: String,
    pub ratings: String,
    pub requests: String,
    pub judgments: String,
    pub rating_scale: RatingScale,
    pub relevant_min: i64,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        DatasetManifest {
            taxonomy: "taxonomy.json".into(),
            taxonomy_format: TaxonomyFormat::Flat,
            taxonomy_depth: 2,
            venues: "venues.jsonl".into(),
            ratings: "ratings.csv".into(),
            requests: "requests.jsonl".into(),
            judgments: "qrels.txt".into(),
            rating_scale: RatingScale::default(),
            relevant_min: 1,
        }
    }
}

/// Resolved file set for [`load_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub taxonomy: PathBuf,
    pub venues: PathBuf,
    pub ratings: PathBuf,
    pub requests: PathBuf,
    pub judgments: PathBuf,
    pub manifest: DatasetManifest,
}

pub const MANIFEST_FILE: &str = "dataset.json";

impl DatasetPaths {
    /// Reads `dataset.json` (a file, or a directory containing one).
    pub fn from_manifest(path: &Path) -> Result<Self, DataError> {
        let file = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let text = read(&file)?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| DataError::Parse {
                file: file.display().to_string(),
                line: e.line(),
                msg: e.to_string(),
            })?;
        let base = file.parent().unwrap_or(Path::new("."));
        Ok(Self::in_dir(base, manifest))
    }

    pub fn in_dir(base: &Path, manifest: DatasetManifest) -> Self {
        DatasetPaths {
            taxonomy: base.join(&manifest.taxonomy),
            venues: base.join(&manifest.venues),
            ratings: base.join(&manifest.ratings),
            requests: base.join(&manifest.requests),
            judgments: base.join(&manifest.judgments),
            manifest,
        }
    }
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl ToString) -> DataError {
    DataError::Parse {
        file: path.display().to_string(),
        line,
        msg: msg.to_string(),
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DataError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| parse_err(path, i + 1, e))?);
    }
    Ok(out)
}

fn read_ratings(path: &Path) -> Result<Vec<Rating>, DataError> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.deserialize() {
        let rating: Rating = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(path, line, e)
        })?;
        out.push(rating);
    }
    Ok(out)
}

fn read_qrels(path: &Path) -> Result<JudgmentSet, DataError> {
    let text = read(path)?;
    let mut judgments = JudgmentSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [request, _, venue, grade] = fields[..] else {
            return Err(parse_err(
                path,
                i + 1,
                "expected `request_id 0 venue grade`",
            ));
        };
        let grade: i64 = grade
            .parse()
            .map_err(|e| parse_err(path, i + 1, format!("grade {grade:?}: {e}")))?;
        judgments.insert(request, venue, grade);
    }
    Ok(judgments)
}

/// Loads and validates every file of a dataset.
pub fn load_dataset(paths: &DatasetPaths) -> Result<Dataset, DataError> {
    let text = read(&paths.taxonomy)?;
    let taxonomy = match paths.manifest.taxonomy_format {
        TaxonomyFormat::Flat => Taxonomy::parse(&text)?,
        TaxonomyFormat::Nested => Taxonomy::parse_nested(&text)?,
    };
    let taxonomy = taxonomy.truncated(paths.manifest.taxonomy_depth)?;
    let venues: Vec<Venue> = read_jsonl(&paths.venues)?;
    let ratings = read_ratings(&paths.ratings)?;
    let requests: Vec<RequestCase> = read_jsonl(&paths.requests)?;
    let judgments = read_qrels(&paths.judgments)?;
    Dataset::new(
        taxonomy,
        venues,
        ratings,
        requests,
        judgments,
        paths.manifest.rating_scale,
        paths.manifest.relevant_min,
    )
}

/// Writes the canonical form of `dataset` into `dir`; returns the files written
/// (manifest first).
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<Vec<PathBuf>, DataError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DataError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let manifest = DatasetManifest {
        taxonomy_depth: dataset.taxonomy().depth(),
        rating_scale: dataset.scale(),
        relevant_min: dataset.relevant_min(),
        ..DatasetManifest::default()
    };
    let paths = DatasetPaths::in_dir(dir, manifest.clone());
    let manifest_path = dir.join(MANIFEST_FILE);

    let mut venues = String::new();
    for v in dataset.venues() {
        venues.push_str(&serde_json::to_string(v).expect("venue serializes"));
        venues.push('\n');
    }

    let mut ratings = csv::Writer::from_writer(Vec::new());
    for r in dataset.ratings() {
        ratings.serialize(r).expect("rating serializes");
    }
    // An empty ratings file still needs its header.
    if dataset.ratings().is_empty() {
        ratings
            .write_record(["user", "venue", "value"])
            .expect("header writes");
    }
    let ratings = ratings.into_inner().expect("in-memory csv flushes");

    let mut requests = String::new();
    for r in dataset.requests() {
        requests.push_str(&serde_json::to_string(r).expect("request serializes"));
        requests.push('\n');
    }

    let mut qrels = String::new();
    for (request, venue, grade) in dataset.judgments().iter() {
        qrels.push_str(&format!("{request} 0 {venue} {grade}\n"));
    }

    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let taxonomy_json = dataset.taxonomy().to_json();
    let files: [(&Path, &[u8]); 6] = [
        (&manifest_path, manifest_json.as_bytes()),
        (&paths.taxonomy, taxonomy_json.as_bytes()),
        (&paths.venues, venues.as_bytes()),
        (&paths.ratings, &ratings),
        (&paths.requests, requests.as_bytes()),
        (&paths.judgments, qrels.as_bytes()),
    ];
    let mut written = Vec::new();
    for (path, bytes) in files {
        fs::write(path, bytes).map_err(io_err(path))?;
        written.push(path.to_path_buf());
    }
    Ok(written)
}
