//! Line-delimited JSON persistence: one record per line, UTF-8.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Annotation, Clip, Corpus, FeatureRecord};
use crate::error::{Error, Result};
use crate::textsearch::TranscriptDoc;

pub const CLIPS_FILE: &str = "clips.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const FEATURES_FILE: &str = "features.jsonl";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|source| Error::Parse {
        path: path.to_owned(),
        line: source.line(),
        source,
    })
}

impl Corpus {
    /// Loads `clips.jsonl` plus whichever of the annotation, feature and
    /// transcript files exist next to it.
    pub fn load_dir(dir: &Path) -> Result<Corpus> {
        let clips: Vec<Clip> = read_jsonl(&dir.join(CLIPS_FILE))?;
        let mut corpus = Corpus::new(clips)?;
        let ann = dir.join(ANNOTATIONS_FILE);
        if ann.exists() {
            corpus.add_annotations(read_jsonl::<Annotation>(&ann)?)?;
        }
        let tr = dir.join(TRANSCRIPTS_FILE);
        if tr.exists() {
            corpus.add_transcripts(read_jsonl::<TranscriptDoc>(&tr)?)?;
        }
        let feat = dir.join(FEATURES_FILE);
        if feat.exists() {
            corpus.set_features(read_jsonl::<FeatureRecord>(&feat)?)?;
        }
        Ok(corpus)
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(CLIPS_FILE), self.clips())?;
        write_jsonl(&dir.join(ANNOTATIONS_FILE), self.annotations())?;
        let docs: Vec<TranscriptDoc> = self
            .transcripts()
            .iter()
            .map(|(k, v)| TranscriptDoc {
                clip_id: k.clone(),
                text: v.clone(),
            })
            .collect();
        write_jsonl(&dir.join(TRANSCRIPTS_FILE), &docs)?;
        let features: Vec<FeatureRecord> = self
            .features()
            .into_iter()
            .map(|(clip_id, vector)| FeatureRecord { clip_id, vector })
            .collect();
        write_jsonl(&dir.join(FEATURES_FILE), &features)
    }
}
