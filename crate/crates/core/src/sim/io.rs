//! Scenario dump: JSON lines, a header record followed by one frame per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use super::config::ScenarioConfig;
use super::scene::{DetectionFrame, Scenario, SceneObject};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum ScenarioIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("scenario dump is missing the header line")]
    MissingHeader,
    #[error("line {0}: expected a frame record")]
    NotAFrame(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
enum ScenarioLine<T: Real> {
    Header { config: ScenarioConfig, objects: Vec<SceneObject<T>> },
    Frame { frame: DetectionFrame<T> },
}

impl<T: Real + Serialize + DeserializeOwned> Scenario<T> {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = ScenarioLine::Header::<T> {
            config: self.config.clone(),
            objects: self.objects.clone(),
        };
        out.push_str(&serde_json::to_string(&header).expect("serialize header"));
        out.push('\n');
        for frame in &self.frames {
            let line = ScenarioLine::Frame { frame: frame.clone() };
            out.push_str(&serde_json::to_string(&line).expect("serialize frame"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ScenarioIoError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines.next().ok_or(ScenarioIoError::MissingHeader)?;
        let header: ScenarioLine<T> = serde_json::from_str(header_line)
            .map_err(|source| ScenarioIoError::Parse { line: 1, source })?;
        let ScenarioLine::Header { config, objects } = header else {
            return Err(ScenarioIoError::MissingHeader);
        };
        let mut frames = Vec::new();
        for (idx, line) in lines {
            let parsed: ScenarioLine<T> = serde_json::from_str(line)
                .map_err(|source| ScenarioIoError::Parse { line: idx + 1, source })?;
            match parsed {
                ScenarioLine::Frame { frame } => frames.push(frame),
                ScenarioLine::Header { .. } => return Err(ScenarioIoError::NotAFrame(idx + 1)),
            }
        }
        Ok(Scenario { config, objects, frames })
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioIoError> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioIoError> {
        let text = fs::read_to_string(path)?;
        Self::from_jsonl(&text)
    }
}
