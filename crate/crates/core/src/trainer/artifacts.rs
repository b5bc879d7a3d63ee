//! Run directory: `logits.json`, `history.csv`, `extracted.edges`.

use super::{Extraction, TrainHistory};
use crate::admg::serialize_edge_list;
use crate::gan::{tensor_rows, GeneratorParams};
use crate::gradeng::Tensor;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Serialize, Deserialize)]
struct LogitsFile {
    #[serde(rename = "A_B", with = "tensor_rows")]
    a_b: Tensor,
    #[serde(rename = "A_Sigma", with = "tensor_rows")]
    a_sigma: Tensor,
    d: usize,
}

pub fn write_logits(params: &GeneratorParams) -> String {
    let file = LogitsFile {
        a_b: params.a_b.clone(),
        a_sigma: params.a_sigma.clone(),
        d: params.d(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("finite logits serialize");
    out.push('\n');
    out
}

pub fn read_logits(text: &str) -> Result<GeneratorParams, String> {
    let file: LogitsFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    for (name, t) in [("A_B", &file.a_b), ("A_Sigma", &file.a_sigma)] {
        if t.shape() != (file.d, file.d) {
            return Err(format!("{name} must be {0}x{0}, got {1:?}", file.d, t.shape()));
        }
    }
    Ok(GeneratorParams {
        a_b: file.a_b,
        a_sigma: file.a_sigma,
    })
}

pub fn write_history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,L_G,L_D,penalty,tau,jitter_events\n");
    for r in &history.records {
        writeln!(out, "{},{},{},{},{},{}", r.epoch, r.l_g, r.l_d, r.penalty, r.tau, r.jitter_events).unwrap();
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<(), ArtifactError> {
    std::fs::write(&path, contents).map_err(|source| ArtifactError::Io { path, source })
}

/// Creates `dir` if needed and writes the three run artifacts.
pub fn write_run_dir(
    dir: &Path,
    params: &GeneratorParams,
    history: &TrainHistory,
    extraction: &Extraction,
) -> Result<(), ArtifactError> {
    std::fs::create_dir_all(dir).map_err(|source| ArtifactError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(dir.join("logits.json"), &write_logits(params))?;
    write(dir.join("history.csv"), &write_history_csv(history))?;
    write(dir.join("extracted.edges"), &serialize_edge_list(&extraction.graph))
}
