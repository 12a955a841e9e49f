//! Text formats for tensors and tensor environments.
//!
//! A tensor file is: the rank on line 1, the dims on line 2 (empty for a
//! scalar), then the elements in row-major order separated by whitespace.
//! A tensor environment file maps names to tensor files, one `name = path`
//! per line; relative paths resolve against the environment file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::eval::TensorEnv;
use super::tensor::Tensor;
use crate::ir::product;

#[derive(Debug, Error)]
pub enum TensorIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

fn format_err(line: usize, msg: impl Into<String>) -> TensorIoError {
    TensorIoError::Format { line, msg: msg.into() }
}

pub fn parse_tensor(text: &str) -> Result<Tensor, TensorIoError> {
    let mut lines = text.lines();
    let rank: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| format_err(1, "expected the rank"))?;
    let dims_line = lines.next().ok_or_else(|| format_err(2, "expected the dims line"))?;
    let dims = dims_line
        .split_whitespace()
        .map(|d| d.parse::<usize>().ok().filter(|&d| d > 0))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| format_err(2, "dims must be positive integers"))?;
    if dims.len() != rank {
        return Err(format_err(2, format!("rank {rank} but {} dims", dims.len())));
    }
    let mut data = Vec::with_capacity(product(&dims));
    for (i, line) in lines.enumerate() {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| format_err(i + 3, format!("invalid number `{tok}`")))?;
            data.push(v);
        }
    }
    let expected = product(&dims);
    if data.len() != expected {
        return Err(format_err(3, format!("expected {expected} elements, found {}", data.len())));
    }
    Ok(Tensor::new(dims, data).expect("length checked"))
}

pub fn write_tensor(t: &Tensor) -> String {
    t.to_string()
}

pub fn read_tensor_file(path: &Path) -> Result<Tensor, TensorIoError> {
    let text = fs::read_to_string(path).map_err(|source| TensorIoError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_tensor(&text)
}

/// Reads a `name = path` environment file and every tensor it names.
pub fn read_tensor_env(path: &Path) -> Result<TensorEnv, TensorIoError> {
    let text = fs::read_to_string(path).map_err(|source| TensorIoError::Io {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut env = TensorEnv::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, file) = line
            .split_once('=')
            .ok_or_else(|| format_err(i + 1, "expected `name = path`"))?;
        let file = base.join(file.trim());
        env.insert(name.trim().to_string(), read_tensor_file(&file)?);
    }
    Ok(env)
}
