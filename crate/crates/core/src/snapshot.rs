//! Field persistence: a JSON header next to a row-major little-endian f64
//! payload, plus CSV export for plotting. Round trips are bit-exact.

use crate::error::{Error, Result};
use crate::grid::{Field, StripGrid};
use crate::params::ProblemParams;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub ny: usize,
    pub x_extent: f64,
    pub params: ProblemParams,
    /// File name of the binary payload, relative to the header.
    pub payload: String,
}

/// Write `<path>.json` (header) and `<path>.bin` (payload). Returns the
/// header path.
pub fn write_snapshot(path: &Path, field: &Field, params: &ProblemParams) -> Result<PathBuf> {
    let header_path = path.with_extension("json");
    let payload_path = path.with_extension("bin");
    let payload_name = payload_path
        .file_name()
        .ok_or_else(|| Error::Config(format!("bad snapshot path {path:?}")))?
        .to_string_lossy()
        .into_owned();
    let header = SnapshotHeader {
        nx: field.grid.nx,
        ny: field.grid.ny,
        x_extent: field.grid.x_extent,
        params: *params,
        payload: payload_name,
    };
    let mut hf = fs::File::create(&header_path)?;
    serde_json::to_writer_pretty(&mut hf, &header)?;
    hf.write_all(b"\n")?;

    let mut bytes = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&payload_path, bytes)?;
    Ok(header_path)
}

/// Read a snapshot from its header path (or the stem used when writing).
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(Field, SnapshotHeader)> {
    let mut header_path = path.as_ref().to_path_buf();
    if header_path.extension().map(|e| e != "json").unwrap_or(true) {
        header_path = header_path.with_extension("json");
    }
    let header: SnapshotHeader = serde_json::from_str(&fs::read_to_string(&header_path)?)?;
    let payload_path = header_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&header.payload);
    let bytes = fs::read(&payload_path)?;
    let grid = StripGrid::new(header.x_extent, header.nx, header.ny)?;
    if bytes.len() != grid.len() * 8 {
        return Err(Error::Config(format!(
            "payload {payload_path:?} holds {} bytes, expected {}",
            bytes.len(),
            grid.len() * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field::from_values(grid, values)?, header))
}

/// Plot-ready CSV export with one `x,y,value` row per node.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "x,y,value")?;
    let g = field.grid;
    for i in 0..g.nx {
        for j in 0..g.ny {
            writeln!(f, "{},{},{}", g.x(i), g.y(j), field.at(i, j))?;
        }
    }
    Ok(())
}
