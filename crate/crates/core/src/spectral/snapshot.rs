//! Field snapshots: `<name>.bin` holds raw little-endian `f64` samples,
//! component-major with x fastest; `<name>.meta` holds `key = value` lines.

use std::fs;
use std::path::{Path, PathBuf};

use super::field::{Field, Rank};
use super::grid::BoxGrid;
use crate::error::{Error, Result};

pub const SNAPSHOT_FORMAT: &str = "nsbox-field-v1";

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub name: String,
    pub alpha: f64,
    pub n: usize,
    pub rank: Rank,
    pub time: f64,
}

fn paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.bin")), dir.join(format!("{name}.meta")))
}

pub fn write_snapshot(dir: &Path, name: &str, field: &Field, time: f64) -> Result<PathBuf> {
    if name.is_empty() || name.contains(['/', '\\', '\n', '=']) {
        return Err(Error::Usage(format!("invalid snapshot name {name:?}")));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (bin, meta) = paths(dir, name);
    let grid = field.grid();
    let mut bytes = Vec::with_capacity(8 * grid.len() * field.components().len());
    for comp in field.components() {
        for v in comp {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let text = format!(
        "format = {SNAPSHOT_FORMAT}\nname = {name}\nalpha = {}\nn = {}\nrank = {}\ntime = {}\ncomponents = {}\nlayout = f64-le component-major x-fastest\n",
        grid.alpha(),
        grid.n(),
        field.rank().name(),
        time,
        field.components().len(),
    );
    fs::write(&meta, text).map_err(|e| Error::io(&meta, e))?;
    Ok(bin)
}

fn parse<T: std::str::FromStr>(key: &str, value: Option<&str>) -> Result<T> {
    value
        .ok_or_else(|| Error::Data(format!("snapshot metadata lacks {key}")))?
        .parse()
        .map_err(|_| Error::Data(format!("snapshot metadata has a malformed {key}")))
}

pub fn read_meta(path: &Path) -> Result<SnapshotMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = std::collections::HashMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &str| map.get(k).map(|s| s.as_str());
    if get("format") != Some(SNAPSHOT_FORMAT) {
        return Err(Error::Data(format!("{} is not a field snapshot", path.display())));
    }
    let rank = match get("rank") {
        Some("scalar") => Rank::Scalar,
        Some("vector") => Rank::Vector,
        _ => return Err(Error::Data("snapshot metadata has a malformed rank".into())),
    };
    Ok(SnapshotMeta {
        name: get("name").unwrap_or_default().to_string(),
        alpha: parse("alpha", get("alpha"))?,
        n: parse("n", get("n"))?,
        rank,
        time: parse("time", get("time"))?,
    })
}

/// Read a snapshot given either its `.bin` or `.meta` path (or the common stem).
pub fn read_snapshot(path: &Path) -> Result<(Field, SnapshotMeta)> {
    let meta_path = path.with_extension("meta");
    let bin_path = path.with_extension("bin");
    let meta = read_meta(&meta_path)?;
    let grid = BoxGrid::new(meta.alpha, meta.n)?;
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let count = meta.rank.components();
    if bytes.len() != 8 * count * grid.len() {
        return Err(Error::Data(format!(
            "{} holds {} bytes, expected {}",
            bin_path.display(),
            bytes.len(),
            8 * count * grid.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    let comps = values.chunks_exact(grid.len()).map(|c| c.to_vec()).collect();
    Ok((Field::from_components(grid, comps)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = BoxGrid::new(1.25, 8).unwrap();
        let f = Field::vector_from_fn(g, |x| [x[0], x[1] * x[2], 0.1 / 3.0]);
        write_snapshot(dir.path(), "u_0001", &f, 0.125).unwrap();
        let (back, meta) = read_snapshot(&dir.path().join("u_0001.bin")).unwrap();
        assert_eq!(back, f);
        assert_eq!(meta.time, 0.125);
        assert_eq!(meta.rank, Rank::Vector);
        assert_eq!(meta.name, "u_0001");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = BoxGrid::new(1.0, 8).unwrap();
        let f = Field::zeros(g, Rank::Scalar);
        let bin = write_snapshot(dir.path(), "p", &f, 0.0).unwrap();
        fs::write(&bin, [0u8; 16]).unwrap();
        assert!(matches!(read_snapshot(&bin), Err(Error::Data(_))));
    }
}
