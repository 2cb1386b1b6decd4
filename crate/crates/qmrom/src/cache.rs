//! On-disk store of full-order reference trajectories keyed by configuration hash.
//!
//! Each entry is a JSON header `<key>.json` plus the displacement snapshots as
//! little-endian `f64` in `<key>.bin`, row after row.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qmrom_core::integrate::{Status, Trajectory};
use qmrom_core::Vector;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    key: String,
    dofs: usize,
    times: Vec<f64>,
    iterations: Vec<usize>,
    status: Status,
    diagnostics: Vec<(f64, String)>,
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (
            self.dir.join(format!("{key}.json")),
            self.dir.join(format!("{key}.bin")),
        )
    }

    /// The stored trajectory, or `None` when absent.
    pub fn load(&self, key: &str) -> Result<Option<Trajectory>> {
        let (head, data) = self.paths(key);
        if !head.exists() || !data.exists() {
            return Ok(None);
        }
        let header: Header = serde_json::from_reader(BufReader::new(fs::File::open(&head)?))
            .with_context(|| format!("reading {}", head.display()))?;
        if header.key != key {
            bail!(
                "cache entry {} belongs to key {}",
                head.display(),
                header.key
            );
        }
        let mut bytes = Vec::new();
        BufReader::new(fs::File::open(&data)?).read_to_end(&mut bytes)?;
        let expected = header.times.len() * header.dofs * 8;
        if bytes.len() != expected {
            bail!(
                "cache entry {} holds {} bytes, expected {expected}",
                data.display(),
                bytes.len()
            );
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let displacements: Vec<Vector> = if header.dofs == 0 {
            vec![Vector::zeros(0); header.times.len()]
        } else {
            values
                .chunks_exact(header.dofs)
                .map(Vector::from_column_slice)
                .collect()
        };
        Ok(Some(Trajectory {
            times: header.times,
            states: displacements.clone(),
            displacements,
            iterations: header.iterations,
            status: header.status,
            diagnostics: header.diagnostics,
        }))
    }

    /// Writes both files through temporaries so concurrent readers never see partial entries.
    pub fn store(&self, key: &str, trajectory: &Trajectory) -> Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let (head, data) = self.paths(key);
        let dofs = trajectory.displacements.first().map_or(0, |u| u.len());
        let header = Header {
            key: key.to_string(),
            dofs,
            times: trajectory.times.clone(),
            iterations: trajectory.iterations.clone(),
            status: trajectory.status.clone(),
            diagnostics: trajectory.diagnostics.clone(),
        };
        let tmp_data = data.with_extension(format!("bin.{}", std::process::id()));
        {
            let mut w = BufWriter::new(fs::File::create(&tmp_data)?);
            for u in &trajectory.displacements {
                for v in u.iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            w.flush()?;
        }
        let tmp_head = head.with_extension(format!("json.{}", std::process::id()));
        fs::write(&tmp_head, serde_json::to_vec(&header)?)?;
        fs::rename(&tmp_data, &data)?;
        fs::rename(&tmp_head, &head)?;
        Ok(())
    }
}
