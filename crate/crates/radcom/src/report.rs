//! Artifact writers: CSV matrices, PGM heatmaps, context reports, and the
//! run manifest. All output is byte-deterministic: floats use a pinned
//! 9-significant-digit scientific format and rows follow fixed orders.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fusion::AmbiguityMap;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("empty map")]
    EmptyMap,
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Pinned float formatting: 9 significant digits, scientific.
pub fn format_float(v: f64) -> String {
    format!("{v:.8e}")
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    let mut f = std::fs::File::create(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(bytes).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the map as a CSV matrix: header row of x coordinates, then one
/// row per y (ascending) with the y coordinate in the first column.
pub fn write_map_csv(map: &AmbiguityMap, path: &Path) -> Result<(), ReportError> {
    let (nx, ny) = (map.grid.nx(), map.grid.ny());
    if nx == 0 || ny == 0 {
        return Err(ReportError::EmptyMap);
    }
    let mut out = String::new();
    out.push_str("y\\x");
    for ix in 0..nx {
        out.push(',');
        out.push_str(&format_float(map.grid.x_of(ix)));
    }
    out.push('\n');
    for iy in 0..ny {
        out.push_str(&format_float(map.grid.y_of(iy)));
        for ix in 0..nx {
            out.push(',');
            out.push_str(&format_float(map.value(ix, iy)));
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

/// Writes an 8-bit binary PGM (P5) heatmap, values linearly mapped from
/// [0, peak] to [0, 255]; rows run from y_max down to y_min so the image
/// is plot-oriented. A `<path>.axes.txt` sidecar records the grid axes.
pub fn write_heatmap(map: &AmbiguityMap, path: &Path) -> Result<(), ReportError> {
    let (nx, ny) = (map.grid.nx(), map.grid.ny());
    if nx == 0 || ny == 0 {
        return Err(ReportError::EmptyMap);
    }
    let peak = map.values.iter().copied().fold(0.0f64, f64::max);
    let mut bytes = Vec::with_capacity(nx * ny + 32);
    bytes.extend_from_slice(format!("P5\n{nx} {ny}\n255\n").as_bytes());
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = if peak > 0.0 {
                (map.value(ix, iy) / peak * 255.0).round() as u8
            } else {
                0
            };
            bytes.push(v);
        }
    }
    write_bytes(path, &bytes)?;

    let mut sidecar = String::new();
    let _ = writeln!(sidecar, "x_min {}", format_float(map.grid.x_min));
    let _ = writeln!(sidecar, "x_max {}", format_float(map.grid.x_of(nx - 1)));
    let _ = writeln!(sidecar, "y_min {}", format_float(map.grid.y_min));
    let _ = writeln!(sidecar, "y_max {}", format_float(map.grid.y_of(ny - 1)));
    let _ = writeln!(sidecar, "cell_m {}", format_float(map.grid.cell_m));
    let _ = writeln!(sidecar, "nx {nx}");
    let _ = writeln!(sidecar, "ny {ny}");
    let _ = writeln!(sidecar, "peak {}", format_float(peak));
    let _ = writeln!(sidecar, "rows top_to_bottom_y_descending");
    write_bytes(&sidecar_path(path), sidecar.as_bytes())
}

pub fn sidecar_path(pgm_path: &Path) -> PathBuf {
    let mut s = pgm_path.as_os_str().to_owned();
    s.push(".axes.txt");
    PathBuf::from(s)
}

/// Writes a CSV from a header and rows of preformatted cells.
pub fn write_csv(
    header: &[&str],
    rows: &[Vec<String>],
    path: &Path,
) -> Result<(), ReportError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

/// Serializes any report as pretty JSON (stable field order).
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one experiment run: config echo, artifact digests, version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: crate::config::ExperimentConfig,
    pub artifacts: Vec<ArtifactEntry>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    /// Digests the listed files (paths relative to `base`).
    pub fn collect(
        config: crate::config::ExperimentConfig,
        base: &Path,
        files: &[String],
        wall_clock_s: f64,
    ) -> Result<Self, ReportError> {
        let mut artifacts = Vec::with_capacity(files.len());
        for rel in files {
            let full = base.join(rel);
            let bytes = std::fs::read(&full).map_err(|source| ReportError::Io {
                path: full.display().to_string(),
                source,
            })?;
            artifacts.push(ArtifactEntry {
                path: rel.clone(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        Ok(RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            artifacts,
            wall_clock_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{FusionMode, GridSpec};
    use crate::scene::Vec2;

    fn tiny_map(values: Vec<f64>) -> AmbiguityMap {
        // 2x2 grid.
        let grid = GridSpec {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
            cell_m: 1.0,
            max_cells: 100,
        };
        AmbiguityMap {
            grid,
            values,
            mode: FusionMode::Coherent,
        }
    }

    #[test]
    fn pgm_linear_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        // values[ix*ny+iy]: (0,0)=0 (0,1)=1 (1,0)=1 (1,1)=0
        let map = tiny_map(vec![0.0, 1.0, 1.0, 0.0]);
        write_heatmap(&map, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        // Top row is y_max: cells (0,1)=1 and (1,1)=0; bottom row (0,0)=0,(1,0)=1.
        assert_eq!(&bytes[header.len()..], &[255, 0, 0, 255]);
        assert!(sidecar_path(&path).exists());
    }

    #[test]
    fn pgm_constant_map_is_white() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        let map = tiny_map(vec![0.25; 4]);
        write_heatmap(&map, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[255; 4]);
    }

    #[test]
    fn csv_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let map = tiny_map(vec![0.0, 0.25, 0.5, 1.0]);
        write_map_csv(&map, &a).unwrap();
        write_map_csv(&map, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn float_format_is_pinned() {
        assert_eq!(format_float(0.0375), "3.75000000e-2");
        assert_eq!(format_float(-1.0), "-1.00000000e0");
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn grid_spec_unused_center_helper() {
        let g = GridSpec::centered(Vec2::new(1.0, 2.0), 0.5, 0.1);
        assert_eq!(g.nx(), 11);
        assert_eq!(g.ny(), 11);
    }
}
