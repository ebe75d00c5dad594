//! Atomic artifact writers: CSV with a config comment line, JSON with an
//! embedded config, and 16-bit binary PGM heatmaps.

use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use solenoid_core::transfer::DensityField;

use crate::CliError;

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub struct Writer {
    pub dir: PathBuf,
    config: Value,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: PathBuf, config: Value) -> Self {
        Self { dir, config, written: Vec::new() }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with `# config: {…}` as its first line.
    pub fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let mut text = format!("# config: {}\n{header}\n", self.config);
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.put(name, text.as_bytes())
    }

    /// `{"config": …, "result": …}`, pretty-printed.
    pub fn json(&mut self, name: &str, result: &impl Serialize) -> Result<(), CliError> {
        let doc = json!({ "config": self.config, "result": result });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    pub fn pgm(&mut self, name: &str, field: &DensityField) -> Result<(), CliError> {
        self.put(name, &pgm16(field))
    }
}

/// Binary PGM, maximal value 65535, top row at `y_max`, columns along `x`.
pub fn pgm16(field: &DensityField) -> Vec<u8> {
    let max = field.values.iter().cloned().fold(0.0, f64::max);
    let mut out = format!("P5\n{} {}\n65535\n", field.nx, field.ny).into_bytes();
    for iy in (0..field.ny).rev() {
        for ix in 0..field.nx {
            let v = field.get(ix, iy).max(0.0);
            let level = if max > 0.0 { (v / max * 65535.0).round() as u16 } else { 0 };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_size() {
        let f = DensityField::from_fn(3, 2, -1.0, 1.0, |x, _| x);
        let bytes = pgm16(&f);
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 3 * 2 * 2);
        assert_eq!(u16::from_be_bytes([bytes[header.len() + 4], bytes[header.len() + 5]]), 65535);
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
