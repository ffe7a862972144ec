//! Deterministic run-directory writer: CSV emission with a pinned numeric
//! format and a manifest digesting every file written.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Shortest representation that round-trips, capped at 12 significant digits
/// so emitted tables stay byte-stable across platforms.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        // Collapses -0 so sign noise from rounding cannot leak into files.
        return "0".to_string();
    }
    let shortest = format!("{x}");
    if significant_digits(&shortest) <= 12 {
        shortest
    } else {
        format!("{:.11e}", x)
    }
}

fn significant_digits(s: &str) -> usize {
    let mantissa = s.split(['e', 'E']).next().unwrap_or(s);
    mantissa
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count()
}

/// Collects the CSV files of one run directory and finishes with a
/// `manifest.json` that lists each file with its SHA-256 digest.
pub struct RunWriter {
    root: PathBuf,
    files: Vec<(String, String)>,
}

impl RunWriter {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root.join("frames"))?;
        fs::create_dir_all(root.join("tables"))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    /// Write one CSV under the run root; `rel` uses forward slashes and must
    /// point inside `frames/` or `tables/`.
    pub fn write_csv(&mut self, rel: &str, header: &str, rows: &[String]) -> io::Result<()> {
        let mut text = String::with_capacity(header.len() + 1 + rows.len() * 24);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        fs::write(self.root.join(rel), text.as_bytes())?;
        self.files.push((rel.to_string(), hex::encode(Sha256::digest(text.as_bytes()))));
        Ok(())
    }

    /// Attach the digest list to `body` and write `manifest.json`.
    pub fn finish(mut self, mut body: serde_json::Value) -> io::Result<()> {
        self.files.sort();
        let files: Vec<serde_json::Value> = self
            .files
            .iter()
            .map(|(path, sha256)| serde_json::json!({ "path": path, "sha256": sha256 }))
            .collect();
        body.as_object_mut()
            .expect("manifest body is a JSON object")
            .insert("files".to_string(), files.into());
        fs::write(self.root.join("manifest.json"), format!("{body:#}\n"))
    }
}
