//! Artifact writing. Metric outputs never contain timings or absolute
//! output paths, so reruns are byte-identical.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;
use tensorhar::io::write_text;

pub struct Out {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Out {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Out { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        write_text(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// List what was written, one path per line, on stdout.
    pub fn finish(self) {
        for p in self.written {
            println!("wrote {}", p.display());
        }
    }
}

/// File-name-safe form of a label.
pub fn slug(name: &str) -> String {
    let s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect();
    s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_")
}

pub fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("Support Tensor Machine"), "support_tensor_machine");
        assert_eq!(slug("k-NN (k=5)"), "k_nn_k_5");
    }
}
