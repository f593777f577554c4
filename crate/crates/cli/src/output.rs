use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;

/// One output directory per run, with a manifest listing what was written.
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Opens `name` for writing and records it in the manifest.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(name);
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let mut f = self.file(name)?;
        f.write_all(contents.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn finish(mut self, command: &str, threads: usize, extra: serde_json::Value) -> Result<()> {
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "threads": threads,
            "float_mode": float_mode(),
            "elapsed_seconds": self.started.elapsed().as_secs_f64(),
            "files": self.files,
            "result": extra,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write("manifest.json", &text)
    }
}

/// Floating-point environment the binary was built for.
fn float_mode() -> serde_json::Value {
    json!({
        "format": "IEEE 754 binary64",
        "rounding": "round-to-nearest-even",
        "fast_math": false,
        "target_arch": std::env::consts::ARCH,
        "target_os": std::env::consts::OS,
        "fma_target_feature": cfg!(target_feature = "fma"),
    })
}
