use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use tempfile::NamedTempFile;

/// Writes `contents` to a temporary file beside `path`, then renames it into
/// place so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `nf.csv` → `nf.manifest.txt`
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.txt")
}

/// `states.csv` → `states.spectrum.csv`
pub fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

pub struct Manifest {
    pub command: &'static str,
    pub mode: String,
    pub config_path: String,
    pub config_echo: String,
    pub parameters: Vec<(String, String)>,
    pub elapsed_ms: u128,
}

impl Manifest {
    pub fn render(&self) -> String {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut s = String::new();
        s.push_str(&format!("tool = qlna {}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("command = {}\n", self.command));
        s.push_str(&format!("mode = {}\n", self.mode));
        s.push_str(&format!("config = {}\n", self.config_path));
        s.push_str(&format!("timestamp_unix = {now}\n"));
        s.push_str(&format!("elapsed_ms = {}\n", self.elapsed_ms));
        s.push_str("\n[parameters]\n");
        for (k, v) in &self.parameters {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s.push_str("\n[config]\n");
        s.push_str(&self.config_echo);
        if !self.config_echo.ends_with('\n') {
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_paths() {
        assert_eq!(manifest_path(Path::new("out/nf.csv")), PathBuf::from("out/nf.manifest.txt"));
        assert_eq!(sibling_path(Path::new("a/states.csv"), "spectrum.csv"), PathBuf::from("a/states.spectrum.csv"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
