//! Output files are collected in memory and written together at the end, so
//! a failing command leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, content: impl Into<Vec<u8>>) {
        self.files.push((name.into(), content.into()));
    }

    /// Writes every file to a temporary name, then renames them into place.
    /// On failure everything written so far is removed.
    pub fn commit(self) -> CliResult<Vec<PathBuf>> {
        let io = |e: std::io::Error, p: &Path| {
            CliError::Compute(format!("cannot write {}: {e}", p.display()))
        };
        let created_dir = !self.dir.exists();
        fs::create_dir_all(&self.dir).map_err(|e| io(e, &self.dir))?;
        let pid = std::process::id();
        let mut staged = Vec::new();
        let mut done: Vec<PathBuf> = Vec::new();
        let result = (|| {
            for (name, bytes) in &self.files {
                let tmp = self.dir.join(format!(".{name}.{pid}.partial"));
                staged.push(tmp.clone());
                fs::write(&tmp, bytes).map_err(|e| io(e, &tmp))?;
            }
            for ((name, _), tmp) in self.files.iter().zip(&staged) {
                let dest = self.dir.join(name);
                fs::rename(tmp, &dest).map_err(|e| io(e, &dest))?;
                done.push(dest);
            }
            Ok(())
        })();
        if let Err(e) = result {
            for p in staged.iter().chain(&done) {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(&self.dir);
            }
            return Err(e);
        }
        Ok(done)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = Outputs::new(dir.path().join("out"));
        o.add("a.txt", "1");
        o.add("b.txt", "2");
        let written = o.commit().unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(
            fs::read_to_string(dir.path().join("out/b.txt")).unwrap(),
            "2"
        );
        assert_eq!(fs::read_dir(dir.path().join("out")).unwrap().count(), 2);
    }

    #[test]
    fn failed_commit_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut o = Outputs::new(&out);
        o.add("a.txt", "1");
        o.add("missing/b.txt", "2");
        assert!(o.commit().is_err());
        assert!(!out.exists());
    }
}
