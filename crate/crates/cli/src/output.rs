use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Writes files under a root directory and remembers their relative paths.
#[derive(Debug)]
pub struct Output {
    root: PathBuf,
    prefix: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn new(root: &Path) -> Self {
        Output { root: root.to_path_buf(), prefix: PathBuf::new(), files: Vec::new() }
    }

    pub fn sub(&self, name: &str) -> Self {
        Output { root: self.root.clone(), prefix: self.prefix.join(name), files: Vec::new() }
    }

    pub fn dir(&self) -> PathBuf {
        self.root.join(&self.prefix)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let rel = self.prefix.join(name);
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(rel.to_string_lossy().replace('\\', "/"));
        Ok(())
    }

    pub fn absorb(&mut self, other: Output) {
        self.files.extend(other.files);
    }

    pub fn into_files(self) -> Vec<String> {
        self.files
    }
}
