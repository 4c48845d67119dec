//! Staged artifact output. Files go to a hidden sibling directory of the
//! target and are moved into place only by [`Staging::commit`]; dropping an
//! uncommitted staging area deletes it, so failed runs leave nothing behind.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

use crate::manifest::{RunManifest, MANIFEST_FILE};

#[derive(Debug)]
pub struct Staging {
    dir: TempDir,
    target: PathBuf,
    manifest: RunManifest,
}

fn io_err(path: &Path, e: io::Error) -> io::Error {
    io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

impl Staging {
    pub fn new(target: &Path, manifest: RunManifest) -> io::Result<Self> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| io_err(&parent, e))?;
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("run");
        let dir = tempfile::Builder::new()
            .prefix(&format!(".{name}.staging-"))
            .tempdir_in(&parent)
            .map_err(|e| io_err(&parent, e))?;
        Ok(Self { dir, target: target.to_path_buf(), manifest })
    }

    pub fn target(&self) -> &Path {
        &self.target
    }

    pub fn manifest_mut(&mut self) -> &mut RunManifest {
        &mut self.manifest
    }

    /// Writes `contents` to `rel` and records its digest.
    pub fn write(&mut self, rel: &str, contents: &[u8]) -> io::Result<()> {
        let path = self.dir.path().join(rel);
        if let Some(p) = path.parent() {
            fs::create_dir_all(p).map_err(|e| io_err(p, e))?;
        }
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.manifest.record(rel, contents);
        Ok(())
    }

    /// Writes the manifest, then swaps the staging directory into place. An
    /// existing target directory is replaced wholesale.
    pub fn commit(self) -> io::Result<RunManifest> {
        let manifest_path = self.dir.path().join(MANIFEST_FILE);
        fs::write(&manifest_path, self.manifest.to_json()).map_err(|e| io_err(&manifest_path, e))?;
        let staged = self.dir.keep();
        let result = replace_dir(&staged, &self.target);
        if result.is_err() {
            let _ = fs::remove_dir_all(&staged);
        }
        result.map(|()| self.manifest)
    }
}

fn replace_dir(staged: &Path, target: &Path) -> io::Result<()> {
    if target.exists() {
        if !target.is_dir() {
            return Err(io::Error::new(
                io::ErrorKind::AlreadyExists,
                format!("{} exists and is not a directory", target.display()),
            ));
        }
        let parent = staged.parent().unwrap_or(Path::new("."));
        let old = tempfile::Builder::new().prefix(".replaced-").tempdir_in(parent)?;
        let aside = old.path().join("previous");
        fs::rename(target, &aside).map_err(|e| io_err(target, e))?;
        if let Err(e) = fs::rename(staged, target) {
            let _ = fs::rename(&aside, target);
            return Err(io_err(target, e));
        }
        drop(old);
        Ok(())
    } else {
        fs::rename(staged, target).map_err(|e| io_err(target, e))
    }
}
