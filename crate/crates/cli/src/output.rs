use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Files of one run. Each file is written to a temporary name and renamed;
/// [`Outputs::discard`] removes everything this run produced.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        fs::write(&tmp, bytes).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            CliError::io(format!("writing {}", tmp.display()), e)
        })?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(format!("renaming to {}", path.display()), e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}
