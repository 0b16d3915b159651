//! Reading inputs and writing outputs. Every output file is written to a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rwre::Trajectory;

use crate::error::CliError;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().ok_or_else(|| CliError::io(path, "not a file path"))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_trajectory(path: &Path) -> Result<(Trajectory, Vec<(String, String)>), CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Trajectory::read_from(BufReader::new(file)).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
