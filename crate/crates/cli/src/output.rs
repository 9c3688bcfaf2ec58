//! Output directory handling.
//!
//! Files are first written under temporary names and renamed into place once
//! all of them are complete, so an interrupted or failed write never leaves a
//! half-written CSV next to a stale summary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Creates the directory if needed and checks that a file can be created in it.
pub fn probe(dir: &Path) -> Result<(), CliError> {
    let unwritable = |source| CliError::Unwritable {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(format!(".decoh-probe-{}", std::process::id()));
    fs::File::create(&probe).map_err(unwritable)?;
    fs::remove_file(&probe).map_err(unwritable)?;
    Ok(())
}

/// Writes every `(file name, contents)` pair into `dir`.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(files.len());
    let result = (|| {
        for (name, contents) in files {
            let tmp = dir.join(format!(".{name}.tmp"));
            let write_err = |source| CliError::Write {
                path: tmp.clone(),
                source,
            };
            let mut f = fs::File::create(&tmp).map_err(write_err)?;
            staged.push((tmp.clone(), dir.join(name)));
            f.write_all(contents.as_bytes()).map_err(write_err)?;
            f.sync_all().map_err(write_err)?;
        }
        for (tmp, target) in &staged {
            fs::rename(tmp, target).map_err(|source| CliError::Write {
                path: target.clone(),
                source,
            })?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}

pub fn summary_text(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_files_and_leaves_no_temporaries() {
        let dir = std::env::temp_dir().join(format!("decoh-output-test-{}", std::process::id()));
        probe(&dir).unwrap();
        write_all(&dir, &[("a.csv".into(), "x\n1\n".into()), ("summary.txt".into(), "k=v\n".into())]).unwrap();
        let mut names: Vec<String> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, ["a.csv", "summary.txt"]);
        assert_eq!(fs::read_to_string(dir.join("a.csv")).unwrap(), "x\n1\n");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn summary_lines() {
        let text = summary_text(&[("seed".into(), "3".into()), ("command".into(), "rates".into())]);
        assert_eq!(text, "seed=3\ncommand=rates\n");
    }
}
