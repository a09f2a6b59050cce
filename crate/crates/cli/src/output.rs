//! Flat `key = value` run configurations and output files with metadata
//! sidecars.
//!
//! A sidecar `<file>.meta` records the command and every setting that
//! shaped the file, in the same format `--config` reads, so
//! `sbp <command> --config <file>.meta` reproduces the output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Resolved settings of a run, in the order they are written.
#[derive(Debug, Clone, Default)]
pub struct RunMeta {
    command: String,
    entries: Vec<(String, String)>,
}

impl RunMeta {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "# sbp {}\ncommand = {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Writes `name` under `dir` plus its `.meta` sidecar; returns the path.
pub fn write_with_meta(
    dir: &Path,
    name: &str,
    contents: &str,
    meta: &RunMeta,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let meta_path = dir.join(format!("{name}.meta"));
    for (p, text) in [(&path, contents.to_string()), (&meta_path, meta.render())] {
        fs::write(p, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(path)
}

/// Turns a config file into flags for `command`. `key = value` becomes
/// `--key value`; `true`/`false` values toggle a switch.
pub fn config_flags(path: &Path, command: &str) -> Result<Vec<String>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad =
            |msg: String| CliError::Usage(format!("{}: line {}: {msg}", path.display(), k + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') {
            return Err(bad(format!("invalid key {key:?}")));
        }
        match (key, value) {
            ("command", c) if c == command => {}
            ("command", c) => {
                return Err(bad(format!("file is for `{c}`, not `{command}`")));
            }
            ("config", _) => return Err(bad("nested config files are not supported".into())),
            (_, "true") => flags.push(format!("--{key}")),
            (_, "false") => {}
            _ => {
                flags.push(format!("--{key}"));
                flags.push(value.to_string());
            }
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trips_through_config_flags() {
        let mut meta = RunMeta::new("exp-static");
        meta.set("dim", 2)
            .set("t-grid", "100,1000")
            .set("timing", false)
            .set("self-check", true);
        let dir = tempfile::tempdir().unwrap();
        let path = write_with_meta(dir.path(), "curve.csv", "t\n", &meta).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "t\n");
        let flags = config_flags(&dir.path().join("curve.csv.meta"), "exp-static").unwrap();
        assert_eq!(
            flags,
            ["--dim", "2", "--t-grid", "100,1000", "--self-check"]
        );
    }

    #[test]
    fn config_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "# ok\ndim = 1\nnonsense\n").unwrap();
        let err = config_flags(&path, "exp-static").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        fs::write(&path, "command = exp-rehab\n").unwrap();
        assert!(config_flags(&path, "exp-static").is_err());
    }
}
