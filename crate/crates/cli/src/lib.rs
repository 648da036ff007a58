//! Library side of the `slowlight` binary, so that runs can be driven in
//! process by tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use slowlight_core::SimConfig;

pub use args::{Cli, Command};

/// Environment variable naming the directory searched for a default config.
pub const CONFIG_DIR_ENV: &str = "SLOWLIGHT_CONFIG_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] slowlight_core::Error),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: slowlight_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use slowlight_core::Error as E;
        let core = match self {
            CliError::Usage(_) => return 2,
            CliError::Core(e) | CliError::File { source: e, .. } => e,
        };
        match core {
            E::Format { .. } => 3,
            E::Domain(_) | E::OutOfRange { .. } | E::Degenerate(_) | E::Grid(_) => 4,
            E::InvalidParameter(_) => 2,
            E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
            E::Io(_) => 1,
        }
    }
}

pub(crate) fn in_file<T>(path: &Path, r: slowlight_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Record written next to every output; enough to rerun the command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub command: Command,
    pub config: SimConfig,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

/// `curve.csv` → `curve.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

pub(crate) struct Outcome {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub summary: serde_json::Value,
    pub seed: Option<u64>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<RunManifest, CliError> {
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, r.out_dir.as_deref());
    }
    let config = load_config(cli.config.as_deref())?;
    run_command(cli.command, config)
}

fn load_config(explicit: Option<&Path>) -> Result<SimConfig, CliError> {
    let path = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_DIR_ENV).and_then(|dir| {
            let dir = PathBuf::from(dir);
            ["slowlight.toml", "slowlight.json"]
                .iter()
                .map(|n| dir.join(n))
                .find(|p| p.is_file())
        }),
    };
    match path {
        Some(p) => in_file(&p, SimConfig::load(&p)),
        None => Ok(SimConfig::default()),
    }
}

fn run_command(command: Command, config: SimConfig) -> Result<RunManifest, CliError> {
    let (command, config) = commands::resolve(command, config)?;
    config.validate()?;
    let outcome = commands::dispatch(&command, &config)?;
    let outputs: Vec<PathBuf> = outcome.files.iter().map(|f| f.0.clone()).collect();
    let main_out = outputs.first().cloned().expect("every command writes an output");
    let manifest = RunManifest {
        tool: "slowlight".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: command.name().into(),
        command,
        config,
        seed: outcome.seed,
        outputs,
        summary: outcome.summary,
    };
    let mut files = outcome.files;
    let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serialises");
    text.push(b'\n');
    files.push((manifest_path(&main_out), text));
    write_atomically(&files)?;
    Ok(manifest)
}

fn replay(path: &Path, out_dir: Option<&Path>) -> Result<RunManifest, CliError> {
    let text = in_file(path, std::fs::read_to_string(path).map_err(Into::into))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::File {
        path: path.to_path_buf(),
        source: slowlight_core::Error::Format {
            line: e.line(),
            message: e.to_string(),
        },
    })?;
    let mut command = manifest.command;
    if let Command::Replay(_) = command {
        return Err(CliError::Usage("a manifest cannot record a replay".into()));
    }
    if let (Some(dir), Some(out)) = (out_dir, command.out_mut()) {
        let name = out
            .file_name()
            .ok_or_else(|| CliError::Usage(format!("recorded output {} has no file name", out.display())))?;
        *out = dir.join(name);
    }
    run_command(command, manifest.config)
}

/// Stages every file in a temporary next to its target, then renames them
/// into place, so a failure never leaves partial outputs behind.
fn write_atomically(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let io = |e: std::io::Error| CliError::File {
            path: path.clone(),
            source: e.into(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| CliError::File {
            path: path.clone(),
            source: e.error.into(),
        })?;
    }
    Ok(())
}
