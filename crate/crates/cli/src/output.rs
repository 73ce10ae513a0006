use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use diffbasis::rational::{self, Rational};

use crate::Command;

#[derive(Debug)]
pub enum Failure {
    /// Bad parameters or unreadable input.
    Invalid(String),
    /// A requested verification did not pass.
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Verification(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<diffbasis::Error> for Failure {
    fn from(e: diffbasis::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

pub type Res<T> = std::result::Result<T, Failure>;

pub fn invalid<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Invalid(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Directory that relative output paths were resolved against.
    pub out_dir: PathBuf,
    pub command: Command,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_file(path: &Path) -> Res<String> {
    let bytes = fs::read(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn read_json(path: &Path) -> Res<serde_json::Value> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

pub fn absolute(p: &Path) -> Res<PathBuf> {
    std::path::absolute(p).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))
}

/// Files written by one run.
pub struct Outputs {
    pub dir: PathBuf,
    written: Vec<(PathBuf, PathBuf)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Res<Self> {
        Ok(Outputs { dir: absolute(dir)?, written: Vec::new() })
    }

    /// `(as recorded, on disk)`.
    pub fn resolve(&self, given: &Option<PathBuf>, default: &str) -> (PathBuf, PathBuf) {
        let rec = given.clone().unwrap_or_else(|| PathBuf::from(default));
        let disk = if rec.is_absolute() { rec.clone() } else { self.dir.join(&rec) };
        (rec, disk)
    }

    pub fn write(&mut self, target: (PathBuf, PathBuf), bytes: &[u8]) -> Res<()> {
        let (rec, disk) = target;
        if let Some(parent) = disk.parent() {
            fs::create_dir_all(parent).map_err(|e| Failure::Invalid(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&disk, bytes).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", disk.display())))?;
        self.written.push((rec, disk));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, target: (PathBuf, PathBuf), v: &T) -> Res<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Invalid(e.to_string()))?;
        s.push('\n');
        self.write(target, s.as_bytes())
    }

    pub fn csv(&mut self, target: (PathBuf, PathBuf), header: &[&str], rows: &[Vec<String>]) -> Res<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure::Invalid(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Invalid(e.to_string()))?;
        self.write(target, &bytes)
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.written.iter().map(|(_, d)| d.as_path())
    }

    /// Writes `<stem>.manifest.json` beside the first output.
    pub fn manifest(&self, command: &Command, inputs: &[PathBuf]) -> Res<PathBuf> {
        let (_, first) = self.written.first().ok_or_else(|| Failure::Invalid("nothing was written".into()))?;
        let stem = first.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let path = first.with_file_name(format!("{stem}.manifest.json"));
        let m = Manifest {
            tool: "diffbasis".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            out_dir: self.dir.clone(),
            command: command.clone(),
            inputs: inputs
                .iter()
                .map(|p| Ok(FileHash { path: p.clone(), sha256: sha256_file(p)? }))
                .collect::<Res<_>>()?,
            outputs: self
                .written
                .iter()
                .map(|(rec, disk)| Ok(FileHash { path: rec.clone(), sha256: sha256_file(disk)? }))
                .collect::<Res<_>>()?,
        };
        let mut s = serde_json::to_string_pretty(&m).map_err(|e| Failure::Invalid(e.to_string()))?;
        s.push('\n');
        fs::write(&path, s).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn dec(x: &Rational) -> String {
    rational::decimal(x, 12)
}

pub fn float(x: f64) -> String {
    format!("{x:.12}")
}

/// `p/q` followed by its decimal.
pub fn exact(x: &Rational) -> [String; 2] {
    [rational::format(x), dec(x)]
}
