//! Output directory, input digests and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    /// Every option of the subcommand, defaults included.
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// Input path to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

pub struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
    json: bool,
}

impl Run {
    pub fn new(
        out_dir: &Path,
        subcommand: &str,
        argv: Vec<String>,
        config: &impl Serialize,
        seed: u64,
        json: bool,
    ) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                argv,
                config: serde_json::to_value(config)?,
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
            },
            json,
        })
    }

    pub fn seed(&self) -> u64 {
        self.manifest.seed
    }

    /// Records the digest of an input that a library function will open.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        self.input(path)?;
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }

    pub fn read_lines(&mut self, path: &Path) -> Result<Vec<String>> {
        Ok(self.read(path)?.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    /// Resolves an output file name inside the output directory.
    pub fn output(&mut self, name: &str) -> Result<PathBuf> {
        let rel = Path::new(name);
        if name.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            bail!("output name {name:?} must be a relative path inside the output directory");
        }
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.manifest.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.output(name)?;
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Writes `name.json` and `name.txt` and prints one of them.
    pub fn emit(&mut self, name: &str, json: &impl Serialize, text: &str) -> Result<()> {
        let json = serde_json::to_string_pretty(json)?;
        self.write(&format!("{name}.json"), format!("{json}\n"))?;
        let text = if text.ends_with('\n') { text.to_string() } else { format!("{text}\n") };
        self.write(&format!("{name}.txt"), &text)?;
        if self.json {
            println!("{json}");
        } else {
            print!("{text}");
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        let name = format!("{}.manifest.json", self.manifest.subcommand.replace(' ', "-"));
        let path = self.out_dir.join(&name);
        self.manifest.outputs.sort();
        self.manifest.outputs.dedup();
        fs::write(&path, serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        log::info!("manifest written to {}", path.display());
        Ok(path)
    }
}

/// Parses `22260`, `22260s`, `371m` or `6h11m` into seconds.
pub fn parse_seconds(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Ok(v) = s.trim_end_matches('s').parse::<f64>() {
        return Ok(v);
    }
    let mut total = 0.0;
    let mut number = String::new();
    for c in s.chars() {
        match c {
            '0'..='9' | '.' => number.push(c),
            'h' | 'm' | 's' => {
                let v: f64 = number.parse().map_err(|_| format!("bad duration {s:?}"))?;
                total += v * match c {
                    'h' => 3600.0,
                    'm' => 60.0,
                    _ => 1.0,
                };
                number.clear();
            }
            _ => return Err(format!("bad duration {s:?}")),
        }
    }
    if !number.is_empty() {
        return Err(format!("bad duration {s:?}: missing unit after {number}"));
    }
    Ok(total)
}
