//! Sectioned binary container with a TOML manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MAGIC: &[u8; 8] = b"IGAROM\r\n";
pub const FORMAT_VERSION: u32 = 1;

/// Name of the section holding run-dependent data (wall times); it is
/// written last and is not covered by the manifest.
pub const VOLATILE_SECTION: &str = "timing";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub tool: String,
    pub model_hash: String,
    /// Effective run configuration (TOML).
    pub config: String,
    pub sections: Vec<SectionEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Archive {
    pub manifest: Manifest,
    sections: Vec<(String, Vec<u8>)>,
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u64(out, b.len() as u64);
    out.extend_from_slice(b);
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        if self.buf.len() - self.pos < n {
            return Err(CliError::Format("archive is truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<&'a [u8], CliError> {
        let n = usize::try_from(self.u64()?).map_err(|_| CliError::Format("section too large".into()))?;
        self.take(n)
    }
}

impl Archive {
    pub fn new(tool: &str, model_hash: &str, config: &str) -> Self {
        Self {
            manifest: Manifest {
                format: FORMAT_VERSION,
                tool: tool.to_string(),
                model_hash: model_hash.to_string(),
                config: config.to_string(),
                sections: Vec::new(),
            },
            sections: Vec::new(),
        }
    }

    /// Adds or replaces a section.
    pub fn insert(&mut self, name: &str, payload: Vec<u8>) {
        if let Some(s) = self.sections.iter_mut().find(|s| s.0 == name) {
            s.1 = payload;
        } else {
            self.sections.push((name.to_string(), payload));
        }
    }

    pub fn section(&self, name: &str) -> Option<&[u8]> {
        self.sections.iter().find(|s| s.0 == name).map(|s| s.1.as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[u8], CliError> {
        self.section(name)
            .ok_or_else(|| CliError::Format(format!("archive has no `{name}` section")))
    }

    pub fn section_names(&self) -> Vec<&str> {
        self.sections.iter().map(|s| s.0.as_str()).collect()
    }

    fn stable(&self) -> impl Iterator<Item = &(String, Vec<u8>)> {
        self.sections.iter().filter(|s| s.0 != VOLATILE_SECTION)
    }

    /// Serialized bytes; everything before the volatile section depends on
    /// the configuration only.
    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut manifest = self.manifest.clone();
        manifest.format = FORMAT_VERSION;
        manifest.sections = self
            .stable()
            .map(|(n, b)| SectionEntry {
                name: n.clone(),
                bytes: b.len() as u64,
                sha256: sha256_hex(b),
            })
            .collect();
        let text = toml::to_string(&manifest).map_err(|e| CliError::Format(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        put_bytes(&mut out, text.as_bytes());
        let ordered: Vec<&(String, Vec<u8>)> =
            self.stable().chain(self.sections.iter().filter(|s| s.0 == VOLATILE_SECTION)).collect();
        put_u64(&mut out, ordered.len() as u64);
        for (n, b) in ordered {
            put_bytes(&mut out, n.as_bytes());
            put_bytes(&mut out, b);
        }
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, CliError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(CliError::Format("not an igarom archive".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version > FORMAT_VERSION {
            return Err(CliError::Format(format!(
                "archive format {version} is newer than this tool (reads up to {FORMAT_VERSION})"
            )));
        }
        let text = std::str::from_utf8(r.bytes()?).map_err(|_| CliError::Format("manifest is not UTF-8".into()))?;
        let manifest: Manifest = toml::from_str(text).map_err(|e| CliError::Format(format!("manifest: {e}")))?;
        let n = r.u64()?;
        let mut sections = Vec::new();
        for _ in 0..n {
            let name = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| CliError::Format("bad section name".into()))?;
            let payload = r.bytes()?.to_vec();
            sections.push((name, payload));
        }
        for entry in &manifest.sections {
            let s = sections
                .iter()
                .find(|s| s.0 == entry.name)
                .ok_or_else(|| CliError::Format(format!("section `{}` listed but missing", entry.name)))?;
            if s.1.len() as u64 != entry.bytes || sha256_hex(&s.1) != entry.sha256 {
                return Err(CliError::Format(format!("section `{}` is corrupted", entry.name)));
            }
        }
        Ok(Self { manifest, sections })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("partial");
        std::fs::write(&tmp, &bytes).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Archive bytes without the volatile section.
    pub fn deterministic_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut a = self.clone();
        a.sections.retain(|s| s.0 != VOLATILE_SECTION);
        a.to_bytes()
    }
}
