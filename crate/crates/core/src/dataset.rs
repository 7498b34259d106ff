//! Loading directories of per-sample AEDAT recordings whose filenames encode
//! the class and an optional inversion marker.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aer::{read_aedat_file, AerIoError};
use crate::event::EventStream;

/// The four card-symbol classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuitClass {
    Heart,
    Club,
    Diamond,
    Spade,
}

impl SuitClass {
    pub const ALL: [SuitClass; 4] = [SuitClass::Heart, SuitClass::Club, SuitClass::Diamond, SuitClass::Spade];

    pub fn name(self) -> &'static str {
        match self {
            SuitClass::Heart => "heart",
            SuitClass::Club => "club",
            SuitClass::Diamond => "diamond",
            SuitClass::Spade => "spade",
        }
    }

    pub fn index(self) -> usize {
        match self {
            SuitClass::Heart => 0,
            SuitClass::Club => 1,
            SuitClass::Diamond => 2,
            SuitClass::Spade => 3,
        }
    }
}

impl fmt::Display for SuitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Filename matching rules. Published mirrors of the card datasets differ in
/// naming details, so the class substrings and the inversion token are
/// configurable rather than hard-coded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoaderConfig {
    /// Case-insensitive substrings identifying each class.
    pub class_patterns: Vec<(String, SuitClass)>,
    /// A stem token equal to this marks an inverted sample.
    pub inversion_token: String,
    /// File extension to scan for.
    pub extension: String,
}

impl Default for LoaderConfig {
    fn default() -> Self {
        Self {
            class_patterns: SuitClass::ALL
                .iter()
                .map(|c| (c.name().to_string(), *c))
                .collect(),
            inversion_token: "i".to_string(),
            extension: "aedat".to_string(),
        }
    }
}

impl LoaderConfig {
    /// Classifies a file stem, or explains why it does not match.
    pub fn classify_stem(&self, stem: &str) -> Result<(SuitClass, bool), String> {
        let lower = stem.to_ascii_lowercase();
        let matches: Vec<SuitClass> = self
            .class_patterns
            .iter()
            .filter(|(pat, _)| lower.contains(&pat.to_ascii_lowercase()))
            .map(|(_, c)| *c)
            .collect();
        let class = match matches.as_slice() {
            [one] => *one,
            [] => return Err(format!("no class substring in {stem:?}")),
            many => return Err(format!("ambiguous class substrings {many:?} in {stem:?}")),
        };
        let inverted = lower
            .split(|c: char| !c.is_ascii_alphanumeric())
            .any(|token| token == self.inversion_token);
        Ok((class, inverted))
    }
}

/// One loaded recording.
#[derive(Debug, Clone)]
pub struct SuitSample {
    pub stream: EventStream,
    pub class: SuitClass,
    pub inverted: bool,
    pub path: PathBuf,
}

/// Load outcome: samples, skipped files with the reason, and a per-class
/// census `[total, inverted]` indexed by `SuitClass::index`.
#[derive(Debug)]
pub struct LoadReport {
    pub samples: Vec<SuitSample>,
    pub skipped: Vec<(PathBuf, String)>,
    pub census: [[usize; 2]; 4],
}

impl LoadReport {
    pub fn census_line(&self) -> String {
        let parts: Vec<String> = SuitClass::ALL
            .iter()
            .map(|c| {
                let [total, inverted] = self.census[c.index()];
                format!("{} {}s ({} inverted)", total, c.name(), inverted)
            })
            .collect();
        format!("{}; {} skipped", parts.join(", "), self.skipped.len())
    }
}

/// Loads every matching AEDAT file under `dir`, classifying by filename.
///
/// Unparseable filenames are skipped and reported, not fatal. Files are
/// visited in sorted order so repeated runs see the same sample order.
pub fn load_suit_directory(dir: &Path, cfg: &LoaderConfig) -> Result<LoadReport, AerIoError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .map(|e| e.to_string_lossy().eq_ignore_ascii_case(&cfg.extension))
                    .unwrap_or(false)
        })
        .collect();
    paths.sort();

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let mut census = [[0usize; 2]; 4];
    for path in paths {
        let stem = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        match cfg.classify_stem(&stem) {
            Ok((class, inverted)) => {
                let parsed = read_aedat_file(&path)?;
                census[class.index()][0] += 1;
                if inverted {
                    census[class.index()][1] += 1;
                }
                samples.push(SuitSample {
                    stream: parsed.stream.with_label(class.name()),
                    class,
                    inverted,
                    path,
                });
            }
            Err(reason) => skipped.push((path, reason)),
        }
    }
    Ok(LoadReport { samples, skipped, census })
}
