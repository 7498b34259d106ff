//! End-to-end pipelines: window descriptor extraction, unsupervised and
//! supervised evaluation protocols, model persistence, and report emission.
//!
//! Everything a report contains is a pure function of the inputs and the
//! embedded configuration (seeds included), so re-running a report's
//! configuration reproduces it byte for byte. Wall-clock timing therefore
//! never goes into report files; the CLI prints it separately.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    classify_with_memory, ggm::GgmModel, kmeans, majority_vote, svm::SvmEnsemble, ClassifyError,
    Kernel, TrainParams,
};
use crate::descriptor::{esc, hoe, hoe_elbp, DescriptorError, RingConfig};
use crate::elbp::{code_window, CodingMode, ElbpError};
use crate::event::{frame_stream, EventStream, EventWindow, FramingConfig};
use crate::orientation::{orient_window, OrientationConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Event(#[from] crate::event::EventError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Elbp(#[from] ElbpError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error(transparent)]
    AerIo(#[from] crate::aer::AerIoError),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("json error: {0}")]
    Json(String),
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for PipelineError {
    fn from(e: serde_json::Error) -> Self {
        PipelineError::Json(e.to_string())
    }
}

/// Descriptor family and weighting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescriptorKind {
    Hoe,
    HoeElbpPol,
    HoeElbpDir,
    Esc,
    EscElbpPol,
    EscElbpDir,
}

impl DescriptorKind {
    pub fn is_hoe(self) -> bool {
        matches!(self, DescriptorKind::Hoe | DescriptorKind::HoeElbpPol | DescriptorKind::HoeElbpDir)
    }

    pub fn coding_mode(self) -> Option<CodingMode> {
        match self {
            DescriptorKind::HoeElbpPol | DescriptorKind::EscElbpPol => Some(CodingMode::Polarity),
            DescriptorKind::HoeElbpDir | DescriptorKind::EscElbpDir => Some(CodingMode::Direction),
            _ => None,
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DescriptorKind::Hoe => "hoe",
            DescriptorKind::HoeElbpPol => "hoe+elbp4pol",
            DescriptorKind::HoeElbpDir => "hoe+elbp4dir",
            DescriptorKind::Esc => "esc",
            DescriptorKind::EscElbpPol => "esc+elbp4pol",
            DescriptorKind::EscElbpDir => "esc+elbp4dir",
        };
        f.write_str(name)
    }
}

impl FromStr for DescriptorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hoe" => Ok(DescriptorKind::Hoe),
            "hoe+elbp4pol" => Ok(DescriptorKind::HoeElbpPol),
            "hoe+elbp4dir" => Ok(DescriptorKind::HoeElbpDir),
            "esc" => Ok(DescriptorKind::Esc),
            "esc+elbp4pol" => Ok(DescriptorKind::EscElbpPol),
            "esc+elbp4dir" => Ok(DescriptorKind::EscElbpDir),
            other => Err(format!(
                "unknown descriptor {other:?} (expected hoe, hoe+elbp4pol, hoe+elbp4dir, esc, esc+elbp4pol, esc+elbp4dir)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifierKind {
    Ggm,
    SvmLinear,
    SvmRbf,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Ggm => "ggm",
            ClassifierKind::SvmLinear => "svm-linear",
            ClassifierKind::SvmRbf => "svm-rbf",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ggm" => Ok(ClassifierKind::Ggm),
            "svm-linear" => Ok(ClassifierKind::SvmLinear),
            "svm-rbf" => Ok(ClassifierKind::SvmRbf),
            other => Err(format!("unknown classifier {other:?} (expected ggm, svm-linear, svm-rbf)")),
        }
    }
}

/// Everything that determines a window's descriptor vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub framing: FramingConfig,
    pub orientation: OrientationConfig,
    pub descriptor: DescriptorKind,
    pub ring: RingConfig,
}

impl FeatureConfig {
    pub fn descriptor_len(&self) -> usize {
        if self.descriptor.is_hoe() {
            4 * self.orientation.v
        } else {
            self.ring.feature_len()
        }
    }
}

/// Full pipeline configuration embedded in every emitted artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub classifier: ClassifierKind,
    /// Memory factor blending each window's scores with its predecessor's.
    pub alpha: f64,
    pub seed: u64,
    pub svm_c: f64,
    /// RBF width; `None` means 1 / descriptor length.
    pub svm_gamma: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig {
                framing: FramingConfig { n: 150, b: 50 },
                orientation: OrientationConfig::default(),
                descriptor: DescriptorKind::Hoe,
                ring: RingConfig::five_rings_one_cell(4),
            },
            classifier: ClassifierKind::Ggm,
            alpha: 0.75,
            seed: 7,
            svm_c: 1.0,
            svm_gamma: None,
        }
    }
}

impl PipelineConfig {
    pub fn kernel(&self) -> Kernel {
        match self.classifier {
            ClassifierKind::SvmRbf => Kernel::Rbf {
                gamma: self.svm_gamma.unwrap_or(1.0 / self.features.descriptor_len() as f64),
            },
            _ => Kernel::Linear,
        }
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams { c: self.svm_c, ..TrainParams::default() }
    }
}

/// One extracted window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub source: String,
    pub sample_id: usize,
    pub label: Option<String>,
    pub window_index: usize,
    pub duration_us: u64,
    pub vector: Vec<f64>,
}

/// Computes the configured descriptor of one window.
pub fn window_descriptor(w: &EventWindow, cfg: &FeatureConfig) -> Result<Vec<f64>, PipelineError> {
    let oriented = orient_window(w, &cfg.orientation);
    let v = cfg.orientation.v;
    let codes = match cfg.descriptor.coding_mode() {
        Some(CodingMode::Polarity) => Some(code_window(w, CodingMode::Polarity, None)?),
        Some(CodingMode::Direction) => {
            let dirs: Vec<u8> = oriented.iter().map(|o| o.direction).collect();
            Some(code_window(w, CodingMode::Direction, Some(&dirs))?)
        }
        None => None,
    };
    let vector = match cfg.descriptor {
        DescriptorKind::Hoe => hoe(w, &oriented, v)?.into_values(),
        DescriptorKind::HoeElbpPol | DescriptorKind::HoeElbpDir => {
            hoe_elbp(w, &oriented, codes.as_ref().unwrap(), v)?.into_values()
        }
        DescriptorKind::Esc => esc(w, &oriented, &cfg.ring, None)?.into_values(),
        DescriptorKind::EscElbpPol | DescriptorKind::EscElbpDir => {
            let weights: Vec<f64> =
                codes.as_ref().unwrap().iter().map(|c| c.weight()).collect();
            esc(w, &oriented, &cfg.ring, Some(&weights))?.into_values()
        }
    };
    Ok(vector)
}

/// Frames one stream and extracts a record per window. The stream's label,
/// if any, is attached to every record.
pub fn extract_stream(
    stream: &EventStream,
    cfg: &FeatureConfig,
    source: &str,
    sample_id: usize,
) -> Result<Vec<WindowRecord>, PipelineError> {
    cfg.orientation.validate().map_err(PipelineError::InvalidInput)?;
    let windows = frame_stream(stream, cfg.framing);
    let mut records = Vec::with_capacity(windows.len());
    for (i, w) in windows.iter().enumerate() {
        records.push(WindowRecord {
            source: source.to_string(),
            sample_id,
            label: stream.label.clone(),
            window_index: i,
            duration_us: w.duration_us(),
            vector: window_descriptor(w, cfg)?,
        });
    }
    Ok(records)
}

/// A labeled span of event indices `[start, end)` within one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSegment {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

/// Frames a continuous stream whose samples are marked by index segments.
/// Windows that straddle a segment boundary describe two overlapping shapes
/// at once and are discarded; the rest inherit the segment label. Returns
/// the records and the number of discarded windows.
pub fn extract_stream_with_segments(
    stream: &EventStream,
    segments: &[LabelSegment],
    cfg: &FeatureConfig,
    source: &str,
) -> Result<(Vec<WindowRecord>, usize), PipelineError> {
    cfg.orientation.validate().map_err(PipelineError::InvalidInput)?;
    let windows = frame_stream(stream, cfg.framing);
    let mut records = Vec::new();
    let mut discarded = 0usize;
    for (i, w) in windows.iter().enumerate() {
        let lo = w.start_index();
        let hi = lo + w.len();
        let segment = segments.iter().enumerate().find(|(_, s)| lo >= s.start && hi <= s.end);
        match segment {
            Some((si, s)) => records.push(WindowRecord {
                source: source.to_string(),
                sample_id: si,
                label: Some(s.label.clone()),
                window_index: i,
                duration_us: w.duration_us(),
                vector: window_descriptor(w, cfg)?,
            }),
            None => discarded += 1,
        }
    }
    Ok((records, discarded))
}

// ---------------------------------------------------------------------------
// feature file I/O
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RecordLineOut<'a> {
    source: &'a str,
    sample_id: usize,
    label: &'a Option<String>,
    window_index: usize,
    duration_us: u64,
    config: &'a FeatureConfig,
    vector: &'a [f64],
}

#[derive(Deserialize)]
struct RecordLineIn {
    source: String,
    sample_id: usize,
    label: Option<String>,
    window_index: usize,
    duration_us: u64,
    config: FeatureConfig,
    vector: Vec<f64>,
}

/// Serializes records as JSON lines, one object per window, each embedding
/// the feature configuration.
pub fn records_to_jsonl(
    records: &[WindowRecord],
    cfg: &FeatureConfig,
) -> Result<String, PipelineError> {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(&RecordLineOut {
            source: &r.source,
            sample_id: r.sample_id,
            label: &r.label,
            window_index: r.window_index,
            duration_us: r.duration_us,
            config: cfg,
            vector: &r.vector,
        })?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a JSONL feature file, checking that every record was produced
/// under one configuration.
pub fn records_from_jsonl(text: &str) -> Result<(FeatureConfig, Vec<WindowRecord>), PipelineError> {
    let mut config: Option<FeatureConfig> = None;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLineIn = serde_json::from_str(line)
            .map_err(|e| PipelineError::Json(format!("line {}: {e}", lineno + 1)))?;
        match &config {
            None => config = Some(parsed.config),
            Some(c) if *c != parsed.config => {
                return Err(PipelineError::ConfigMismatch(format!(
                    "record {} was extracted under a different feature configuration",
                    lineno + 1
                )))
            }
            _ => {}
        }
        records.push(WindowRecord {
            source: parsed.source,
            sample_id: parsed.sample_id,
            label: parsed.label,
            window_index: parsed.window_index,
            duration_us: parsed.duration_us,
            vector: parsed.vector,
        });
    }
    let config = config
        .ok_or_else(|| PipelineError::InvalidInput("feature file contains no records".into()))?;
    Ok((config, records))
}

/// Column names for the CSV export, one per descriptor bin.
pub fn descriptor_bin_names(cfg: &FeatureConfig) -> Vec<String> {
    let mut names = Vec::with_capacity(cfg.descriptor_len());
    if cfg.descriptor.is_hoe() {
        for q in 1..=4 {
            for d in 1..=cfg.orientation.v {
                names.push(format!("q{q}_d{d}"));
            }
        }
    } else {
        for g in 1..=cfg.ring.directions {
            for c in 1..=cfg.ring.hemispheres {
                for r in 1..=cfg.ring.rings {
                    for d in 1..=cfg.ring.directions {
                        names.push(format!("g{g}_c{c}_r{r}_d{d}"));
                    }
                }
            }
        }
    }
    names
}

/// Serializes records as CSV with one named column per bin.
pub fn records_to_csv(records: &[WindowRecord], cfg: &FeatureConfig) -> String {
    let mut out = String::from("source,sample_id,label,window_index,duration_us");
    for name in descriptor_bin_names(cfg) {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.source,
            r.sample_id,
            r.label.as_deref().unwrap_or(""),
            r.window_index,
            r.duration_us
        ));
        for v in &r.vector {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

/// All windows of one sample, in window order.
#[derive(Debug, Clone)]
pub struct SampleWindows {
    pub sample_id: usize,
    pub source: String,
    pub label: Option<String>,
    pub vectors: Vec<Vec<f64>>,
    pub durations: Vec<u64>,
}

/// Groups flat records into per-sample window sequences (ordered by
/// window index within each sample).
pub fn group_by_sample(records: &[WindowRecord]) -> Vec<SampleWindows> {
    let mut by_sample: BTreeMap<usize, Vec<&WindowRecord>> = BTreeMap::new();
    for r in records {
        by_sample.entry(r.sample_id).or_default().push(r);
    }
    by_sample
        .into_iter()
        .map(|(sample_id, mut rows)| {
            rows.sort_by_key(|r| r.window_index);
            SampleWindows {
                sample_id,
                source: rows[0].source.clone(),
                label: rows[0].label.clone(),
                vectors: rows.iter().map(|r| r.vector.clone()).collect(),
                durations: rows.iter().map(|r| r.duration_us).collect(),
            }
        })
        .collect()
}

/// Classification outcome with its full provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: PipelineConfig,
    pub protocol: String,
    pub classes: Vec<String>,
    /// `confusion[true][predicted]` counts; sample-level for supervised
    /// protocols, window-level for the unsupervised one.
    pub confusion: Vec<Vec<usize>>,
    /// Total accuracy: trace / total, percent.
    pub ta_percent: Option<f64>,
    /// Per-window accuracy, percent.
    pub wa_percent: Option<f64>,
    /// Mean of per-class diagonal ratios, percent.
    pub balanced_percent: Option<f64>,
    pub mean_window_duration_us: f64,
    pub n_samples: usize,
    pub n_windows: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn accuracy_fields(confusion: &[Vec<usize>]) -> (Option<f64>, Option<f64>) {
    let total: usize = confusion.iter().map(|row| row.iter().sum::<usize>()).sum();
    if total == 0 {
        return (None, None);
    }
    let trace: usize = confusion.iter().enumerate().map(|(i, row)| row[i]).sum();
    let ta = 100.0 * trace as f64 / total as f64;
    let mut recalls = Vec::new();
    for (i, row) in confusion.iter().enumerate() {
        let row_total: usize = row.iter().sum();
        if row_total > 0 {
            recalls.push(row[i] as f64 / row_total as f64);
        }
    }
    let balanced = 100.0 * recalls.iter().sum::<f64>() / recalls.len() as f64;
    (Some(ta), Some(balanced))
}

fn mean_duration(samples: &[SampleWindows]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in samples {
        for &d in &s.durations {
            sum += d as f64;
        }
        count += s.durations.len();
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn sorted_classes(samples: &[SampleWindows]) -> Vec<String> {
    let mut classes: Vec<String> =
        samples.iter().filter_map(|s| s.label.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    classes.sort();
    classes
}

/// Unsupervised fit + evaluation outcome.
#[derive(Debug)]
pub struct GgmOutcome {
    pub model: GgmModel,
    /// Class name assigned to each cluster (by majority ground truth).
    pub cluster_names: Vec<Option<String>>,
    /// Fraction of windows whose cluster matches their own majority class.
    pub purity: Option<f64>,
    pub report: EvalReport,
}

/// Clusters all windows blindly, fits the Gaussian models, then classifies
/// every window with the memory rule. When ground-truth labels exist,
/// clusters are named by a greedy majority assignment and a window-level
/// confusion matrix is reported.
pub fn ggm_train_eval(
    samples: &[SampleWindows],
    k: usize,
    cfg: &PipelineConfig,
) -> Result<GgmOutcome, PipelineError> {
    if !cfg.features.descriptor.is_hoe() {
        return Err(PipelineError::InvalidInput(
            "the generative Gaussian model needs quadrant-histogram descriptors".into(),
        ));
    }
    let vectors: Vec<Vec<f64>> =
        samples.iter().flat_map(|s| s.vectors.iter().cloned()).collect();
    if vectors.len() < k {
        return Err(ClassifyError::TooFewSamples { needed: k, got: vectors.len() }.into());
    }
    let clustering = kmeans(&vectors, k, cfg.seed)?;
    let model = GgmModel::fit(&vectors, &clustering.labels, k, cfg.features.orientation.v)?;

    let classes = sorted_classes(samples);
    let truth: Vec<Option<usize>> = samples
        .iter()
        .flat_map(|s| {
            let idx = s.label.as_ref().and_then(|l| classes.iter().position(|c| c == l));
            std::iter::repeat(idx).take(s.vectors.len())
        })
        .collect();

    // greedy bijective cluster -> class naming by co-occurrence counts
    let mut cluster_names: Vec<Option<String>> = vec![None; k];
    let mut purity = None;
    if !classes.is_empty() {
        let mut counts = vec![vec![0usize; classes.len()]; k];
        for (cluster, class) in clustering.labels.iter().zip(&truth) {
            if let Some(class) = class {
                counts[*cluster][*class] += 1;
            }
        }
        let mut taken_cluster = vec![false; k];
        let mut taken_class = vec![false; classes.len()];
        for _ in 0..k.min(classes.len()) {
            let mut best = (0usize, 0usize, 0usize);
            let mut found = false;
            for c in 0..k {
                for l in 0..classes.len() {
                    if !taken_cluster[c] && !taken_class[l] && (!found || counts[c][l] > best.2) {
                        best = (c, l, counts[c][l]);
                        found = true;
                    }
                }
            }
            if !found {
                break;
            }
            taken_cluster[best.0] = true;
            taken_class[best.1] = true;
            cluster_names[best.0] = Some(classes[best.1].clone());
        }
        let pure: usize = (0..k).map(|c| counts[c].iter().max().copied().unwrap_or(0)).sum();
        let labeled: usize = truth.iter().filter(|t| t.is_some()).count();
        if labeled > 0 {
            purity = Some(pure as f64 / labeled as f64);
        }
    }

    // memory-smoothed classification per sample sequence
    let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
    let mut offset = 0usize;
    for s in samples {
        let scores: Vec<Vec<f64>> = s.vectors.iter().map(|v| model.score(v)).collect();
        let decided = classify_with_memory(&scores, cfg.alpha);
        if let Some(true_idx) =
            s.label.as_ref().and_then(|l| classes.iter().position(|c| c == l))
        {
            for &cluster in &decided {
                if let Some(name) = &cluster_names[cluster] {
                    let pred_idx = classes.iter().position(|c| c == name).unwrap();
                    confusion[true_idx][pred_idx] += 1;
                }
            }
        }
        offset += s.vectors.len();
    }
    debug_assert_eq!(offset, vectors.len());

    let (ta, balanced) = accuracy_fields(&confusion);
    let n_windows = vectors.len();
    let report = EvalReport {
        config: cfg.clone(),
        protocol: format!("ggm(k={k})"),
        classes,
        confusion,
        ta_percent: ta,
        wa_percent: ta, // window-level protocol: samples are windows
        balanced_percent: balanced,
        mean_window_duration_us: mean_duration(samples),
        n_samples: samples.len(),
        n_windows,
    };
    Ok(GgmOutcome { model, cluster_names, purity, report })
}

/// Re-scores fitted models under a sweep of memory factors, returning
/// `(alpha, balanced window accuracy %)` rows.
pub fn ggm_alpha_sweep(
    samples: &[SampleWindows],
    outcome: &GgmOutcome,
    alphas: &[f64],
) -> Vec<(f64, Option<f64>)> {
    let classes = &outcome.report.classes;
    alphas
        .iter()
        .map(|&alpha| {
            let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
            for s in samples {
                let scores: Vec<Vec<f64>> =
                    s.vectors.iter().map(|v| outcome.model.score(v)).collect();
                let decided = classify_with_memory(&scores, alpha);
                if let Some(true_idx) =
                    s.label.as_ref().and_then(|l| classes.iter().position(|c| c == l))
                {
                    for &cluster in &decided {
                        if let Some(name) = &outcome.cluster_names[cluster] {
                            let pred_idx = classes.iter().position(|c| c == name).unwrap();
                            confusion[true_idx][pred_idx] += 1;
                        }
                    }
                }
            }
            (alpha, accuracy_fields(&confusion).1)
        })
        .collect()
}

/// Supervised evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    LeaveOneOut,
    KFold(usize),
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::LeaveOneOut => f.write_str("loo"),
            Protocol::KFold(n) => write!(f, "kfold:{n}"),
        }
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "loo" {
            return Ok(Protocol::LeaveOneOut);
        }
        if let Some(n) = s.strip_prefix("kfold:") {
            let n: usize = n.parse().map_err(|_| format!("bad fold count in {s:?}"))?;
            return Ok(Protocol::KFold(n));
        }
        Err(format!("unknown protocol {s:?} (expected loo or kfold:<n>)"))
    }
}

fn class_index(classes: &[String], label: &Option<String>) -> Result<usize, PipelineError> {
    label
        .as_ref()
        .and_then(|l| classes.iter().position(|c| c == l))
        .ok_or_else(|| PipelineError::InvalidInput("supervised protocols need labeled samples".into()))
}

/// Trains the one-against-one ensemble on training-fold windows and
/// classifies each held-out sample by memory-smoothed per-window coupled
/// probabilities followed by a majority vote.
pub fn svm_eval(
    samples: &[SampleWindows],
    protocol: Protocol,
    cfg: &PipelineConfig,
) -> Result<EvalReport, PipelineError> {
    if samples.is_empty() {
        return Err(PipelineError::InvalidInput("no samples to evaluate".into()));
    }
    let classes = sorted_classes(samples);
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClass.into());
    }
    let truth: Vec<usize> = samples
        .iter()
        .map(|s| class_index(&classes, &s.label))
        .collect::<Result<_, _>>()?;

    // fold assignment per sample
    let folds: Vec<Vec<usize>> = match protocol {
        Protocol::LeaveOneOut => (0..samples.len()).map(|i| vec![i]).collect(),
        Protocol::KFold(n) => {
            if n < 2 || n > samples.len() {
                return Err(PipelineError::InvalidInput(format!(
                    "fold count {n} out of range for {} samples",
                    samples.len()
                )));
            }
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut order: Vec<usize> = (0..samples.len()).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            order.shuffle(&mut rng);
            let mut folds = vec![Vec::new(); n];
            for (i, &s) in order.iter().enumerate() {
                folds[i % n].push(s);
            }
            folds
        }
    };

    let kernel = cfg.kernel();
    let params = cfg.train_params();
    let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
    let mut window_hits = 0usize;
    let mut window_total = 0usize;
    for fold in &folds {
        let held: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            if held.contains(&i) {
                continue;
            }
            for v in &s.vectors {
                x.push(v.clone());
                y.push(truth[i]);
            }
        }
        let ensemble = SvmEnsemble::train(&x, &y, classes.len(), kernel, &params).map_err(
            |e| match e {
                ClassifyError::MissingClass(idx) => {
                    let name = idx
                        .parse::<usize>()
                        .ok()
                        .and_then(|i| classes.get(i).cloned())
                        .unwrap_or(idx);
                    PipelineError::Classify(ClassifyError::MissingClass(name))
                }
                other => PipelineError::Classify(other),
            },
        )?;
        for &i in fold {
            let sample = &samples[i];
            let scores: Vec<Vec<f64>> =
                sample.vectors.iter().map(|v| ensemble.predict_proba(v)).collect();
            let decided = classify_with_memory(&scores, cfg.alpha);
            window_total += decided.len();
            window_hits += decided.iter().filter(|&&d| d == truth[i]).count();
            if let Some(vote) = majority_vote(&decided, classes.len()) {
                confusion[truth[i]][vote] += 1;
            }
        }
    }

    let (ta, balanced) = accuracy_fields(&confusion);
    let wa = if window_total > 0 {
        Some(100.0 * window_hits as f64 / window_total as f64)
    } else {
        None
    };
    Ok(EvalReport {
        config: cfg.clone(),
        protocol: protocol.to_string(),
        classes,
        confusion,
        ta_percent: ta,
        wa_percent: wa,
        balanced_percent: balanced,
        mean_window_duration_us: mean_duration(samples),
        n_samples: samples.len(),
        n_windows: window_total,
    })
}

// ---------------------------------------------------------------------------
// model persistence
// ---------------------------------------------------------------------------

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Persisted unsupervised model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgmModelFile {
    pub format_version: u32,
    pub config: PipelineConfig,
    pub cluster_names: Vec<Option<String>>,
    pub model: GgmModel,
}

/// Persisted supervised model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModelFile {
    pub format_version: u32,
    pub config: PipelineConfig,
    pub classes: Vec<String>,
    pub ensemble: SvmEnsemble,
}

fn check_feature_config(
    model: &FeatureConfig,
    features: &FeatureConfig,
) -> Result<(), PipelineError> {
    if model != features {
        return Err(PipelineError::ConfigMismatch(
            "model was fitted under a different feature configuration".into(),
        ));
    }
    Ok(())
}

impl GgmModelFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let mut file: Self = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(PipelineError::InvalidInput(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        file.model.rebuild_caches()?;
        Ok(file)
    }

    /// Scores grouped samples that were extracted under `features`;
    /// refuses mismatched configurations.
    pub fn score_samples(
        &self,
        features: &FeatureConfig,
        samples: &[SampleWindows],
        alpha: f64,
    ) -> Result<Vec<Vec<usize>>, PipelineError> {
        check_feature_config(&self.config.features, features)?;
        Ok(samples
            .iter()
            .map(|s| {
                let scores: Vec<Vec<f64>> = s.vectors.iter().map(|v| self.model.score(v)).collect();
                classify_with_memory(&scores, alpha)
            })
            .collect())
    }
}

impl SvmModelFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let file: Self = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(PipelineError::InvalidInput(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        Ok(file)
    }

    /// Per-sample predicted class indices; refuses mismatched configurations.
    pub fn classify_samples(
        &self,
        features: &FeatureConfig,
        samples: &[SampleWindows],
        alpha: f64,
    ) -> Result<Vec<usize>, PipelineError> {
        check_feature_config(&self.config.features, features)?;
        Ok(samples
            .iter()
            .map(|s| {
                let scores: Vec<Vec<f64>> =
                    s.vectors.iter().map(|v| self.ensemble.predict_proba(v)).collect();
                let decided = classify_with_memory(&scores, alpha);
                majority_vote(&decided, self.classes.len()).unwrap_or(0)
            })
            .collect())
    }
}

/// Trains the ensemble on every sample (no held-out protocol) for
/// persistence.
pub fn svm_train_full(
    samples: &[SampleWindows],
    cfg: &PipelineConfig,
) -> Result<SvmModelFile, PipelineError> {
    let classes = sorted_classes(samples);
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClass.into());
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in samples {
        let idx = class_index(&classes, &s.label)?;
        for v in &s.vectors {
            x.push(v.clone());
            y.push(idx);
        }
    }
    let ensemble = SvmEnsemble::train(&x, &y, classes.len(), cfg.kernel(), &cfg.train_params())?;
    Ok(SvmModelFile {
        format_version: MODEL_FORMAT_VERSION,
        config: cfg.clone(),
        classes,
        ensemble,
    })
}

// ---------------------------------------------------------------------------
// window-length sweep
// ---------------------------------------------------------------------------

/// One row of the window-length sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub b: usize,
    pub accuracy_percent: Option<f64>,
    pub wa_percent: Option<f64>,
    pub mean_window_duration_us: f64,
    pub n_windows: usize,
}

/// Runs the configured pipeline once per window length. The step scales
/// with the window (`b = max(1, n * b_ratio)`), mirroring the overlap of
/// the reference configuration.
pub fn window_length_sweep(
    streams: &[EventStream],
    cfg: &PipelineConfig,
    n_values: &[usize],
    b_ratio: f64,
) -> Result<Vec<SweepRow>, PipelineError> {
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let b = ((n as f64 * b_ratio).round() as usize).max(1).min(n);
        let mut cfg_n = cfg.clone();
        cfg_n.features.framing = FramingConfig { n, b };
        let mut records = Vec::new();
        for (i, stream) in streams.iter().enumerate() {
            records.extend(extract_stream(stream, &cfg_n.features, &format!("stream{i}"), i)?);
        }
        let samples = group_by_sample(&records);
        let report = match cfg.classifier {
            ClassifierKind::Ggm => {
                let k = sorted_classes(&samples).len().max(2);
                ggm_train_eval(&samples, k, &cfg_n)?.report
            }
            _ => svm_eval(&samples, Protocol::LeaveOneOut, &cfg_n)?,
        };
        rows.push(SweepRow {
            n,
            b,
            accuracy_percent: report.ta_percent,
            wa_percent: report.wa_percent,
            mean_window_duration_us: report.mean_window_duration_us,
            n_windows: report.n_windows,
        });
    }
    Ok(rows)
}

/// Sweep rows as a plain CSV with a header line.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,b,accuracy_percent,wa_percent,mean_window_duration_us,n_windows\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.b,
            r.accuracy_percent.map(|v| v.to_string()).unwrap_or_default(),
            r.wa_percent.map(|v| v.to_string()).unwrap_or_default(),
            r.mean_window_duration_us,
            r.n_windows
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Polarity};
    use crate::synth::{build_suit_corpus, CorpusParams};

    fn tiny_corpus() -> Vec<(EventStream, crate::dataset::SuitClass)> {
        build_suit_corpus(&CorpusParams {
            streams_per_class: 1,
            duration: 0.5,
            noise_fraction: 0.0,
            ..CorpusParams::default()
        })
        .unwrap()
    }

    fn hoe_config() -> PipelineConfig {
        PipelineConfig::default()
    }

    #[test]
    fn extraction_counts_follow_framing() {
        let corpus = tiny_corpus();
        let cfg = hoe_config();
        let records =
            extract_stream(&corpus[0].0, &cfg.features, "s0", 0).unwrap();
        let expected = (corpus[0].0.len() - 150) / 50 + 1;
        assert_eq!(records.len(), expected);
        assert_eq!(records[0].vector.len(), 16);
        assert!(records.iter().all(|r| r.label.is_some()));
    }

    #[test]
    fn jsonl_roundtrip_preserves_records_and_config() {
        let corpus = tiny_corpus();
        let cfg = hoe_config();
        let records = extract_stream(&corpus[0].0, &cfg.features, "s0", 0).unwrap();
        let text = records_to_jsonl(&records, &cfg.features).unwrap();
        let (config, parsed) = records_from_jsonl(&text).unwrap();
        assert_eq!(config, cfg.features);
        assert_eq!(parsed, records);
    }

    #[test]
    fn mixed_config_files_are_rejected() {
        let corpus = tiny_corpus();
        let cfg_a = hoe_config();
        let mut cfg_b = hoe_config();
        cfg_b.features.framing = FramingConfig { n: 100, b: 25 };
        let rec_a = extract_stream(&corpus[0].0, &cfg_a.features, "a", 0).unwrap();
        let rec_b = extract_stream(&corpus[0].0, &cfg_b.features, "b", 1).unwrap();
        let mut text = records_to_jsonl(&rec_a, &cfg_a.features).unwrap();
        text.push_str(&records_to_jsonl(&rec_b, &cfg_b.features).unwrap());
        assert!(matches!(
            records_from_jsonl(&text),
            Err(PipelineError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn segment_framing_discards_straddling_windows() {
        // two 300-event segments; windows crossing index 300 are dropped
        let events: Vec<Event> = (0..600)
            .map(|i| Event {
                x: (i % 100) as u16 + 10,
                y: (i / 10 % 100) as u16 + 5,
                t: i as u64 * 13,
                pol: Polarity::On,
            })
            .collect();
        let stream = EventStream::new(128, 128, events).unwrap();
        let segments = vec![
            LabelSegment { start: 0, end: 300, label: "a".into() },
            LabelSegment { start: 300, end: 600, label: "b".into() },
        ];
        let cfg = hoe_config();
        let (records, discarded) =
            extract_stream_with_segments(&stream, &segments, &cfg.features, "s").unwrap();
        // windows at 0..=150 start fit in segment a: starts 0, 50, 100, 150;
        // starts 200, 250 straddle; 300, 350, 400, 450 fit in b
        assert_eq!(discarded, 2);
        assert_eq!(records.len(), 8);
        assert!(records.iter().take(4).all(|r| r.label.as_deref() == Some("a")));
        assert!(records.iter().skip(4).all(|r| r.label.as_deref() == Some("b")));
    }

    #[test]
    fn ggm_pipeline_on_clean_corpus() {
        let corpus = tiny_corpus();
        let cfg = hoe_config();
        let mut records = Vec::new();
        for (i, (stream, _)) in corpus.iter().enumerate() {
            records.extend(extract_stream(stream, &cfg.features, &format!("s{i}"), i).unwrap());
        }
        let samples = group_by_sample(&records);
        let outcome = ggm_train_eval(&samples, 4, &cfg).unwrap();
        assert!(outcome.purity.unwrap() > 0.8, "purity {:?}", outcome.purity);
        assert_eq!(outcome.report.classes.len(), 4);
        let row_sums: Vec<usize> =
            outcome.report.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums.iter().sum::<usize>(), outcome.report.n_windows);
    }

    #[test]
    fn ggm_needs_quadrant_descriptors() {
        let mut cfg = hoe_config();
        cfg.features.descriptor = DescriptorKind::Esc;
        let samples = vec![];
        assert!(matches!(
            ggm_train_eval(&samples, 4, &cfg),
            Err(PipelineError::InvalidInput(_))
        ));
    }

    #[test]
    fn svm_loo_has_one_fold_per_sample() {
        let corpus = build_suit_corpus(&CorpusParams {
            streams_per_class: 2,
            duration: 0.35,
            noise_fraction: 0.0,
            ..CorpusParams::default()
        })
        .unwrap();
        let mut cfg = hoe_config();
        cfg.classifier = ClassifierKind::SvmLinear;
        cfg.svm_c = 10.0;
        let mut records = Vec::new();
        for (i, (stream, _)) in corpus.iter().enumerate() {
            records.extend(extract_stream(stream, &cfg.features, &format!("s{i}"), i).unwrap());
        }
        let samples = group_by_sample(&records);
        let report = svm_eval(&samples, Protocol::LeaveOneOut, &cfg).unwrap();
        let total: usize = report.confusion.iter().map(|r| r.iter().sum::<usize>()).sum();
        assert_eq!(total, samples.len(), "every sample evaluated exactly once");
        assert!(report.ta_percent.unwrap() > 50.0);
    }

    #[test]
    fn kfold_validation_errors() {
        let corpus = tiny_corpus();
        let cfg = hoe_config();
        let mut records = Vec::new();
        for (i, (stream, _)) in corpus.iter().enumerate() {
            records.extend(extract_stream(stream, &cfg.features, &format!("s{i}"), i).unwrap());
        }
        let samples = group_by_sample(&records);
        assert!(matches!(
            svm_eval(&samples, Protocol::KFold(1), &cfg),
            Err(PipelineError::InvalidInput(_))
        ));
        // 4 samples, 2 folds: some fold must miss a class
        let result = svm_eval(&samples, Protocol::KFold(2), &cfg);
        assert!(matches!(
            result,
            Err(PipelineError::Classify(ClassifyError::MissingClass(_)))
        ));
    }

    #[test]
    fn reports_are_reproducible() {
        let corpus = tiny_corpus();
        let cfg = hoe_config();
        let run = || {
            let mut records = Vec::new();
            for (i, (stream, _)) in corpus.iter().enumerate() {
                records
                    .extend(extract_stream(stream, &cfg.features, &format!("s{i}"), i).unwrap());
            }
            let samples = group_by_sample(&records);
            ggm_train_eval(&samples, 4, &cfg).unwrap().report.to_json()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn model_files_refuse_foreign_configs() {
        let corpus = tiny_corpus();
        let cfg = hoe_config();
        let mut records = Vec::new();
        for (i, (stream, _)) in corpus.iter().enumerate() {
            records.extend(extract_stream(stream, &cfg.features, &format!("s{i}"), i).unwrap());
        }
        let samples = group_by_sample(&records);
        let outcome = ggm_train_eval(&samples, 4, &cfg).unwrap();
        let file = GgmModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: cfg.clone(),
            cluster_names: outcome.cluster_names.clone(),
            model: outcome.model.clone(),
        };
        let reloaded = GgmModelFile::from_json(&file.to_json()).unwrap();
        assert!(reloaded.score_samples(&cfg.features, &samples, 0.75).is_ok());
        let mut other = cfg.features;
        other.framing = FramingConfig { n: 100, b: 50 };
        assert!(matches!(
            reloaded.score_samples(&other, &samples, 0.75),
            Err(PipelineError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn sweep_emits_one_row_per_window_length() {
        let corpus = tiny_corpus();
        let streams: Vec<EventStream> = corpus.into_iter().map(|(s, _)| s).collect();
        let cfg = hoe_config();
        let rows = window_length_sweep(&streams, &cfg, &[100, 150, 200], 1.0 / 3.0).unwrap();
        assert_eq!(rows.len(), 3);
        let csv = sweep_to_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("n,b,"));
    }
}
