use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::mcd::{mcd_dtw, DEFAULT_N_MFCC};
use super::pitch::{periodicity_error, pitch_voicing, vuv_f1, PitchConfig};
use super::stft_distance::{mstft, Resolution, DEFAULT_RESOLUTIONS};
use crate::dsp::{wav_read, Waveform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Mstft,
    Mcd,
    Periodicity,
    VuvF1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Mstft, Metric::Mcd, Metric::Periodicity, Metric::VuvF1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mstft => "mstft",
            Metric::Mcd => "mcd",
            Metric::Periodicity => "periodicity",
            Metric::VuvF1 => "vuv_f1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::invalid(
                "metrics",
                format!("unknown metric '{s}' (accepted: mstft, mcd, periodicity, vuv_f1)"),
            )
        })
    }
}

/// Parses a comma-separated metric list; output follows the canonical order.
pub fn parse_metric_list(s: &str) -> Result<Vec<Metric>> {
    let set: BTreeSet<Metric> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if set.is_empty() {
        return Err(Error::invalid("metrics", "no metrics selected"));
    }
    Ok(set.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub metrics: Vec<Metric>,
    pub resolutions: Vec<Resolution>,
    pub n_mfcc: usize,
    /// Pitch settings; `None` derives them from each file's sample rate.
    pub pitch: Option<PitchConfig>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            metrics: Metric::ALL.to_vec(),
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            n_mfcc: DEFAULT_N_MFCC,
            pitch: None,
        }
    }
}

/// Metric values for one reference/degraded pair, in `EvalConfig::metrics` order.
#[derive(Debug, Clone, PartialEq)]
pub struct FileMetrics {
    pub file: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metrics: Vec<Metric>,
    pub files: Vec<FileMetrics>,
    pub macro_avg: Vec<f64>,
    /// Files present in only one directory.
    pub unmatched: Vec<String>,
    /// Matched files that could not be evaluated, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl MetricReport {
    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.metrics
            .iter()
            .position(|&m| m == metric)
            .map(|i| self.macro_avg[i])
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let err = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        let mut header = vec!["file".to_string()];
        header.extend(self.metrics.iter().map(|m| m.name().to_string()));
        w.write_record(&header).map_err(err)?;
        for f in &self.files {
            let mut row = vec![f.file.clone()];
            row.extend(f.values.iter().map(f64::to_string));
            w.write_record(&row).map_err(err)?;
        }
        let mut row = vec!["MACRO_AVG".to_string()];
        row.extend(self.macro_avg.iter().map(f64::to_string));
        w.write_record(&row).map_err(err)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Every selected metric for one pair; `reference` is the first argument of
/// each metric.
pub fn evaluate_pair(reference: &Waveform, degraded: &Waveform, cfg: &EvalConfig) -> Result<Vec<f64>> {
    let mut tracks = None;
    let mut pitch = |r: &Waveform, d: &Waveform| -> Result<_> {
        if tracks.is_none() {
            let pc = cfg.pitch.unwrap_or_else(|| PitchConfig::for_rate(r.sample_rate()));
            let n = r.len().min(d.len());
            let cut = |w: &Waveform| Waveform::new(w.samples()[..n].to_vec(), w.sample_rate());
            tracks = Some((pitch_voicing(&cut(r)?, &pc)?, pitch_voicing(&cut(d)?, &pc)?));
        }
        Ok(tracks.clone().expect("just computed"))
    };
    cfg.metrics
        .iter()
        .map(|m| match m {
            Metric::Mstft => mstft(reference, degraded, &cfg.resolutions),
            Metric::Mcd => mcd_dtw(reference, degraded, cfg.n_mfcc),
            Metric::Periodicity => {
                let (a, b) = pitch(reference, degraded)?;
                periodicity_error(&a, &b)
            }
            Metric::VuvF1 => {
                let (a, b) = pitch(reference, degraded)?;
                vuv_f1(&a, &b)
            }
        })
        .collect()
}

fn wav_names(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path: PathBuf = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string());
            }
        }
    }
    Ok(out)
}

/// Evaluates every WAV present under the same name in both directories, in
/// filename order. Unreadable pairs are skipped with a warning.
pub fn evaluate_pairs(ref_dir: impl AsRef<Path>, deg_dir: impl AsRef<Path>, cfg: &EvalConfig) -> Result<MetricReport> {
    let (ref_dir, deg_dir) = (ref_dir.as_ref(), deg_dir.as_ref());
    if cfg.metrics.is_empty() {
        return Err(Error::invalid("evaluate_pairs", "no metrics selected"));
    }
    let refs = wav_names(ref_dir)?;
    let degs = wav_names(deg_dir)?;
    let unmatched: Vec<String> = refs.symmetric_difference(&degs).cloned().collect();
    for name in &unmatched {
        log::warn!("{name}: present in only one directory, skipped");
    }
    let matched: Vec<&String> = refs.intersection(&degs).collect();
    if matched.is_empty() {
        return Err(Error::invalid(
            "evaluate_pairs",
            format!(
                "no matching WAV filenames between {} and {}",
                ref_dir.display(),
                deg_dir.display()
            ),
        ));
    }
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for name in matched {
        let result = wav_read(ref_dir.join(name))
            .and_then(|r| Ok((r, wav_read(deg_dir.join(name))?)))
            .and_then(|(r, d)| evaluate_pair(&r, &d, cfg));
        match result {
            Ok(values) => files.push(FileMetrics {
                file: name.clone(),
                values,
            }),
            Err(e) => {
                log::warn!("{name}: skipped ({e})");
                skipped.push((name.clone(), e.to_string()));
            }
        }
    }
    if files.is_empty() {
        return Err(Error::invalid(
            "evaluate_pairs",
            "every matched pair failed to evaluate",
        ));
    }
    let macro_avg = (0..cfg.metrics.len())
        .map(|i| files.iter().map(|f| f.values[i]).sum::<f64>() / files.len() as f64)
        .collect();
    Ok(MetricReport {
        metrics: cfg.metrics.clone(),
        files,
        macro_avg,
        unmatched,
        skipped,
    })
}
