use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_mask, write_filter};
use crate::masking::{
    apply_complex_mask, oracle_complex_mask_clipped, oracle_real_mask_capped, spec_mse, spectral_map_dereverb,
    ComplexMask, RealMask,
};
use crate::metrics::{early_to_late_ratio_with_reference, si_snr, srmr, MetricReport, SRMR_SAMPLE_RATE};
use crate::stft::{istft_mono, stft_mono, Spectrogram, Waveform};
use crate::wav::{read_wav, read_wav_expecting, write_wav, WavEncoding};
use crate::wpe::{dnn_wpe, wpe_iterative, WpeFilter};

use super::config::{DereverbMethod, MaskProvider, PipelineConfig, ScoreReference, Stage};
use super::manifest::{Manifest, UtteranceManifest};

/// Ground-truth target images at the reference microphone, trimmed or
/// zero-padded to the mixture length.
#[derive(Clone, Debug, Default)]
pub struct GroundTruth {
    pub reverberant: Option<Waveform>,
    pub early: Option<Waveform>,
    pub anechoic: Option<Waveform>,
}

impl GroundTruth {
    pub fn load(utt: &UtteranceManifest, sample_rate: u32, len: usize) -> Result<Self> {
        let load = |p: &Option<PathBuf>| -> Result<Option<Waveform>> {
            p.as_ref()
                .map(|p| {
                    let w = read_wav_expecting(p, sample_rate).map_err(|e| with_path(e, p))?;
                    if w.num_channels() != 1 {
                        return Err(Error::Format {
                            path: p.clone(),
                            reason: format!("ground truth must be single-channel, found {} channels", w.num_channels()),
                        });
                    }
                    Ok(w.resized(len))
                })
                .transpose()
        };
        Ok(Self {
            reverberant: load(&utt.reverberant)?,
            early: load(&utt.early)?,
            anechoic: load(&utt.anechoic)?,
        })
    }

    pub fn get(&self, reference: ScoreReference) -> Option<&Waveform> {
        match reference {
            ScoreReference::Reverberant | ScoreReference::Auto => self.reverberant.as_ref(),
            ScoreReference::Early => self.early.as_ref(),
            ScoreReference::Anechoic => self.anechoic.as_ref(),
        }
    }

    fn require(&self, reference: ScoreReference, id: &str) -> Result<&Waveform> {
        self.get(reference).ok_or_else(|| {
            Error::MissingGroundTruth(format!("utterance {id} has no {} reference", reference.name()))
        })
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Format { .. } | Error::SampleRateMismatch { .. } => e,
        other => Error::Format {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

fn load_mixture(utt: &UtteranceManifest) -> Result<(Waveform, usize)> {
    let mixture = read_wav(&utt.mixture).map_err(|e| with_path(e, &utt.mixture))?;
    let reference = match &utt.geometry {
        Some(g) => {
            if g.num_mics() != mixture.num_channels() {
                return Err(Error::ShapeMismatch {
                    expected: vec![g.num_mics()],
                    actual: vec![mixture.num_channels()],
                });
            }
            g.reference_index
        }
        None => 0,
    };
    Ok((mixture, reference))
}

fn file_mask(provider: &MaskProvider, id: &str) -> Result<(PathBuf, crate::formats::MaskFile)> {
    let path = provider.mask_path(id).expect("file provider");
    let mask = read_mask(&path)?;
    Ok((path, mask))
}

fn complex_mask(
    provider: &MaskProvider,
    id: &str,
    target: impl FnOnce() -> Result<Spectrogram>,
    observed: &Spectrogram,
    clip: f64,
) -> Result<ComplexMask> {
    match provider {
        MaskProvider::Oracle => oracle_complex_mask_clipped(&target()?, observed, clip),
        MaskProvider::File(_) => {
            let (path, mask) = file_mask(provider, id)?;
            mask.into_complex(&path)
        }
    }
}

fn real_mask(
    provider: &MaskProvider,
    id: &str,
    target: impl FnOnce() -> Result<Spectrogram>,
    observed: &Spectrogram,
    mask_max: f64,
) -> Result<RealMask> {
    match provider {
        MaskProvider::Oracle => oracle_real_mask_capped(&target()?, observed, mask_max),
        MaskProvider::File(_) => {
            let (path, mask) = file_mask(provider, id)?;
            mask.into_real(&path)
        }
    }
}

/// Output waveform (reference-channel length) and, for WPE variants, the
/// final prediction filter.
pub struct Enhanced {
    pub output: Waveform,
    pub filter: Option<WpeFilter>,
    pub ground_truth: GroundTruth,
}

/// Runs the configured stage chain on one utterance's reference channel.
pub fn enhance_utterance(config: &PipelineConfig, utt: &UtteranceManifest) -> Result<Enhanced> {
    let (mixture, reference) = load_mixture(utt)?;
    let y = mixture.select_channel(reference)?;
    let ground_truth = GroundTruth::load(utt, y.sample_rate(), y.len())?;
    let spec_of = |r: ScoreReference| -> Result<Spectrogram> { stft_mono(ground_truth.require(r, &utt.id)?, &config.stft) };

    let mut current = stft_mono(&y, &config.stft)?;
    let mut filter = None;
    for stage in &config.stages {
        current = match stage {
            Stage::Separate => {
                let provider = config.masks.separate.as_ref().ok_or_else(|| Error::InvalidConfig("missing separation mask".into()))?;
                let mask = complex_mask(provider, &utt.id, || spec_of(ScoreReference::Reverberant), &current, config.mask_clip)?;
                apply_complex_mask(&mask, &current)?
            }
            Stage::Dereverb => match config.dereverb_method {
                DereverbMethod::Wpe => {
                    let out = wpe_iterative(&current, &config.wpe)?;
                    filter = Some(out.filter);
                    out.output
                }
                DereverbMethod::DnnWpe => {
                    let provider = config.masks.dereverb.as_ref().ok_or_else(|| Error::InvalidConfig("missing dereverberation mask".into()))?;
                    let mask = real_mask(provider, &utt.id, || spec_of(ScoreReference::Early), &current, config.mask_max)?;
                    let out = dnn_wpe(&current, &mask, &config.wpe)?;
                    filter = Some(out.filter);
                    out.output
                }
                DereverbMethod::Specmap => {
                    let provider = config.masks.dereverb.as_ref().ok_or_else(|| Error::InvalidConfig("missing dereverberation mask".into()))?;
                    let mask = complex_mask(provider, &utt.id, || spec_of(ScoreReference::Anechoic), &current, config.mask_clip)?;
                    spectral_map_dereverb(&mask, &current)?
                }
            },
        };
    }
    Ok(Enhanced {
        output: istft_mono(&current)?,
        filter,
        ground_truth,
    })
}

/// Metrics of `output` against whatever ground truth is available; metrics
/// whose inputs are missing are left unset.
pub fn score_utterance(
    config: &PipelineConfig,
    id: &str,
    output: &Waveform,
    ground_truth: &GroundTruth,
) -> Result<MetricReport> {
    let reference = config.resolved_reference();
    let mut report = MetricReport {
        utterance_id: id.to_string(),
        ..Default::default()
    };
    if let Some(r) = ground_truth.get(reference) {
        let r = r.resized(output.len());
        report.reference = Some(reference.name().to_string());
        if config.metrics.si_snr {
            report.si_snr_db = Some(si_snr(output, &r)?);
        }
        if config.metrics.spec_mse {
            report.spec_mse = Some(spec_mse(&stft_mono(output, &config.stft)?, &stft_mono(&r, &config.stft)?)?);
        }
    }
    if config.metrics.srmr && output.sample_rate() == SRMR_SAMPLE_RATE && output.len() >= SRMR_SAMPLE_RATE as usize {
        report.srmr = Some(srmr(output)?);
    }
    if config.metrics.early_late {
        if let Some(e) = &ground_truth.early {
            report.early_late_db = Some(early_to_late_ratio_with_reference(e, output)?);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub utterance_id: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
}

impl SummaryStats {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        };
        Self {
            count: n,
            median: Some(median),
            mean: Some(values.iter().sum::<f64>() / n as f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: u32,
    pub stages: Vec<Stage>,
    pub dereverb_method: DereverbMethod,
    pub reference: String,
    pub utterances: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub failures: Vec<Failure>,
    pub si_snr_db: SummaryStats,
    pub srmr: SummaryStats,
    pub early_late_db: SummaryStats,
    pub spec_mse: SummaryStats,
}

impl Summary {
    pub fn new(config: &PipelineConfig, reports: &[MetricReport], failures: Vec<Failure>) -> Self {
        let collect = |f: fn(&MetricReport) -> Option<f64>| SummaryStats::from_values(reports.iter().filter_map(f).collect());
        Self {
            version: super::config::CONFIG_VERSION,
            stages: config.stages.clone(),
            dereverb_method: config.dereverb_method,
            reference: config.resolved_reference().name().to_string(),
            utterances: reports.len() + failures.len(),
            succeeded: reports.len(),
            failed: failures.len(),
            failures,
            si_snr_db: collect(|r| r.si_snr_db),
            srmr: collect(|r| r.srmr),
            early_late_db: collect(|r| r.early_late_db),
            spec_mse: collect(|r| r.spec_mse),
        }
    }

    /// Plain-text table for terminals.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16}{:>8}{:>14}{:>14}", "metric", "count", "median", "mean");
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        for (name, st) in [
            ("si_snr_db", &self.si_snr_db),
            ("srmr", &self.srmr),
            ("early_late_db", &self.early_late_db),
            ("spec_mse", &self.spec_mse),
        ] {
            let _ = writeln!(s, "{:<16}{:>8}{:>14}{:>14}", name, st.count, fmt(st.median), fmt(st.mean));
        }
        let _ = writeln!(s, "utterances: {}  succeeded: {}  failed: {}", self.utterances, self.succeeded, self.failed);
        for f in &self.failures {
            let _ = writeln!(s, "  FAILED {}: {}", f.utterance_id, f.error);
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub reports: Vec<MetricReport>,
    pub summary: Summary,
}

impl PipelineRun {
    pub fn has_failures(&self) -> bool {
        self.summary.failed > 0
    }
}

fn write_reports(dir: &Path, stem: &str, reports: &[MetricReport], summary: &Summary) -> Result<()> {
    let mut lines = String::new();
    for r in reports {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    std::fs::write(dir.join(format!("{stem}.jsonl")), lines)?;
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(dir.join(format!("{stem}_summary.json")), text)?;
    Ok(())
}

fn split_results(
    manifest: &Manifest,
    results: Vec<Result<MetricReport>>,
) -> (Vec<MetricReport>, Vec<Failure>) {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (utt, r) in manifest.utterances.iter().zip(results) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => failures.push(Failure {
                utterance_id: utt.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    (reports, failures)
}

/// Enhances and scores every utterance in parallel. Writes
/// `<out>/<id>.wav` (float32), `<out>/<id>.wpef` for WPE variants,
/// `<out>/report.jsonl` and `<out>/report_summary.json`. Per-utterance
/// errors are recorded in the summary instead of aborting the run.
pub fn run_pipeline(config: &PipelineConfig, manifest: &Manifest) -> Result<PipelineRun> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    let results: Vec<Result<MetricReport>> = manifest
        .utterances
        .par_iter()
        .map(|utt| {
            let enhanced = enhance_utterance(config, utt)?;
            if config.write_audio {
                write_wav(out.join(format!("{}.wav", utt.id)), &enhanced.output, WavEncoding::Float32)?;
                if let Some(f) = &enhanced.filter {
                    write_filter(out.join(format!("{}.wpef", utt.id)), f)?;
                }
            }
            score_utterance(config, &utt.id, &enhanced.output, &enhanced.ground_truth)
        })
        .collect();
    let (reports, failures) = split_results(manifest, results);
    let summary = Summary::new(config, &reports, failures);
    write_reports(out, "report", &reports, &summary)?;
    Ok(PipelineRun { reports, summary })
}

/// Scores previously enhanced `<enhanced_dir>/<id>.wav` files. Writes
/// `<out>/scores.jsonl` and `<out>/scores_summary.json`.
pub fn score_outputs(config: &PipelineConfig, manifest: &Manifest, enhanced_dir: &Path) -> Result<PipelineRun> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    let results: Vec<Result<MetricReport>> = manifest
        .utterances
        .par_iter()
        .map(|utt| {
            let path = enhanced_dir.join(format!("{}.wav", utt.id));
            let output = read_wav(&path).map_err(|e| with_path(e, &path))?;
            let output = if output.num_channels() == 1 {
                output
            } else {
                let (_, reference) = load_mixture(utt)?;
                output.select_channel(reference)?
            };
            let gt = GroundTruth::load(utt, output.sample_rate(), output.len())?;
            score_utterance(config, &utt.id, &output, &gt)
        })
        .collect();
    let (reports, failures) = split_results(manifest, results);
    let summary = Summary::new(config, &reports, failures);
    write_reports(out, "scores", &reports, &summary)?;
    Ok(PipelineRun { reports, summary })
}
