use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{CLIP_MAGNITUDE, REAL_MASK_MAX};
use crate::stft::StftConfig;
use crate::wpe::WpeConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Separate,
    Dereverb,
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "separate" => Ok(Stage::Separate),
            "dereverb" => Ok(Stage::Dereverb),
            other => Err(Error::InvalidConfig(format!("unknown stage {other:?}"))),
        }
    }
}

impl Stage {
    /// Parses a comma-separated list; the empty string is the empty chain.
    pub fn parse_list(s: &str) -> Result<Vec<Stage>> {
        s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DereverbMethod {
    /// Iterative WPE, no mask.
    Wpe,
    /// Single-pass WPE with a mask-derived PSD.
    #[default]
    DnnWpe,
    /// Complex mask mapping the input to the anechoic target.
    Specmap,
}

impl FromStr for DereverbMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "wpe" => Ok(DereverbMethod::Wpe),
            "dnn-wpe" => Ok(DereverbMethod::DnnWpe),
            "specmap" => Ok(DereverbMethod::Specmap),
            other => Err(Error::InvalidConfig(format!("unknown dereverberation method {other:?}"))),
        }
    }
}

/// Where a stage gets its mask: computed from ground truth, or read from
/// `<dir>/<utterance id>.cmsk`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MaskProvider {
    Oracle,
    File(PathBuf),
}

impl FromStr for MaskProvider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "oracle" {
            return Ok(MaskProvider::Oracle);
        }
        match s.strip_prefix("file:") {
            Some(dir) if !dir.is_empty() => Ok(MaskProvider::File(PathBuf::from(dir))),
            _ => Err(Error::InvalidConfig(format!(
                "mask provider must be \"oracle\" or \"file:DIR\", got {s:?}"
            ))),
        }
    }
}

impl TryFrom<String> for MaskProvider {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MaskProvider> for String {
    fn from(p: MaskProvider) -> String {
        p.to_string()
    }
}

impl fmt::Display for MaskProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskProvider::Oracle => write!(f, "oracle"),
            MaskProvider::File(dir) => write!(f, "file:{}", dir.display()),
        }
    }
}

impl MaskProvider {
    pub fn mask_path(&self, utterance_id: &str) -> Option<PathBuf> {
        match self {
            MaskProvider::Oracle => None,
            MaskProvider::File(dir) => Some(dir.join(format!("{utterance_id}.cmsk"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageMasks {
    pub separate: Option<MaskProvider>,
    pub dereverb: Option<MaskProvider>,
}

/// Ground-truth signal that SI-SNR and spectral MSE compare against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreReference {
    /// The target of the last stage: reverberant after separation (or with
    /// no stages), early after WPE variants, anechoic after spectral mapping.
    #[default]
    Auto,
    Reverberant,
    Early,
    Anechoic,
}

impl FromStr for ScoreReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(ScoreReference::Auto),
            "reverberant" => Ok(ScoreReference::Reverberant),
            "early" => Ok(ScoreReference::Early),
            "anechoic" => Ok(ScoreReference::Anechoic),
            other => Err(Error::InvalidConfig(format!("unknown score reference {other:?}"))),
        }
    }
}

impl ScoreReference {
    pub fn name(self) -> &'static str {
        match self {
            ScoreReference::Auto => "auto",
            ScoreReference::Reverberant => "reverberant",
            ScoreReference::Early => "early",
            ScoreReference::Anechoic => "anechoic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSelection {
    pub si_snr: bool,
    pub srmr: bool,
    pub early_late: bool,
    pub spec_mse: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        Self {
            si_snr: true,
            srmr: true,
            early_late: true,
            spec_mse: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub stages: Vec<Stage>,
    pub dereverb_method: DereverbMethod,
    pub masks: StageMasks,
    pub stft: StftConfig,
    pub wpe: WpeConfig,
    pub metrics: MetricSelection,
    pub score_reference: ScoreReference,
    /// Magnitude clip for complex masks.
    pub mask_clip: f64,
    /// Upper bound for real (PSD) masks.
    pub mask_max: f64,
    pub output_dir: PathBuf,
    /// Write enhanced WAVs and WPE filter sidecars.
    pub write_audio: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            stages: vec![Stage::Separate, Stage::Dereverb],
            dereverb_method: DereverbMethod::DnnWpe,
            masks: StageMasks {
                separate: Some(MaskProvider::Oracle),
                dereverb: Some(MaskProvider::Oracle),
            },
            stft: StftConfig::default(),
            wpe: WpeConfig::default(),
            metrics: MetricSelection::default(),
            score_reference: ScoreReference::Auto,
            mask_clip: CLIP_MAGNITUDE,
            mask_max: REAL_MASK_MAX,
            output_dir: PathBuf::from("out"),
            write_audio: true,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidConfig(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let mut seen = Vec::new();
        for s in &self.stages {
            if seen.contains(s) {
                return Err(Error::InvalidConfig(format!("stage {s:?} listed twice")));
            }
            seen.push(*s);
        }
        if self.stages == [Stage::Dereverb, Stage::Separate] {
            return Err(Error::InvalidConfig("separation must precede dereverberation".into()));
        }
        if self.stages.contains(&Stage::Separate) && self.masks.separate.is_none() {
            return Err(Error::InvalidConfig("separate stage requires a mask provider".into()));
        }
        if self.stages.contains(&Stage::Dereverb)
            && self.dereverb_method != DereverbMethod::Wpe
            && self.masks.dereverb.is_none()
        {
            return Err(Error::InvalidConfig(format!(
                "{:?} dereverberation requires a mask provider",
                self.dereverb_method
            )));
        }
        if !(self.mask_clip > 0.0) || !(self.mask_max > 0.0) {
            return Err(Error::InvalidConfig("mask_clip and mask_max must be positive".into()));
        }
        self.stft.validate()?;
        self.wpe.validate()?;
        Ok(())
    }

    /// Whether any stage needs ground-truth references to build its mask.
    pub fn needs_oracle(&self) -> bool {
        let sep = self.stages.contains(&Stage::Separate) && self.masks.separate == Some(MaskProvider::Oracle);
        let der = self.stages.contains(&Stage::Dereverb)
            && self.dereverb_method != DereverbMethod::Wpe
            && self.masks.dereverb == Some(MaskProvider::Oracle);
        sep || der
    }

    /// The concrete reference `Auto` resolves to for this stage list.
    pub fn resolved_reference(&self) -> ScoreReference {
        match self.score_reference {
            ScoreReference::Auto => match (self.stages.last(), self.dereverb_method) {
                (Some(Stage::Dereverb), DereverbMethod::Specmap) => ScoreReference::Anechoic,
                (Some(Stage::Dereverb), _) => ScoreReference::Early,
                _ => ScoreReference::Reverberant,
            },
            other => other,
        }
    }
}
