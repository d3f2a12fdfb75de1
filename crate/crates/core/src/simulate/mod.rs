//! Acoustic simulation: image-method RIRs, early/late splitting, reverberant
//! convolution and SNR/SIR-controlled mixing.
//!
//! Energy ratios are always measured on the reference channel (index 0 of
//! the array unless the geometry says otherwise) of the reverberant images.

mod image;
mod signals;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stft::Waveform;
use num_complex::Complex64;

pub use image::{generate_rir, RoomScene, MAX_T60, MIN_T60};
pub use signals::{place_segment, synthetic_noise, synthetic_speech, NoiseKind};

pub const DEFAULT_EARLY_BOUNDARY_MS: f64 = 50.0;

/// Impulse responses indexed `[source][channel][tap]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RirSet {
    responses: Vec<Vec<Vec<f64>>>,
    direct_taps: Vec<Vec<usize>>,
    sample_rate: u32,
    early_boundary_ms: f64,
}

impl RirSet {
    pub fn new(
        responses: Vec<Vec<Vec<f64>>>,
        direct_taps: Vec<Vec<usize>>,
        sample_rate: u32,
        early_boundary_ms: f64,
    ) -> Result<Self> {
        if responses.len() != direct_taps.len()
            || responses.iter().zip(&direct_taps).any(|(r, d)| r.len() != d.len())
        {
            return Err(Error::InvalidArgument("direct taps do not match responses".into()));
        }
        if responses.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite RIR tap".into()));
        }
        for (r, d) in responses.iter().flatten().zip(direct_taps.iter().flatten()) {
            if r.iter().take(*d).any(|&v| v != 0.0) {
                return Err(Error::InvalidArgument("RIR energy before the direct path".into()));
            }
        }
        if !(early_boundary_ms >= 0.0) {
            return Err(Error::InvalidArgument("early boundary must be nonnegative".into()));
        }
        Ok(Self {
            responses,
            direct_taps,
            sample_rate,
            early_boundary_ms,
        })
    }

    pub fn num_sources(&self) -> usize {
        self.responses.len()
    }

    pub fn num_channels(&self) -> usize {
        self.responses.first().map_or(0, |r| r.len())
    }

    pub fn response(&self, source: usize, channel: usize) -> &[f64] {
        &self.responses[source][channel]
    }

    pub fn responses(&self) -> &[Vec<Vec<f64>>] {
        &self.responses
    }

    pub fn direct_tap(&self, source: usize, channel: usize) -> usize {
        self.direct_taps[source][channel]
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn early_boundary_ms(&self) -> f64 {
        self.early_boundary_ms
    }

    pub fn with_early_boundary_ms(mut self, ms: f64) -> Self {
        self.early_boundary_ms = ms.max(0.0);
        self
    }

    fn map_taps(&self, keep: impl Fn(usize, usize) -> bool) -> RirSet {
        let responses = self
            .responses
            .iter()
            .zip(&self.direct_taps)
            .map(|(chs, directs)| {
                chs.iter()
                    .zip(directs)
                    .map(|(h, &d)| {
                        h.iter()
                            .enumerate()
                            .map(|(i, &v)| if keep(i, d) { v } else { 0.0 })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        RirSet {
            responses,
            direct_taps: self.direct_taps.clone(),
            sample_rate: self.sample_rate,
            early_boundary_ms: self.early_boundary_ms,
        }
    }

    /// Only the direct-path tap of each response.
    pub fn direct_only(&self) -> RirSet {
        self.map_taps(|i, d| i == d)
    }

    fn boundary_taps(&self) -> usize {
        (self.early_boundary_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }
}

/// Splits each response at `direct + boundary` taps. The early part keeps
/// taps up to and including the boundary; `early + late` equals the input.
pub fn split_early_late(rirs: &RirSet) -> (RirSet, RirSet) {
    let b = rirs.boundary_taps();
    (rirs.map_taps(|i, d| i <= d + b), rirs.map_taps(|i, d| i > d + b))
}

/// Full linear convolution via FFT.
pub fn fft_convolve(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    if signal.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let out_len = signal.len() + kernel.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut a: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(n, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a.iter().take(out_len).map(|c| c.re * scale).collect()
}

/// Convolves a dry mono signal with every channel's response for one source.
/// Output length is `dry + rir - 1`.
pub fn convolve_rir(dry: &Waveform, rirs: &RirSet, source_index: usize) -> Result<Waveform> {
    if dry.num_channels() != 1 {
        return Err(Error::InvalidArgument("dry signal must be single-channel".into()));
    }
    if dry.sample_rate() != rirs.sample_rate() {
        return Err(Error::SampleRateMismatch {
            expected: rirs.sample_rate(),
            actual: dry.sample_rate(),
        });
    }
    if source_index >= rirs.num_sources() {
        return Err(Error::InvalidArgument(format!("source {source_index} out of range")));
    }
    let channels = rirs.responses[source_index]
        .iter()
        .map(|h| fft_convolve(dry.channel(0), h))
        .collect();
    Waveform::new(channels, dry.sample_rate())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    /// Target-to-noise ratio in dB; `None` means no noise (infinite SNR).
    pub snr_db: Option<f64>,
    /// Target-to-interferer ratio in dB; `None` means no interferer.
    pub sir_db: Option<f64>,
    /// Fraction of the target duration overlapped by the interferer.
    #[serde(default = "default_overlap")]
    pub overlap_ratio: f64,
}

fn default_overlap() -> f64 {
    1.0
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_some_and(|v| !v.is_finite()) || self.sir_db.is_some_and(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("SNR/SIR must be finite or absent".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap_ratio) {
            return Err(Error::InvalidArgument("overlap_ratio must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Gains and reference-channel energies applied by [`mix_sources`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    pub interferer_gain: f64,
    pub noise_gain: f64,
    pub target_energy: f64,
    pub interferer_energy: f64,
    pub noise_energy: f64,
}

/// Scaled components and their sum.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub mixture: Waveform,
    pub interferer: Option<Waveform>,
    pub noise: Option<Waveform>,
    pub report: MixReport,
}

fn reference_energy(w: &Waveform, reference: usize) -> f64 {
    w.channel(reference).iter().map(|v| v * v).sum()
}

fn gain_for(target_energy: f64, component_energy: f64, ratio_db: f64) -> f64 {
    (target_energy / (component_energy * 10f64.powf(ratio_db / 10.0))).sqrt()
}

/// Scales the interferer and noise so the reference-channel SIR and SNR (both
/// relative to the reverberant target) hit `spec` exactly, then sums.
pub fn mix_sources(
    target: &Waveform,
    interferer: Option<&Waveform>,
    noise: Option<&Waveform>,
    spec: &MixSpec,
    reference: usize,
) -> Result<Mixture> {
    spec.validate()?;
    let check = |w: &Waveform| -> Result<()> {
        if w.num_channels() != target.num_channels() || w.len() != target.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![target.num_channels(), target.len()],
                actual: vec![w.num_channels(), w.len()],
            });
        }
        if w.sample_rate() != target.sample_rate() {
            return Err(Error::SampleRateMismatch {
                expected: target.sample_rate(),
                actual: w.sample_rate(),
            });
        }
        Ok(())
    };
    if reference >= target.num_channels() {
        return Err(Error::InvalidArgument("reference channel out of range".into()));
    }
    let target_energy = reference_energy(target, reference);
    let needs_target = spec.snr_db.is_some() && noise.is_some() || spec.sir_db.is_some() && interferer.is_some();
    if needs_target && target_energy == 0.0 {
        return Err(Error::SilentComponent("target"));
    }

    let scale_component = |w: Option<&Waveform>, ratio: Option<f64>, name: &'static str| -> Result<(Option<Waveform>, f64, f64)> {
        match (w, ratio) {
            (Some(w), Some(db)) => {
                check(w)?;
                let e = reference_energy(w, reference);
                if e == 0.0 {
                    return Err(Error::SilentComponent(name));
                }
                let g = gain_for(target_energy, e, db);
                let scaled = w.scaled(g);
                let energy = reference_energy(&scaled, reference);
                Ok((Some(scaled), g, energy))
            }
            (None, Some(_)) => Err(Error::InvalidArgument(format!("{name} ratio given without a {name} signal"))),
            _ => Ok((None, 0.0, 0.0)),
        }
    };
    let (interferer, interferer_gain, interferer_energy) = scale_component(interferer, spec.sir_db, "interferer")?;
    let (noise, noise_gain, noise_energy) = scale_component(noise, spec.snr_db, "noise")?;

    let mut channels = target.channels().to_vec();
    for comp in [&interferer, &noise].into_iter().flatten() {
        for (out, c) in channels.iter_mut().zip(comp.channels()) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v;
            }
        }
    }
    Ok(Mixture {
        mixture: Waveform::new(channels, target.sample_rate())?,
        interferer,
        noise,
        report: MixReport {
            interferer_gain,
            noise_gain,
            target_energy,
            interferer_energy,
            noise_energy,
        },
    })
}
