//! Short-time Fourier analysis and overlap-add synthesis.
//!
//! Framing is centred: the signal is reflect-padded by half a window on the
//! left, so frame `t` is centred on sample `t * hop_length`. The frame count
//! is `ceil(N / hop) + 1`, which guarantees that every input sample is
//! covered by the same number of frames as an interior sample. Only the
//! non-negative half spectrum (`fft_size / 2 + 1` bins) is stored.
//!
//! Synthesis uses the analysis window again and divides by the overlap-added
//! squared window, so any window/hop pair whose squared window sum stays away
//! from zero reconstructs the input exactly (up to rounding).

use std::f64::consts::PI;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor added to the power spectrum before taking the log.
pub const LPS_FLOOR: f64 = 1e-10;

/// Smallest accepted overlap-added squared window value, relative to its peak.
const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// Multichannel time-domain signal. All channels share one length.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidWaveform("sample rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(Error::InvalidWaveform("at least one channel is required".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidWaveform("channels differ in length".into()));
        }
        if channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidWaveform("non-finite sample".into()));
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn zeros(channels: usize, len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![vec![0.0; len]; channels.max(1)], sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Single-channel waveform holding a copy of channel `index`.
    pub fn select_channel(&self, index: usize) -> Result<Waveform> {
        let ch = self.channels.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "channel {index} out of range for {} channels",
                self.num_channels()
            ))
        })?;
        Waveform::mono(ch.clone(), self.sample_rate)
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|x| x * gain).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Truncate or zero-extend every channel to `len` samples.
    pub fn resized(&self, len: usize) -> Waveform {
        Waveform {
            channels: self
                .channels
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.resize(len, 0.0);
                    c
                })
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// Periodic Hann window.
    Hann,
    /// Square root of the periodic Hann window.
    SqrtHann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, length: usize) -> Vec<f64> {
        let n = length as f64;
        (0..length)
            .map(|i| {
                let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos();
                match self {
                    WindowKind::Hann => hann,
                    WindowKind::SqrtHann => hann.sqrt(),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop_length: usize,
    pub fft_size: usize,
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_length: 512,
            hop_length: 256,
            fft_size: 512,
            window: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    pub fn new(window_length: usize, hop_length: usize, fft_size: usize, window: WindowKind) -> Self {
        Self {
            window_length,
            hop_length,
            fft_size,
            window,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Half-window left padding applied before framing.
    pub fn padding(&self) -> usize {
        self.window_length / 2
    }

    /// Frames produced for a signal of `num_samples` samples.
    pub fn num_frames(&self, num_samples: usize) -> usize {
        num_samples.div_ceil(self.hop_length) + 1
    }

    /// Centre frequency in Hz of each stored bin.
    pub fn bin_frequencies(&self, sample_rate: u32) -> Vec<f64> {
        (0..self.num_bins())
            .map(|k| k as f64 * sample_rate as f64 / self.fft_size as f64)
            .collect()
    }

    /// Checks the size ordering only.
    fn validate_dims(&self) -> Result<()> {
        if self.hop_length == 0 {
            return Err(Error::InvalidStftConfig("hop_length must be positive".into()));
        }
        if self.hop_length > self.window_length {
            return Err(Error::InvalidStftConfig(format!(
                "hop_length {} exceeds window_length {}",
                self.hop_length, self.window_length
            )));
        }
        if self.window_length > self.fft_size {
            return Err(Error::InvalidStftConfig(format!(
                "window_length {} exceeds fft_size {}",
                self.window_length, self.fft_size
            )));
        }
        Ok(())
    }

    /// Overlap-added squared window over one hop period.
    fn normalization_period(&self) -> Vec<f64> {
        let w = self.window.coefficients(self.window_length);
        let mut period = vec![0.0; self.hop_length];
        for (i, wi) in w.iter().enumerate() {
            period[i % self.hop_length] += wi * wi;
        }
        period
    }

    /// Validates sizes and the overlap-add normalisation condition.
    pub fn validate(&self) -> Result<()> {
        self.validate_dims()?;
        let period = self.normalization_period();
        let peak = period.iter().cloned().fold(0.0, f64::max);
        for (sample, &sum) in period.iter().enumerate() {
            if !(sum > NORMALIZATION_TOLERANCE * peak.max(f64::MIN_POSITIVE)) {
                return Err(Error::WindowNormalization { sample, sum });
            }
        }
        Ok(())
    }
}

/// Complex STFT of R channels, indexed `[channel, frame, bin]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiChannelSpectrogram {
    pub bins: Array3<Complex64>,
    pub config: StftConfig,
    pub sample_rate: u32,
    /// Length of the analysed signal, used to trim the synthesis output.
    pub num_samples: usize,
}

/// Single-channel STFT, indexed `[frame, bin]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub bins: Array2<Complex64>,
    pub config: StftConfig,
    pub sample_rate: u32,
    pub num_samples: usize,
}

impl MultiChannelSpectrogram {
    pub fn num_channels(&self) -> usize {
        self.bins.len_of(Axis(0))
    }

    pub fn num_frames(&self) -> usize {
        self.bins.len_of(Axis(1))
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len_of(Axis(2))
    }

    pub fn channel_view(&self, channel: usize) -> ArrayView2<'_, Complex64> {
        self.bins.index_axis(Axis(0), channel)
    }

    pub fn channel(&self, channel: usize) -> Result<Spectrogram> {
        if channel >= self.num_channels() {
            return Err(Error::InvalidArgument(format!(
                "channel {channel} out of range for {} channels",
                self.num_channels()
            )));
        }
        Ok(Spectrogram {
            bins: self.channel_view(channel).to_owned(),
            config: self.config,
            sample_rate: self.sample_rate,
            num_samples: self.num_samples,
        })
    }
}

impl Spectrogram {
    /// Wraps raw bins with a default-sized signal length of `(T - 1) * hop`.
    pub fn from_bins(bins: Array2<Complex64>, config: StftConfig, sample_rate: u32) -> Self {
        let frames = bins.nrows();
        Self {
            bins,
            config,
            sample_rate,
            num_samples: frames.saturating_sub(1) * config.hop_length,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.bins.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.bins.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_frames(), self.num_bins())
    }

    /// Same metadata, new bins.
    pub fn with_bins(&self, bins: Array2<Complex64>) -> Spectrogram {
        Spectrogram {
            bins,
            config: self.config,
            sample_rate: self.sample_rate,
            num_samples: self.num_samples,
        }
    }

    pub fn into_multichannel(self) -> MultiChannelSpectrogram {
        MultiChannelSpectrogram {
            bins: self.bins.insert_axis(Axis(0)),
            config: self.config,
            sample_rate: self.sample_rate,
            num_samples: self.num_samples,
        }
    }

    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Index into the centred, reflect-padded signal. Out-of-range positions
/// after one reflection read as zero.
fn padded_sample(signal: &[f64], position: isize) -> f64 {
    let n = signal.len() as isize;
    let mut i = position;
    if i < 0 {
        i = -i;
    }
    if i >= n {
        i = 2 * (n - 1) - i;
    }
    if (0..n).contains(&i) {
        signal[i as usize]
    } else {
        0.0
    }
}

pub fn stft(signal: &Waveform, config: &StftConfig) -> Result<MultiChannelSpectrogram> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    config.validate()?;

    let n = signal.len();
    let frames = config.num_frames(n);
    let bins = config.num_bins();
    let window = config.window.coefficients(config.window_length);
    let pad = config.padding() as isize;
    let fft = FftPlanner::new().plan_fft_forward(config.fft_size);

    let mut out = Array3::<Complex64>::zeros((signal.num_channels(), frames, bins));
    let mut buffer = vec![Complex64::new(0.0, 0.0); config.fft_size];
    for (c, samples) in signal.channels().iter().enumerate() {
        for t in 0..frames {
            let start = (t * config.hop_length) as isize - pad;
            buffer.fill(Complex64::new(0.0, 0.0));
            for (i, w) in window.iter().enumerate() {
                buffer[i].re = w * padded_sample(samples, start + i as isize);
            }
            fft.process(&mut buffer);
            for k in 0..bins {
                out[[c, t, k]] = buffer[k];
            }
        }
    }

    Ok(MultiChannelSpectrogram {
        bins: out,
        config: *config,
        sample_rate: signal.sample_rate(),
        num_samples: n,
    })
}

/// Convenience wrapper around [`stft`] for a single-channel input.
pub fn stft_mono(signal: &Waveform, config: &StftConfig) -> Result<Spectrogram> {
    if signal.num_channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected a single channel, got {}",
            signal.num_channels()
        )));
    }
    stft(signal, config)?.channel(0)
}

pub fn istft(spec: &MultiChannelSpectrogram) -> Result<Waveform> {
    let config = &spec.config;
    config.validate()?;
    if spec.num_bins() != config.num_bins() {
        return Err(Error::ShapeMismatch {
            expected: vec![config.num_bins()],
            actual: vec![spec.num_bins()],
        });
    }

    let frames = spec.num_frames();
    let hop = config.hop_length;
    let win_len = config.window_length;
    let n_fft = config.fft_size;
    let bins = config.num_bins();
    let pad = config.padding();
    let window = config.window.coefficients(win_len);
    let ifft = FftPlanner::new().plan_fft_inverse(n_fft);

    let padded_len = frames.saturating_sub(1) * hop + win_len;
    let mut norm = vec![0.0; padded_len];
    for t in 0..frames {
        for (i, w) in window.iter().enumerate() {
            norm[t * hop + i] += w * w;
        }
    }
    let output_len = spec.num_samples;
    let peak_norm = norm.iter().cloned().fold(0.0, f64::max);
    for s in 0..output_len {
        let sum = norm.get(s + pad).copied().unwrap_or(0.0);
        if !(sum > NORMALIZATION_TOLERANCE * peak_norm.max(f64::MIN_POSITIVE)) {
            return Err(Error::WindowNormalization { sample: s, sum });
        }
    }

    let scale = 1.0 / n_fft as f64;
    let mut channels = Vec::with_capacity(spec.num_channels());
    let mut buffer = vec![Complex64::new(0.0, 0.0); n_fft];
    for c in 0..spec.num_channels() {
        let mut acc = vec![0.0; padded_len];
        for t in 0..frames {
            for k in 0..n_fft {
                buffer[k] = if k < bins {
                    spec.bins[[c, t, k]]
                } else {
                    spec.bins[[c, t, n_fft - k]].conj()
                };
            }
            ifft.process(&mut buffer);
            let offset = t * hop;
            for (i, w) in window.iter().enumerate() {
                acc[offset + i] += w * buffer[i].re * scale;
            }
        }
        let samples = (0..output_len)
            .map(|s| acc[s + pad] / norm[s + pad])
            .collect();
        channels.push(samples);
    }
    Waveform::new(channels, spec.sample_rate)
}

pub fn istft_mono(spec: &Spectrogram) -> Result<Waveform> {
    istft(&spec.clone().into_multichannel())
}

/// Log-power spectrum `ln(|y|^2 + LPS_FLOOR)`, indexed `[frame, bin]`.
pub fn lps_feature(spec: &Spectrogram) -> Array2<f64> {
    spec.bins.mapv(|y| (y.norm_sqr() + LPS_FLOOR).ln())
}
