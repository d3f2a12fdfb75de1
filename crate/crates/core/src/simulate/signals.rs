//! Synthetic dry sources standing in for a speech corpus and a point-source
//! noise library.
//!
//! The speech generator strings together syllable-like events: voiced
//! harmonic segments with a drifting pitch and gliding formants, occasional
//! fricative noise bursts, and short silences. The result has the 2 to 8 Hz
//! envelope modulation that reverberation smears out.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    White,
    /// Sum of several independent synthetic talkers.
    Babble,
}

struct Formants {
    freq: [f64; 3],
    bandwidth: [f64; 3],
}

fn formant_gain(h: f64, f: &Formants) -> f64 {
    let mut g = 0.0;
    for k in 0..3 {
        let x = (h - f.freq[k]) / f.bandwidth[k];
        g += (1.0 / (1.0 + x * x)).sqrt() / (k as f64 + 1.0);
    }
    // Gentle spectral tilt.
    g / (1.0 + h / 1500.0)
}

fn random_formants<R: Rng + ?Sized>(rng: &mut R) -> Formants {
    Formants {
        freq: [
            rng.random_range(300.0..900.0),
            rng.random_range(900.0..2500.0),
            rng.random_range(2300.0..3500.0),
        ],
        bandwidth: [
            rng.random_range(60.0..120.0),
            rng.random_range(80.0..160.0),
            rng.random_range(120.0..220.0),
        ],
    }
}

/// Raised-cosine attack and release over `ramp` samples.
fn envelope(i: usize, len: usize, ramp: usize) -> f64 {
    let ramp = ramp.min(len / 2).max(1);
    let edge = if i < ramp {
        i as f64 / ramp as f64
    } else if i + ramp >= len {
        (len - 1 - i) as f64 / ramp as f64
    } else {
        1.0
    };
    (0.5 - 0.5 * (PI * edge).cos()).max(0.0)
}

fn voiced_segment<R: Rng + ?Sized>(out: &mut [f64], sample_rate: f64, f0_base: f64, rng: &mut R) {
    let len = out.len();
    let start = random_formants(rng);
    let end = random_formants(rng);
    let glide = rng.random_range(-0.15..0.15);
    let vibrato_rate = rng.random_range(3.0..7.0);
    let level = rng.random_range(0.3..1.0);
    let max_harmonic = ((0.45 * sample_rate) / (f0_base * 1.3)).floor().max(1.0) as usize;
    let mut phases: Vec<f64> = (0..max_harmonic).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let mut gains = vec![0.0; max_harmonic];
    let mut drift: f64 = 0.0;
    let block = 64;
    for i in 0..len {
        let pos = i as f64 / len.max(1) as f64;
        drift += rng.random_range(-1.0..1.0) * 2e-4;
        drift = drift.clamp(-0.03, 0.03);
        let f0 = f0_base
            * (1.0 + glide * pos + drift)
            * (1.0 + 0.01 * (2.0 * PI * vibrato_rate * i as f64 / sample_rate).sin());
        if i % block == 0 {
            let formants = Formants {
                freq: std::array::from_fn(|k| start.freq[k] + (end.freq[k] - start.freq[k]) * pos),
                bandwidth: std::array::from_fn(|k| start.bandwidth[k] + (end.bandwidth[k] - start.bandwidth[k]) * pos),
            };
            for (k, g) in gains.iter_mut().enumerate() {
                let h = f0 * (k + 1) as f64;
                *g = if h < 0.45 * sample_rate { formant_gain(h, &formants) } else { 0.0 };
            }
        }
        let mut s = 0.0;
        for (k, phase) in phases.iter_mut().enumerate() {
            *phase += 2.0 * PI * f0 * (k + 1) as f64 / sample_rate;
            if *phase > 2.0 * PI {
                *phase -= 2.0 * PI;
            }
            s += gains[k] * phase.sin();
        }
        out[i] += level * envelope(i, len, (0.02 * sample_rate) as usize) * s;
    }
}

fn fricative_segment<R: Rng + ?Sized>(out: &mut [f64], sample_rate: f64, rng: &mut R) {
    let len = out.len();
    let level = rng.random_range(0.05..0.25);
    // One-pole high-pass applied to white noise.
    let cutoff = rng.random_range(2000.0..5000.0);
    let a = (-2.0 * PI * cutoff / sample_rate).exp();
    let mut prev_in = 0.0;
    let mut prev_out = 0.0;
    for i in 0..len {
        let w: f64 = StandardNormal.sample(rng);
        let y = a * (prev_out + w - prev_in);
        prev_in = w;
        prev_out = y;
        out[i] += level * envelope(i, len, (0.01 * sample_rate) as usize) * y;
    }
}

/// Speech-like dry signal with peak amplitude 0.5.
pub fn synthetic_speech<R: Rng + ?Sized>(num_samples: usize, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let fs = sample_rate as f64;
    let mut out = vec![0.0; num_samples];
    let f0_base = rng.random_range(90.0..230.0);
    let mut pos = (rng.random_range(0.0..0.1) * fs) as usize;
    while pos < num_samples {
        let dur = (rng.random_range(0.08..0.3) * fs) as usize;
        let end = (pos + dur).min(num_samples);
        if rng.random_bool(0.8) {
            voiced_segment(&mut out[pos..end], fs, f0_base, rng);
        } else {
            fricative_segment(&mut out[pos..end], fs, rng);
        }
        let gap = if rng.random_bool(0.15) {
            rng.random_range(0.2..0.4)
        } else {
            rng.random_range(0.02..0.15)
        };
        pos = end + (gap * fs) as usize;
    }
    normalize_peak(&mut out, 0.5);
    out
}

pub fn synthetic_noise<R: Rng + ?Sized>(kind: NoiseKind, num_samples: usize, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let mut out = match kind {
        NoiseKind::White => (0..num_samples).map(|_| StandardNormal.sample(rng)).collect(),
        NoiseKind::Babble => {
            let mut acc = vec![0.0; num_samples];
            for _ in 0..6 {
                for (a, v) in acc.iter_mut().zip(synthetic_speech(num_samples, sample_rate, rng)) {
                    *a += v;
                }
            }
            acc
        }
    };
    normalize_peak(&mut out, 0.5);
    out
}

fn normalize_peak(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        for v in x.iter_mut() {
            *v *= peak / m;
        }
    }
}

/// Places `segment` at `start` within a zero signal of `total_len` samples,
/// cropping whatever does not fit.
pub fn place_segment(segment: &[f64], total_len: usize, start: usize) -> Vec<f64> {
    let mut out = vec![0.0; total_len];
    if start < total_len {
        let n = segment.len().min(total_len - start);
        out[start..start + n].copy_from_slice(&segment[..n]);
    }
    out
}
