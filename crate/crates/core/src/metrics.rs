//! Quality metrics: SI-SNR, SRMR and an oracle early-to-late ratio, plus a
//! Schroeder-integration T60 estimate for checking simulated RIRs.
//!
//! SRMR parameters used here:
//!
//! | stage | setting |
//! |---|---|
//! | acoustic filterbank | 23 fourth-order gammatone bands, centres uniform on the ERB-number scale from 125 Hz to 7.5 kHz, bandwidth 1.019 ERB |
//! | envelope | magnitude of the complex (baseband) gammatone output, boxcar-averaged and decimated to 1 kHz |
//! | modulation filterbank | 8 second-order band-passes, Q = 2, centres log-spaced 4 to 128 Hz |
//! | framing | 256 ms Hamming frames, 64 ms hop, energies averaged over frames |
//! | ratio | energy in modulation bands 1-4 over bands 5-8, summed over acoustic bands |
//!
//! Absolute values differ from other SRMR implementations; compare SRMR
//! values from this module with each other only.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{convolve_rir, split_early_late, RirSet};
use crate::stft::Waveform;

/// Upper (and, symmetrically, lower) bound of reported projection ratios.
pub const RATIO_CAP_DB: f64 = 60.0;

pub const SRMR_SAMPLE_RATE: u32 = 16000;
pub const SRMR_ACOUSTIC_BANDS: usize = 23;
pub const SRMR_MODULATION_BANDS: usize = 8;
const SRMR_LOW_HZ: f64 = 125.0;
const SRMR_HIGH_HZ: f64 = 7500.0;
const SRMR_MOD_LOW_HZ: f64 = 4.0;
const SRMR_MOD_HIGH_HZ: f64 = 128.0;
const SRMR_MOD_Q: f64 = 2.0;
const SRMR_DECIMATION: usize = 16;

/// Per-utterance scores. Absent fields were not computed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub utterance_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub si_snr_db: Option<f64>,
    /// Ground-truth reference used for `si_snr_db` and `spec_mse`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub srmr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_late_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec_mse: Option<f64>,
}

fn mono<'a>(w: &'a Waveform, what: &str) -> Result<&'a [f64]> {
    if w.num_channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{what} must be single-channel, got {} channels",
            w.num_channels()
        )));
    }
    Ok(w.channel(0))
}

fn zero_mean(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len().max(1) as f64;
    x.iter().map(|v| v - mean).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `10 log10(|s_t|^2 / |e - s_t|^2)` with `s_t` the projection of `estimate`
/// onto `reference`, both zero-mean, clamped to `[-RATIO_CAP_DB, RATIO_CAP_DB]`.
pub fn projection_ratio_db(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![reference.len()],
            actual: vec![estimate.len()],
        });
    }
    if estimate.is_empty() {
        return Err(Error::EmptySignal);
    }
    let est = zero_mean(estimate);
    let reference = zero_mean(reference);
    let ref_energy = dot(&reference, &reference);
    if ref_energy == 0.0 {
        return Err(Error::SilentComponent("reference"));
    }
    let alpha = dot(&est, &reference) / ref_energy;
    let mut target_energy = 0.0;
    let mut residual_energy = 0.0;
    for (e, r) in est.iter().zip(&reference) {
        let t = alpha * r;
        target_energy += t * t;
        residual_energy += (e - t) * (e - t);
    }
    let db = if residual_energy == 0.0 {
        RATIO_CAP_DB
    } else if target_energy == 0.0 {
        -RATIO_CAP_DB
    } else {
        10.0 * (target_energy / residual_energy).log10()
    };
    Ok(db.clamp(-RATIO_CAP_DB, RATIO_CAP_DB))
}

/// Scale-invariant SNR in dB, capped at +60 dB.
pub fn si_snr(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    projection_ratio_db(mono(estimate, "estimate")?, mono(reference, "reference")?)
}

/// SI-SNR of `processed` against the early-reverberant image of `dry`
/// through `rirs` (source `source`, channel `channel`).
pub fn early_to_late_ratio(
    dry: &Waveform,
    rirs: &RirSet,
    source: usize,
    channel: usize,
    processed: &Waveform,
) -> Result<f64> {
    if source >= rirs.num_sources() || channel >= rirs.num_channels() {
        return Err(Error::MissingGroundTruth(format!(
            "no RIR for source {source}, channel {channel}"
        )));
    }
    let (early, _) = split_early_late(rirs);
    let early_image = convolve_rir(dry, &early, source)?;
    let processed = mono(processed, "processed")?;
    let mut reference = early_image.channel(channel).to_vec();
    reference.resize(processed.len(), 0.0);
    projection_ratio_db(processed, &reference)
}

/// Same ratio when the early-reverberant reference is already available.
pub fn early_to_late_ratio_with_reference(early_reference: &Waveform, processed: &Waveform) -> Result<f64> {
    let processed = mono(processed, "processed")?;
    let mut reference = mono(early_reference, "early reference")?.to_vec();
    reference.resize(processed.len(), 0.0);
    projection_ratio_db(processed, &reference)
}

fn erb_number(f: f64) -> f64 {
    21.4 * (1.0 + 0.00437 * f).log10()
}

fn erb_number_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 0.00437
}

fn erb_bandwidth(f: f64) -> f64 {
    24.7 * (4.37 * f / 1000.0 + 1.0)
}

/// Gammatone centre frequencies used by [`srmr`].
pub fn srmr_centre_frequencies() -> Vec<f64> {
    let (lo, hi) = (erb_number(SRMR_LOW_HZ), erb_number(SRMR_HIGH_HZ));
    (0..SRMR_ACOUSTIC_BANDS)
        .map(|k| erb_number_inverse(lo + (hi - lo) * k as f64 / (SRMR_ACOUSTIC_BANDS - 1) as f64))
        .collect()
}

/// Modulation filter centre frequencies used by [`srmr`].
pub fn srmr_modulation_frequencies() -> Vec<f64> {
    let ratio = (SRMR_MOD_HIGH_HZ / SRMR_MOD_LOW_HZ).ln();
    (0..SRMR_MODULATION_BANDS)
        .map(|j| SRMR_MOD_LOW_HZ * (ratio * j as f64 / (SRMR_MODULATION_BANDS - 1) as f64).exp())
        .collect()
}

/// Envelope of one gammatone band: shift the band to DC, run four cascaded
/// one-pole low-passes, take the magnitude.
fn gammatone_envelope(x: &[f64], fc: f64, fs: f64) -> Vec<f64> {
    let b = 1.019 * erb_bandwidth(fc);
    let r = (-2.0 * PI * b / fs).exp();
    let g = 1.0 - r;
    let mut state = [Complex64::new(0.0, 0.0); 4];
    let step = Complex64::from_polar(1.0, -2.0 * PI * fc / fs);
    let mut rot = Complex64::new(1.0, 0.0);
    let mut env = Vec::with_capacity(x.len());
    for (n, &v) in x.iter().enumerate() {
        let mut s = rot * v;
        for st in state.iter_mut() {
            *st = s * g + *st * r;
            s = *st;
        }
        env.push(2.0 * s.norm());
        rot *= step;
        if n % 1024 == 0 {
            rot /= rot.norm();
        }
    }
    env
}

fn decimate(x: &[f64], factor: usize) -> Vec<f64> {
    x.chunks(factor).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Constant peak-gain band-pass biquad, direct form I.
fn bandpass(x: &[f64], fc: f64, q: f64, fs: f64) -> Vec<f64> {
    let w0 = 2.0 * PI * fc / fs;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    let (b0, b2) = (alpha / a0, -alpha / a0);
    let (a1, a2) = (-2.0 * w0.cos() / a0, (1.0 - alpha) / a0);
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    x.iter()
        .map(|&v| {
            let y = b0 * v + b2 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = v;
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

/// Frame-averaged modulation energies indexed `[acoustic band][modulation band]`.
pub fn modulation_energies(signal: &Waveform) -> Result<Vec<[f64; SRMR_MODULATION_BANDS]>> {
    let x = mono(signal, "signal")?;
    if signal.sample_rate() != SRMR_SAMPLE_RATE {
        return Err(Error::SampleRateMismatch {
            expected: SRMR_SAMPLE_RATE,
            actual: signal.sample_rate(),
        });
    }
    let fs = SRMR_SAMPLE_RATE as f64;
    if x.len() < SRMR_SAMPLE_RATE as usize {
        return Err(Error::SignalTooShort {
            needed: SRMR_SAMPLE_RATE as usize,
            actual: x.len(),
        });
    }
    let env_fs = fs / SRMR_DECIMATION as f64;
    let frame = (0.256 * env_fs).round() as usize;
    let hop = (0.064 * env_fs).round() as usize;
    let window: Vec<f64> = (0..frame)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (frame - 1) as f64).cos())
        .collect();
    let mod_freqs = srmr_modulation_frequencies();

    let mut out = Vec::with_capacity(SRMR_ACOUSTIC_BANDS);
    for fc in srmr_centre_frequencies() {
        let env = decimate(&gammatone_envelope(x, fc, fs), SRMR_DECIMATION);
        let mut energies = [0.0; SRMR_MODULATION_BANDS];
        for (j, &fm) in mod_freqs.iter().enumerate() {
            let y = bandpass(&env, fm, SRMR_MOD_Q, env_fs);
            let mut total = 0.0;
            let mut frames = 0usize;
            let mut start = 0;
            while start + frame <= y.len() {
                total += y[start..start + frame]
                    .iter()
                    .zip(&window)
                    .map(|(v, w)| (v * w) * (v * w))
                    .sum::<f64>();
                frames += 1;
                start += hop;
            }
            energies[j] = total / frames.max(1) as f64;
        }
        out.push(energies);
    }
    Ok(out)
}

/// Speech-to-reverberation modulation energy ratio of a 16 kHz mono signal
/// of at least one second.
pub fn srmr(signal: &Waveform) -> Result<f64> {
    let energies = modulation_energies(signal)?;
    let low: f64 = energies.iter().map(|e| e[..4].iter().sum::<f64>()).sum();
    let high: f64 = energies.iter().map(|e| e[4..].iter().sum::<f64>()).sum();
    if high == 0.0 {
        return Err(Error::SilentComponent("signal"));
    }
    Ok(low / high)
}

/// T60 from the Schroeder energy decay curve, fitting the -5 to -25 dB range
/// by least squares and extrapolating to 60 dB. `None` when the response
/// never decays by 25 dB.
pub fn schroeder_t60(response: &[f64], sample_rate: u32) -> Option<f64> {
    schroeder_t60_at(response, sample_rate as f64)
}

pub(crate) fn schroeder_t60_at(response: &[f64], sample_rate: f64) -> Option<f64> {
    let mut edc = vec![0.0; response.len()];
    let mut acc = 0.0;
    for i in (0..response.len()).rev() {
        acc += response[i] * response[i];
        edc[i] = acc;
    }
    let total = *edc.first()?;
    if total == 0.0 {
        return None;
    }
    let db: Vec<f64> = edc.iter().map(|&e| 10.0 * (e / total).log10()).collect();
    let start = db.iter().position(|&v| v <= -5.0)?;
    let end = db.iter().position(|&v| v <= -25.0)?;
    // Include the point just above -5 dB so at least two points are fitted.
    let start = start.saturating_sub(1);
    if end <= start {
        return None;
    }
    let n = (end - start + 1) as f64;
    let ts: Vec<f64> = (start..=end).map(|i| i as f64 / sample_rate).collect();
    let mean_t = ts.iter().sum::<f64>() / n;
    let mean_db = db[start..=end].iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, &d) in ts.iter().zip(&db[start..=end]) {
        num += (t - mean_t) * (d - mean_db);
        den += (t - mean_t) * (t - mean_t);
    }
    let slope = num / den;
    (slope < 0.0).then(|| -60.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn w(x: Vec<f64>) -> Waveform {
        Waveform::mono(x, 16000).unwrap()
    }

    #[test]
    fn si_snr_identity_hits_cap() {
        let s = w(random(1000, 1));
        assert_eq!(si_snr(&s, &s).unwrap(), RATIO_CAP_DB);
    }

    #[test]
    fn si_snr_scale_invariance() {
        let s = w(random(2000, 2));
        let e = w(random(2000, 3).iter().zip(s.channel(0)).map(|(n, v)| v + 0.3 * n).collect());
        let base = si_snr(&e, &s).unwrap();
        for alpha in [0.01, 0.5, 3.0, 1000.0] {
            assert!((si_snr(&e.scaled(alpha), &s).unwrap() - base).abs() < 1e-9);
        }
    }

    #[test]
    fn si_snr_orthogonal_equal_energy_noise_is_zero_db() {
        let s = zero_mean(&random(4000, 4));
        let mut n = zero_mean(&random(4000, 5));
        let proj = dot(&n, &s) / dot(&s, &s);
        for (a, b) in n.iter_mut().zip(&s) {
            *a -= proj * b;
        }
        let scale = (dot(&s, &s) / dot(&n, &n)).sqrt();
        let est: Vec<f64> = s.iter().zip(&n).map(|(a, b)| a + scale * b).collect();
        let db = si_snr(&w(est), &w(s)).unwrap();
        assert!(db.abs() < 1e-6, "{db}");
    }

    #[test]
    fn si_snr_errors_and_permutation_sensitivity() {
        let s = w(random(100, 6));
        assert!(si_snr(&s, &w(vec![0.0; 100])).is_err());
        assert!(si_snr(&s, &w(random(99, 7))).is_err());
        let e = w(random(100, 8).iter().zip(s.channel(0)).map(|(n, v)| v + 0.1 * n).collect());
        let mut shuffled = e.channel(0).to_vec();
        shuffled.reverse();
        assert!((si_snr(&e, &s).unwrap() - si_snr(&w(shuffled), &s).unwrap()).abs() > 1.0);
    }

    #[test]
    fn srmr_preconditions() {
        assert!(matches!(srmr(&w(random(8000, 9))), Err(Error::SignalTooShort { .. })));
        let x = Waveform::mono(random(16000, 9), 8000).unwrap();
        assert!(matches!(srmr(&x), Err(Error::SampleRateMismatch { .. })));
    }

    #[test]
    fn srmr_gain_invariance() {
        let x = w(random(20000, 10));
        let a = srmr(&x).unwrap();
        let b = srmr(&x.scaled(7.5)).unwrap();
        assert!(((a - b) / a).abs() < 1e-9);
    }

    #[test]
    fn srmr_modulated_tone_beats_white_noise() {
        let fs = 16000.0;
        let tone: Vec<f64> = (0..32000)
            .map(|n| {
                let t = n as f64 / fs;
                (0.5 - 0.5 * (2.0 * PI * 4.0 * t).cos()) * (2.0 * PI * 1000.0 * t).sin()
            })
            .collect();
        let noise = random(32000, 11);
        assert!(srmr(&w(tone)).unwrap() > srmr(&w(noise)).unwrap());
    }

    #[test]
    fn filterbank_layout() {
        let cf = srmr_centre_frequencies();
        assert_eq!(cf.len(), 23);
        assert!((cf[0] - 125.0).abs() < 1e-9 && (cf[22] - 7500.0).abs() < 1e-6);
        let mf = srmr_modulation_frequencies();
        assert!((mf[0] - 4.0).abs() < 1e-12 && (mf[7] - 128.0).abs() < 1e-9);
    }

    #[test]
    fn schroeder_recovers_exponential_decay() {
        let fs = 16000;
        let t60 = 0.5;
        // Energy decays 60 dB over t60: amplitude exp(-6.9078 t / t60).
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h: Vec<f64> = (0..16000)
            .map(|n| {
                let t = n as f64 / fs as f64;
                rng.random_range(-1.0..1.0) * (-3.0 * 10f64.ln() * t / t60).exp()
            })
            .collect();
        let est = schroeder_t60(&h, fs).unwrap();
        assert!((est - t60).abs() < 0.05 * t60, "{est}");
        assert!(schroeder_t60(&[0.0; 10], fs).is_none());
    }

    #[test]
    fn report_serialises_without_absent_fields() {
        let r = MetricReport {
            utterance_id: "u1".into(),
            si_snr_db: Some(12.5),
            ..Default::default()
        };
        let line = serde_json::to_string(&r).unwrap();
        assert_eq!(line, r#"{"utterance_id":"u1","si_snr_db":12.5}"#);
    }
}
