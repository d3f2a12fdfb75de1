//! Shoebox image-source RIR generator.
//!
//! Images up to the distance `c * rir_duration` are summed with
//! nearest-sample delays and `beta^order / (4 pi d)` amplitudes, where the
//! uniform wall reflection coefficient `beta` is derived from the target
//! T60: Eyring's formula gives a starting value, which is then calibrated
//! against the Schroeder decay of a generated response.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::schroeder_t60_at;
use crate::spatial::ArrayGeometry;

use super::{RirSet, DEFAULT_EARLY_BOUNDARY_MS};

pub const MAX_T60: f64 = 2.0;
pub const MIN_T60: f64 = 0.05;

/// Extra taps kept past the longest direct path in anechoic scenes.
const ANECHOIC_TAIL: usize = 64;

/// Relative T60 error at which reflection-coefficient calibration stops.
pub const CALIBRATION_TOLERANCE: f64 = 0.02;
const CALIBRATION_ITERATIONS: usize = 12;

/// Shoebox room with sources and an array inside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomScene {
    /// Length, width and height in metres.
    pub room_dims: [f64; 3],
    /// Target reverberation time in seconds; 0 means anechoic.
    pub t60: f64,
    pub sources: Vec<[f64; 3]>,
    pub array: ArrayGeometry,
    pub sample_rate: u32,
    #[serde(default)]
    pub seed: u64,
    /// RIR length in taps. Defaults to 1.5 x T60.
    #[serde(default)]
    pub rir_length: Option<usize>,
}

fn inside(p: [f64; 3], dims: [f64; 3]) -> bool {
    (0..3).all(|k| p[k] > 0.0 && p[k] < dims[k])
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl RoomScene {
    pub fn validate(&self) -> Result<()> {
        if self.room_dims.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidScene("room dimensions must be positive".into()));
        }
        if !(self.t60 == 0.0 || (MIN_T60..=MAX_T60).contains(&self.t60)) {
            return Err(Error::InvalidScene(format!(
                "T60 {} outside supported range [{MIN_T60}, {MAX_T60}] s",
                self.t60
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidScene("sample rate must be positive".into()));
        }
        self.array.validate()?;
        for (i, &s) in self.sources.iter().enumerate() {
            if !inside(s, self.room_dims) {
                return Err(Error::InvalidScene(format!("source {i} lies outside the room")));
            }
            if self.array.mic_positions.iter().any(|&m| distance(m, s) == 0.0) {
                return Err(Error::InvalidScene(format!("source {i} coincides with a microphone")));
            }
        }
        for (i, &m) in self.array.mic_positions.iter().enumerate() {
            if !inside(m, self.room_dims) {
                return Err(Error::InvalidScene(format!("microphone {i} lies outside the room")));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.room_dims.iter().product()
    }

    pub fn surface(&self) -> f64 {
        let [l, w, h] = self.room_dims;
        2.0 * (l * w + l * h + w * h)
    }

    /// Uniform wall reflection coefficient from Eyring's formula:
    /// `T60 = 24 ln(10) V / (-c S ln(1 - alpha))`, `beta = sqrt(1 - alpha)`.
    pub fn eyring_reflection_coefficient(&self) -> f64 {
        if self.t60 == 0.0 {
            return 0.0;
        }
        let c = self.array.sound_velocity;
        let ln_one_minus_alpha = -24.0 * 10f64.ln() * self.volume() / (c * self.surface() * self.t60);
        (0.5 * ln_one_minus_alpha).exp()
    }

    /// Reflection coefficient used for generation. Starting from the Eyring
    /// value, `beta` is adjusted until the Schroeder T60 of the generated
    /// response between the first source and the reference microphone is
    /// within [`CALIBRATION_TOLERANCE`] of the target. Uniform-absorption
    /// shoebox responses decay more slowly than Eyring predicts.
    pub fn reflection_coefficient(&self) -> f64 {
        let eyring = self.eyring_reflection_coefficient();
        if self.t60 == 0.0 || self.sources.is_empty() {
            return eyring;
        }
        let mic = self.array.mic_positions[self.array.reference_index];
        let taps = self.rir_taps();
        let fs = self.sample_rate as f64;
        // Fixed-point iteration on a = -ln(beta), using T60 roughly proportional to 1/a.
        let mut a = -eyring.ln();
        let mut best = (f64::INFINITY, a);
        for _ in 0..CALIBRATION_ITERATIONS {
            let h = image_rirs(self, self.sources[0], &[mic], taps, (-a).exp()).remove(0);
            let Some(measured) = schroeder_t60_at(&h, fs) else { break };
            let err = (measured / self.t60 - 1.0).abs();
            if err < best.0 {
                best = (err, a);
            }
            if err < CALIBRATION_TOLERANCE {
                break;
            }
            a *= measured / self.t60;
        }
        (-best.1).exp()
    }

    /// Direct-path delay in taps, `round(d / c * fs)`.
    pub fn direct_tap(&self, source: usize, mic: usize) -> usize {
        let d = distance(self.sources[source], self.array.mic_positions[mic]);
        (d / self.array.sound_velocity * self.sample_rate as f64).round() as usize
    }

    pub fn rir_taps(&self) -> usize {
        if let Some(n) = self.rir_length {
            return n;
        }
        let longest_direct = (0..self.sources.len())
            .flat_map(|s| (0..self.array.num_mics()).map(move |m| (s, m)))
            .map(|(s, m)| self.direct_tap(s, m))
            .max()
            .unwrap_or(0);
        let reverb = (1.5 * self.t60 * self.sample_rate as f64).ceil() as usize;
        reverb.max(longest_direct + ANECHOIC_TAIL)
    }
}

/// Calls `visit(mic, distance, reflection_order)` for every image of
/// `source` closer to `mics[mic]` than `taps` samples of travel.
fn for_each_image(
    scene: &RoomScene,
    source: [f64; 3],
    mics: &[[f64; 3]],
    taps: usize,
    mut visit: impl FnMut(usize, f64, usize),
) {
    let fs = scene.sample_rate as f64;
    let c = scene.array.sound_velocity;
    let max_dist = taps as f64 / fs * c;
    let max_dist_sq = max_dist * max_dist;
    let dims = scene.room_dims;

    // Per axis: reflection count and squared offset to every microphone,
    // keeping images within range of at least one microphone.
    let axis_terms = |k: usize| -> Vec<(usize, Vec<f64>)> {
        let l = dims[k];
        let n_max = (max_dist / (2.0 * l)).ceil() as i64 + 1;
        let mut terms = Vec::new();
        for n in -n_max..=n_max {
            for u in 0..2i64 {
                let img = (1 - 2 * u) as f64 * source[k] + 2.0 * n as f64 * l;
                let d2: Vec<f64> = mics.iter().map(|m| (img - m[k]) * (img - m[k])).collect();
                if d2.iter().any(|&v| v <= max_dist_sq) {
                    terms.push((((n - u).abs() + n.abs()) as usize, d2));
                }
            }
        }
        terms
    };
    let (xs, ys, zs) = (axis_terms(0), axis_terms(1), axis_terms(2));
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let ys_min: Vec<f64> = ys.iter().map(|(_, d)| min(d)).collect();
    let zs_min: Vec<f64> = zs.iter().map(|(_, d)| min(d)).collect();

    let mut dxy = vec![0.0; mics.len()];
    for (ox, dx2) in &xs {
        let dx_min = min(dx2);
        for ((oy, dy2), &dy_min) in ys.iter().zip(&ys_min) {
            if dx_min + dy_min > max_dist_sq {
                continue;
            }
            for (m, v) in dxy.iter_mut().enumerate() {
                *v = dx2[m] + dy2[m];
            }
            for ((oz, dz2), &dz_min) in zs.iter().zip(&zs_min) {
                if dx_min + dy_min + dz_min > max_dist_sq {
                    continue;
                }
                let order = ox + oy + oz;
                for (m, &v) in dxy.iter().enumerate() {
                    let d2 = v + dz2[m];
                    if d2 <= max_dist_sq {
                        visit(m, d2.sqrt(), order);
                    }
                }
            }
        }
    }
}

/// Responses from one source to each of `mics`.
fn image_rirs(scene: &RoomScene, source: [f64; 3], mics: &[[f64; 3]], taps: usize, beta: f64) -> Vec<Vec<f64>> {
    let mut h = vec![vec![0.0; taps]; mics.len()];
    let scale = scene.sample_rate as f64 / scene.array.sound_velocity;
    let mut pow = vec![1.0];
    for_each_image(scene, source, mics, taps, |m, d, order| {
        while pow.len() <= order {
            let last = *pow.last().unwrap();
            pow.push(last * beta);
        }
        let amp = pow[order];
        let tap = (d * scale).round() as usize;
        if amp != 0.0 && tap < taps {
            h[m][tap] += amp / (4.0 * PI * d);
        }
    });
    h
}

/// Impulse responses for every (source, microphone) pair.
pub fn generate_rir(scene: &RoomScene) -> Result<RirSet> {
    scene.validate()?;
    let taps = scene.rir_taps();
    let beta = scene.reflection_coefficient();
    let mics = &scene.array.mic_positions;
    let rirs: Vec<Vec<Vec<f64>>> = scene
        .sources
        .par_iter()
        .map(|&s| image_rirs(scene, s, mics, taps, beta))
        .collect();
    let direct = (0..scene.sources.len())
        .map(|s| (0..mics.len()).map(|m| scene.direct_tap(s, m)).collect())
        .collect();
    RirSet::new(rirs, direct, scene.sample_rate, DEFAULT_EARLY_BOUNDARY_MS)
}
