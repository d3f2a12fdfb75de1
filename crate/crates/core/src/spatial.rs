//! Spatial features: inter-microphone phase differences (IPD), far-field
//! steering vectors and the location-guided angle feature (AF).
//!
//! Angles are measured from the positive array axis, which points from the
//! first microphone towards the last one. A 180-degree field of view in front
//! of the array maps to `theta` in `[0, pi]`.
//!
//! Microphone offsets `d_r` are signed projections of `p_r - p_ref` onto the
//! array axis. For a linear array whose reference is an end microphone this
//! is exactly the inter-microphone distance.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stft::MultiChannelSpectrogram;

pub const DEFAULT_SOUND_VELOCITY: f64 = 343.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub mic_positions: Vec<[f64; 3]>,
    #[serde(default)]
    pub reference_index: usize,
    #[serde(default = "default_sound_velocity")]
    pub sound_velocity: f64,
}

fn default_sound_velocity() -> f64 {
    DEFAULT_SOUND_VELOCITY
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl ArrayGeometry {
    pub fn new(mic_positions: Vec<[f64; 3]>, reference_index: usize, sound_velocity: f64) -> Result<Self> {
        let geom = Self {
            mic_positions,
            reference_index,
            sound_velocity,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Uniform linear array along +x, centred on `center`.
    pub fn linear(num_mics: usize, spacing: f64, center: [f64; 3]) -> Result<Self> {
        let half = (num_mics as f64 - 1.0) / 2.0;
        let mics = (0..num_mics)
            .map(|i| [center[0] + (i as f64 - half) * spacing, center[1], center[2]])
            .collect();
        Self::new(mics, 0, DEFAULT_SOUND_VELOCITY)
    }

    /// 15-channel symmetric linear array, reference at the first element.
    pub fn linear15(spacing: f64, center: [f64; 3]) -> Result<Self> {
        Self::linear(15, spacing, center)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mic_positions.len() < 2 {
            return Err(Error::InvalidGeometry("at least two microphones are required".into()));
        }
        if self.mic_positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite microphone coordinate".into()));
        }
        if self.reference_index >= self.mic_positions.len() {
            return Err(Error::InvalidGeometry(format!(
                "reference index {} out of range",
                self.reference_index
            )));
        }
        if !(self.sound_velocity > 0.0 && self.sound_velocity.is_finite()) {
            return Err(Error::InvalidGeometry("sound velocity must be positive".into()));
        }
        let first = self.mic_positions[0];
        let last = *self.mic_positions.last().unwrap();
        if norm(sub(last, first)) == 0.0 {
            return Err(Error::InvalidGeometry(
                "first and last microphones coincide, array axis undefined".into(),
            ));
        }
        Ok(())
    }

    pub fn num_mics(&self) -> usize {
        self.mic_positions.len()
    }

    /// Unit vector from the first to the last microphone.
    pub fn axis(&self) -> [f64; 3] {
        let d = sub(*self.mic_positions.last().unwrap(), self.mic_positions[0]);
        let n = norm(d);
        [d[0] / n, d[1] / n, d[2] / n]
    }

    pub fn center(&self) -> [f64; 3] {
        let n = self.mic_positions.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.mic_positions {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        c
    }

    /// Signed offset of each microphone from the reference along the axis.
    pub fn reference_offsets(&self) -> Vec<f64> {
        let axis = self.axis();
        let reference = self.mic_positions[self.reference_index];
        self.mic_positions
            .iter()
            .map(|&p| dot(sub(p, reference), axis))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DoaEstimate(f64);

impl DoaEstimate {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("DOA {theta} outside [0, pi]")));
        }
        Ok(Self(theta))
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Self::new(degrees.to_radians())
    }

    pub fn theta(self) -> f64 {
        self.0
    }
}

/// Steering vector values, indexed `[bin, channel]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringVector {
    pub values: Array2<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MicPairList(Vec<(usize, usize)>);

impl MicPairList {
    pub fn new(pairs: Vec<(usize, usize)>, num_channels: usize) -> Result<Self> {
        for &(m, n) in &pairs {
            if m == n || m >= num_channels || n >= num_channels {
                return Err(Error::InvalidPair(m, n));
            }
        }
        Ok(Self(pairs))
    }

    /// `(reference, r)` for every `r != reference`.
    pub fn reference_pairs(num_channels: usize, reference: usize) -> Result<Self> {
        Self::new(
            (0..num_channels)
                .filter(|&r| r != reference)
                .map(|r| (reference, r))
                .collect(),
            num_channels,
        )
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check_channels(&self, num_channels: usize) -> Result<()> {
        match self.0.iter().find(|&&(m, n)| m >= num_channels || n >= num_channels) {
            Some(&(m, n)) => Err(Error::InvalidPair(m, n)),
            None => Ok(()),
        }
    }
}

/// Phase of `y_m / y_n`, wrapped to `(-pi, pi]`. Zero when either bin is zero.
fn wrapped_phase(ratio: Complex64) -> f64 {
    if ratio.re == 0.0 && ratio.im == 0.0 {
        return 0.0;
    }
    let phi = ratio.im.atan2(ratio.re);
    if phi <= -PI {
        PI
    } else {
        phi
    }
}

/// IPD tensor indexed `[pair, frame, bin]`.
pub fn compute_ipd(spec: &MultiChannelSpectrogram, pairs: &MicPairList) -> Result<Array3<f64>> {
    if spec.num_channels() < 2 {
        return Err(Error::InvalidArgument("IPD needs at least two channels".into()));
    }
    pairs.check_channels(spec.num_channels())?;
    let (t_len, f_len) = (spec.num_frames(), spec.num_bins());
    let mut out = Array3::zeros((pairs.len(), t_len, f_len));
    for (p, &(m, n)) in pairs.pairs().iter().enumerate() {
        for t in 0..t_len {
            for f in 0..f_len {
                // angle(y_m / y_n) == angle(y_m * conj(y_n)) without dividing.
                let ratio = spec.bins[[m, t, f]] * spec.bins[[n, t, f]].conj();
                out[[p, t, f]] = wrapped_phase(ratio);
            }
        }
    }
    Ok(out)
}

pub fn steering_vector(theta: DoaEstimate, geom: &ArrayGeometry, freqs: &[f64]) -> SteeringVector {
    let offsets = geom.reference_offsets();
    let cos_theta = theta.theta().cos();
    let values = Array2::from_shape_fn((freqs.len(), offsets.len()), |(f, r)| {
        let phi = 2.0 * PI * freqs[f] * offsets[r] / geom.sound_velocity;
        Complex64::from_polar(1.0, -phi * cos_theta)
    });
    SteeringVector { values }
}

/// Cosine similarity of two complex numbers viewed as 2-vectors; zero when
/// either has zero norm.
fn cosine(a: Complex64, b: Complex64) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        (a.re * b.re + a.im * b.im) / denom
    }
}

/// Angle feature indexed `[frame, bin]`: the sum over pairs of the cosine
/// similarity between `G_n / G_m` and `y_m / y_n`. Not normalised by the pair
/// count, so values lie in `[-P, P]`.
pub fn angle_feature(
    spec: &MultiChannelSpectrogram,
    sv: &SteeringVector,
    pairs: &MicPairList,
) -> Result<Array2<f64>> {
    pairs.check_channels(spec.num_channels())?;
    let (bins, channels) = sv.values.dim();
    if bins != spec.num_bins() || channels != spec.num_channels() {
        return Err(Error::ShapeMismatch {
            expected: vec![spec.num_bins(), spec.num_channels()],
            actual: vec![bins, channels],
        });
    }
    let (t_len, f_len) = (spec.num_frames(), spec.num_bins());
    let mut out = Array2::zeros((t_len, f_len));
    for &(m, n) in pairs.pairs() {
        for f in 0..f_len {
            let steer = sv.values[[f, n]] / sv.values[[f, m]];
            for t in 0..t_len {
                // y_m / y_n has the direction of y_m * conj(y_n).
                let observed = spec.bins[[m, t, f]] * spec.bins[[n, t, f]].conj();
                out[[t, f]] += cosine(steer, observed);
            }
        }
    }
    Ok(out)
}

/// DOA of a source from the array centre, replacing the face tracker.
pub fn ground_truth_doa(geom: &ArrayGeometry, source_position: [f64; 3]) -> Result<DoaEstimate> {
    let v = sub(source_position, geom.center());
    let len = norm(v);
    if len == 0.0 {
        return Err(Error::InvalidArgument(
            "source coincides with the array centre".into(),
        ));
    }
    let c = (dot(v, geom.axis()) / len).clamp(-1.0, 1.0);
    DoaEstimate::new(c.acos())
}
