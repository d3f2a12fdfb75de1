//! Time-frequency masks: complex ratio masks for separation and spectral
//! mapping, real-valued masks for the WPE power spectral density, and the
//! oracle constructions used when ground truth is available.
//!
//! Complex masks are plain (uncompressed) ratios whose magnitude is clipped to
//! [`CLIP_MAGNITUDE`]. Ratios are only formed where the denominator magnitude
//! exceeds [`MASK_FLOOR`]; elsewhere the mask is zero.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stft::Spectrogram;

pub const CLIP_MAGNITUDE: f64 = 10.0;
pub const MASK_FLOOR: f64 = 1e-8;
pub const REAL_MASK_MAX: f64 = 4.0;

/// Complex ratio mask indexed `[frame, bin]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMask {
    values: Array2<Complex64>,
    clip_magnitude: f64,
}

impl ComplexMask {
    /// Builds a mask, clipping magnitudes above `clip_magnitude` while keeping
    /// the phase.
    pub fn new(mut values: Array2<Complex64>, clip_magnitude: f64) -> Result<Self> {
        if !(clip_magnitude > 0.0) {
            return Err(Error::InvalidArgument("clip magnitude must be positive".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mask value".into()));
        }
        values.mapv_inplace(|v| clip(v, clip_magnitude));
        Ok(Self {
            values,
            clip_magnitude,
        })
    }

    pub fn constant(value: Complex64, shape: (usize, usize)) -> Result<Self> {
        Self::new(Array2::from_elem(shape, value), CLIP_MAGNITUDE)
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn clip_magnitude(&self) -> f64 {
        self.clip_magnitude
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }
}

fn clip(v: Complex64, bound: f64) -> Complex64 {
    let mag = v.norm();
    if mag > bound {
        v * (bound / mag)
    } else {
        v
    }
}

/// Real mask indexed `[frame, bin]`, values in `[0, mask_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMask {
    values: Array2<f64>,
    mask_max: f64,
}

impl RealMask {
    /// Builds a mask, clamping values into `[0, mask_max]`.
    pub fn new(mut values: Array2<f64>, mask_max: f64) -> Result<Self> {
        if !(mask_max > 0.0) {
            return Err(Error::InvalidArgument("mask_max must be positive".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN mask value".into()));
        }
        values.mapv_inplace(|v| v.clamp(0.0, mask_max));
        Ok(Self { values, mask_max })
    }

    pub fn constant(value: f64, shape: (usize, usize)) -> Result<Self> {
        Self::new(Array2::from_elem(shape, value), REAL_MASK_MAX)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mask_max(&self) -> f64 {
        self.mask_max
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }
}

fn check_shape(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch {
            expected: vec![expected.0, expected.1],
            actual: vec![actual.0, actual.1],
        });
    }
    Ok(())
}

/// `x = m * y` elementwise.
pub fn apply_complex_mask(mask: &ComplexMask, ref_spec: &Spectrogram) -> Result<Spectrogram> {
    check_shape(ref_spec.shape(), mask.shape())?;
    Ok(ref_spec.with_bins(&mask.values * &ref_spec.bins))
}

/// Ratio `target / mix` on bins where `|mix| > MASK_FLOOR`, zero elsewhere.
pub fn oracle_complex_mask(target: &Spectrogram, mix: &Spectrogram) -> Result<ComplexMask> {
    oracle_complex_mask_clipped(target, mix, CLIP_MAGNITUDE)
}

/// [`oracle_complex_mask`] with a custom magnitude clip.
pub fn oracle_complex_mask_clipped(target: &Spectrogram, mix: &Spectrogram, clip: f64) -> Result<ComplexMask> {
    check_shape(mix.shape(), target.shape())?;
    let values = ndarray::Zip::from(&target.bins)
        .and(&mix.bins)
        .map_collect(|&s, &y| {
            if y.norm() > MASK_FLOOR {
                s / y
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
    ComplexMask::new(values, clip)
}

/// Power ratio `|target|^2 / max(|observed|^2, MASK_FLOOR)`, capped at
/// [`REAL_MASK_MAX`].
pub fn oracle_real_mask(target: &Spectrogram, observed: &Spectrogram) -> Result<RealMask> {
    oracle_real_mask_capped(target, observed, REAL_MASK_MAX)
}

/// [`oracle_real_mask`] with a custom cap.
pub fn oracle_real_mask_capped(target: &Spectrogram, observed: &Spectrogram, mask_max: f64) -> Result<RealMask> {
    check_shape(observed.shape(), target.shape())?;
    let values = ndarray::Zip::from(&target.bins)
        .and(&observed.bins)
        .map_collect(|&s, &x| s.norm_sqr() / x.norm_sqr().max(MASK_FLOOR));
    RealMask::new(values, mask_max)
}

/// Spectral-mapping dereverberation: the separated spectrum multiplied by a
/// complex mask that maps it to the anechoic target.
pub fn spectral_map_dereverb(mask: &ComplexMask, separated: &Spectrogram) -> Result<Spectrogram> {
    apply_complex_mask(mask, separated)
}

/// Mean over bins of `|estimate - target|^2`.
pub fn spec_mse(estimate: &Spectrogram, target: &Spectrogram) -> Result<f64> {
    check_shape(target.shape(), estimate.shape())?;
    let n = estimate.bins.len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = ndarray::Zip::from(&estimate.bins)
        .and(&target.bins)
        .fold(0.0, |acc, &e, &t| acc + (e - t).norm_sqr());
    Ok(total / n as f64)
}
