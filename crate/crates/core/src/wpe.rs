//! Weighted prediction error (WPE) dereverberation on a single channel.
//!
//! Late reverberation in frame `t` is predicted from the `L` frames
//! `t - D, ..., t - D - L + 1` and subtracted:
//!
//! ```text
//! d[t, f] = x[t, f] - g_f^H xbar[t, f],   xbar[t, f] = (x[t-D, f], ..., x[t-D-L+1, f])
//! ```
//!
//! The filter minimises the PSD-weighted prediction error, i.e. solves
//! `(sum_t xbar xbar^H / lambda_t) g = sum_t xbar conj(x_t) / lambda_t` per
//! frequency bin. Iterative WPE alternates between that solve and
//! `lambda = |d|^2`; the mask-driven variant takes `lambda = mask * |x|^2`
//! once and solves a single time.
//!
//! Frames before the start of the signal are treated as zero, so the first
//! `D` frames pass through unchanged.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Array3, ArrayView1, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::RealMask;
use crate::stft::Spectrogram;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WpeConfig {
    /// Prediction delay in frames.
    pub delay: usize,
    /// Filter taps in frames.
    pub taps: usize,
    /// PSD re-estimation rounds for iterative WPE.
    pub iterations: usize,
    /// Diagonal loading, relative to the mean diagonal of the correlation matrix.
    pub regularization: f64,
    /// Absolute lower bound on the PSD.
    pub psd_floor: f64,
    /// Lower bound on the PSD relative to the time-averaged observed power
    /// of each frequency bin. 0 disables it.
    pub psd_relative_floor: f64,
}

impl Default for WpeConfig {
    fn default() -> Self {
        Self {
            delay: 3,
            taps: 18,
            iterations: 3,
            regularization: 1e-6,
            psd_floor: 1e-8,
            psd_relative_floor: 0.1,
        }
    }
}

impl WpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delay == 0 || self.taps == 0 || self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "WPE delay, taps and iterations must all be at least 1".into(),
            ));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::InvalidArgument("regularization must be nonnegative".into()));
        }
        if !(self.psd_floor > 0.0 && self.psd_floor.is_finite()) {
            return Err(Error::InvalidArgument("psd_floor must be positive".into()));
        }
        if !(self.psd_relative_floor >= 0.0 && self.psd_relative_floor.is_finite()) {
            return Err(Error::InvalidArgument("psd_relative_floor must be nonnegative".into()));
        }
        Ok(())
    }

    fn check_frames(&self, frames: usize) -> Result<()> {
        let needed = self.taps + self.delay;
        if frames <= needed {
            return Err(Error::TooFewFrames {
                needed,
                actual: frames,
            });
        }
        Ok(())
    }
}

/// Per-frequency prediction filters, `weights[[f, l]]` multiplies `x[t - D - l, f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WpeFilter {
    pub weights: Array2<Complex64>,
    /// Relative residual `|A g - b| / |b|` of each bin's loaded normal equations.
    pub residuals: Vec<f64>,
}

impl WpeFilter {
    pub fn zeros(bins: usize, taps: usize) -> Self {
        Self {
            weights: Array2::zeros((bins, taps)),
            residuals: vec![0.0; bins],
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Target speech PSD `lambda[[t, f]]`, floored.
#[derive(Clone, Debug, PartialEq)]
pub struct Psd {
    values: Array2<f64>,
}

impl Psd {
    pub fn new(mut values: Array2<f64>, floor: f64) -> Self {
        values.mapv_inplace(|v| v.max(floor));
        Self { values }
    }

    /// `max(|x|^2, floor)`.
    pub fn from_power(spec: &Spectrogram, floor: f64) -> Self {
        Self::new(spec.bins.mapv(|x| x.norm_sqr()), floor)
    }

    /// Applies both floors of `config`, the relative one against the
    /// observation `spec`.
    pub fn floored(values: Array2<f64>, spec: &Spectrogram, config: &WpeConfig) -> Self {
        let mut psd = Self::new(values, config.psd_floor);
        if config.psd_relative_floor > 0.0 {
            let frames = spec.num_frames().max(1) as f64;
            for f in 0..spec.num_bins() {
                let mean = spec.bins.column(f).iter().map(|x| x.norm_sqr()).sum::<f64>() / frames;
                let floor = config.psd_relative_floor * mean;
                psd.values.column_mut(f).mapv_inplace(|v| v.max(floor));
            }
        }
        psd
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Result of a WPE run.
#[derive(Clone, Debug)]
pub struct WpeOutput {
    pub output: Spectrogram,
    pub filter: WpeFilter,
    /// PSD used for the final filter solve.
    pub psd: Psd,
}

/// Delayed observation vectors indexed `[f, t, l]`, entry `x[t - D - l, f]`.
pub fn build_delayed_history(spec: &Spectrogram, config: &WpeConfig) -> Array3<Complex64> {
    let (frames, bins) = spec.shape();
    Array3::from_shape_fn((bins, frames, config.taps), |(f, t, l)| {
        match t.checked_sub(config.delay + l) {
            Some(src) => spec.bins[[src, f]],
            None => Complex64::new(0.0, 0.0),
        }
    })
}

/// `lambda = mask * |x|^2`, floored as in [`Psd::floored`].
pub fn estimate_psd_from_mask(mask: &RealMask, spec: &Spectrogram, config: &WpeConfig) -> Result<Psd> {
    if mask.shape() != spec.shape() {
        return Err(Error::ShapeMismatch {
            expected: vec![spec.num_frames(), spec.num_bins()],
            actual: vec![mask.shape().0, mask.shape().1],
        });
    }
    let values = ndarray::Zip::from(mask.values())
        .and(&spec.bins)
        .map_collect(|&m, &x| m * x.norm_sqr());
    Ok(Psd::floored(values, spec, config))
}

fn history_at(column: ArrayView1<'_, Complex64>, t: usize, delay: usize, l: usize) -> Complex64 {
    match t.checked_sub(delay + l) {
        Some(src) => column[src],
        None => Complex64::new(0.0, 0.0),
    }
}

fn vector_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the loaded normal equations for one bin. Returns weights and the
/// relative residual.
fn solve_bin(
    column: ArrayView1<'_, Complex64>,
    psd: ArrayView1<'_, f64>,
    config: &WpeConfig,
    bin: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let taps = config.taps;
    let frames = column.len();
    let mut corr = DMatrix::<Complex64>::zeros(taps, taps);
    let mut cross = DVector::<Complex64>::zeros(taps);
    let mut hist = vec![Complex64::new(0.0, 0.0); taps];
    for t in config.delay..frames {
        for (l, h) in hist.iter_mut().enumerate() {
            *h = history_at(column, t, config.delay, l);
        }
        let inv = 1.0 / psd[t];
        let target = column[t].conj() * inv;
        for i in 0..taps {
            let hi = hist[i] * inv;
            cross[i] += hist[i] * target;
            for j in 0..taps {
                corr[(i, j)] += hi * hist[j].conj();
            }
        }
    }

    let trace: f64 = (0..taps).map(|i| corr[(i, i)].re).sum();
    if trace == 0.0 {
        // Silent history: nothing to predict from.
        return Ok((vec![Complex64::new(0.0, 0.0); taps], 0.0));
    }
    let loading = config.regularization * trace / taps as f64;
    for i in 0..taps {
        corr[(i, i)] += Complex64::new(loading, 0.0);
    }

    let solver = |rhs: &DVector<Complex64>| -> Option<DVector<Complex64>> {
        match corr.clone().cholesky() {
            Some(ch) => Some(ch.solve(rhs)),
            None => corr.clone().lu().solve(rhs),
        }
    };
    let mut weights = solver(&cross).ok_or(Error::SingularSystem { bin })?;
    // One step of iterative refinement.
    let correction = solver(&(&cross - &corr * &weights)).ok_or(Error::SingularSystem { bin })?;
    weights += correction;
    if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
        return Err(Error::SingularSystem { bin });
    }

    let b_norm = vector_norm(&cross);
    let residual = if b_norm == 0.0 {
        0.0
    } else {
        vector_norm(&(&corr * &weights - &cross)) / b_norm
    };
    Ok((weights.iter().copied().collect(), residual))
}

pub fn estimate_wpe_weights(spec: &Spectrogram, psd: &Psd, config: &WpeConfig) -> Result<WpeFilter> {
    config.validate()?;
    config.check_frames(spec.num_frames())?;
    if psd.values().dim() != spec.shape() {
        return Err(Error::ShapeMismatch {
            expected: vec![spec.num_frames(), spec.num_bins()],
            actual: vec![psd.values().nrows(), psd.values().ncols()],
        });
    }
    let solved = (0..spec.num_bins())
        .into_par_iter()
        .map(|f| {
            solve_bin(
                spec.bins.index_axis(Axis(1), f),
                psd.values().index_axis(Axis(1), f),
                config,
                f,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut filter = WpeFilter::zeros(spec.num_bins(), config.taps);
    for (f, (w, residual)) in solved.into_iter().enumerate() {
        for (l, v) in w.into_iter().enumerate() {
            filter.weights[[f, l]] = v;
        }
        filter.residuals[f] = residual;
    }
    Ok(filter)
}

/// `d[t, f] = x[t, f] - g_f^H xbar[t, f]`.
pub fn apply_wpe_filter(spec: &Spectrogram, filter: &WpeFilter, config: &WpeConfig) -> Result<Spectrogram> {
    let (bins, taps) = filter.weights.dim();
    if bins != spec.num_bins() || taps != config.taps {
        return Err(Error::ShapeMismatch {
            expected: vec![spec.num_bins(), config.taps],
            actual: vec![bins, taps],
        });
    }
    let mut out = spec.bins.clone();
    for f in 0..bins {
        let column = spec.bins.index_axis(Axis(1), f);
        for t in config.delay..spec.num_frames() {
            let mut prediction = Complex64::new(0.0, 0.0);
            for l in 0..taps {
                prediction += filter.weights[[f, l]].conj() * history_at(column, t, config.delay, l);
            }
            out[[t, f]] -= prediction;
        }
    }
    Ok(spec.with_bins(out))
}

/// One filter solve with the given PSD followed by filtering.
pub fn dereverb_with_psd(spec: &Spectrogram, psd: Psd, config: &WpeConfig) -> Result<WpeOutput> {
    let filter = estimate_wpe_weights(spec, &psd, config)?;
    let output = apply_wpe_filter(spec, &filter, config)?;
    Ok(WpeOutput { output, filter, psd })
}

/// Conventional WPE: start from `lambda = |x|^2` and alternate solve, filter
/// and `lambda = |d|^2` for `config.iterations` rounds. Floors are always
/// taken relative to the observation.
pub fn wpe_iterative(spec: &Spectrogram, config: &WpeConfig) -> Result<WpeOutput> {
    config.validate()?;
    config.check_frames(spec.num_frames())?;
    let power = |s: &Spectrogram| s.bins.mapv(|x| x.norm_sqr());
    let mut psd = Psd::floored(power(spec), spec, config);
    let mut result = None;
    for _ in 0..config.iterations {
        let round = dereverb_with_psd(spec, psd, config)?;
        psd = Psd::floored(power(&round.output), spec, config);
        result = Some(round);
    }
    Ok(result.expect("iterations >= 1"))
}

/// Mask-driven WPE: a single solve with `lambda = mask * |x|^2`.
pub fn dnn_wpe(spec: &Spectrogram, mask: &RealMask, config: &WpeConfig) -> Result<WpeOutput> {
    config.validate()?;
    config.check_frames(spec.num_frames())?;
    let psd = estimate_psd_from_mask(mask, spec, config)?;
    dereverb_with_psd(spec, psd, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::StftConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn spec_from(bins: Array2<Complex64>) -> Spectrogram {
        Spectrogram::from_bins(bins, StftConfig::default(), 16000)
    }

    fn random_spec(frames: usize, bins: usize, seed: u64) -> Spectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        spec_from(Array2::from_shape_fn((frames, bins), |_| complex_gaussian(&mut rng)))
    }

    /// Non-stationary innovation d_t = sigma_t * u_t with log-uniform sigma.
    fn innovation(frames: usize, seed: u64) -> (Vec<Complex64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma: Vec<f64> = (0..frames).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect();
        let d = sigma.iter().map(|s| complex_gaussian(&mut rng) * *s).collect();
        (d, sigma)
    }

    /// x_t = d_t + conj(g) x_{t-D}: the recursion the filter should identify.
    fn ar_sequence(d: &[Complex64], g: Complex64, delay: usize) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); d.len()];
        for t in 0..d.len() {
            let past = if t >= delay { x[t - delay] } else { Complex64::new(0.0, 0.0) };
            x[t] = d[t] + g.conj() * past;
        }
        x
    }

    #[test]
    fn config_validation() {
        assert!(WpeConfig::default().validate().is_ok());
        for bad in [
            WpeConfig { delay: 0, ..Default::default() },
            WpeConfig { taps: 0, ..Default::default() },
            WpeConfig { iterations: 0, ..Default::default() },
            WpeConfig { psd_floor: 0.0, ..Default::default() },
            WpeConfig { regularization: -1.0, ..Default::default() },
            WpeConfig { psd_relative_floor: -0.1, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        let spec = random_spec(21, 4, 0);
        assert!(matches!(
            wpe_iterative(&spec, &WpeConfig::default()),
            Err(Error::TooFewFrames { needed: 21, actual: 21 })
        ));
    }

    #[test]
    fn delayed_history_matches_index_oracle() {
        let spec = random_spec(12, 5, 1);
        let config = WpeConfig { delay: 2, taps: 4, ..Default::default() };
        let h = build_delayed_history(&spec, &config);
        assert_eq!(h.dim(), (5, 12, 4));
        for f in 0..5 {
            for t in 0..12 {
                for l in 0..4 {
                    let expected = if t as isize - 2 - l as isize >= 0 {
                        spec.bins[[t - 2 - l, f]]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    assert_eq!(h[[f, t, l]], expected);
                }
            }
            for t in 0..2 {
                assert!(h.index_axis(Axis(0), f).row(t).iter().all(|c| c.norm() == 0.0));
            }
        }
        let simple = WpeConfig { delay: 1, taps: 1, ..Default::default() };
        let h = build_delayed_history(&spec, &simple);
        for t in 1..12 {
            assert_eq!(h[[3, t, 0]], spec.bins[[t - 1, 3]]);
        }
    }

    #[test]
    fn psd_from_mask_cases() {
        let config = WpeConfig { psd_relative_floor: 0.0, ..Default::default() };
        let spec = spec_from(Array2::from_elem((2, 2), Complex64::new(3.0, 4.0)));
        let half = RealMask::constant(0.5, (2, 2)).unwrap();
        let psd = estimate_psd_from_mask(&half, &spec, &config).unwrap();
        assert!(psd.values().iter().all(|&v| (v - 12.5).abs() < 1e-12));
        let one = RealMask::constant(1.0, (2, 2)).unwrap();
        assert!(estimate_psd_from_mask(&one, &spec, &config)
            .unwrap()
            .values()
            .iter()
            .all(|&v| (v - 25.0).abs() < 1e-12));
        let zero = RealMask::constant(0.0, (2, 2)).unwrap();
        assert!(estimate_psd_from_mask(&zero, &spec, &config)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == config.psd_floor));
        assert!(estimate_psd_from_mask(&RealMask::constant(1.0, (3, 2)).unwrap(), &spec, &config).is_err());

        // Relative floor: a tenth of the mean power 25.
        let relative = WpeConfig::default();
        assert!(estimate_psd_from_mask(&zero, &spec, &relative)
            .unwrap()
            .values()
            .iter()
            .all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn recovers_planted_ar_coefficient() {
        let frames = 10_000;
        let g = Complex64::new(0.6, -0.3);
        let config = WpeConfig { delay: 3, taps: 1, ..Default::default() };
        let (d, sigma) = innovation(frames, 7);
        let x = ar_sequence(&d, g, config.delay);
        let spec = spec_from(Array2::from_shape_vec((frames, 1), x).unwrap());
        let true_psd = Psd::new(
            Array2::from_shape_vec((frames, 1), sigma.iter().map(|s| s * s).collect()).unwrap(),
            config.psd_floor,
        );
        let filter = estimate_wpe_weights(&spec, &true_psd, &config).unwrap();
        assert!((filter.weights[[0, 0]] - g).norm() < 1e-3, "{}", filter.weights[[0, 0]]);

        // With the planted filter the output is the innovation.
        let mut planted = WpeFilter::zeros(1, 1);
        planted.weights[[0, 0]] = g;
        let out = apply_wpe_filter(&spec, &planted, &config).unwrap();
        let num: f64 = (config.delay..frames).map(|t| (out.bins[[t, 0]] - d[t]).norm_sqr()).sum();
        let den: f64 = (config.delay..frames).map(|t| d[t].norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-2);
    }

    #[test]
    fn white_input_gives_near_zero_filter() {
        let spec = random_spec(20_000, 1, 11);
        let config = WpeConfig { taps: 4, ..Default::default() };
        let psd = Psd::from_power(&spec, config.psd_floor);
        let filter = estimate_wpe_weights(&spec, &psd, &config).unwrap();
        let norm: f64 = filter.weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 0.05, "{norm}");
        let it = wpe_iterative(&spec, &config).unwrap();
        let ratio = it.output.energy() / spec.energy();
        assert!((10.0 * ratio.log10()).abs() < 0.5);
    }

    #[test]
    fn filter_satisfies_loaded_normal_equations() {
        let spec = random_spec(400, 16, 13);
        let config = WpeConfig::default();
        let psd = Psd::from_power(&spec, config.psd_floor);
        let filter = estimate_wpe_weights(&spec, &psd, &config).unwrap();

        // Independent assembly from the explicit history tensor.
        let history = build_delayed_history(&spec, &config);
        for f in 0..16 {
            let taps = config.taps;
            let mut a = DMatrix::<Complex64>::zeros(taps, taps);
            let mut b = DVector::<Complex64>::zeros(taps);
            for t in 0..400 {
                let lam = psd.values()[[t, f]];
                for i in 0..taps {
                    b[i] += history[[f, t, i]] * spec.bins[[t, f]].conj() / lam;
                    for j in 0..taps {
                        a[(i, j)] += history[[f, t, i]] * history[[f, t, j]].conj() / lam;
                    }
                }
            }
            let trace: f64 = (0..taps).map(|i| a[(i, i)].re).sum();
            for i in 0..taps {
                a[(i, i)] += Complex64::new(config.regularization * trace / taps as f64, 0.0);
            }
            let g = DVector::from_iterator(taps, filter.weights.row(f).iter().copied());
            let rel = vector_norm(&(&a * &g - &b)) / vector_norm(&b);
            assert!(rel < 1e-8, "bin {f}: {rel}");
            assert!(filter.residuals[f] < 1e-8);
        }
    }

    #[test]
    fn zero_filter_and_linearity() {
        let spec = random_spec(60, 8, 17);
        let config = WpeConfig::default();
        let zero = WpeFilter::zeros(8, config.taps);
        assert_eq!(apply_wpe_filter(&spec, &zero, &config).unwrap().bins, spec.bins);

        let psd = Psd::from_power(&spec, config.psd_floor);
        let filter = estimate_wpe_weights(&spec, &psd, &config).unwrap();
        let alpha = Complex64::new(-1.5, 0.0);
        let scaled = spec.with_bins(spec.bins.mapv(|v| v * alpha));
        let a = apply_wpe_filter(&scaled, &filter, &config).unwrap();
        let b = apply_wpe_filter(&spec, &filter, &config).unwrap();
        for (p, q) in a.bins.iter().zip(b.bins.iter()) {
            assert!((p - q * alpha).norm() < 1e-10 * (1.0 + q.norm()));
        }
        // Early frames pass through.
        for t in 0..config.delay {
            assert_eq!(b.bins.row(t), spec.bins.row(t));
        }
    }

    #[test]
    fn single_iteration_equals_primitive_composition() {
        let spec = random_spec(80, 6, 19);
        let config = WpeConfig { iterations: 1, ..Default::default() };
        let it = wpe_iterative(&spec, &config).unwrap();
        let psd = Psd::floored(spec.bins.mapv(|x| x.norm_sqr()), &spec, &config);
        let filter = estimate_wpe_weights(&spec, &psd, &config).unwrap();
        let out = apply_wpe_filter(&spec, &filter, &config).unwrap();
        assert_eq!(it.output.bins, out.bins);
        assert_eq!(it.filter, filter);

        // Unit mask reduces the PSD to the floored power.
        let one = RealMask::constant(1.0, spec.shape()).unwrap();
        let dnn = dnn_wpe(&spec, &one, &config).unwrap();
        assert_eq!(dnn.output.bins, it.output.bins);
    }

    #[test]
    fn dnn_wpe_with_iterative_psd_trace_reproduces_output() {
        let spec = random_spec(120, 10, 23);
        let config = WpeConfig::default();
        let it = wpe_iterative(&spec, &config).unwrap();
        let ratio = ndarray::Zip::from(it.psd.values())
            .and(&spec.bins)
            .map_collect(|&lam, &x| lam / x.norm_sqr());
        let mask = RealMask::new(ratio, f64::MAX).unwrap();
        let dnn = dnn_wpe(&spec, &mask, &config).unwrap();
        for (a, b) in dnn.output.bins.iter().zip(it.output.bins.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn frequency_permutation_and_scale_covariance() {
        let spec = random_spec(90, 7, 29);
        let config = WpeConfig { iterations: 2, ..Default::default() };
        let base = wpe_iterative(&spec, &config).unwrap();

        let perm = [3, 0, 6, 1, 5, 2, 4];
        let permuted = spec.with_bins(Array2::from_shape_fn((90, 7), |(t, f)| spec.bins[[t, perm[f]]]));
        let out = wpe_iterative(&permuted, &config).unwrap();
        for t in 0..90 {
            for f in 0..7 {
                assert_eq!(out.output.bins[[t, f]], base.output.bins[[t, perm[f]]]);
            }
        }

        let alpha = 7.0;
        let scaled_config = WpeConfig { psd_floor: config.psd_floor * alpha * alpha, ..config };
        let scaled = spec.with_bins(spec.bins.mapv(|v| v * alpha));
        let out = wpe_iterative(&scaled, &scaled_config).unwrap();
        for (a, b) in out.filter.weights.iter().zip(base.filter.weights.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
        for (a, b) in out.output.bins.iter().zip(base.output.bins.iter()) {
            assert!((a - b * alpha).norm() < 1e-9 * alpha);
        }
    }

    #[test]
    fn silent_bin_gives_zero_filter() {
        let mut spec = random_spec(50, 3, 31);
        spec.bins.column_mut(1).fill(Complex64::new(0.0, 0.0));
        let out = wpe_iterative(&spec, &WpeConfig::default()).unwrap();
        assert!(out.filter.weights.row(1).iter().all(|w| w.norm() == 0.0));
        assert!(out.output.bins.column(1).iter().all(|w| w.norm() == 0.0));
    }
}
