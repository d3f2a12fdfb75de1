//! Python bindings. Signals and tensors cross the boundary as nested lists
//! of floats; spectrograms stay opaque `Spectrogram` objects.

use std::path::PathBuf;

use mcse_core::masking::{self, ComplexMask, RealMask};
use mcse_core::pipeline::{self, Manifest, PipelineConfig, SimulationConfig};
use mcse_core::simulate::{self, RoomScene};
use mcse_core::spatial::{self, DoaEstimate, MicPairList};
use mcse_core::stft::{self as core_stft, MultiChannelSpectrogram, Waveform, WindowKind};
use mcse_core::{formats, metrics, wpe, Error};
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Wav(_) | Error::Format { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn nested2(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn nested3(a: &Array3<f64>) -> Vec<Vec<Vec<f64>>> {
    a.outer_iter().map(|m| nested2(&m.to_owned())).collect()
}

fn array2(rows: Vec<Vec<f64>>) -> Result<Array2<f64>, Error> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidArgument("ragged nested list".into()));
    }
    Ok(Array2::from_shape_vec((r, c), rows.into_iter().flatten().collect()).expect("rectangular"))
}

fn complex2(re: Vec<Vec<f64>>, im: Vec<Vec<f64>>) -> Result<Array2<Complex64>, Error> {
    let re = array2(re)?;
    let im = array2(im)?;
    if re.dim() != im.dim() {
        return Err(Error::ShapeMismatch {
            expected: vec![re.nrows(), re.ncols()],
            actual: vec![im.nrows(), im.ncols()],
        });
    }
    Ok(ndarray::Zip::from(&re).and(&im).map_collect(|&a, &b| Complex64::new(a, b)))
}

fn window_kind(name: &str) -> PyResult<WindowKind> {
    match name {
        "hann" => Ok(WindowKind::Hann),
        "sqrt-hann" => Ok(WindowKind::SqrtHann),
        "rectangular" => Ok(WindowKind::Rectangular),
        other => Err(PyValueError::new_err(format!("unknown window {other:?}"))),
    }
}

#[pyclass(name = "StftConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStftConfig {
    inner: core_stft::StftConfig,
}

#[pymethods]
impl PyStftConfig {
    #[new]
    #[pyo3(signature = (window_length=512, hop_length=256, fft_size=512, window="hann"))]
    fn new(window_length: usize, hop_length: usize, fft_size: usize, window: &str) -> PyResult<Self> {
        let inner = core_stft::StftConfig::new(window_length, hop_length, fft_size, window_kind(window)?);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn window_length(&self) -> usize {
        self.inner.window_length
    }

    #[getter]
    fn hop_length(&self) -> usize {
        self.inner.hop_length
    }

    #[getter]
    fn fft_size(&self) -> usize {
        self.inner.fft_size
    }

    fn num_bins(&self) -> usize {
        self.inner.num_bins()
    }

    fn num_frames(&self, num_samples: usize) -> usize {
        self.inner.num_frames(num_samples)
    }
}

fn stft_config(c: Option<PyRef<'_, PyStftConfig>>) -> core_stft::StftConfig {
    c.map(|c| c.inner).unwrap_or_default()
}

#[pyclass(name = "WpeConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWpeConfig {
    inner: wpe::WpeConfig,
}

#[pymethods]
impl PyWpeConfig {
    #[new]
    #[pyo3(signature = (delay=3, taps=18, iterations=3, regularization=1e-6, psd_floor=1e-8, psd_relative_floor=0.1))]
    fn new(
        delay: usize,
        taps: usize,
        iterations: usize,
        regularization: f64,
        psd_floor: f64,
        psd_relative_floor: f64,
    ) -> PyResult<Self> {
        let inner = wpe::WpeConfig {
            delay,
            taps,
            iterations,
            regularization,
            psd_floor,
            psd_relative_floor,
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn delay(&self) -> usize {
        self.inner.delay
    }

    #[getter]
    fn taps(&self) -> usize {
        self.inner.taps
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
}

fn wpe_config(c: Option<PyRef<'_, PyWpeConfig>>) -> wpe::WpeConfig {
    c.map(|c| c.inner).unwrap_or_default()
}

#[pyclass(name = "ArrayGeometry", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyArrayGeometry {
    inner: spatial::ArrayGeometry,
}

#[pymethods]
impl PyArrayGeometry {
    #[new]
    #[pyo3(signature = (mic_positions, reference_index=0, sound_velocity=343.0))]
    fn new(mic_positions: Vec<[f64; 3]>, reference_index: usize, sound_velocity: f64) -> PyResult<Self> {
        Ok(Self {
            inner: spatial::ArrayGeometry::new(mic_positions, reference_index, sound_velocity).map_err(err)?,
        })
    }

    /// Uniform linear array along +x.
    #[staticmethod]
    fn linear(num_mics: usize, spacing: f64, center: [f64; 3]) -> PyResult<Self> {
        Ok(Self {
            inner: spatial::ArrayGeometry::linear(num_mics, spacing, center).map_err(err)?,
        })
    }

    #[getter]
    fn num_mics(&self) -> usize {
        self.inner.num_mics()
    }

    #[getter]
    fn mic_positions(&self) -> Vec<[f64; 3]> {
        self.inner.mic_positions.clone()
    }

    fn reference_offsets(&self) -> Vec<f64> {
        self.inner.reference_offsets()
    }

    fn doa(&self, source_position: [f64; 3]) -> PyResult<f64> {
        Ok(spatial::ground_truth_doa(&self.inner, source_position).map_err(err)?.theta())
    }
}

/// Complex STFT `[channel, frame, bin]`.
#[pyclass(name = "Spectrogram", frozen, skip_from_py_object)]
struct PySpectrogram {
    inner: MultiChannelSpectrogram,
}

impl PySpectrogram {
    fn mono(&self, channel: usize) -> PyResult<core_stft::Spectrogram> {
        self.inner.channel(channel).map_err(err)
    }

    fn part(&self, f: fn(&Complex64) -> f64) -> Vec<Vec<Vec<f64>>> {
        nested3(&self.inner.bins.map(f))
    }
}

#[pymethods]
impl PySpectrogram {
    /// `(channels, frames, bins)`.
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.inner.bins.dim()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate
    }

    #[getter]
    fn num_samples(&self) -> usize {
        self.inner.num_samples
    }

    fn real(&self) -> Vec<Vec<Vec<f64>>> {
        self.part(|c| c.re)
    }

    fn imag(&self) -> Vec<Vec<Vec<f64>>> {
        self.part(|c| c.im)
    }

    /// Log power spectrum of one channel, `[frame, bin]`.
    #[pyo3(signature = (channel=0))]
    fn lps(&self, channel: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(nested2(&core_stft::lps_feature(&self.mono(channel)?)))
    }
}

fn wrap_mono(s: core_stft::Spectrogram) -> PySpectrogram {
    PySpectrogram {
        inner: s.into_multichannel(),
    }
}

#[pyfunction]
#[pyo3(signature = (channels, sample_rate, config=None))]
fn stft(channels: Vec<Vec<f64>>, sample_rate: u32, config: Option<PyRef<'_, PyStftConfig>>) -> PyResult<PySpectrogram> {
    let w = Waveform::new(channels, sample_rate).map_err(err)?;
    Ok(PySpectrogram {
        inner: core_stft::stft(&w, &stft_config(config)).map_err(err)?,
    })
}

#[pyfunction]
fn istft(spec: PyRef<'_, PySpectrogram>) -> PyResult<Vec<Vec<f64>>> {
    Ok(core_stft::istft(&spec.inner).map_err(err)?.into_channels())
}

/// Iterative WPE on one channel; returns a single-channel spectrogram.
#[pyfunction]
#[pyo3(signature = (spec, channel=0, config=None))]
fn wpe_iterative(spec: PyRef<'_, PySpectrogram>, channel: usize, config: Option<PyRef<'_, PyWpeConfig>>) -> PyResult<PySpectrogram> {
    let out = wpe::wpe_iterative(&spec.mono(channel)?, &wpe_config(config)).map_err(err)?;
    Ok(wrap_mono(out.output))
}

/// Mask-driven WPE; `mask` is `[frame, bin]`.
#[pyfunction]
#[pyo3(signature = (spec, mask, channel=0, config=None, mask_max=masking::REAL_MASK_MAX))]
fn dnn_wpe(
    spec: PyRef<'_, PySpectrogram>,
    mask: Vec<Vec<f64>>,
    channel: usize,
    config: Option<PyRef<'_, PyWpeConfig>>,
    mask_max: f64,
) -> PyResult<PySpectrogram> {
    let mask = RealMask::new(array2(mask).map_err(err)?, mask_max).map_err(err)?;
    let out = wpe::dnn_wpe(&spec.mono(channel)?, &mask, &wpe_config(config)).map_err(err)?;
    Ok(wrap_mono(out.output))
}

/// Oracle complex ratio mask `target / mix` as `(real, imag)` `[frame, bin]`.
#[pyfunction]
#[pyo3(signature = (target, mix, channel=0))]
fn oracle_complex_mask(
    target: PyRef<'_, PySpectrogram>,
    mix: PyRef<'_, PySpectrogram>,
    channel: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let m = masking::oracle_complex_mask(&target.mono(0)?, &mix.mono(channel)?).map_err(err)?;
    Ok((nested2(&m.values().mapv(|c| c.re)), nested2(&m.values().mapv(|c| c.im))))
}

/// Applies a complex mask to one channel.
#[pyfunction]
#[pyo3(signature = (spec, mask_real, mask_imag, channel=0, clip=masking::CLIP_MAGNITUDE))]
fn apply_complex_mask(
    spec: PyRef<'_, PySpectrogram>,
    mask_real: Vec<Vec<f64>>,
    mask_imag: Vec<Vec<f64>>,
    channel: usize,
    clip: f64,
) -> PyResult<PySpectrogram> {
    let mask = ComplexMask::new(complex2(mask_real, mask_imag).map_err(err)?, clip).map_err(err)?;
    Ok(wrap_mono(masking::apply_complex_mask(&mask, &spec.mono(channel)?).map_err(err)?))
}

fn pair_list(pairs: Option<Vec<(usize, usize)>>, channels: usize) -> PyResult<MicPairList> {
    match pairs {
        Some(p) => MicPairList::new(p, channels),
        None => MicPairList::reference_pairs(channels, 0),
    }
    .map_err(err)
}

/// Phase differences `[pair, frame, bin]`; pairs default to `(0, r)`.
#[pyfunction]
#[pyo3(signature = (spec, pairs=None))]
fn ipd(spec: PyRef<'_, PySpectrogram>, pairs: Option<Vec<(usize, usize)>>) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let pairs = pair_list(pairs, spec.inner.num_channels())?;
    Ok(nested3(&spatial::compute_ipd(&spec.inner, &pairs).map_err(err)?))
}

/// Angle feature `[frame, bin]` towards `doa` radians.
#[pyfunction]
#[pyo3(signature = (spec, doa, geometry, pairs=None))]
fn angle_feature(
    spec: PyRef<'_, PySpectrogram>,
    doa: f64,
    geometry: PyRef<'_, PyArrayGeometry>,
    pairs: Option<Vec<(usize, usize)>>,
) -> PyResult<Vec<Vec<f64>>> {
    let pairs = pair_list(pairs, spec.inner.num_channels())?;
    let freqs = spec.inner.config.bin_frequencies(spec.inner.sample_rate);
    let sv = spatial::steering_vector(DoaEstimate::new(doa).map_err(err)?, &geometry.inner, &freqs);
    Ok(nested2(&spatial::angle_feature(&spec.inner, &sv, &pairs).map_err(err)?))
}

fn mono(samples: Vec<f64>, sample_rate: u32) -> PyResult<Waveform> {
    Waveform::mono(samples, sample_rate).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (estimate, reference, sample_rate=16000))]
fn si_snr(estimate: Vec<f64>, reference: Vec<f64>, sample_rate: u32) -> PyResult<f64> {
    metrics::si_snr(&mono(estimate, sample_rate)?, &mono(reference, sample_rate)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (signal, sample_rate=16000))]
fn srmr(signal: Vec<f64>, sample_rate: u32) -> PyResult<f64> {
    metrics::srmr(&mono(signal, sample_rate)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (processed, early_reference, sample_rate=16000))]
fn early_to_late_ratio(processed: Vec<f64>, early_reference: Vec<f64>, sample_rate: u32) -> PyResult<f64> {
    metrics::early_to_late_ratio_with_reference(&mono(early_reference, sample_rate)?, &mono(processed, sample_rate)?)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (response, sample_rate=16000))]
fn schroeder_t60(response: Vec<f64>, sample_rate: u32) -> Option<f64> {
    metrics::schroeder_t60(&response, sample_rate)
}

/// Image-method RIRs `[source][mic][tap]`.
#[pyfunction]
#[pyo3(signature = (room_dims, t60, sources, geometry, sample_rate=16000))]
fn generate_rir(
    room_dims: [f64; 3],
    t60: f64,
    sources: Vec<[f64; 3]>,
    geometry: PyRef<'_, PyArrayGeometry>,
    sample_rate: u32,
) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let scene = RoomScene {
        room_dims,
        t60,
        sources,
        array: geometry.inner.clone(),
        sample_rate,
        seed: 0,
        rir_length: None,
    };
    Ok(simulate::generate_rir(&scene).map_err(err)?.responses().to_vec())
}

/// Draws random scenes from a simulation config (JSON text, `{}` for
/// defaults) and writes the corpus to `out_dir`. Returns the manifest path.
#[pyfunction]
fn simulate_corpus(config_json: &str, out_dir: PathBuf) -> PyResult<String> {
    let config: SimulationConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let scenes = pipeline::random_scenes(&config).map_err(err)?;
    let outcome = pipeline::simulate_corpus(&scenes, &out_dir).map_err(err)?;
    if let Some(f) = outcome.failures.first() {
        return Err(PyValueError::new_err(format!("scene {} failed: {}", f.utterance_id, f.error)));
    }
    Ok(out_dir.join("manifest.json").display().to_string())
}

/// Runs the pipeline; returns the summary as JSON text.
#[pyfunction]
fn run_pipeline(config_json: &str, manifest_path: PathBuf) -> PyResult<String> {
    let config = PipelineConfig::from_json(config_json).map_err(err)?;
    let manifest = Manifest::load(&manifest_path).map_err(err)?;
    let run = pipeline::run_pipeline(&config, &manifest).map_err(err)?;
    serde_json::to_string(&run.summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Writes features; returns `(utterance_id, error)` for failures.
#[pyfunction]
fn export_features(config_json: &str, manifest_path: PathBuf) -> PyResult<Vec<(String, String)>> {
    let config = PipelineConfig::from_json(config_json).map_err(err)?;
    let manifest = Manifest::load(&manifest_path).map_err(err)?;
    let failures = pipeline::export_features(&config, &manifest).map_err(err)?;
    Ok(failures.into_iter().map(|f| (f.utterance_id, f.error)).collect())
}

/// Reads a FEAT file as `(shape, row-major values)`.
#[pyfunction]
fn read_feature(path: PathBuf) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let t = formats::read_feature(&path).map_err(err)?;
    Ok((t.shape().to_vec(), t.iter().copied().collect()))
}

#[pymodule]
fn mcse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStftConfig>()?;
    m.add_class::<PyWpeConfig>()?;
    m.add_class::<PyArrayGeometry>()?;
    m.add_class::<PySpectrogram>()?;
    m.add_function(wrap_pyfunction!(stft, m)?)?;
    m.add_function(wrap_pyfunction!(istft, m)?)?;
    m.add_function(wrap_pyfunction!(wpe_iterative, m)?)?;
    m.add_function(wrap_pyfunction!(dnn_wpe, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_complex_mask, m)?)?;
    m.add_function(wrap_pyfunction!(apply_complex_mask, m)?)?;
    m.add_function(wrap_pyfunction!(ipd, m)?)?;
    m.add_function(wrap_pyfunction!(angle_feature, m)?)?;
    m.add_function(wrap_pyfunction!(si_snr, m)?)?;
    m.add_function(wrap_pyfunction!(srmr, m)?)?;
    m.add_function(wrap_pyfunction!(early_to_late_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(schroeder_t60, m)?)?;
    m.add_function(wrap_pyfunction!(generate_rir, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(export_features, m)?)?;
    m.add_function(wrap_pyfunction!(read_feature, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
