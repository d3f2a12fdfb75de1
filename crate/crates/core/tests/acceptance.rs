//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use mcse_core::masking::{oracle_real_mask, RealMask};
use mcse_core::metrics::{early_to_late_ratio_with_reference, schroeder_t60, si_snr, srmr};
use mcse_core::pipeline::{
    random_scenes, run_pipeline, simulate_corpus, simulate_scene, DereverbMethod, Manifest, PipelineConfig,
    ScoreReference, SimulationConfig, Stage,
};
use mcse_core::simulate::{
    convolve_rir, generate_rir, mix_sources, split_early_late, synthetic_speech, MixSpec, NoiseKind, RoomScene,
};
use mcse_core::spatial::{angle_feature, compute_ipd, steering_vector, ArrayGeometry, DoaEstimate, MicPairList};
use mcse_core::stft::{istft, istft_mono, stft, stft_mono, Spectrogram, StftConfig, Waveform};
use mcse_core::wpe::{dereverb_with_psd, dnn_wpe, estimate_wpe_weights, wpe_iterative, Psd, WpeConfig};
use mcse_core::Complex64;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn stft_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let config = StftConfig::default();
    let signals: Vec<Waveform> = (0..100)
        .map(|_| Waveform::mono(gaussian(&mut rng, 16000, 0.3), 16000).unwrap())
        .collect();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for x in &signals {
        let y = istft(&stft(x, &config).unwrap()).unwrap();
        let err = x.channel(0).iter().zip(y.channel(0)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err / x.peak());
    }
    let elapsed = start.elapsed();
    Outcome {
        name: "stft round trip",
        pass: worst < 1e-6 && elapsed < Duration::from_secs(5),
        detail: format!("max err/peak {worst:.2e} (< 1e-6), 100 utterances in {:.2} s (< 5 s)", secs(elapsed)),
    }
}

/// Far-field plane wave from `theta`, delayed exactly in the frequency
/// domain (circularly) at each microphone.
fn plane_wave(geom: &ArrayGeometry, theta: f64, n: usize, rng: &mut ChaCha8Rng) -> Waveform {
    let source = gaussian(rng, n, 0.3);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spectrum: Vec<Complex64> = source.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut spectrum);
    let fs = 16000.0;
    let channels = geom
        .reference_offsets()
        .iter()
        .map(|&offset| {
            // Microphones displaced towards the source hear it earlier.
            let delay = -offset * theta.cos() / geom.sound_velocity * fs;
            let mut s: Vec<Complex64> = spectrum
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                    v * Complex64::from_polar(1.0, -2.0 * PI * k * delay / n as f64)
                })
                .collect();
            if n.is_multiple_of(2) {
                s[n / 2] = Complex64::new(s[n / 2].re, 0.0);
            }
            inv.process(&mut s);
            s.iter().map(|c| c.re / n as f64).collect()
        })
        .collect();
    Waveform::new(channels, 16000).unwrap()
}

fn spatial_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let geom = ArrayGeometry::linear15(0.04, [2.0, 2.0, 1.5]).unwrap();
    let config = StftConfig::default();
    let freqs = config.bin_frequencies(16000);
    let pairs = MicPairList::reference_pairs(15, 0).unwrap();
    let mut peak_ok = true;
    let mut worst_margin = f64::INFINITY;
    for true_deg in [20i32, 63, 90, 118, 155] {
        let x = stft(&plane_wave(&geom, (true_deg as f64).to_radians(), 16000, &mut rng), &config).unwrap();
        let score = |deg: f64| -> f64 {
            let sv = steering_vector(DoaEstimate::from_degrees(deg).unwrap(), &geom, &freqs);
            angle_feature(&x, &sv, &pairs).unwrap().sum()
        };
        let at_truth = score(true_deg as f64);
        for deg in 0..=180 {
            if (deg - true_deg).abs() <= 1 {
                continue;
            }
            let margin = at_truth - score(deg as f64);
            worst_margin = worst_margin.min(margin);
            peak_ok &= margin > 0.0;
        }
    }

    // IPD antisymmetry on the same kind of signal.
    let x = stft(&plane_wave(&geom, 1.1, 16000, &mut rng), &config).unwrap();
    let forward = compute_ipd(&x, &pairs).unwrap();
    let swapped = MicPairList::new(pairs.pairs().iter().map(|&(m, n)| (n, m)).collect(), 15).unwrap();
    let backward = compute_ipd(&x, &swapped).unwrap();
    let mut violations = 0usize;
    for (a, b) in forward.iter().zip(backward.iter()) {
        let wrapped_pi = *a == PI && *b == PI;
        if !(*a == -*b || wrapped_pi) {
            violations += 1;
        }
    }
    Outcome {
        name: "spatial correctness",
        pass: peak_ok && violations == 0,
        detail: format!(
            "AF peak at true DOA for 5 directions, min margin {worst_margin:.3} (> 0); IPD antisymmetry violations {violations} of {}",
            forward.len()
        ),
    }
}

fn wpe_identification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let frames = 10_000;
    let bins = 8;
    let config = WpeConfig {
        taps: 1,
        psd_relative_floor: 0.0,
        ..Default::default()
    };
    let planted: Vec<Complex64> = (0..bins)
        .map(|_| Complex64::from_polar(rng.random_range(0.2..0.9), rng.random_range(-PI..PI)))
        .collect();
    // Temporally white innovation with a time-varying variance, the source
    // model WPE assumes (60 dB of level variation, as in speech); the filter
    // is solved with the true variance.
    let mut x = Array2::<Complex64>::zeros((frames, bins));
    let mut lambda = Array2::<f64>::zeros((frames, bins));
    for (f, g) in planted.iter().enumerate() {
        for t in 0..frames {
            let sigma = 10f64.powf(rng.random_range(-3.0..0.0));
            lambda[[t, f]] = sigma * sigma;
            let past = if t >= config.delay { x[[t - config.delay, f]] } else { Complex64::new(0.0, 0.0) };
            x[[t, f]] = sigma * complex_gaussian(&mut rng) + g * past;
        }
    }
    let spec = Spectrogram::from_bins(x, StftConfig::default(), 16000);
    let filter = estimate_wpe_weights(&spec, &Psd::new(lambda, config.psd_floor), &config).unwrap();
    // d = x - w^H xbar, so w = conj(g).
    let worst_g = planted
        .iter()
        .enumerate()
        .map(|(f, g)| (filter.weights[[f, 0]].conj() - g).norm())
        .fold(0.0, f64::max);

    // Residuals over every solve of a 50-utterance run.
    let start = Instant::now();
    let stft_config = StftConfig::default();
    let wpe_config = WpeConfig::default();
    let mut worst_residual: f64 = 0.0;
    let mut solves = 0usize;
    for i in 0..50 {
        let t60 = rng.random_range(0.2..0.9);
        let dims = [rng.random_range(4.0..8.0), rng.random_range(4.0..7.0), rng.random_range(2.6..3.5)];
        let scene = RoomScene {
            room_dims: dims,
            t60,
            sources: vec![[dims[0] * 0.7, dims[1] * 0.65, 1.6]],
            array: ArrayGeometry::linear(2, 0.05, [dims[0] * 0.35, dims[1] * 0.4, 1.5]).unwrap(),
            sample_rate: 16000,
            seed: i,
            rir_length: None,
        };
        let rirs = generate_rir(&scene).unwrap();
        let dry = Waveform::mono(synthetic_speech(32000, 16000, &mut rng), 16000).unwrap();
        let wet = convolve_rir(&dry, &rirs, 0).unwrap().select_channel(0).unwrap().resized(32000);
        let (early, _) = split_early_late(&rirs);
        let early = convolve_rir(&dry, &early, 0).unwrap().select_channel(0).unwrap().resized(32000);
        let x = stft_mono(&wet, &stft_config).unwrap();

        // Iterative WPE spelled out so every round's solve is visible.
        let power = |s: &Spectrogram| s.bins.mapv(|v| v.norm_sqr());
        let mut psd = Psd::floored(power(&x), &x, &wpe_config);
        for _ in 0..wpe_config.iterations {
            let round = dereverb_with_psd(&x, psd, &wpe_config).unwrap();
            worst_residual = worst_residual.max(round.filter.max_residual());
            solves += round.filter.residuals.len();
            psd = Psd::floored(power(&round.output), &x, &wpe_config);
        }
        let mask = oracle_real_mask(&stft_mono(&early, &stft_config).unwrap(), &x).unwrap();
        let dnn = dnn_wpe(&x, &mask, &wpe_config).unwrap();
        worst_residual = worst_residual.max(dnn.filter.max_residual());
        solves += dnn.filter.residuals.len();
    }
    Outcome {
        name: "wpe identification",
        pass: worst_g < 1e-3 && worst_residual < 1e-8,
        detail: format!(
            "max |g_hat - g| {worst_g:.2e} over {bins} bins at T={frames} (< 1e-3); max residual {worst_residual:.2e} over {solves} solves (< 1e-8), {:.1} s",
            secs(start.elapsed())
        ),
    }
}

fn wpe_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let config = WpeConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let scene = RoomScene {
            room_dims: [6.0, 5.0, 3.0],
            t60: 0.3 + 0.15 * i as f64,
            sources: vec![[4.5, 3.5, 1.6]],
            array: ArrayGeometry::linear(2, 0.05, [2.0, 2.0, 1.5]).unwrap(),
            sample_rate: 16000,
            seed: i,
            rir_length: None,
        };
        let rirs = generate_rir(&scene).unwrap();
        let dry = Waveform::mono(synthetic_speech(32000, 16000, &mut rng), 16000).unwrap();
        let x = stft_mono(&convolve_rir(&dry, &rirs, 0).unwrap().select_channel(0).unwrap().resized(32000), &StftConfig::default()).unwrap();
        let iterative = wpe_iterative(&x, &config).unwrap();
        let values = ndarray::Zip::from(iterative.psd.values())
            .and(&x.bins)
            .map_collect(|&lambda, &v| lambda / v.norm_sqr());
        let mask = RealMask::new(values, f64::MAX).unwrap();
        let driven = dnn_wpe(&x, &mask, &config).unwrap();
        let diff = ndarray::Zip::from(&iterative.output.bins)
            .and(&driven.output.bins)
            .fold(0.0f64, |m, a, b| m.max((a - b).norm()));
        worst = worst.max(diff);
    }
    Outcome {
        name: "wpe/dnn-wpe equivalence",
        pass: worst < 1e-10,
        detail: format!("max elementwise difference {worst:.2e} over 5 utterances (< 1e-10)"),
    }
}

fn directional_dereverberation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let stft_config = StftConfig::default();
    let config = WpeConfig::default();
    let n = 48000;
    let (mut srmr_in, mut srmr_wpe, mut elr_in, mut elr_dnn) = (vec![], vec![], vec![], vec![]);
    for _ in 0..20 {
        let t60 = rng.random_range(0.4..1.0);
        let dims = [rng.random_range(4.0..8.0), rng.random_range(4.0..7.0), rng.random_range(2.6..3.5)];
        let scene = RoomScene {
            room_dims: dims,
            t60,
            sources: vec![[dims[0] * 0.75, dims[1] * 0.7, 1.6]],
            array: ArrayGeometry::linear(2, 0.05, [dims[0] * 0.35, dims[1] * 0.4, 1.5]).unwrap(),
            sample_rate: 16000,
            seed: 0,
            rir_length: None,
        };
        let rirs = generate_rir(&scene).unwrap();
        let dry = Waveform::mono(synthetic_speech(n, 16000, &mut rng), 16000).unwrap();
        let wet = convolve_rir(&dry, &rirs, 0).unwrap().select_channel(0).unwrap().resized(n);
        let (early, _) = split_early_late(&rirs);
        let early = convolve_rir(&dry, &early, 0).unwrap().select_channel(0).unwrap().resized(n);
        let x = stft_mono(&wet, &stft_config).unwrap();
        let wpe = istft_mono(&wpe_iterative(&x, &config).unwrap().output).unwrap().resized(n);
        let mask = oracle_real_mask(&stft_mono(&early, &stft_config).unwrap(), &x).unwrap();
        let dnn = istft_mono(&dnn_wpe(&x, &mask, &config).unwrap().output).unwrap().resized(n);
        srmr_in.push(srmr(&wet).unwrap());
        srmr_wpe.push(srmr(&wpe).unwrap());
        elr_in.push(early_to_late_ratio_with_reference(&early, &wet).unwrap());
        elr_dnn.push(early_to_late_ratio_with_reference(&early, &dnn).unwrap());
    }
    let elapsed = start.elapsed();
    let gain = median(&elr_dnn) - median(&elr_in);
    Outcome {
        name: "directional dereverberation",
        pass: median(&srmr_wpe) > median(&srmr_in) && gain >= 3.0 && elapsed < Duration::from_secs(120),
        detail: format!(
            "median SRMR {:.3} -> {:.3} (wpe); median ELR {:.2} -> {:.2} dB, gain {gain:.2} dB (>= 3); {:.1} s (< 120 s)",
            median(&srmr_in),
            median(&srmr_wpe),
            median(&elr_in),
            median(&elr_dnn),
            secs(elapsed)
        ),
    }
}

fn corpus(dir: &Path, config: &SimulationConfig) -> Manifest {
    let scenes = random_scenes(config).unwrap();
    let outcome = simulate_corpus(&scenes, dir).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    outcome.manifest
}

fn oracle_separation(tmp: &Path) -> Outcome {
    let sim = SimulationConfig {
        num_utterances: 30,
        duration: 2.0,
        num_mics: 2,
        interferer: false,
        noise: None,
        seed: 21,
        ..Default::default()
    };
    let manifest = corpus(&tmp.join("single"), &sim);
    let config = PipelineConfig {
        stages: vec![Stage::Separate],
        output_dir: tmp.join("single_out"),
        ..Default::default()
    };
    let run = run_pipeline(&config, &manifest).unwrap();
    let scores: Vec<f64> = run.reports.iter().filter_map(|r| r.si_snr_db).collect();
    let passing = scores.iter().filter(|&&s| s >= 40.0).count();
    let fraction = passing as f64 / manifest.utterances.len() as f64;
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome {
        name: "oracle separation",
        pass: fraction >= 0.99,
        detail: format!(
            "{passing}/{} utterances >= 40 dB ({:.1}%, need >= 99%), min {min:.1} dB",
            manifest.utterances.len(),
            100.0 * fraction
        ),
    }
}

fn pipeline_ordering(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let sim = SimulationConfig {
        num_utterances: 12,
        seed: 5,
        ..Default::default()
    };
    let manifest = corpus(&tmp.join("mixed"), &sim);
    let run = |stages: Vec<Stage>, name: &str| {
        let config = PipelineConfig {
            stages,
            dereverb_method: DereverbMethod::DnnWpe,
            score_reference: ScoreReference::Early,
            output_dir: tmp.join(name),
            ..Default::default()
        };
        let summary = run_pipeline(&config, &manifest).unwrap().summary;
        assert!(summary.failures.is_empty(), "{:?}", summary.failures);
        summary
    };
    let sep = run(vec![Stage::Separate], "sep");
    let both = run(vec![Stage::Separate, Stage::Dereverb], "sep_dnn_wpe");
    let (a, b) = (sep.si_snr_db.median.unwrap(), both.si_snr_db.median.unwrap());
    let (c, d) = (sep.srmr.median.unwrap(), both.srmr.median.unwrap());
    Outcome {
        name: "pipeline ordering",
        pass: b >= a && d > c && sep.failed == 0 && both.failed == 0,
        detail: format!(
            "12 utterances, 15 mics: median SI-SNR {a:.2} -> {b:.2} dB (>=), median SRMR {c:.3} -> {d:.3} (>); {:.1} s",
            secs(start.elapsed())
        ),
    }
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn simulator_fidelity(tmp: &Path) -> Outcome {
    // Schroeder T60 at every microphone.
    let mut worst_t60: f64 = 0.0;
    for dims in [[6.0, 5.0, 3.0], [4.5, 3.8, 2.7], [9.0, 7.0, 3.5]] {
        for target in [0.2, 0.5, 0.9] {
            let scene = RoomScene {
                room_dims: dims,
                t60: target,
                sources: vec![[dims[0] * 0.7, dims[1] * 0.6, 1.6]],
                array: ArrayGeometry::linear(4, 0.05, [dims[0] * 0.3, dims[1] * 0.4, 1.4]).unwrap(),
                sample_rate: 16000,
                seed: 0,
                rir_length: None,
            };
            let rirs = generate_rir(&scene).unwrap();
            for m in 0..4 {
                let measured = schroeder_t60(rirs.response(0, m), 16000).unwrap_or(f64::INFINITY);
                worst_t60 = worst_t60.max((measured / target - 1.0).abs());
            }
        }
    }

    // SNR/SIR on independent energy computations.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_ratio: f64 = 0.0;
    let energy = |w: &Waveform| w.channel(0).iter().map(|v| v * v).sum::<f64>();
    let relative = |e_target: f64, e_other: f64, db: f64| {
        let want = 10f64.powf(db / 10.0);
        (e_target / e_other - want).abs() / want
    };
    for _ in 0..20 {
        let mut multi = |scale: f64| Waveform::new(vec![gaussian(&mut rng, 8000, scale), gaussian(&mut rng, 8000, scale)], 16000).unwrap();
        let (target, interferer, noise) = (multi(0.2), multi(0.7), multi(0.05));
        let spec = MixSpec {
            snr_db: Some(rng.random_range(-5.0..25.0)),
            sir_db: Some(rng.random_range(-10.0..10.0)),
            overlap_ratio: 1.0,
        };
        let mix = mix_sources(&target, Some(&interferer), Some(&noise), &spec, 0).unwrap();
        worst_ratio = worst_ratio.max(relative(energy(&target), energy(mix.interferer.as_ref().unwrap()), spec.sir_db.unwrap()));
        worst_ratio = worst_ratio.max(relative(energy(&target), energy(mix.noise.as_ref().unwrap()), spec.snr_db.unwrap()));
    }
    let sim = SimulationConfig {
        num_utterances: 4,
        duration: 1.5,
        num_mics: 3,
        t60_range: [0.2, 0.5],
        noise: Some(NoiseKind::White),
        seed: 8,
        ..Default::default()
    };
    for scene in &random_scenes(&sim).unwrap().scenes {
        let report = simulate_scene(scene).unwrap().report;
        if let Some(snr) = scene.mix.snr_db {
            worst_ratio = worst_ratio.max(relative(report.target_energy, report.noise_energy, snr));
        }
        if let Some(sir) = scene.mix.sir_db {
            worst_ratio = worst_ratio.max(relative(report.target_energy, report.interferer_energy, sir));
        }
    }

    // Fixed seeds give byte-identical corpora.
    let a = corpus(&tmp.join("seed_a"), &sim);
    let b = corpus(&tmp.join("seed_b"), &sim);
    let other = corpus(&tmp.join("seed_c"), &SimulationConfig { seed: 9, ..sim.clone() });
    let identical = a.utterances.len() == b.utterances.len() && read_tree(&tmp.join("seed_a")) == read_tree(&tmp.join("seed_b"));
    let differs = read_tree(&tmp.join("seed_a")) != read_tree(&tmp.join("seed_c")) && !other.utterances.is_empty();

    Outcome {
        name: "simulator fidelity",
        pass: worst_t60 <= 0.2 && worst_ratio < 1e-6 && identical && differs,
        detail: format!(
            "max T60 deviation {:.1}% (<= 20%); max SNR/SIR relative error {worst_ratio:.1e} (< 1e-6); same seed identical {identical}, other seed differs {differs}",
            100.0 * worst_t60
        ),
    }
}

fn si_snr_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 16000;
    let zero_mean = |v: Vec<f64>| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x - mean).collect::<Vec<f64>>()
    };
    let reference = zero_mean(gaussian(&mut rng, n, 0.3));
    let estimate: Vec<f64> = reference.iter().map(|&r| r + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let w = |v: &[f64]| Waveform::mono(v.to_vec(), 16000).unwrap();
    let base = si_snr(&w(&estimate), &w(&reference)).unwrap();
    let mut exact = true;
    for gain in [0.125, 0.5, 2.0, 64.0] {
        let scaled: Vec<f64> = estimate.iter().map(|v| v * gain).collect();
        exact &= si_snr(&w(&scaled), &w(&reference)).unwrap() == base;
    }

    // Zero-mean noise orthogonal to the reference with the reference's energy.
    let raw = zero_mean(gaussian(&mut rng, n, 1.0));
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let rr = dot(&reference, &reference);
    let proj = dot(&raw, &reference) / rr;
    let orth: Vec<f64> = raw.iter().zip(&reference).map(|(x, r)| x - proj * r).collect();
    let scale = (rr / dot(&orth, &orth)).sqrt();
    let mixed: Vec<f64> = reference.iter().zip(&orth).map(|(r, o)| r + scale * o).collect();
    let zero = si_snr(&w(&mixed), &w(&reference)).unwrap();
    Outcome {
        name: "si-snr properties",
        pass: exact && zero.abs() < 1e-6,
        detail: format!("scale invariance exact {exact}; orthogonal equal-energy {zero:.2e} dB (|.| < 1e-6)"),
    }
}

fn main() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let outcomes = [
        stft_round_trip(),
        spatial_correctness(),
        wpe_identification(),
        wpe_equivalence(),
        directional_dereverberation(),
        oracle_separation(tmp.path()),
        pipeline_ordering(tmp.path()),
        simulator_fidelity(tmp.path()),
        si_snr_properties(),
    ];
    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        outcomes.len() - failed,
        secs(start.elapsed())
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
