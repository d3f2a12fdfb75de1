use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{
    convolve_rir, generate_rir, mix_sources, place_segment, split_early_late, synthetic_noise, synthetic_speech,
    MixReport, MixSpec, NoiseKind, RoomScene, DEFAULT_EARLY_BOUNDARY_MS, MAX_T60, MIN_T60,
};
use crate::spatial::{ground_truth_doa, ArrayGeometry};
use crate::stft::Waveform;
use crate::wav::{write_wav, WavEncoding};

use super::manifest::{Manifest, UtteranceManifest};
use super::run::Failure;

pub const SCENE_MANIFEST_VERSION: u32 = 1;

/// One utterance to simulate. `room.sources[0]` is the target; the next
/// source is the interferer when `mix.sir_db` is set, and the one after
/// that the point noise source when `mix.snr_db` is set. `room.seed` seeds
/// the dry-signal draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusScene {
    pub id: String,
    pub room: RoomScene,
    /// Seconds.
    pub duration: f64,
    pub mix: MixSpec,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    #[serde(default = "default_early_ms")]
    pub early_boundary_ms: f64,
}

fn default_early_ms() -> f64 {
    DEFAULT_EARLY_BOUNDARY_MS
}

impl CorpusScene {
    fn source_indices(&self) -> Result<(Option<usize>, Option<usize>)> {
        let mut next = 1;
        let mut take = |present: bool| {
            present.then(|| {
                next += 1;
                next - 1
            })
        };
        let interferer = take(self.mix.sir_db.is_some());
        let noise = take(self.mix.snr_db.is_some());
        if self.room.sources.len() != next {
            return Err(Error::InvalidScene(format!(
                "scene {} needs {next} sources for its mix spec, has {}",
                self.id,
                self.room.sources.len()
            )));
        }
        Ok((interferer, noise))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub version: u32,
    #[serde(default)]
    pub encoding: WavEncoding,
    pub scenes: Vec<CorpusScene>,
}

impl SceneManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: SceneManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.version != SCENE_MANIFEST_VERSION {
            return Err(Error::InvalidConfig(format!(
                "scene manifest version {} is not supported (expected {SCENE_MANIFEST_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Parameters for drawing random scenes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub version: u32,
    pub num_utterances: usize,
    pub id_prefix: String,
    pub duration: f64,
    pub sample_rate: u32,
    pub num_mics: usize,
    pub mic_spacing: f64,
    pub room_min: [f64; 3],
    pub room_max: [f64; 3],
    pub t60_range: [f64; 2],
    /// Source to array-centre distance range in metres.
    pub source_distance: [f64; 2],
    pub interferer: bool,
    /// Point noise source kind; `None` gives noiseless mixtures.
    pub noise: Option<NoiseKind>,
    pub snr_grid: Vec<f64>,
    pub sir_grid: Vec<f64>,
    pub overlap_range: [f64; 2],
    pub early_boundary_ms: f64,
    pub encoding: WavEncoding,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            version: SCENE_MANIFEST_VERSION,
            num_utterances: 20,
            id_prefix: "utt".into(),
            duration: 3.0,
            sample_rate: 16000,
            num_mics: 15,
            mic_spacing: 0.04,
            room_min: [3.0, 3.0, 2.5],
            room_max: [10.0, 8.0, 4.0],
            t60_range: [0.06, 1.12],
            source_distance: [1.0, 5.0],
            interferer: true,
            noise: Some(NoiseKind::Babble),
            snr_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            sir_grid: vec![-6.0, 0.0, 6.0],
            overlap_range: [0.2, 1.0],
            early_boundary_ms: DEFAULT_EARLY_BOUNDARY_MS,
            encoding: WavEncoding::Float32,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let c: SimulationConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.version != SCENE_MANIFEST_VERSION {
            return bad("unsupported simulation config version");
        }
        if !(self.duration > 0.0) || self.sample_rate == 0 {
            return bad("duration and sample rate must be positive");
        }
        if (0..3).any(|k| !(self.room_min[k] > 0.0 && self.room_min[k] <= self.room_max[k])) {
            return bad("room_min must be positive and not exceed room_max");
        }
        let [lo, hi] = self.t60_range;
        if !(lo <= hi && (lo == 0.0 || lo >= MIN_T60) && hi <= MAX_T60) {
            return bad("t60_range must lie within the supported T60 range");
        }
        let [dlo, dhi] = self.source_distance;
        if !(dlo > 0.0 && dlo <= dhi) {
            return bad("source_distance must be a positive range");
        }
        let [olo, ohi] = self.overlap_range;
        if !(olo > 0.0 && olo <= ohi && ohi <= 1.0) {
            return bad("overlap_range must lie within (0, 1]");
        }
        if (self.noise.is_some() && self.snr_grid.is_empty()) || (self.interferer && self.sir_grid.is_empty()) {
            return bad("SNR/SIR grids must be non-empty when the component is enabled");
        }
        if self.num_mics < 2 || !(self.mic_spacing > 0.0) {
            return bad("at least two microphones with positive spacing are required");
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

const WALL_MARGIN: f64 = 0.3;

fn inside_with_margin(p: [f64; 3], dims: [f64; 3]) -> bool {
    (0..3).all(|k| p[k] >= WALL_MARGIN && p[k] <= dims[k] - WALL_MARGIN)
}

fn place_source(rng: &mut ChaCha8Rng, centre: [f64; 3], dims: [f64; 3], distance: [f64; 2]) -> Result<[f64; 3]> {
    for _ in 0..256 {
        let d = uniform(rng, distance);
        let az = rng.random_range(0.0..2.0 * PI);
        let z = rng.random_range(1.2..1.9_f64).min(dims[2] - WALL_MARGIN);
        let dz = z - centre[2];
        let horiz = (d * d - dz * dz).max(0.0).sqrt();
        let p = [centre[0] + horiz * az.cos(), centre[1] + horiz * az.sin(), z];
        if inside_with_margin(p, dims) {
            return Ok(p);
        }
    }
    Err(Error::InvalidScene("could not place a source inside the room at the requested distance".into()))
}

/// Draws scenes from `config`. Every random quantity comes from a single
/// stream seeded by `config.seed`, so the same config always yields the
/// same manifest.
pub fn random_scenes(config: &SimulationConfig) -> Result<SceneManifest> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let aperture = (config.num_mics - 1) as f64 * config.mic_spacing;
    let mut scenes = Vec::with_capacity(config.num_utterances);
    for i in 0..config.num_utterances {
        let mut dims = [0.0; 3];
        for k in 0..3 {
            dims[k] = uniform(&mut rng, [config.room_min[k], config.room_max[k]]);
        }
        dims[0] = dims[0].max(aperture + 2.0 * WALL_MARGIN + 0.2);
        let t60 = uniform(&mut rng, config.t60_range);
        let half = aperture / 2.0 + WALL_MARGIN;
        let centre = [
            uniform(&mut rng, [half, dims[0] - half]),
            uniform(&mut rng, [WALL_MARGIN, dims[1] - WALL_MARGIN]),
            uniform(&mut rng, [1.0, (1.6_f64).min(dims[2] - WALL_MARGIN)]),
        ];
        let array = ArrayGeometry::linear(config.num_mics, config.mic_spacing, centre)?;
        let mut sources = vec![place_source(&mut rng, centre, dims, config.source_distance)?];
        let sir_db = if config.interferer {
            sources.push(place_source(&mut rng, centre, dims, config.source_distance)?);
            Some(config.sir_grid[rng.random_range(0..config.sir_grid.len())])
        } else {
            None
        };
        let snr_db = if config.noise.is_some() {
            sources.push(place_source(&mut rng, centre, dims, config.source_distance)?);
            Some(config.snr_grid[rng.random_range(0..config.snr_grid.len())])
        } else {
            None
        };
        let overlap_ratio = uniform(&mut rng, config.overlap_range);
        let seed = rng.random::<u64>();
        scenes.push(CorpusScene {
            id: format!("{}{i:05}", config.id_prefix),
            room: RoomScene {
                room_dims: dims,
                t60,
                sources,
                array,
                sample_rate: config.sample_rate,
                seed,
                rir_length: None,
            },
            duration: config.duration,
            mix: MixSpec {
                snr_db,
                sir_db,
                overlap_ratio: if config.interferer { overlap_ratio } else { 1.0 },
            },
            noise_kind: config.noise.unwrap_or_default(),
            early_boundary_ms: config.early_boundary_ms,
        });
    }
    Ok(SceneManifest {
        version: SCENE_MANIFEST_VERSION,
        encoding: config.encoding,
        scenes,
    })
}

/// In-memory result of simulating one scene.
#[derive(Clone, Debug)]
pub struct SimulatedUtterance {
    pub id: String,
    pub mixture: Waveform,
    pub reverberant: Waveform,
    pub early: Waveform,
    pub anechoic: Waveform,
    pub doa: f64,
    pub report: MixReport,
}

/// Generates the mixture and reference-channel ground truth for one scene.
/// All signals have `round(duration * fs)` samples.
pub fn simulate_scene(scene: &CorpusScene) -> Result<SimulatedUtterance> {
    let (interferer_index, noise_index) = scene.source_indices()?;
    if !(scene.duration > 0.0) {
        return Err(Error::InvalidScene(format!("scene {} has a nonpositive duration", scene.id)));
    }
    if interferer_index.is_some() && scene.mix.overlap_ratio == 0.0 {
        return Err(Error::InvalidScene(format!("scene {} has an interferer but zero overlap", scene.id)));
    }
    let fs = scene.room.sample_rate;
    let n = (scene.duration * fs as f64).round() as usize;
    let rirs = generate_rir(&scene.room)?.with_early_boundary_ms(scene.early_boundary_ms);
    let reference = scene.room.array.reference_index;
    let mut rng = ChaCha8Rng::seed_from_u64(scene.room.seed);

    let dry = Waveform::mono(synthetic_speech(n, fs, &mut rng), fs)?;
    let image = |dry: &Waveform, source: usize| -> Result<Waveform> { Ok(convolve_rir(dry, &rirs, source)?.resized(n)) };
    let target = image(&dry, 0)?;
    let interferer = match interferer_index {
        Some(k) => {
            let len = ((scene.mix.overlap_ratio * n as f64).round() as usize).clamp(1, n);
            let segment = synthetic_speech(len, fs, &mut rng);
            let dry_i = Waveform::mono(place_segment(&segment, n, n - len), fs)?;
            Some(image(&dry_i, k)?)
        }
        None => None,
    };
    let noise = match noise_index {
        Some(k) => Some(image(&Waveform::mono(synthetic_noise(scene.noise_kind, n, fs, &mut rng), fs)?, k)?),
        None => None,
    };
    let mix = mix_sources(&target, interferer.as_ref(), noise.as_ref(), &scene.mix, reference)?;

    let (early_rirs, _) = split_early_late(&rirs);
    let early = convolve_rir(&dry, &early_rirs, 0)?.select_channel(reference)?.resized(n);
    let anechoic = convolve_rir(&dry, &rirs.direct_only(), 0)?.select_channel(reference)?.resized(n);
    let doa = ground_truth_doa(&scene.room.array, scene.room.sources[0])?.theta();
    Ok(SimulatedUtterance {
        id: scene.id.clone(),
        mixture: mix.mixture,
        reverberant: target.select_channel(reference)?,
        early,
        anechoic,
        doa,
        report: mix.report,
    })
}

/// Per-scene record written to `corpus.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SceneRecord {
    id: String,
    t60: f64,
    snr_db: Option<f64>,
    sir_db: Option<f64>,
    overlap_ratio: f64,
    doa: f64,
    mix: MixReport,
}

pub struct CorpusOutcome {
    pub manifest: Manifest,
    pub failures: Vec<Failure>,
}

fn write_utterance(out: &Path, sim: &SimulatedUtterance, scene: &CorpusScene, encoding: WavEncoding) -> Result<UtteranceManifest> {
    let name = |kind: &str| PathBuf::from(format!("{}.{kind}.wav", sim.id));
    for (kind, w) in [
        ("mix", &sim.mixture),
        ("reverberant", &sim.reverberant),
        ("early", &sim.early),
        ("anechoic", &sim.anechoic),
    ] {
        write_wav(out.join(name(kind)), w, encoding)?;
    }
    Ok(UtteranceManifest {
        id: sim.id.clone(),
        mixture: name("mix"),
        reverberant: Some(name("reverberant")),
        early: Some(name("early")),
        anechoic: Some(name("anechoic")),
        doa: Some(sim.doa),
        source_position: Some(scene.room.sources[0]),
        geometry: Some(scene.room.array.clone()),
    })
}

/// Simulates every scene in parallel and writes `<out>/<id>.{mix,reverberant,
/// early,anechoic}.wav`, `<out>/manifest.json` (paths relative to `out`)
/// and `<out>/corpus.jsonl`. Scenes that fail are reported and left out of
/// the manifest. The returned manifest carries paths joined onto `out`.
pub fn simulate_corpus(scenes: &SceneManifest, out: &Path) -> Result<CorpusOutcome> {
    std::fs::create_dir_all(out)?;
    let mut ids = std::collections::HashSet::new();
    for s in &scenes.scenes {
        if !ids.insert(s.id.as_str()) {
            return Err(Error::InvalidConfig(format!("duplicate scene id {:?}", s.id)));
        }
    }
    let results: Vec<Result<(UtteranceManifest, SceneRecord)>> = scenes
        .scenes
        .par_iter()
        .map(|scene| {
            let sim = simulate_scene(scene)?;
            let entry = write_utterance(out, &sim, scene, scenes.encoding)?;
            let record = SceneRecord {
                id: scene.id.clone(),
                t60: scene.room.t60,
                snr_db: scene.mix.snr_db,
                sir_db: scene.mix.sir_db,
                overlap_ratio: scene.mix.overlap_ratio,
                doa: sim.doa,
                mix: sim.report,
            };
            Ok((entry, record))
        })
        .collect();

    let mut utterances = Vec::new();
    let mut records = String::new();
    let mut failures = Vec::new();
    for (scene, r) in scenes.scenes.iter().zip(results) {
        match r {
            Ok((entry, record)) => {
                utterances.push(entry);
                records.push_str(&serde_json::to_string(&record)?);
                records.push('\n');
            }
            Err(e) => failures.push(Failure {
                utterance_id: scene.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let mut manifest = Manifest::new(utterances);
    manifest.save(out.join("manifest.json"))?;
    std::fs::write(out.join("corpus.jsonl"), records)?;
    for u in &mut manifest.utterances {
        u.resolve(out);
    }
    Ok(CorpusOutcome { manifest, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            num_utterances: 4,
            duration: 0.5,
            num_mics: 3,
            t60_range: [0.1, 0.3],
            room_max: [5.0, 5.0, 3.0],
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn random_scenes_are_deterministic_and_on_grid() {
        let c = small_config();
        let a = random_scenes(&c).unwrap();
        assert_eq!(a, random_scenes(&c).unwrap());
        for s in &a.scenes {
            assert!(s.room.validate().is_ok());
            assert!((0.1..=0.3).contains(&s.room.t60));
            assert!(c.snr_grid.contains(&s.mix.snr_db.unwrap()));
            assert!(c.sir_grid.contains(&s.mix.sir_db.unwrap()));
            assert_eq!(s.room.sources.len(), 3);
        }
        let other = random_scenes(&SimulationConfig { seed: 10, ..c }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn scene_hits_requested_ratios() {
        let m = random_scenes(&small_config()).unwrap();
        let scene = &m.scenes[0];
        let sim = simulate_scene(scene).unwrap();
        let r = sim.report;
        let snr = 10.0 * (r.target_energy / r.noise_energy).log10();
        let sir = 10.0 * (r.target_energy / r.interferer_energy).log10();
        assert!((snr - scene.mix.snr_db.unwrap()).abs() < 1e-9);
        assert!((sir - scene.mix.sir_db.unwrap()).abs() < 1e-9);
        assert_eq!(sim.mixture.num_channels(), 3);
        assert_eq!(sim.mixture.len(), 8000);
        assert_eq!(sim.early.len(), 8000);
    }

    #[test]
    fn source_count_must_match_mix_spec() {
        let mut scene = random_scenes(&small_config()).unwrap().scenes.remove(0);
        scene.mix.snr_db = None;
        assert!(matches!(simulate_scene(&scene), Err(Error::InvalidScene(_))));
    }
}
