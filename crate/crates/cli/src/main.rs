//! `mcse`: batch front end for the separation and dereverberation pipeline.
//!
//! Exit status is 0 on success, 1 when any utterance or scene failed (the
//! rest are still processed and reported), and 2 for usage or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mcse_core::pipeline::{
    export_features, random_scenes, run_pipeline, score_outputs, simulate_corpus, DereverbMethod, Manifest,
    MaskProvider, PipelineConfig, SceneManifest, ScoreReference, SimulationConfig, Stage,
};

#[derive(Parser)]
#[command(name = "mcse", version, about = "Multi-channel speech separation and dereverberation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a corpus from a scene manifest or from randomly drawn scenes.
    Simulate(SimulateArgs),
    /// Run the stage chain on a manifest, write enhanced WAVs and scores.
    Enhance(PipelineArgs),
    /// Score previously enhanced WAVs against the manifest's ground truth.
    Score(ScoreArgs),
    /// Write LPS/IPD/AF feature tensors and oracle masks.
    ExportFeatures(PipelineArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config (JSON) for random scenes.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Explicit scene manifest (JSON); takes precedence over random scenes.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed for random scenes.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random scenes, overriding the config.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated stage chain, e.g. `separate,dereverb`; empty for none.
    #[arg(long)]
    stages: Option<String>,
    /// `wpe`, `dnn-wpe` or `specmap`.
    #[arg(long)]
    dereverb: Option<String>,
    /// `oracle` or `file:DIR` for every stage, or `separate=...` /
    /// `dereverb=...` for one. Repeatable.
    #[arg(long)]
    mask: Vec<String>,
    /// `auto`, `reverberant`, `early` or `anechoic`.
    #[arg(long)]
    reference: Option<String>,
    /// Accepted for symmetry with `simulate`; the pipeline is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Directory holding `<id>.wav` outputs; defaults to `--out`.
    #[arg(long)]
    enhanced: Option<PathBuf>,
}

/// Errors that should map to exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn apply_mask_flag(config: &mut PipelineConfig, flag: &str) -> Result<()> {
    let (target, provider) = match flag.split_once('=') {
        Some((stage, p)) => (Some(stage.trim()), p),
        None => (None, flag),
    };
    let provider: MaskProvider = provider.parse().map_err(|e| usage(format!("--mask: {e}")))?;
    match target {
        None => {
            config.masks.separate = Some(provider.clone());
            config.masks.dereverb = Some(provider);
        }
        Some("separate") => config.masks.separate = Some(provider),
        Some("dereverb") => config.masks.dereverb = Some(provider),
        Some(other) => return Err(usage(format!("--mask: unknown stage {other:?}"))),
    }
    Ok(())
}

fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut config = match &args.config {
        Some(p) => PipelineConfig::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = &args.stages {
        config.stages = Stage::parse_list(s).map_err(|e| usage(format!("--stages: {e}")))?;
    }
    if let Some(d) = &args.dereverb {
        config.dereverb_method = d.parse::<DereverbMethod>().map_err(|e| usage(format!("--dereverb: {e}")))?;
    }
    for m in &args.mask {
        apply_mask_flag(&mut config, m)?;
    }
    if let Some(r) = &args.reference {
        config.score_reference = r.parse::<ScoreReference>().map_err(|e| usage(format!("--reference: {e}")))?;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn load_manifest(path: &Path) -> Result<Manifest> {
    Manifest::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn simulate(args: SimulateArgs) -> Result<bool> {
    set_jobs(args.jobs)?;
    let scenes = match &args.manifest {
        Some(path) => {
            if args.seed.is_some() || args.count.is_some() {
                eprintln!("note: --seed and --count apply to random scenes and are ignored with --manifest");
            }
            SceneManifest::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let mut config = match &args.config {
                Some(p) => SimulationConfig::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
                None => SimulationConfig::default(),
            };
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(n) = args.count {
                config.num_utterances = n;
            }
            random_scenes(&config).map_err(|e| usage(e.to_string()))?
        }
    };
    std::fs::create_dir_all(&args.out)?;
    scenes.save(args.out.join("scenes.json"))?;
    let outcome = simulate_corpus(&scenes, &args.out)?;
    println!(
        "simulated {} of {} scenes into {}",
        outcome.manifest.utterances.len(),
        scenes.scenes.len(),
        args.out.display()
    );
    for f in &outcome.failures {
        println!("  FAILED {}: {}", f.utterance_id, f.error);
    }
    Ok(outcome.failures.is_empty())
}

fn enhance(args: PipelineArgs) -> Result<bool> {
    set_jobs(args.jobs)?;
    let config = pipeline_config(&args)?;
    let manifest = load_manifest(&args.manifest)?;
    let run = run_pipeline(&config, &manifest)?;
    print!("{}", run.summary.table());
    Ok(!run.has_failures())
}

fn score(args: ScoreArgs) -> Result<bool> {
    set_jobs(args.pipeline.jobs)?;
    let config = pipeline_config(&args.pipeline)?;
    let manifest = load_manifest(&args.pipeline.manifest)?;
    let enhanced = args.enhanced.unwrap_or_else(|| config.output_dir.clone());
    let run = score_outputs(&config, &manifest, &enhanced)?;
    print!("{}", run.summary.table());
    Ok(!run.has_failures())
}

fn export(args: PipelineArgs) -> Result<bool> {
    set_jobs(args.jobs)?;
    let config = pipeline_config(&args)?;
    let manifest = load_manifest(&args.manifest)?;
    let failures = export_features(&config, &manifest)?;
    println!(
        "exported features for {} of {} utterances into {}",
        manifest.utterances.len() - failures.len(),
        manifest.utterances.len(),
        config.output_dir.display()
    );
    for f in &failures {
        println!("  FAILED {}: {}", f.utterance_id, f.error);
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Enhance(a) => enhance(a),
        Command::Score(a) => score(a),
        Command::ExportFeatures(a) => export(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> PipelineArgs {
        let mut argv = vec!["mcse", "enhance", "--manifest", "m.json"];
        argv.extend_from_slice(extra);
        match Cli::parse_from(argv).command {
            Command::Enhance(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_override_config() {
        let c = pipeline_config(&args(&["--stages", "separate", "--out", "o", "--reference", "early"])).unwrap();
        assert_eq!(c.stages, vec![Stage::Separate]);
        assert_eq!(c.output_dir, PathBuf::from("o"));
        assert_eq!(c.score_reference, ScoreReference::Early);

        let c = pipeline_config(&args(&["--mask", "file:masks", "--mask", "dereverb=oracle", "--dereverb", "specmap"])).unwrap();
        assert_eq!(c.masks.separate, Some(MaskProvider::File("masks".into())));
        assert_eq!(c.masks.dereverb, Some(MaskProvider::Oracle));
        assert_eq!(c.dereverb_method, DereverbMethod::Specmap);
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        for bad in [&["--stages", "denoise"][..], &["--dereverb", "x"], &["--mask", "nn"], &["--mask", "foo=oracle"]] {
            let e = pipeline_config(&args(bad)).unwrap_err();
            assert!(e.downcast_ref::<UsageError>().is_some());
        }
    }
}
