//! Batch orchestration: corpus simulation, separation and dereverberation
//! chains, scoring, and feature export.
//!
//! Every per-utterance step is a pure function of the config, the manifest
//! entry and the files it names; batch drivers fan out over utterances with
//! rayon and collect results in manifest order.

mod config;
mod corpus;
mod features;
mod manifest;
mod run;

pub use config::{
    DereverbMethod, MaskProvider, MetricSelection, PipelineConfig, ScoreReference, Stage, StageMasks,
    CONFIG_VERSION,
};
pub use corpus::{
    random_scenes, simulate_corpus, simulate_scene, CorpusOutcome, CorpusScene, SceneManifest, SimulatedUtterance,
    SimulationConfig, SCENE_MANIFEST_VERSION,
};
pub use features::{export_features, utterance_features, FeatureSet};
pub use manifest::{Manifest, UtteranceManifest, MANIFEST_VERSION};
pub use run::{
    enhance_utterance, run_pipeline, score_outputs, score_utterance, Enhanced, Failure, GroundTruth, PipelineRun, Summary,
    SummaryStats,
};
