use std::path::Path;

use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{write_complex_mask, write_feature, write_real_mask};
use crate::masking::{oracle_complex_mask_clipped, oracle_real_mask_capped};
use crate::spatial::{angle_feature, compute_ipd, steering_vector, MicPairList};
use crate::stft::{lps_feature, stft, stft_mono};
use crate::wav::read_wav;

use super::config::PipelineConfig;
use super::manifest::{Manifest, UtteranceManifest};
use super::run::{Failure, GroundTruth};

/// Network input features of one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    /// Log power spectrum of the reference channel, `[t, f]`.
    pub lps: Array2<f64>,
    /// Phase differences for the reference pairs, `[pair, t, f]`.
    pub ipd: Array3<f64>,
    /// Angle feature towards the target DOA, `[t, f]`.
    pub af: Array2<f64>,
}

/// LPS, IPD and AF of one utterance, using reference-microphone pairs.
pub fn utterance_features(config: &PipelineConfig, utt: &UtteranceManifest) -> Result<FeatureSet> {
    let geometry = utt.geometry.as_ref().ok_or_else(|| {
        Error::MissingGroundTruth(format!("utterance {} has no array geometry", utt.id))
    })?;
    let doa = utt.target_doa()?;
    let mixture = read_wav(&utt.mixture)?;
    if mixture.num_channels() != geometry.num_mics() {
        return Err(Error::ShapeMismatch {
            expected: vec![geometry.num_mics()],
            actual: vec![mixture.num_channels()],
        });
    }
    let spec = stft(&mixture, &config.stft)?;
    let reference = geometry.reference_index;
    let pairs = MicPairList::reference_pairs(mixture.num_channels(), reference)?;
    let freqs = config.stft.bin_frequencies(mixture.sample_rate());
    let sv = steering_vector(doa, geometry, &freqs);
    Ok(FeatureSet {
        lps: lps_feature(&spec.channel(reference)?),
        ipd: compute_ipd(&spec, &pairs)?,
        af: angle_feature(&spec, &sv, &pairs)?,
    })
}

fn export_one(config: &PipelineConfig, utt: &UtteranceManifest, out: &Path) -> Result<()> {
    let f = utterance_features(config, utt)?;
    write_feature(out.join(format!("{}.lps.feat", utt.id)), &f.lps.into_dyn())?;
    write_feature(out.join(format!("{}.ipd.feat", utt.id)), &f.ipd.into_dyn())?;
    write_feature(out.join(format!("{}.af.feat", utt.id)), &f.af.into_dyn())?;

    // Oracle training targets when ground truth is present.
    let mixture = read_wav(&utt.mixture)?;
    let reference = utt.geometry.as_ref().map_or(0, |g| g.reference_index);
    let y = mixture.select_channel(reference)?;
    let gt = GroundTruth::load(utt, y.sample_rate(), y.len())?;
    if let Some(r) = &gt.reverberant {
        let ys = stft_mono(&y, &config.stft)?;
        let rs = stft_mono(r, &config.stft)?;
        let sep_dir = out.join("masks").join("separate");
        std::fs::create_dir_all(&sep_dir)?;
        let cirm = oracle_complex_mask_clipped(&rs, &ys, config.mask_clip)?;
        write_complex_mask(sep_dir.join(format!("{}.cmsk", utt.id)), &cirm)?;
        if let Some(e) = &gt.early {
            let es = stft_mono(e, &config.stft)?;
            let der_dir = out.join("masks").join("dereverb");
            std::fs::create_dir_all(&der_dir)?;
            let psd_mask = oracle_real_mask_capped(&es, &rs, config.mask_max)?;
            write_real_mask(der_dir.join(format!("{}.cmsk", utt.id)), &psd_mask)?;
        }
    }
    Ok(())
}

/// Writes `<out>/<id>.{lps,ipd,af}.feat` for every utterance. When ground
/// truth is available it also writes oracle masks usable by the `file:`
/// mask provider: `<out>/masks/separate/<id>.cmsk` (complex ratio of the
/// reverberant target to the mixture) and `<out>/masks/dereverb/<id>.cmsk`
/// (real early-to-reverberant power ratio).
pub fn export_features(config: &PipelineConfig, manifest: &Manifest) -> Result<Vec<Failure>> {
    config.stft.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    let results: Vec<Result<()>> = manifest.utterances.par_iter().map(|u| export_one(config, u, out)).collect();
    Ok(manifest
        .utterances
        .iter()
        .zip(results)
        .filter_map(|(u, r)| {
            r.err().map(|e| Failure {
                utterance_id: u.id.clone(),
                error: e.to_string(),
            })
        })
        .collect())
}
