//! Greedy codebook refinement.
//!
//! Starting from an empty codebook, repeatedly draw an orientation that the
//! codebook does not yet serve within `gamma_db` of its reference maximum,
//! add that orientation's rounded-MRC codeword, and drop every orientation
//! the enlarged codebook now serves. The loop ends when none are left.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayConfig, Codebook, SteeringVector};
use crate::beamsel::{quantized_mrc, DecodedCodebook, PowerDb};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::rng::{stream_rng, Stream, PRNG_NAME};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample<T> {
    pub channel: ChannelRealization<T>,
    /// Rounded-MRC codeword of `channel`.
    pub best: SteeringVector,
    pub p_max: PowerDb<T>,
}

/// Training orientations with their reference maxima precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet<T> {
    pub samples: Vec<TrainingSample<T>>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn from_channels(channels: Vec<ChannelRealization<T>>, cfg: &ArrayConfig) -> Result<Self> {
        let samples = channels
            .into_par_iter()
            .map(|channel| {
                let (best, p_max) = quantized_mrc(&channel, cfg)?;
                Ok(TrainingSample {
                    channel,
                    best,
                    p_max,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainingSet { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementResult {
    /// Refined codebook in insertion order.
    pub zeta: Codebook,
    /// For each training sample, the first codebook entry attaining its best power.
    pub covered_by: Vec<usize>,
    pub iterations: usize,
    /// Training-sample index drawn in each iteration.
    pub draws: Vec<usize>,
    pub seed: u64,
    pub gamma_db: f64,
    pub prng: &'static str,
}

impl RefinementResult {
    pub fn manifest(&self, training_size: usize) -> RefinementManifest {
        RefinementManifest {
            gamma_db: self.gamma_db,
            seed: self.seed,
            m: training_size,
            iterations: self.iterations,
            codebook_size: self.zeta.len(),
            covered_by: self.covered_by.clone(),
            draws: self.draws.clone(),
            prng: self.prng.to_string(),
            pruned_size: None,
        }
    }
}

/// Companion file to the refined codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementManifest {
    pub gamma_db: f64,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub iterations: usize,
    pub codebook_size: usize,
    /// Indexed by training sample.
    pub covered_by: Vec<usize>,
    pub draws: Vec<usize>,
    pub prng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_size: Option<usize>,
}

impl RefinementManifest {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(path, text.as_bytes())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_to_string(path)?).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn check_gamma(gamma_db: f64) -> Result<()> {
    if gamma_db.is_finite() && gamma_db > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gamma must be a positive number of dB, got {gamma_db}"
        )))
    }
}

#[inline]
fn covers<T: Scalar>(p_max: PowerDb<T>, p_zeta: PowerDb<T>, gamma: T) -> bool {
    p_max.gap_to(p_zeta) <= gamma
}

/// Refines with draws from the [`Stream::Refinement`] sub-stream of `seed`.
pub fn refine<T: Scalar>(
    train: &TrainingSet<T>,
    gamma_db: f64,
    cfg: &ArrayConfig,
    seed: u64,
) -> Result<RefinementResult> {
    let mut rng = stream_rng(seed, Stream::Refinement);
    let mut result = refine_with_rng(train, gamma_db, cfg, &mut rng)?;
    result.seed = seed;
    Ok(result)
}

pub fn refine_with_rng<T: Scalar, R: Rng + ?Sized>(
    train: &TrainingSet<T>,
    gamma_db: f64,
    cfg: &ArrayConfig,
    rng: &mut R,
) -> Result<RefinementResult> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    check_gamma(gamma_db)?;
    for s in &train.samples {
        s.channel.check_dimensions(cfg)?;
    }
    let gamma = T::from_f64_lossy(gamma_db);

    let mut zeta = Codebook::default();
    let mut decoded = DecodedCodebook::<T>::new(&zeta, cfg)?;
    let mut best_power = vec![PowerDb::<T>::neg_infinity(); train.len()];
    let mut remaining: Vec<usize> = (0..train.len()).collect();
    let mut draws = Vec::new();

    while !remaining.is_empty() {
        let pick = remaining[rng.random_range(0..remaining.len())];
        draws.push(pick);
        let candidate = &train.samples[pick].best;
        if !zeta.contains(candidate) {
            zeta.insert(candidate.clone());
            decoded.push(candidate, cfg)?;
            let newest = decoded.len() - 1;
            let fresh: Vec<PowerDb<T>> = remaining
                .par_iter()
                .map(|&i| decoded.power(newest, &train.samples[i].channel.h))
                .collect();
            for (&i, p) in remaining.iter().zip(fresh) {
                if p > best_power[i] {
                    best_power[i] = p;
                }
            }
        }
        // the drawn sample is served by its own codeword at zero gap
        remaining.retain(|&i| i != pick && !covers(train.samples[i].p_max, best_power[i], gamma));
    }

    let covered_by = train
        .samples
        .par_iter()
        .map(|s| decoded.best(&s.channel.h).map_or(0, |(i, _)| i))
        .collect();

    Ok(RefinementResult {
        zeta,
        covered_by,
        iterations: draws.len(),
        draws,
        seed: 0,
        gamma_db,
        prng: PRNG_NAME,
    })
}

/// Indices of training samples whose gap to `zeta`'s best power exceeds `gamma_db`.
pub fn coverage_check<T: Scalar>(
    zeta: &Codebook,
    train: &TrainingSet<T>,
    gamma_db: f64,
    cfg: &ArrayConfig,
) -> Result<Vec<usize>> {
    let decoded = DecodedCodebook::<T>::new(zeta, cfg)?;
    let gamma = T::from_f64_lossy(gamma_db);
    Ok(train
        .samples
        .par_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let p = decoded
                .best(&s.channel.h)
                .map_or(PowerDb::neg_infinity(), |(_, p)| p);
            (!covers(s.p_max, p, gamma)).then_some(i)
        })
        .collect())
}

/// Drops entries in insertion order whenever the rest still covers `train`.
pub fn prune<T: Scalar>(
    zeta: &Codebook,
    train: &TrainingSet<T>,
    gamma_db: f64,
    cfg: &ArrayConfig,
) -> Result<Codebook> {
    let mut kept = zeta.clone();
    let mut i = 0;
    while i < kept.len() {
        let mut trial = kept.clone();
        trial.entries.remove(i);
        if !trial.is_empty() && coverage_check(&trial, train, gamma_db, cfg)?.is_empty() {
            kept = trial;
        } else {
            i += 1;
        }
    }
    Ok(kept)
}
