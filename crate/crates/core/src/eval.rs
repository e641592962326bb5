//! Held-out validation of refined codebooks: gap statistics, empirical CDF,
//! paired comparison with the hierarchical baseline, and report files.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayConfig, Codebook};
use crate::beamsel::{quantized_mrc, DecodedCodebook, PowerDb};
use crate::channel::{synth_channel, ChannelRealization, ChannelScenario};
use crate::error::{Error, Result};
use crate::hier::{hier_search, HierCodebook};
use crate::io::{read_to_string, write_atomic};
use crate::scalar::Scalar;

/// How the per-sample reference maximum is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapMode {
    /// Reference is the larger of the rounded-MRC power and every evaluated
    /// arm's power, so gaps are never negative.
    #[default]
    Clamped,
    /// Reference is the rounded-MRC power alone; gaps may be negative.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub index: usize,
    pub theta_rad: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfKnot {
    pub gap_db: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Holdout index of each entry of `gaps_db`.
    pub sample_indices: Vec<usize>,
    pub gaps_db: Vec<f64>,
    pub mean_db: f64,
    pub variance_db2: f64,
    pub satisfied_fraction: f64,
    pub cdf: Vec<CdfKnot>,
    pub gamma_db: f64,
    pub codebook_size: usize,
    /// Codewords measured per sample by the evaluated method.
    pub probes_per_sample: usize,
    pub gap_mode: GapMode,
    pub variance_convention: String,
    pub skipped: Vec<SkippedSample>,
}

impl GapReport {
    fn from_gaps(
        sample_indices: Vec<usize>,
        gaps_db: Vec<f64>,
        gamma_db: f64,
        codebook_size: usize,
        probes_per_sample: usize,
        gap_mode: GapMode,
        skipped: Vec<SkippedSample>,
    ) -> Result<Self> {
        if gaps_db.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no evaluable samples ({} skipped)",
                skipped.len()
            )));
        }
        let (mean_db, variance_db2) = mean_and_population_variance(&gaps_db);
        let satisfied = gaps_db.iter().filter(|&&g| g <= gamma_db).count();
        Ok(GapReport {
            satisfied_fraction: satisfied as f64 / gaps_db.len() as f64,
            cdf: empirical_cdf(&gaps_db),
            sample_indices,
            gaps_db,
            mean_db,
            variance_db2,
            gamma_db,
            codebook_size,
            probes_per_sample,
            gap_mode,
            variance_convention: "population".into(),
            skipped,
        })
    }

    /// Fraction of gaps `<= x`, read off the CDF knots.
    pub fn cdf_at(&self, x: f64) -> f64 {
        match self.cdf.partition_point(|k| k.gap_db <= x) {
            0 => 0.0,
            n => self.cdf[n - 1].fraction,
        }
    }

    /// Fraction of samples within `gamma_db + margin_db`.
    pub fn satisfied_with_margin(&self, margin_db: f64) -> f64 {
        self.cdf_at(self.gamma_db + margin_db)
    }

    pub fn max_gap_db(&self) -> f64 {
        self.gaps_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-sample `sample_idx,gap_db` rows followed by `#`-prefixed summary lines.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("sample_idx,gap_db\n");
        for (i, g) in self.sample_indices.iter().zip(&self.gaps_db) {
            let _ = writeln!(s, "{i},{g:.6}");
        }
        let _ = writeln!(s, "# mean_db,{:.6}", self.mean_db);
        let _ = writeln!(s, "# variance_db2,{:.6}", self.variance_db2);
        let _ = writeln!(s, "# satisfied_fraction,{:.6}", self.satisfied_fraction);
        let _ = writeln!(s, "# gamma_db,{:.6}", self.gamma_db);
        let _ = writeln!(s, "# codebook_size,{}", self.codebook_size);
        let _ = writeln!(s, "# probes_per_sample,{}", self.probes_per_sample);
        let _ = writeln!(s, "# samples,{}", self.gaps_db.len());
        let _ = writeln!(s, "# skipped,{}", self.skipped.len());
        let _ = writeln!(s, "# gap_mode,{}", gap_mode_name(self.gap_mode));
        let _ = writeln!(s, "# variance_convention,{}", self.variance_convention);
        s
    }

    pub fn cdf_csv_string(&self) -> String {
        let mut s = String::from("gap_db,fraction\n");
        for k in &self.cdf {
            let _ = writeln!(s, "{:.6},{:.6}", k.gap_db, k.fraction);
        }
        s
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_to_string(path)?).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn gap_mode_name(mode: GapMode) -> &'static str {
    match mode {
        GapMode::Clamped => "clamped",
        GapMode::Raw => "raw",
    }
}

pub fn emit_report(report: &GapReport, path: &Path, format: ReportFormat) -> Result<()> {
    let body = match format {
        ReportFormat::Csv => report.to_csv_string(),
        ReportFormat::Json => report.to_json_string(),
    };
    write_atomic(path, body.as_bytes())
}

pub fn emit_cdf(report: &GapReport, path: &Path) -> Result<()> {
    write_atomic(path, report.cdf_csv_string().as_bytes())
}

/// Single-pass (Welford) mean and `1/n` variance.
pub fn mean_and_population_variance(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = xs.len().max(1) as f64;
    (mean, m2 / n)
}

/// One knot per distinct value: `(value, fraction of samples <= value)`.
pub fn empirical_cdf(xs: &[f64]) -> Vec<CdfKnot> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut knots: Vec<CdfKnot> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match knots.last_mut() {
            Some(k) if k.gap_db == x => k.fraction = fraction,
            _ => knots.push(CdfKnot { gap_db: x, fraction }),
        }
    }
    knots
}

enum Outcome {
    Gaps(Vec<f64>),
    Skip(String),
}

/// Evaluated sample indices, per-arm gaps aligned with them, and skipped samples.
type ArmGaps = (Vec<usize>, Vec<Vec<f64>>, Vec<SkippedSample>);

fn collect_arms(
    outcomes: Vec<(usize, f64, Outcome)>,
    arms: usize,
) -> ArmGaps {
    let mut indices = Vec::new();
    let mut gaps = vec![Vec::new(); arms];
    let mut skipped = Vec::new();
    for (index, theta_rad, outcome) in outcomes {
        match outcome {
            Outcome::Gaps(g) => {
                indices.push(index);
                for (arm, v) in gaps.iter_mut().zip(g) {
                    arm.push(v);
                }
            }
            Outcome::Skip(reason) => skipped.push(SkippedSample {
                index,
                theta_rad,
                reason,
            }),
        }
    }
    (indices, gaps, skipped)
}

/// Per-sample gaps of each arm against a shared reference maximum.
fn arm_gaps<T: Scalar>(p_mrc: PowerDb<T>, arms: &[PowerDb<T>], mode: GapMode) -> Outcome {
    let reference = match mode {
        GapMode::Raw => p_mrc,
        GapMode::Clamped => arms
            .iter()
            .copied()
            .fold(p_mrc, |a, b| if b > a { b } else { a }),
    };
    let gaps: Vec<f64> = arms
        .iter()
        .map(|&p| reference.gap_to(p).to_f64_lossy())
        .collect();
    if gaps.iter().all(|g| g.is_finite()) {
        Outcome::Gaps(gaps)
    } else {
        Outcome::Skip("received power is zero (complete cancellation)".into())
    }
}

fn evaluate<T: Scalar>(
    holdout: &[ChannelRealization<T>],
    cfg: &ArrayConfig,
    arm_count: usize,
    mode: GapMode,
    arms: impl Fn(&ChannelRealization<T>) -> Result<Vec<PowerDb<T>>> + Sync,
) -> Result<ArmGaps> {
    if holdout.is_empty() {
        return Err(Error::InvalidArgument("holdout set is empty".into()));
    }
    let outcomes = holdout
        .par_iter()
        .enumerate()
        .map(|(i, ch)| {
            ch.check_dimensions(cfg)?;
            let theta = ch.theta_rad.to_f64_lossy();
            if ch.is_degenerate() {
                return Ok((i, theta, Outcome::Skip("degenerate channel (all coefficients zero)".into())));
            }
            let (_, p_mrc) = quantized_mrc(ch, cfg)?;
            Ok((i, theta, arm_gaps(p_mrc, &arms(ch)?, mode)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_arms(outcomes, arm_count))
}

/// Gap of `zeta`'s best codeword to the rounded-MRC maximum on each holdout sample.
pub fn validate<T: Scalar>(
    zeta: &Codebook,
    holdout: &[ChannelRealization<T>],
    cfg: &ArrayConfig,
    gamma_db: f64,
    mode: GapMode,
) -> Result<GapReport> {
    if zeta.is_empty() {
        return Err(Error::InvalidArgument("codebook is empty".into()));
    }
    let decoded = DecodedCodebook::<T>::new(zeta, cfg)?;
    let (indices, mut gaps, skipped) = evaluate(holdout, cfg, 1, mode, |ch| {
        Ok(vec![decoded.best(&ch.h).expect("codebook is non-empty").1])
    })?;
    GapReport::from_gaps(
        indices,
        gaps.remove(0),
        gamma_db,
        zeta.len(),
        zeta.len(),
        mode,
        skipped,
    )
}

/// Refined codebook and hierarchical baseline evaluated on the same samples
/// against the same reference maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub refined: GapReport,
    pub hier: GapReport,
    /// Both arms used identical holdout samples and reference powers.
    pub paired: bool,
    pub hier_levels: usize,
    pub hier_probes: usize,
    pub hier_leaves: usize,
    pub hier_total_entries: usize,
    /// `mean(refined) - mean(hier)`; negative favours the refined codebook.
    pub mean_gap_difference_db: f64,
}

impl PairedReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("paired report serializes")
    }
}

pub fn compare_hier<T: Scalar>(
    zeta: &Codebook,
    hc: &HierCodebook,
    holdout: &[ChannelRealization<T>],
    cfg: &ArrayConfig,
    gamma_db: f64,
    mode: GapMode,
) -> Result<PairedReport> {
    if zeta.is_empty() {
        return Err(Error::InvalidArgument("codebook is empty".into()));
    }
    hc.validate(cfg)?;
    let decoded = DecodedCodebook::<T>::new(zeta, cfg)?;
    let (indices, mut gaps, skipped) = evaluate(holdout, cfg, 2, mode, |ch| {
        let refined = decoded.best(&ch.h).expect("codebook is non-empty").1;
        let hier = hier_search(hc, ch, cfg)?.power;
        Ok(vec![refined, hier])
    })?;
    let hier_gaps = gaps.pop().expect("two arms");
    let refined_gaps = gaps.pop().expect("two arms");
    let probes = 2 * hc.level_count();
    let refined = GapReport::from_gaps(
        indices.clone(),
        refined_gaps,
        gamma_db,
        zeta.len(),
        zeta.len(),
        mode,
        skipped.clone(),
    )?;
    let hier = GapReport::from_gaps(
        indices,
        hier_gaps,
        gamma_db,
        hc.leaves().len(),
        probes,
        mode,
        skipped,
    )?;
    Ok(PairedReport {
        mean_gap_difference_db: refined.mean_db - hier.mean_db,
        refined,
        hier,
        paired: true,
        hier_levels: hc.level_count(),
        hier_probes: probes,
        hier_leaves: hc.leaves().len(),
        hier_total_entries: hc.total_entries(),
    })
}

/// Holdout channels where each sample, with probability `fraction`, has its
/// line-of-sight path (the scenario's first path) blocked by an obstacle
/// costing 10 to 30 dB.
pub fn synth_holdout_with_obstacles<T: Scalar, R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    thetas: &[f64],
    fraction: f64,
    cfg: &ArrayConfig,
    rng: &mut R,
) -> Result<Vec<ChannelRealization<T>>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "obstacle fraction must be in [0, 1], got {fraction}"
        )));
    }
    Ok(thetas
        .iter()
        .map(|&theta| {
            let blocked = rng.random_bool(fraction);
            let loss_db: f64 = rng.random_range(10.0..=30.0);
            if blocked {
                let mut s = scenario.clone();
                s.paths[0].obstructed = true;
                s.obstacle_loss_db = Some(loss_db);
                let mut ch = synth_channel(&s, T::from_f64_lossy(theta), cfg);
                ch.tag = Some(format!("obstacle_loss_db={loss_db:.3}"));
                ch
            } else {
                synth_channel(scenario, T::from_f64_lossy(theta), cfg)
            }
        })
        .collect())
}
