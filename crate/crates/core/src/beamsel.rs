//! Received power, maximum-ratio combining and its projection onto the
//! codeword grid, plus an exhaustive-search oracle for small arrays.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{
    codeword_at, decode, decode_element, encode_nearest, ArrayConfig, Codebook, ComplexWeights,
    SteeringVector,
};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Received power `20 log10 |<h, w>|` in dB. An exactly-zero inner product
/// yields negative infinity, which orders below every finite power.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDb<T>(pub T);

impl<T: Scalar> PowerDb<T> {
    pub fn from_magnitude(magnitude: T) -> Self {
        let twenty = T::from_f64_lossy(20.0);
        PowerDb(twenty * magnitude.log10())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn neg_infinity() -> Self {
        PowerDb(T::neg_infinity())
    }

    /// Total order; powers are never NaN.
    pub fn cmp_total(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    /// `self - other` in dB, with two negative infinities differing by zero.
    pub fn gap_to(self, other: Self) -> T {
        if self.0 == other.0 {
            T::zero()
        } else {
            self.0 - other.0
        }
    }
}

impl<T: Scalar> fmt::Display for PowerDb<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dB", self.0)
    }
}

/// Power of applying weights `w` to channel `h`, summed in element order.
#[inline]
pub fn power_of_weights<T: Scalar>(h: &[Complex<T>], w: &[Complex<T>]) -> PowerDb<T> {
    let sum = h
        .iter()
        .zip(w)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b);
    PowerDb::from_magnitude(sum.norm())
}

pub fn received_power<T: Scalar>(
    channel: &ChannelRealization<T>,
    sv: &SteeringVector,
    cfg: &ArrayConfig,
) -> Result<PowerDb<T>> {
    channel.check_dimensions(cfg)?;
    let w = decode::<T>(sv, cfg)?;
    Ok(power_of_weights(&channel.h, w.as_slice()))
}

/// Continuous MRC weights `conj(h_i) / max_j |h_j|`.
pub fn mrc_weights<T: Scalar>(channel: &ChannelRealization<T>) -> Result<ComplexWeights<T>> {
    let peak = channel.h.iter().map(|c| c.norm()).fold(T::zero(), T::max);
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(peak > T::zero()) {
        return Err(Error::DegenerateChannel {
            theta_rad: Some(channel.theta_rad.to_f64_lossy()),
        });
    }
    ComplexWeights::new(channel.h.iter().map(|c| c.conj() / peak).collect())
}

/// Per-antenna nearest-grid rounding of continuous weights.
pub fn quantize_weights<T: Scalar>(w: &ComplexWeights<T>, cfg: &ArrayConfig) -> SteeringVector {
    encode_nearest(w.as_slice(), cfg)
}

/// Rounded MRC codeword and its power; this is the reference maximum
/// against which codebooks are judged.
pub fn quantized_mrc<T: Scalar>(
    channel: &ChannelRealization<T>,
    cfg: &ArrayConfig,
) -> Result<(SteeringVector, PowerDb<T>)> {
    channel.check_dimensions(cfg)?;
    let sv = quantize_weights(&mrc_weights(channel)?, cfg);
    let p = received_power(channel, &sv, cfg)?;
    Ok((sv, p))
}

/// Codebook with its weights decoded once, for repeated scans.
#[derive(Debug, Clone)]
pub struct DecodedCodebook<T> {
    weights: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> DecodedCodebook<T> {
    pub fn new(codebook: &Codebook, cfg: &ArrayConfig) -> Result<Self> {
        let weights = codebook
            .iter()
            .map(|sv| decode::<T>(sv, cfg).map(ComplexWeights::into_inner))
            .collect::<Result<_>>()?;
        Ok(DecodedCodebook { weights })
    }

    pub fn push(&mut self, sv: &SteeringVector, cfg: &ArrayConfig) -> Result<()> {
        self.weights.push(decode::<T>(sv, cfg)?.into_inner());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn power(&self, index: usize, h: &[Complex<T>]) -> PowerDb<T> {
        power_of_weights(h, &self.weights[index])
    }

    /// Scans every entry; returns the first index attaining the maximum.
    pub fn best(&self, h: &[Complex<T>]) -> Option<(usize, PowerDb<T>)> {
        let mut best: Option<(usize, PowerDb<T>)> = None;
        for (i, w) in self.weights.iter().enumerate() {
            let p = power_of_weights(h, w);
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
        best
    }
}

/// Exact argmax of received power over the full codebook.
///
/// Refuses when `2^(N L^2)` exceeds `budget`. The rank space is split into
/// contiguous chunks searched in parallel; the reduction keeps the earliest
/// rank on ties, so the answer does not depend on scheduling.
pub fn brute_force_max<T: Scalar>(
    channel: &ChannelRealization<T>,
    cfg: &ArrayConfig,
    budget: u128,
) -> Result<(SteeringVector, PowerDb<T>)> {
    channel.check_dimensions(cfg)?;
    let log2 = cfg.codebook_log2_cardinality();
    let total = match cfg.codebook_cardinality() {
        Some(c) if c <= budget => c,
        card => {
            return Err(Error::BudgetExceeded {
                log2_cardinality: log2,
                cardinality: card.map_or_else(|| format!("2^{log2}"), |c| c.to_string()),
                budget,
            })
        }
    };

    // products[i][c]: contribution of antenna i in per-antenna state c,
    // where c = (amp - 1) * phase_levels + (phase - 1).
    let (amp_levels, phase_levels) = (cfg.amp_levels(), cfg.phase_levels());
    let products: Vec<Vec<Complex<T>>> = channel
        .h
        .iter()
        .map(|&hi| {
            (1..=amp_levels)
                .flat_map(|a| (1..=phase_levels).map(move |p| (a, p)))
                .map(|(a, p)| hi * decode_element::<T>(cfg, a, p))
                .collect()
        })
        .collect();

    let chunks = (rayon::current_num_threads() as u128 * 8).clamp(1, total);
    let chunk_len = total.div_ceil(chunks);
    let best = (0..chunks)
        .into_par_iter()
        .filter_map(|chunk| {
            let start = chunk * chunk_len;
            let end = (start + chunk_len).min(total);
            (start < end).then(|| search_ranks(&products, cfg, start, end))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|acc, next| if next.1 > acc.1 { next } else { acc })
        .expect("codebook is non-empty");

    let sv = codeword_at(cfg, best.0)?;
    let p = received_power(channel, &sv, cfg)?;
    Ok((sv, p))
}

fn search_ranks<T: Scalar>(
    products: &[Vec<Complex<T>>],
    cfg: &ArrayConfig,
    start: u128,
    end: u128,
) -> (u128, PowerDb<T>) {
    let n = products.len();
    let phase_levels = cfg.phase_levels() as usize;
    let sv = codeword_at(cfg, start).expect("start rank is in range");
    let mut amp: Vec<usize> = sv.amp_idx.iter().map(|&a| a as usize - 1).collect();
    let mut phase: Vec<usize> = sv.phase_idx.iter().map(|&p| p as usize - 1).collect();
    let amp_levels = cfg.amp_levels() as usize;

    let mut best = (start, PowerDb::neg_infinity());
    let mut rank = start;
    while rank < end {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            acc = acc + products[i][amp[i] * phase_levels + phase[i]];
        }
        let p = PowerDb::from_magnitude(acc.norm());
        if p > best.1 || rank == start {
            best = (rank, p);
        }
        rank += 1;
        if !increment(&mut phase, phase_levels) {
            increment(&mut amp, amp_levels);
        }
    }
    best
}

fn increment(digits: &mut [usize], levels: usize) -> bool {
    for d in digits.iter_mut().rev() {
        if *d + 1 < levels {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}
