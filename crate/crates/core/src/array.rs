//! Array geometry, per-antenna quantization grids and steering-vector arithmetic.
//!
//! A steering vector (codeword) assigns every antenna of an `L x L` array an
//! amplitude index and a phase index. Indices are 1-based:
//!
//! * amplitude index `a` in `1..=2^K` decodes to `a / 2^K`,
//! * phase index `p` in `1..=2^(N-K)` decodes to `p * 2pi / 2^(N-K)`,
//!
//! and the antenna weight is `amplitude * exp(-j * phase)`.

use std::fmt;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::scalar::Scalar;

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Widest per-antenna configuration word supported by the `u32` index arrays.
pub const MAX_BITS: u32 = 24;

/// Geometry and quantization grid of an `L x L` uniform rectangular array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Elements per side; the array holds `side^2` antennas.
    pub side: usize,
    /// Configuration bits per antenna.
    pub bits: u32,
    /// Bits of `bits` that drive the amplitude; the rest drive the phase.
    pub amp_bits: u32,
    pub spacing_wavelengths: f64,
    pub carrier_hz: f64,
}

impl ArrayConfig {
    pub fn new(
        side: usize,
        bits: u32,
        amp_bits: u32,
        spacing_wavelengths: f64,
        carrier_hz: f64,
    ) -> Result<Self> {
        let cfg = ArrayConfig {
            side,
            bits,
            amp_bits,
            spacing_wavelengths,
            carrier_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Half-wavelength array with phase-only control at the given carrier.
    pub fn phase_only(side: usize, bits: u32, carrier_hz: f64) -> Result<Self> {
        Self::new(side, bits, 0, 0.5, carrier_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 {
            return Err(Error::InvalidConfig("array side L must be positive".into()));
        }
        if self.bits == 0 || self.bits > MAX_BITS {
            return Err(Error::InvalidConfig(format!(
                "bits per antenna N must be in 1..={MAX_BITS}, got {}",
                self.bits
            )));
        }
        if self.amp_bits >= self.bits {
            return Err(Error::InvalidConfig(format!(
                "amplitude bits K_amp = {} must be smaller than N = {}",
                self.amp_bits, self.bits
            )));
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "element spacing must be positive, got {} wavelengths",
                self.spacing_wavelengths
            )));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency must be positive, got {} Hz",
                self.carrier_hz
            )));
        }
        Ok(())
    }

    pub fn element_count(&self) -> usize {
        self.side * self.side
    }

    pub fn phase_levels(&self) -> u32 {
        1 << (self.bits - self.amp_bits)
    }

    pub fn amp_levels(&self) -> u32 {
        1 << self.amp_bits
    }

    pub fn configs_per_antenna(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_PER_S / self.carrier_hz
    }

    pub fn pitch_m(&self) -> f64 {
        self.spacing_wavelengths * self.wavelength_m()
    }

    /// Phase grid step `2pi / 2^(N-K)`.
    pub fn phase_step<T: Scalar>(&self) -> T {
        T::TAU() / T::from_f64_lossy(f64::from(self.phase_levels()))
    }

    /// `log2` of the full codebook size `2^(N L^2)`.
    pub fn codebook_log2_cardinality(&self) -> u64 {
        u64::from(self.bits) * self.element_count() as u64
    }

    /// Full codebook size when it fits in a `u128`.
    pub fn codebook_cardinality(&self) -> Option<u128> {
        let log2 = self.codebook_log2_cardinality();
        (log2 < 128).then(|| 1u128 << log2)
    }

    pub fn decode_amplitude<T: Scalar>(&self, amp_idx: u32) -> T {
        T::from_f64_lossy(f64::from(amp_idx)) / T::from_f64_lossy(f64::from(self.amp_levels()))
    }

    pub fn decode_phase<T: Scalar>(&self, phase_idx: u32) -> T {
        T::from_f64_lossy(f64::from(phase_idx)) * self.phase_step::<T>()
    }

    /// Nearest amplitude index to `magnitude` after clamping into
    /// `[1/2^K, 1]`; exact midpoints resolve to the smaller index.
    pub fn nearest_amp_index<T: Scalar>(&self, magnitude: T) -> u32 {
        let levels = self.amp_levels();
        let scaled = magnitude.to_f64_lossy() * f64::from(levels);
        // also catches NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(scaled > 1.0) {
            return 1;
        }
        if scaled >= f64::from(levels) {
            return levels;
        }
        let lo = scaled.floor();
        let idx = if scaled - lo > 0.5 { lo + 1.0 } else { lo };
        (idx as u32).clamp(1, levels)
    }

    /// Nearest phase index to `phase` (radians, any real) under circular
    /// distance; exact midpoints resolve to the smaller index.
    pub fn nearest_phase_index<T: Scalar>(&self, phase: T) -> u32 {
        let levels = self.phase_levels();
        let levels_f = f64::from(levels);
        let wrapped = phase.to_f64_lossy().rem_euclid(std::f64::consts::TAU);
        let t = wrapped / std::f64::consts::TAU * levels_f;
        let lo = t.floor();
        let hi = lo + 1.0;
        let to_index = |k: f64| -> u32 {
            let k = (k as i64).rem_euclid(i64::from(levels)) as u32;
            if k == 0 {
                levels
            } else {
                k
            }
        };
        let (d_lo, d_hi) = (t - lo, hi - t);
        if d_lo < d_hi {
            to_index(lo)
        } else if d_hi < d_lo {
            to_index(hi)
        } else {
            to_index(lo).min(to_index(hi))
        }
    }
}

/// One quantized per-antenna amplitude/phase configuration.
///
/// Ordering is lexicographic over `(amp_idx, phase_idx)`, which is also the
/// order [`enumerate_codebook`] yields codewords in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SteeringVector {
    pub amp_idx: Vec<u32>,
    pub phase_idx: Vec<u32>,
}

impl SteeringVector {
    pub fn new(amp_idx: Vec<u32>, phase_idx: Vec<u32>, cfg: &ArrayConfig) -> Result<Self> {
        let sv = SteeringVector { amp_idx, phase_idx };
        sv.validate(cfg)?;
        Ok(sv)
    }

    /// Full-amplitude codeword with every antenna at the same phase index.
    pub fn uniform(cfg: &ArrayConfig, phase_idx: u32) -> Self {
        let n = cfg.element_count();
        SteeringVector {
            amp_idx: vec![cfg.amp_levels(); n],
            phase_idx: vec![phase_idx; n],
        }
    }

    pub fn len(&self) -> usize {
        self.phase_idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_idx.is_empty()
    }

    pub fn validate(&self, cfg: &ArrayConfig) -> Result<()> {
        let n = cfg.element_count();
        if self.amp_idx.len() != n || self.phase_idx.len() != n {
            return Err(Error::InvalidCodeword(format!(
                "expected {n} amplitude and phase indices, got {} and {}",
                self.amp_idx.len(),
                self.phase_idx.len()
            )));
        }
        let (amp_levels, phase_levels) = (cfg.amp_levels(), cfg.phase_levels());
        if let Some((i, a)) = self
            .amp_idx
            .iter()
            .enumerate()
            .find(|(_, &a)| a == 0 || a > amp_levels)
        {
            return Err(Error::InvalidCodeword(format!(
                "amplitude index {a} at antenna {i} outside 1..={amp_levels}"
            )));
        }
        if let Some((i, p)) = self
            .phase_idx
            .iter()
            .enumerate()
            .find(|(_, &p)| p == 0 || p > phase_levels)
        {
            return Err(Error::InvalidCodeword(format!(
                "phase index {p} at antenna {i} outside 1..={phase_levels}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SteeringVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "amp{:?} phase{:?}", self.amp_idx, self.phase_idx)
    }
}

/// Continuous (unquantized) per-antenna beamforming weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWeights<T> {
    w: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexWeights<T> {
    /// Rejects non-finite entries and the all-zero vector.
    pub fn new(w: Vec<Complex<T>>) -> Result<Self> {
        if w.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        if w.iter().all(|c| c.re.is_zero() && c.im.is_zero()) {
            return Err(Error::InvalidArgument("weights must not all be zero".into()));
        }
        Ok(ComplexWeights { w })
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.w
    }

    pub fn into_inner(self) -> Vec<Complex<T>> {
        self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Decoded weight of a single antenna.
#[inline]
pub fn decode_element<T: Scalar>(cfg: &ArrayConfig, amp_idx: u32, phase_idx: u32) -> Complex<T> {
    Complex::from_polar(cfg.decode_amplitude::<T>(amp_idx), -cfg.decode_phase::<T>(phase_idx))
}

/// Weights `w_i = (a_i / 2^K) exp(-j p_i 2pi / 2^(N-K))` of a codeword.
pub fn decode<T: Scalar>(sv: &SteeringVector, cfg: &ArrayConfig) -> Result<ComplexWeights<T>> {
    sv.validate(cfg)?;
    let w = sv
        .amp_idx
        .iter()
        .zip(&sv.phase_idx)
        .map(|(&a, &p)| decode_element(cfg, a, p))
        .collect();
    Ok(ComplexWeights { w })
}

/// Nearest-grid encoding of arbitrary weights; inverse of [`decode`] on grid points.
///
/// The weight convention is `amplitude * exp(-j * phase)`, so the grid phase
/// matched against is `-arg(w_i)`.
pub fn encode_nearest<T: Scalar>(w: &[Complex<T>], cfg: &ArrayConfig) -> SteeringVector {
    let (amp_idx, phase_idx) = w
        .iter()
        .map(|c| (cfg.nearest_amp_index(c.norm()), cfg.nearest_phase_index(-c.arg())))
        .unzip();
    SteeringVector { amp_idx, phase_idx }
}

/// Codeword at position `rank` of the lexicographic enumeration.
pub fn codeword_at(cfg: &ArrayConfig, rank: u128) -> Result<SteeringVector> {
    let card = cfg.codebook_cardinality();
    if card.is_some_and(|c| rank >= c) {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside codebook of size {}",
            card.unwrap_or_default()
        )));
    }
    let n = cfg.element_count();
    let (amp_levels, phase_levels) = (u128::from(cfg.amp_levels()), u128::from(cfg.phase_levels()));
    let mut amp_idx = vec![1u32; n];
    let mut phase_idx = vec![1u32; n];
    let mut rest = rank;
    for p in phase_idx.iter_mut().rev() {
        *p = (rest % phase_levels) as u32 + 1;
        rest /= phase_levels;
    }
    for a in amp_idx.iter_mut().rev() {
        *a = (rest % amp_levels) as u32 + 1;
        rest /= amp_levels;
    }
    Ok(SteeringVector { amp_idx, phase_idx })
}

/// Lazy lexicographic enumeration of the full codebook.
pub fn enumerate_codebook(cfg: &ArrayConfig) -> CodebookIter {
    let n = cfg.element_count();
    CodebookIter {
        amp_levels: cfg.amp_levels(),
        phase_levels: cfg.phase_levels(),
        next: Some(SteeringVector {
            amp_idx: vec![1; n],
            phase_idx: vec![1; n],
        }),
    }
}

/// Odometer over codewords; the last phase digit turns fastest.
#[derive(Debug, Clone)]
pub struct CodebookIter {
    amp_levels: u32,
    phase_levels: u32,
    next: Option<SteeringVector>,
}

impl CodebookIter {
    /// Starts the odometer at an arbitrary codeword.
    pub fn starting_at(cfg: &ArrayConfig, first: SteeringVector) -> Self {
        CodebookIter {
            amp_levels: cfg.amp_levels(),
            phase_levels: cfg.phase_levels(),
            next: Some(first),
        }
    }
}

impl Iterator for CodebookIter {
    type Item = SteeringVector;

    fn next(&mut self) -> Option<SteeringVector> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if advance(&mut succ.phase_idx, self.phase_levels)
            || advance(&mut succ.amp_idx, self.amp_levels)
        {
            self.next = Some(succ);
        }
        Some(current)
    }
}

/// Increments a 1-based mixed-radix digit string; false on overflow.
fn advance(digits: &mut [u32], levels: u32) -> bool {
    for d in digits.iter_mut().rev() {
        if *d < levels {
            *d += 1;
            return true;
        }
        *d = 1;
    }
    false
}

/// Row-major, origin-centred element coordinates in metres, array in the x-y plane.
pub fn element_positions<T: Scalar>(cfg: &ArrayConfig) -> Vec<[T; 3]> {
    let side = cfg.side;
    let pitch = T::from_f64_lossy(cfg.pitch_m());
    let centre = T::from_f64_lossy((side as f64 - 1.0) / 2.0);
    let mut out = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let x = (T::from_usize_lossy(col) - centre) * pitch;
            let y = (T::from_usize_lossy(row) - centre) * pitch;
            out.push([x, y, T::zero()]);
        }
    }
    out
}

/// Ordered set of codewords; order is the scan order during beam search.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Codebook {
    pub entries: Vec<SteeringVector>,
}

impl Codebook {
    pub fn new(entries: Vec<SteeringVector>) -> Self {
        Codebook { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, sv: &SteeringVector) -> bool {
        self.entries.contains(sv)
    }

    /// Appends `sv` unless already present; returns its position either way.
    pub fn insert(&mut self, sv: SteeringVector) -> usize {
        match self.entries.iter().position(|e| *e == sv) {
            Some(i) => i,
            None => {
                self.entries.push(sv);
                self.entries.len() - 1
            }
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SteeringVector> {
        self.entries.iter()
    }

    pub fn validate(&self, cfg: &ArrayConfig) -> Result<()> {
        self.entries.iter().try_for_each(|e| e.validate(cfg))
    }

    pub fn to_file(&self, cfg: &ArrayConfig) -> CodebookFile {
        CodebookFile {
            side: cfg.side,
            bits: cfg.bits,
            amp_bits: cfg.amp_bits,
            entries: self.entries.clone(),
        }
    }

    pub fn to_json_string(&self, cfg: &ArrayConfig) -> String {
        serde_json::to_string(&self.to_file(cfg)).expect("codebook serializes")
    }

    pub fn write_json(&self, cfg: &ArrayConfig, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json_string(cfg).as_bytes())
    }

    /// Reads a codebook file and checks its grid header against `cfg`.
    pub fn read_json(path: &Path, cfg: &ArrayConfig) -> Result<Self> {
        let text = read_to_string(path)?;
        let file: CodebookFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        file.into_codebook(cfg).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

impl<'a> IntoIterator for &'a Codebook {
    type Item = &'a SteeringVector;
    type IntoIter = std::slice::Iter<'a, SteeringVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// On-disk codebook: `{"L":4,"N":10,"K_amp":0,"entries":[{"amp_idx":[..],"phase_idx":[..]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookFile {
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(rename = "N")]
    pub bits: u32,
    #[serde(rename = "K_amp")]
    pub amp_bits: u32,
    pub entries: Vec<SteeringVector>,
}

impl CodebookFile {
    pub fn into_codebook(self, cfg: &ArrayConfig) -> Result<Codebook> {
        if (self.side, self.bits, self.amp_bits) != (cfg.side, cfg.bits, cfg.amp_bits) {
            return Err(Error::InvalidConfig(format!(
                "codebook grid L={} N={} K_amp={} does not match array L={} N={} K_amp={}",
                self.side, self.bits, self.amp_bits, cfg.side, cfg.bits, cfg.amp_bits
            )));
        }
        let cb = Codebook::new(self.entries);
        cb.validate(cfg)?;
        Ok(cb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(side: usize, bits: u32, amp_bits: u32) -> ArrayConfig {
        ArrayConfig::new(side, bits, amp_bits, 0.5, 25.1e9).unwrap()
    }

    fn close(a: Complex<f64>, b: Complex<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn decode_full_phase_wrap_is_identity() {
        let c = cfg(2, 1, 0);
        let sv = SteeringVector::new(vec![1; 4], vec![2; 4], &c).unwrap();
        let w = decode::<f64>(&sv, &c).unwrap();
        assert!(w.as_slice().iter().all(|&x| close(x, Complex::new(1.0, 0.0))));
    }

    #[test]
    fn decode_amplitude_and_quarter_phase() {
        let c = cfg(1, 3, 1);
        let sv = SteeringVector::new(vec![1], vec![1], &c).unwrap();
        let w = decode::<f64>(&sv, &c).unwrap();
        assert!(close(w.as_slice()[0], Complex::new(0.0, -0.5)));
    }

    #[test]
    fn decode_two_bit_phases() {
        let c = cfg(1, 2, 0);
        let a = decode_element::<f64>(&c, 1, 1);
        let b = decode_element::<f64>(&c, 1, 3);
        assert!(close(a, Complex::new(0.0, -1.0)));
        assert!(close(b, Complex::new(0.0, 1.0)));
    }

    #[test]
    fn decode_rejects_out_of_range_indices() {
        let c = cfg(1, 2, 0);
        let bad = SteeringVector {
            amp_idx: vec![1],
            phase_idx: vec![5],
        };
        assert!(matches!(decode::<f64>(&bad, &c), Err(Error::InvalidCodeword(_))));
        let zero = SteeringVector {
            amp_idx: vec![0],
            phase_idx: vec![1],
        };
        assert!(matches!(decode::<f64>(&zero, &c), Err(Error::InvalidCodeword(_))));
        let short = SteeringVector {
            amp_idx: vec![1],
            phase_idx: vec![],
        };
        assert!(matches!(decode::<f64>(&short, &c), Err(Error::InvalidCodeword(_))));
    }

    #[test]
    fn config_validation() {
        assert!(ArrayConfig::new(0, 4, 0, 0.5, 1e9).is_err());
        assert!(ArrayConfig::new(2, 0, 0, 0.5, 1e9).is_err());
        assert!(ArrayConfig::new(2, 3, 3, 0.5, 1e9).is_err());
        assert!(ArrayConfig::new(2, 3, 0, 0.0, 1e9).is_err());
        assert!(ArrayConfig::new(2, 3, 0, 0.5, -1.0).is_err());
        let c = cfg(4, 10, 2);
        assert_eq!(c.phase_levels(), 256);
        assert_eq!(c.amp_levels(), 4);
        assert_eq!(c.configs_per_antenna(), 1024);
    }

    #[test]
    fn codebook_counts() {
        assert_eq!(enumerate_codebook(&cfg(1, 1, 0)).count(), 2);
        assert_eq!(enumerate_codebook(&cfg(2, 2, 0)).count(), 256);
        assert_eq!(enumerate_codebook(&cfg(1, 3, 1)).count(), 8);
        let big = cfg(4, 10, 0);
        assert_eq!(big.codebook_log2_cardinality(), 160);
        assert_eq!(big.codebook_cardinality(), None);
        // lazily yields the first few entries of a 2^160 codebook
        assert_eq!(enumerate_codebook(&big).take(3).count(), 3);
    }

    #[test]
    fn enumeration_is_sorted_unique_and_matches_rank() {
        let c = cfg(2, 2, 1);
        let all: Vec<_> = enumerate_codebook(&c).collect();
        assert_eq!(all.len(), 256);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for (rank, sv) in all.iter().enumerate() {
            assert_eq!(&codeword_at(&c, rank as u128).unwrap(), sv);
        }
        assert!(codeword_at(&c, 256).is_err());
    }

    #[test]
    fn single_antenna_two_bit_codebook_decodes_to_four_points() {
        let c = cfg(1, 2, 0);
        let mut got: Vec<Complex<f64>> = enumerate_codebook(&c)
            .map(|sv| decode::<f64>(&sv, &c).unwrap().as_slice()[0])
            .collect();
        let expect = [
            Complex::new(0.0, -1.0),
            Complex::new(-1.0, 0.0),
            Complex::new(0.0, 1.0),
            Complex::new(1.0, 0.0),
        ];
        assert_eq!(got.len(), 4);
        for (g, e) in got.drain(..).zip(expect) {
            assert!(close(g, e), "{g} vs {e}");
        }
    }

    #[test]
    fn phase_grid_is_uniform() {
        let c = cfg(1, 6, 2);
        let step = 2.0 * PI / 16.0;
        for p in 1..16 {
            let d = c.decode_phase::<f64>(p + 1) - c.decode_phase::<f64>(p);
            assert!((d - step).abs() < 1e-12);
        }
        assert!((c.decode_phase::<f64>(16) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn phase_only_amplitudes_are_one() {
        let c = cfg(2, 3, 0);
        for sv in enumerate_codebook(&c).step_by(97) {
            for w in decode::<f64>(&sv, &c).unwrap().as_slice() {
                assert_eq!(w.norm(), 1.0);
            }
        }
    }

    #[test]
    fn nearest_phase_ties_and_wrap() {
        let c = cfg(1, 2, 0);
        assert_eq!(c.nearest_phase_index(PI / 3.0), 1);
        assert_eq!(c.nearest_phase_index(0.01), 4);
        assert_eq!(c.nearest_phase_index(-0.01), 4);
        assert_eq!(c.nearest_phase_index(2.0 * PI - 0.01), 4);
        // midway between 2pi (index 4) and pi/2 (index 1)
        assert_eq!(c.nearest_phase_index(PI / 4.0), 1);
        // midway between pi/2 and pi
        assert_eq!(c.nearest_phase_index(0.75 * PI), 1);
    }

    #[test]
    fn nearest_amplitude_clamps_and_ties_low() {
        let c = cfg(1, 3, 1);
        assert_eq!(c.nearest_amp_index(0.3_f64), 1);
        assert_eq!(c.nearest_amp_index(0.0_f64), 1);
        assert_eq!(c.nearest_amp_index(0.75_f64), 1);
        assert_eq!(c.nearest_amp_index(0.76_f64), 2);
        assert_eq!(c.nearest_amp_index(7.0_f64), 2);
    }

    #[test]
    fn element_positions_centred_grid() {
        let one = cfg(1, 1, 0);
        assert_eq!(element_positions::<f64>(&one), vec![[0.0, 0.0, 0.0]]);

        let two = cfg(2, 1, 0);
        let d = two.pitch_m();
        let pos = element_positions::<f64>(&two);
        assert_eq!(pos.len(), 4);
        for p in &pos {
            assert!((p[0].abs() - d / 2.0).abs() < 1e-15);
            assert!((p[1].abs() - d / 2.0).abs() < 1e-15);
            assert_eq!(p[2], 0.0);
        }
        // row-major: x varies fastest
        assert!(pos[0][0] < pos[1][0] && pos[0][1] == pos[1][1]);

        // 5.15 mm pitch
        let carrier = 25.1e9;
        let spacing = 5.15e-3 / (SPEED_OF_LIGHT_M_PER_S / carrier);
        let four = ArrayConfig::new(4, 10, 0, spacing, carrier).unwrap();
        let pos = element_positions::<f64>(&four);
        let xs: Vec<f64> = pos.iter().map(|p| p[0]).collect();
        let span = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span - 15.45e-3).abs() < 1e-12);
    }

    #[test]
    fn codebook_insert_deduplicates() {
        let c = cfg(1, 2, 0);
        let mut cb = Codebook::default();
        let a = SteeringVector::uniform(&c, 1);
        let b = SteeringVector::uniform(&c, 2);
        assert_eq!(cb.insert(a.clone()), 0);
        assert_eq!(cb.insert(b), 1);
        assert_eq!(cb.insert(a), 0);
        assert_eq!(cb.len(), 2);
    }

    #[test]
    fn codebook_json_layout() {
        let c = cfg(1, 2, 0);
        let cb = Codebook::new(vec![SteeringVector::uniform(&c, 3)]);
        assert_eq!(
            cb.to_json_string(&c),
            r#"{"L":1,"N":2,"K_amp":0,"entries":[{"amp_idx":[1],"phase_idx":[3]}]}"#
        );
        let file: CodebookFile = serde_json::from_str(&cb.to_json_string(&c)).unwrap();
        assert_eq!(file.clone().into_codebook(&c).unwrap(), cb);
        assert!(file.into_codebook(&cfg(1, 3, 0)).is_err());
    }
}
