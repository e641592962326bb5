//! Per-orientation channel vectors: far-field geometric synthesis and CSV datasets.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::{element_positions, ArrayConfig};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::scalar::Scalar;

/// Channel vector `h` seen by the array at azimuthal orientation `theta_rad`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    pub theta_rad: T,
    pub h: Vec<Complex<T>>,
    pub tag: Option<String>,
}

impl<T: Scalar> ChannelRealization<T> {
    pub fn new(theta_rad: T, h: Vec<Complex<T>>, tag: Option<String>) -> Result<Self> {
        if !theta_rad.is_finite() {
            return Err(Error::InvalidArgument("orientation must be finite".into()));
        }
        if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "channel coefficients must be finite".into(),
            ));
        }
        Ok(ChannelRealization { theta_rad, h, tag })
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// True when every coefficient is exactly zero.
    pub fn is_degenerate(&self) -> bool {
        self.h.iter().all(|c| c.re.is_zero() && c.im.is_zero())
    }

    pub fn check_dimensions(&self, cfg: &ArrayConfig) -> Result<()> {
        if self.h.len() != cfg.element_count() {
            return Err(Error::InvalidArgument(format!(
                "channel has {} coefficients, array has {} elements",
                self.h.len(),
                cfg.element_count()
            )));
        }
        Ok(())
    }

    /// Same channel multiplied by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        ChannelRealization {
            theta_rad: self.theta_rad,
            h: self.h.iter().map(|&c| c * factor).collect(),
            tag: self.tag.clone(),
        }
    }
}

/// One far-field plane wave arriving at the array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    /// World-frame azimuth of arrival.
    pub azimuth_rad: f64,
    #[serde(default)]
    pub elevation_rad: f64,
    /// Complex amplitude as `[re, im]`.
    pub gain: Complex<f64>,
    /// Whether `obstacle_loss_db` attenuates this path.
    #[serde(default)]
    pub obstructed: bool,
}

impl PathComponent {
    pub fn new(azimuth_rad: f64, elevation_rad: f64, gain: Complex<f64>) -> Self {
        PathComponent {
            azimuth_rad,
            elevation_rad,
            gain,
            obstructed: false,
        }
    }
}

/// Reflected paths in the default synthetic environment.
pub const DEFAULT_REFLECTIONS: usize = 8;

/// Static multipath environment around the rotating receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub paths: Vec<PathComponent>,
    /// Per-element noise power, on the same dB scale as received power.
    #[serde(default)]
    pub noise_power_dbm: Option<f64>,
    /// Attenuation applied to every path flagged `obstructed`.
    #[serde(default)]
    pub obstacle_loss_db: Option<f64>,
}

impl ChannelScenario {
    pub fn new(paths: Vec<PathComponent>) -> Result<Self> {
        let s = ChannelScenario {
            paths,
            noise_power_dbm: None,
            obstacle_loss_db: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Single unit-gain line-of-sight path at world azimuth 0.
    pub fn line_of_sight() -> Self {
        ChannelScenario {
            paths: vec![PathComponent::new(0.0, 0.0, Complex::new(1.0, 0.0))],
            noise_power_dbm: None,
            obstacle_loss_db: None,
        }
    }

    /// Default environment: line of sight plus [`DEFAULT_REFLECTIONS`] reflections.
    pub fn default_multipath<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::line_of_sight_with_reflections(DEFAULT_REFLECTIONS, rng)
    }

    /// Line of sight plus `reflections` paths with azimuths uniform in
    /// `[-90, 90]` degrees and complex Gaussian gains 10 to 20 dB below it.
    pub fn line_of_sight_with_reflections<R: Rng + ?Sized>(reflections: usize, rng: &mut R) -> Self {
        let mut s = Self::line_of_sight();
        for _ in 0..reflections {
            let azimuth = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
            let below_db: f64 = rng.random_range(10.0..=20.0);
            let sigma = 10f64.powf(-below_db / 20.0) / 2f64.sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            s.paths.push(PathComponent::new(
                azimuth,
                0.0,
                Complex::new(re * sigma, im * sigma),
            ));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::InvalidArgument(
                "scenario needs at least one path".into(),
            ));
        }
        let finite = |x: f64| x.is_finite();
        if let Some(p) = self.paths.iter().find(|p| {
            !(finite(p.azimuth_rad) && finite(p.elevation_rad) && finite(p.gain.re) && finite(p.gain.im))
        }) {
            return Err(Error::InvalidArgument(format!(
                "path parameters must be finite: {p:?}"
            )));
        }
        if self.noise_power_dbm.is_some_and(|x| !x.is_finite())
            || self.obstacle_loss_db.is_some_and(|x| !x.is_finite())
        {
            return Err(Error::InvalidArgument(
                "noise power and obstacle loss must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Copy with every path azimuth shifted by `delta_rad`.
    pub fn rotated(&self, delta_rad: f64) -> Self {
        let mut s = self.clone();
        for p in &mut s.paths {
            p.azimuth_rad += delta_rad;
        }
        s
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let s: ChannelScenario = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        s.validate().map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(s)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("scenario serializes");
        write_atomic(path, text.as_bytes())
    }
}

/// Far-field channel at orientation `theta_rad`:
/// `h_i = sum_p g_p exp(-j k <u(az_p - theta, el_p), r_i>)`.
pub fn synth_channel<T: Scalar>(
    scenario: &ChannelScenario,
    theta_rad: T,
    cfg: &ArrayConfig,
) -> ChannelRealization<T> {
    let positions = element_positions::<T>(cfg);
    let k = T::TAU() / T::from_f64_lossy(cfg.wavelength_m());
    let mut h = vec![Complex::new(T::zero(), T::zero()); positions.len()];
    let obstacle_amp = scenario
        .obstacle_loss_db
        .map_or(1.0, |db| 10f64.powf(-db / 20.0));

    for path in &scenario.paths {
        let amp = if path.obstructed { obstacle_amp } else { 1.0 };
        let gain = Complex::new(
            T::from_f64_lossy(path.gain.re * amp),
            T::from_f64_lossy(path.gain.im * amp),
        );
        let az = T::from_f64_lossy(path.azimuth_rad) - theta_rad;
        let el = T::from_f64_lossy(path.elevation_rad);
        let u = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
        for (hi, r) in h.iter_mut().zip(&positions) {
            let proj = u[0] * r[0] + u[1] * r[1] + u[2] * r[2];
            *hi = *hi + gain * Complex::from_polar(T::one(), -(k * proj));
        }
    }
    ChannelRealization {
        theta_rad,
        h,
        tag: None,
    }
}

/// Adds circular complex Gaussian noise of total power `10^(power_db/10)` per element.
pub fn add_noise<T: Scalar, R: Rng + ?Sized>(
    channel: &mut ChannelRealization<T>,
    noise_power_db: f64,
    rng: &mut R,
) {
    let sigma = (10f64.powf(noise_power_db / 10.0) / 2.0).sqrt();
    for c in &mut channel.h {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *c = *c + Complex::new(T::from_f64_lossy(re * sigma), T::from_f64_lossy(im * sigma));
    }
}

/// I.i.d. unit-power circular complex Gaussian coefficients (a rich-scattering
/// stand-in used by oracle checks).
pub fn random_gaussian_channel<T: Scalar, R: Rng + ?Sized>(
    elements: usize,
    rng: &mut R,
) -> ChannelRealization<T> {
    let sigma = std::f64::consts::FRAC_1_SQRT_2;
    let h = (0..elements)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(T::from_f64_lossy(re * sigma), T::from_f64_lossy(im * sigma))
        })
        .collect();
    ChannelRealization {
        theta_rad: T::zero(),
        h,
        tag: None,
    }
}

/// Closed orientation interval in radians, contained in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRange {
    pub lo: f64,
    pub hi: f64,
}

impl AngleRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "empty angle interval [{lo}, {hi}]"
            )));
        }
        if lo < -PI || hi >= PI {
            return Err(Error::InvalidArgument(format!(
                "angle interval [{lo}, {hi}] leaves [-pi, pi)"
            )));
        }
        Ok(AngleRange { lo, hi })
    }

    pub fn from_degrees(lo_deg: f64, hi_deg: f64) -> Result<Self> {
        Self::new(lo_deg.to_radians(), hi_deg.to_radians())
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `count` i.i.d. uniform orientations from `range`.
pub fn sample_orientations<R: Rng + ?Sized>(
    count: usize,
    range: AngleRange,
    rng: &mut R,
) -> Vec<f64> {
    if range.lo == range.hi {
        return vec![range.lo; count];
    }
    (0..count)
        .map(|_| rng.random_range(range.lo..range.hi))
        .collect()
}

/// [`sample_orientations`] driven by a ChaCha8 generator seeded with `seed`.
pub fn sample_orientations_seeded(count: usize, range: AngleRange, seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    sample_orientations(count, range, &mut rng)
}

fn csv_header(elements: usize) -> Vec<String> {
    let mut cols = vec!["theta_rad".to_string(), "tag".to_string()];
    for i in 1..=elements {
        cols.push(format!("re_{i}"));
        cols.push(format!("im_{i}"));
    }
    cols
}

/// Serializes realizations as `theta_rad,tag,re_1,im_1,...` CSV.
pub fn dataset_to_csv<T: Scalar>(
    channels: &[ChannelRealization<T>],
    elements: usize,
) -> Result<String> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv encoding failed: {e}"));
    wtr.write_record(csv_header(elements)).map_err(csv_err)?;
    for (row, ch) in channels.iter().enumerate() {
        if ch.h.len() != elements {
            return Err(Error::InvalidArgument(format!(
                "realization {row} has {} coefficients, expected {elements}",
                ch.h.len()
            )));
        }
        let mut rec = Vec::with_capacity(2 + 2 * elements);
        rec.push(ch.theta_rad.to_f64_lossy().to_string());
        rec.push(ch.tag.clone().unwrap_or_default());
        for c in &ch.h {
            rec.push(c.re.to_f64_lossy().to_string());
            rec.push(c.im.to_f64_lossy().to_string());
        }
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn save_dataset<T: Scalar>(
    path: &Path,
    channels: &[ChannelRealization<T>],
    elements: usize,
) -> Result<()> {
    write_atomic(path, dataset_to_csv(channels, elements)?.as_bytes())
}

/// Parses CSV text; `path` only labels errors.
pub fn parse_dataset<T: Scalar>(text: &str, path: &Path) -> Result<Vec<ChannelRealization<T>>> {
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let parse = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| parse(1, e.to_string()))?
        .clone();
    if header.len() < 2 || &header[0] != "theta_rad" || &header[1] != "tag" || header.len() % 2 != 0 {
        return Err(schema(
            "header must be theta_rad,tag,re_1,im_1,...,re_n,im_n".into(),
        ));
    }
    let elements = (header.len() - 2) / 2;
    let expected = csv_header(elements);
    if header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(schema(format!(
            "unexpected header columns; expected {}",
            expected.join(",")
        )));
    }

    let num = |field: &str, line: u64, col: &str| -> Result<T> {
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| parse(line, format!("column {col}: cannot parse {field:?} as a number")))?;
        if !v.is_finite() {
            return Err(parse(line, format!("column {col}: non-finite value {field:?}")));
        }
        Ok(T::from_f64_lossy(v))
    };

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(schema(format!(
                "line {line}: expected {} columns ({elements} complex pairs), found {}",
                header.len(),
                rec.len()
            )));
        }
        let theta = num(&rec[0], line, "theta_rad")?;
        let tag = (!rec[1].is_empty()).then(|| rec[1].to_string());
        let mut h = Vec::with_capacity(elements);
        for i in 0..elements {
            let re = num(&rec[2 + 2 * i], line, &expected[2 + 2 * i])?;
            let im = num(&rec[3 + 2 * i], line, &expected[3 + 2 * i])?;
            h.push(Complex::new(re, im));
        }
        out.push(ChannelRealization {
            theta_rad: theta,
            h,
            tag,
        });
    }
    Ok(out)
}

pub fn load_dataset<T: Scalar>(path: &Path) -> Result<Vec<ChannelRealization<T>>> {
    parse_dataset(&read_to_string(path)?, path)
}

/// [`load_dataset`] plus a check that every row matches the array size.
pub fn load_dataset_for<T: Scalar>(
    path: &Path,
    cfg: &ArrayConfig,
) -> Result<Vec<ChannelRealization<T>>> {
    let text = read_to_string(path)?;
    let header_cols = text.lines().next().map_or(0, |l| l.split(',').count());
    if header_cols >= 2 && (header_cols - 2) / 2 != cfg.element_count() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!(
                "file holds {} coefficients per row, array has {} elements",
                (header_cols - 2) / 2,
                cfg.element_count()
            ),
        });
    }
    parse_dataset(&text, path)
}
