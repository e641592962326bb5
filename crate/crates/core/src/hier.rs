//! Hierarchical (binary-descent) beam search baseline.
//!
//! Level `l` (1-based) splits the service sector into `2^l` equal sub-sectors
//! and holds one codeword per sub-sector: the rounded MRC codeword of a
//! single line-of-sight wave arriving from the sub-sector centre. Coarse
//! levels use the same narrow steered beams as the leaves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{ArrayConfig, Codebook, CodebookFile, SteeringVector};
use crate::beamsel::{quantized_mrc, received_power, PowerDb};
use crate::channel::{synth_channel, AngleRange, ChannelRealization, ChannelScenario};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct HierCodebook {
    /// Array-frame arrival azimuths served by the hierarchy.
    pub sector: AngleRange,
    /// `levels[l - 1]` holds the `2^l` codewords of level `l`, lowest angle first.
    pub levels: Vec<Codebook>,
}

/// Outcome of one binary descent.
#[derive(Debug, Clone, PartialEq)]
pub struct HierSearch<T> {
    pub codeword: SteeringVector,
    pub power: PowerDb<T>,
    /// Leaf index at the deepest level.
    pub leaf: usize,
    /// Codewords measured during the descent, two per level.
    pub probes: usize,
}

impl HierCodebook {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn leaves(&self) -> &Codebook {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn total_entries(&self) -> usize {
        self.levels.iter().map(Codebook::len).sum()
    }

    /// Steering centre of entry `index` at 1-based `level`.
    pub fn centre(&self, level: usize, index: usize) -> f64 {
        sub_sector_centre(self.sector, level, index)
    }

    pub fn validate(&self, cfg: &ArrayConfig) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("hierarchy needs at least one level".into()));
        }
        for (l, cb) in self.levels.iter().enumerate() {
            let want = 1usize << (l + 1);
            if cb.len() != want {
                return Err(Error::InvalidArgument(format!(
                    "level {} holds {} codewords, expected {want}",
                    l + 1,
                    cb.len()
                )));
            }
            cb.validate(cfg)?;
        }
        Ok(())
    }

    pub fn to_file(&self, cfg: &ArrayConfig) -> HierCodebookFile {
        HierCodebookFile {
            sector_rad: [self.sector.lo, self.sector.hi],
            levels: self.levels.iter().map(|cb| cb.to_file(cfg)).collect(),
        }
    }

    pub fn write_json(&self, cfg: &ArrayConfig, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file(cfg)).expect("hierarchy serializes");
        write_atomic(path, text.as_bytes())
    }

    pub fn read_json(path: &Path, cfg: &ArrayConfig) -> Result<Self> {
        let file: HierCodebookFile =
            serde_json::from_str(&read_to_string(path)?).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
        let schema = |e: Error| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let sector = AngleRange::new(file.sector_rad[0], file.sector_rad[1]).map_err(schema)?;
        let levels = file
            .levels
            .into_iter()
            .map(|l| l.into_codebook(cfg))
            .collect::<Result<Vec<_>>>()
            .map_err(schema)?;
        let hc = HierCodebook { sector, levels };
        hc.validate(cfg).map_err(schema)?;
        Ok(hc)
    }
}

/// `{"sector_rad":[lo,hi],"levels":[<codebook>,...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierCodebookFile {
    pub sector_rad: [f64; 2],
    pub levels: Vec<CodebookFile>,
}

fn sub_sector_centre(sector: AngleRange, level: usize, index: usize) -> f64 {
    let parts = (1u64 << level) as f64;
    sector.lo + (index as f64 + 0.5) * sector.width() / parts
}

pub fn build_hier(cfg: &ArrayConfig, sector: AngleRange, levels: usize) -> Result<HierCodebook> {
    if levels == 0 || levels > 20 {
        return Err(Error::InvalidArgument(format!(
            "hierarchy depth must be in 1..=20, got {levels}"
        )));
    }
    if sector.width() <= 0.0 {
        return Err(Error::InvalidArgument("service sector is empty".into()));
    }
    let los = ChannelScenario::line_of_sight();
    let levels = (1..=levels)
        .map(|level| {
            let entries = (0..1usize << level)
                .map(|j| {
                    let centre = sub_sector_centre(sector, level, j);
                    let h = synth_channel::<f64>(&los.rotated(centre), 0.0, cfg);
                    quantized_mrc(&h, cfg).map(|(sv, _)| sv)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Codebook::new(entries))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HierCodebook { sector, levels })
}

/// Descends from the coarsest level, measuring both children of the current
/// sub-sector and following the stronger one; equal powers go to the
/// lower-angle child.
pub fn hier_search<T: Scalar>(
    hc: &HierCodebook,
    channel: &ChannelRealization<T>,
    cfg: &ArrayConfig,
) -> Result<HierSearch<T>> {
    let mut node = 0usize;
    let mut probes = 0usize;
    for level in &hc.levels {
        let (left, right) = (2 * node, 2 * node + 1);
        let p_left = received_power(channel, &level.entries[left], cfg)?;
        let p_right = received_power(channel, &level.entries[right], cfg)?;
        probes += 2;
        node = if p_right > p_left { right } else { left };
    }
    let codeword = hc.leaves().entries[node].clone();
    let power = received_power(channel, &codeword, cfg)?;
    Ok(HierSearch {
        codeword,
        power,
        leaf: node,
        probes,
    })
}
