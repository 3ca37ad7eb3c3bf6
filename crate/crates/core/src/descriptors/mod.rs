//! Grid partitioning, zigzag ordering and the four per-grid descriptors.

mod census;
mod gabor;
mod grid;
mod sift;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use census::{census_code, centrist, CENTRIST_DIM};
pub use gabor::{build_gabor_bank, gabor_feat, gist_feat, GaborBank, GaborFilter, SIGMA_PER_WAVELENGTH};
pub use grid::{partition, partition_dims, zigzag};
pub use sift::{orientation_bin, sift_feat, SIFT_BINS, SIFT_CELLS, SIFT_DIM};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// The four complementary descriptors, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorId {
    Sift,
    Gist,
    Centrist,
    Gabor,
}

impl DescriptorId {
    pub const ALL: [DescriptorId; 4] = [Self::Sift, Self::Gist, Self::Centrist, Self::Gabor];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sift => "sift",
            Self::Gist => "gist",
            Self::Centrist => "centrist",
            Self::Gabor => "gabor",
        }
    }

    /// Grid side count that worked best per descriptor (3/7/5/3).
    pub fn default_grid(self) -> usize {
        match self {
            Self::Sift => 7,
            Self::Gist => 3,
            Self::Centrist => 5,
            Self::Gabor => 3,
        }
    }
}

impl fmt::Display for DescriptorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown descriptor {s:?}")))
    }
}

/// Filter-bank geometry for the Gabor-based descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankParams {
    pub scales: usize,
    pub orientations: usize,
    pub base_wavelength: f64,
}

impl BankParams {
    pub const GABOR: BankParams = BankParams {
        scales: 5,
        orientations: 8,
        base_wavelength: 4.0,
    };
    pub const GIST: BankParams = BankParams {
        scales: 4,
        orientations: 8,
        base_wavelength: 4.0,
    };
}

/// One image's per-grid descriptor vectors in zigzag order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSequence {
    pub descriptor: DescriptorId,
    pub g: usize,
    pub features: Vec<Vec<f64>>,
}

impl GridSequence {
    pub fn new(descriptor: DescriptorId, g: usize, features: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != g * g {
            return Err(Error::Dimension(format!("{} grid vectors for g = {g}", features.len())));
        }
        let d = features.first().map_or(0, Vec::len);
        if features.iter().any(|f| f.len() != d) {
            return Err(Error::Dimension("grid vectors differ in length".into()));
        }
        Ok(Self {
            descriptor,
            g,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// A configured descriptor extractor.
#[derive(Debug, Clone)]
pub struct Encoder {
    descriptor: DescriptorId,
    bank: Option<GaborBank>,
}

impl Encoder {
    pub fn new(descriptor: DescriptorId, bank: Option<BankParams>) -> Result<Self> {
        let params = match descriptor {
            DescriptorId::Gabor => Some(bank.unwrap_or(BankParams::GABOR)),
            DescriptorId::Gist => Some(bank.unwrap_or(BankParams::GIST)),
            _ => None,
        };
        let bank = params
            .map(|p| build_gabor_bank(p.scales, p.orientations, p.base_wavelength))
            .transpose()?;
        Ok(Self { descriptor, bank })
    }

    pub fn descriptor(&self) -> DescriptorId {
        self.descriptor
    }

    /// Output length of one grid vector.
    pub fn dim(&self) -> usize {
        match self.descriptor {
            DescriptorId::Sift => SIFT_DIM,
            DescriptorId::Centrist => CENTRIST_DIM,
            DescriptorId::Gist => self.bank.as_ref().map_or(0, GaborBank::len),
            DescriptorId::Gabor => 2 * self.bank.as_ref().map_or(0, GaborBank::len),
        }
    }

    pub fn encode(&self, image: &GrayImage, g: usize) -> Result<GridSequence> {
        let rects = partition(image, g)?;
        let features = zigzag(g)
            .into_iter()
            .map(|idx| {
                let region = image.region(&rects[idx]);
                match (self.descriptor, &self.bank) {
                    (DescriptorId::Sift, _) => sift_feat(&region),
                    (DescriptorId::Centrist, _) => centrist(&region),
                    (DescriptorId::Gist, Some(bank)) => Ok(gist_feat(&region, bank)),
                    (DescriptorId::Gabor, Some(bank)) => Ok(gabor_feat(&region, bank)),
                    _ => unreachable!("gabor-based encoders always carry a bank"),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        GridSequence::new(self.descriptor, g, features)
    }
}

/// Encodes with default descriptor parameters.
pub fn encode(image: &GrayImage, descriptor: DescriptorId, g: usize) -> Result<GridSequence> {
    Encoder::new(descriptor, None)?.encode(image, g)
}
