use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::KernelParams;
use crate::descriptors::{BankParams, DescriptorId, Encoder};
use crate::ensemble::SolverSettings;
use crate::error::{Error, Result};

pub const ALLOWED_GRIDS: [usize; 3] = [3, 5, 7];

/// Settings of one descriptor channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptorConfig {
    pub enabled: bool,
    pub g: usize,
    /// Target dimension of the pooled PCA; `None` keeps raw vectors.
    pub pca_dim: Option<usize>,
    /// Filter bank for gabor and gist; ignored otherwise.
    pub bank: Option<BankParams>,
    pub svm: KernelParams,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            g: 3,
            pca_dim: None,
            bank: None,
            svm: KernelParams::default(),
        }
    }
}

impl DescriptorConfig {
    pub fn defaults_for(id: DescriptorId) -> Self {
        let (pca_dim, bank) = match id {
            DescriptorId::Sift => (Some(20), None),
            DescriptorId::Centrist => (Some(10), None),
            DescriptorId::Gist => (None, Some(BankParams::GIST)),
            DescriptorId::Gabor => (None, Some(BankParams::GABOR)),
        };
        Self {
            g: id.default_grid(),
            pca_dim,
            bank,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_per_class: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_per_class: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    /// Root of a `<class>/<image>` tree.
    pub dataset: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
}

/// Full pipeline configuration. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Drives the split and the default kernel width estimate.
    pub seed: u64,
    /// Listed descriptors replace the default set; each entry's missing
    /// fields take that descriptor's own defaults.
    #[serde(deserialize_with = "descriptors_over_defaults")]
    pub descriptors: BTreeMap<DescriptorId, DescriptorConfig>,
    pub ensemble: SolverSettings,
    pub split: SplitConfig,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            descriptors: DescriptorId::ALL
                .into_iter()
                .map(|d| (d, DescriptorConfig::defaults_for(d)))
                .collect(),
            ensemble: SolverSettings::default(),
            split: SplitConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn descriptors_over_defaults<'de, D>(de: D) -> std::result::Result<BTreeMap<DescriptorId, DescriptorConfig>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::de::Error as _;
    let raw = BTreeMap::<DescriptorId, serde_json::Value>::deserialize(de)?;
    raw.into_iter()
        .map(|(id, over)| {
            let mut base = serde_json::to_value(DescriptorConfig::defaults_for(id)).map_err(D::Error::custom)?;
            merge(&mut base, over);
            let config = serde_json::from_value(base).map_err(D::Error::custom)?;
            Ok((id, config))
        })
        .collect()
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Enabled descriptors in report column order.
    pub fn enabled(&self) -> Vec<DescriptorId> {
        self.descriptors
            .iter()
            .filter(|(_, c)| c.enabled)
            .map(|(&d, _)| d)
            .collect()
    }

    pub fn descriptor(&self, id: DescriptorId) -> Result<&DescriptorConfig> {
        self.descriptors
            .get(&id)
            .ok_or_else(|| Error::Config(format!("descriptor {id} is not configured")))
    }

    /// Keeps only `id`, enabled, with grid side `g`.
    pub fn single(&self, id: DescriptorId, g: usize) -> Result<Self> {
        let mut one = self.descriptor(id)?.clone();
        one.enabled = true;
        one.g = g;
        let mut config = self.clone();
        config.descriptors = BTreeMap::from([(id, one)]);
        config.validate()?;
        Ok(config)
    }

    pub fn encoder(&self, id: DescriptorId) -> Result<Encoder> {
        Encoder::new(id, self.descriptor(id)?.bank)
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled().is_empty() {
            return Err(Error::Config("no descriptor is enabled".into()));
        }
        for (&id, c) in &self.descriptors {
            if !ALLOWED_GRIDS.contains(&c.g) {
                return Err(Error::Config(format!("{id}: g must be one of 3, 5, 7, got {}", c.g)));
            }
            if let Some(b) = c.bank {
                if b.scales == 0 || b.orientations == 0 || b.base_wavelength.is_nan() || b.base_wavelength <= 0.0 {
                    return Err(Error::Config(format!("{id}: invalid filter bank {b:?}")));
                }
            }
            let dim = Encoder::new(id, c.bank).map_err(as_config)?.dim();
            if let Some(k) = c.pca_dim {
                if k == 0 || k > dim {
                    return Err(Error::Config(format!("{id}: pca_dim must lie in 1..={dim}, got {k}")));
                }
            }
            c.svm.validate().map_err(as_config)?;
        }
        if self.ensemble.iters == 0 {
            return Err(Error::Config("ensemble.iters must be at least 1".into()));
        }
        if self.split.train_per_class == 0 {
            return Err(Error::Config("split.train_per_class must be at least 1".into()));
        }
        Ok(())
    }
}

fn as_config(e: Error) -> Error {
    Error::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_settings() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        let grids: Vec<usize> = c.enabled().iter().map(|&d| c.descriptors[&d].g).collect();
        assert_eq!(grids, vec![7, 3, 5, 3]);
        assert_eq!(c.descriptors[&DescriptorId::Sift].pca_dim, Some(20));
        assert_eq!(c.descriptors[&DescriptorId::Centrist].pca_dim, Some(10));
        assert_eq!(c.descriptors[&DescriptorId::Gabor].bank, Some(BankParams::GABOR));
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"seed": 4, "descriptors": {"gist": {"g": 5}}}"#).unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.enabled(), vec![DescriptorId::Gist]);
        assert_eq!(c.descriptors[&DescriptorId::Gist].g, 5);
        assert_eq!(c.descriptors[&DescriptorId::Gist].bank, Some(BankParams::GIST));
        assert_eq!(c.ensemble.iters, 5000);
        c.validate().unwrap();

        let c: PipelineConfig =
            serde_json::from_str(r#"{"descriptors": {"sift": {"svm": {"c": 5.0}}, "centrist": {"pca_dim": null}}}"#)
                .unwrap();
        let sift = &c.descriptors[&DescriptorId::Sift];
        assert_eq!(
            (sift.g, sift.pca_dim, sift.svm.c, sift.svm.tol),
            (7, Some(20), 5.0, 1e-3)
        );
        assert_eq!(c.descriptors[&DescriptorId::Centrist].pca_dim, None);
    }

    #[test]
    fn round_trips_through_json() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        let mut c = PipelineConfig::default();
        c.descriptors.get_mut(&DescriptorId::Sift).unwrap().g = 4;
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = PipelineConfig::default();
        c.descriptors.get_mut(&DescriptorId::Centrist).unwrap().pca_dim = Some(300);
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = PipelineConfig::default();
        for d in c.descriptors.values_mut() {
            d.enabled = false;
        }
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = PipelineConfig::default();
        c.descriptors.get_mut(&DescriptorId::Gist).unwrap().svm.c = -1.0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn single_keeps_one_channel() {
        let c = PipelineConfig::default().single(DescriptorId::Centrist, 7).unwrap();
        assert_eq!(c.enabled(), vec![DescriptorId::Centrist]);
        assert_eq!(c.descriptors[&DescriptorId::Centrist].g, 7);
        assert_eq!(c.descriptors[&DescriptorId::Centrist].pca_dim, Some(10));
    }
}
