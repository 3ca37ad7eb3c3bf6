use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bundle::*;
use super::config::PipelineConfig;
use super::report::{ColumnScores, EvaluationReport, COMBINE};
use crate::classify::{argmax, ovr_train, OvrClassifier};
use crate::descriptors::{DescriptorId, Encoder};
use crate::ensemble::{
    fuse as fuse_probs, solve_weights, EnsembleWeights, LabelIndicator, ScoreTable, ScoreTensor, WeightFit,
};
use crate::error::{Error, Result};
use crate::hmm::{build_bank, feature_vector, BankEntry, ForwardModel, ReferenceBank};
use crate::imaging::{GrayImage, LabeledImageSet, Partition, SplitSpec};
use crate::reduce::{pca_fit, PcaModel};

/// Class and partition of every image, in dataset order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub class_names: Vec<String>,
    pub images: Vec<ImageInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: String,
    pub class: usize,
    pub partition: Partition,
}

impl DatasetIndex {
    pub fn build(set: &LabeledImageSet, split: &SplitSpec) -> Result<Self> {
        let train = split.train_set();
        let test: std::collections::BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
        let images = set
            .items()
            .iter()
            .map(|item| {
                let partition = if train.contains(item.id.as_str()) {
                    Partition::Train
                } else if test.contains(item.id.as_str()) {
                    Partition::Test
                } else {
                    return Err(Error::Alignment(format!("image {} is not in the split", item.id)));
                };
                Ok(ImageInfo {
                    id: item.id.clone(),
                    class: item.class,
                    partition,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            class_names: set.class_names().to_vec(),
            images,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn in_partition(&self, p: Partition) -> impl Iterator<Item = &ImageInfo> {
        self.images.iter().filter(move |i| i.partition == p)
    }
}

/// One line of `grids_<descriptor>.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub id: String,
    pub descriptor: DescriptorId,
    pub g: usize,
    pub features: Vec<Vec<f64>>,
}

/// One line of `features_<descriptor>.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub descriptor: DescriptorId,
    pub v: Vec<f64>,
}

/// Fitted image-to-feature map of one descriptor.
#[derive(Debug, Clone)]
pub struct Channel {
    pub descriptor: DescriptorId,
    pub g: usize,
    pub encoder: Encoder,
    pub pca: Option<PcaModel>,
    pub bank: ReferenceBank,
}

impl Channel {
    pub fn load(bundle: &Bundle, config: &PipelineConfig, d: DescriptorId) -> Result<Self> {
        let pca = if config.descriptor(d)?.pca_dim.is_some() {
            Some(bundle.read_json(&pca_file(d))?)
        } else {
            None
        };
        Ok(Self {
            descriptor: d,
            g: config.descriptor(d)?.g,
            encoder: config.encoder(d)?,
            pca,
            bank: bundle.read_json(&bank_file(d))?,
        })
    }

    pub fn reduce(&self, grids: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        match &self.pca {
            Some(p) => grids.iter().map(|x| p.apply(x)).collect(),
            None => Ok(grids.to_vec()),
        }
    }

    /// HMM feature vector of a new image against the full bank.
    pub fn features(&self, image: &GrayImage) -> Result<Vec<f64>> {
        let seq = self.encoder.encode(image, self.g)?;
        let obs = self.reduce(&seq.features)?;
        let alpha = ForwardModel::new(&self.bank)?.run(&obs, None)?;
        Ok(feature_vector(&alpha).into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub descriptors: Vec<DescriptorId>,
    /// False when any SMO run hit its iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub class_name: String,
    pub fused: Vec<f64>,
    pub per_descriptor: BTreeMap<DescriptorId, Vec<f64>>,
}

fn stage_outputs(d: DescriptorId) -> [String; 6] {
    [
        grids_file(d),
        features_file(d),
        pca_file(d),
        bank_file(d),
        svm_file(d),
        scores_file(d),
    ]
}

fn downstream_outputs() -> Vec<String> {
    [WEIGHTS, FUSE_LOG, REPORT_JSON, REPORT_TEXT].map(String::from).to_vec()
}

/// Encodes every image, fits PCA and the reference bank on the training
/// part and writes HMM features. Training images are scored leave-one-out.
pub fn extract(config: &PipelineConfig, set: &LabeledImageSet, split: &SplitSpec, bundle: &Bundle) -> Result<()> {
    config.validate()?;
    let index = DatasetIndex::build(set, split)?;
    let m = index.num_classes();

    let mut files = vec![
        (CONFIG.to_string(), json_bytes(config)?),
        (SPLIT.to_string(), json_bytes(split)?),
        (DATASET.to_string(), json_bytes(&index)?),
    ];
    for d in config.enabled() {
        let dc = config.descriptor(d)?;
        let encoder = config.encoder(d)?;
        info!("extract {d}: g = {}, {} images", dc.g, set.items().len());
        let grids = set
            .items()
            .par_iter()
            .map(|item| encoder.encode(&item.image, dc.g).map(|s| s.features))
            .collect::<Result<Vec<_>>>()?;
        let records: Vec<GridRecord> = set
            .items()
            .iter()
            .zip(&grids)
            .map(|(item, f)| GridRecord {
                id: item.id.clone(),
                descriptor: d,
                g: dc.g,
                features: f.clone(),
            })
            .collect();
        files.push((grids_file(d), jsonl_bytes(&records)?));

        let is_train: Vec<bool> = index.images.iter().map(|i| i.partition == Partition::Train).collect();
        let pca = match dc.pca_dim {
            Some(k) => {
                let pool: Vec<Vec<f64>> = grids
                    .iter()
                    .zip(&is_train)
                    .filter(|(_, &t)| t)
                    .flat_map(|(g, _)| g.iter().cloned())
                    .collect();
                let model = pca_fit(&pool, k)?;
                if model.is_rank_deficient() {
                    warn!("{d}: training grids span fewer than {k} directions");
                }
                files.push((pca_file(d), json_bytes(&model)?));
                Some(model)
            }
            None => None,
        };
        let channel_obs: Vec<Vec<Vec<f64>>> = match &pca {
            Some(p) => grids
                .par_iter()
                .map(|g| g.iter().map(|x| p.apply(x)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?,
            None => grids,
        };

        let entries: Vec<BankEntry> = index
            .images
            .iter()
            .zip(&channel_obs)
            .filter(|(info, _)| info.partition == Partition::Train)
            .map(|(info, obs)| BankEntry {
                id: &info.id,
                class: info.class,
                observations: obs,
            })
            .collect();
        let bank = build_bank(&entries, m)?;
        let model = ForwardModel::new(&bank)?;
        let features = index
            .images
            .par_iter()
            .zip(&channel_obs)
            .map(|(info, obs)| {
                let exclude = (info.partition == Partition::Train).then_some(info.id.as_str());
                let alpha = model.run(obs, exclude)?;
                Ok(FeatureRecord {
                    id: info.id.clone(),
                    descriptor: d,
                    v: feature_vector(&alpha).into_inner(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        files.push((bank_file(d), json_bytes(&bank)?));
        files.push((features_file(d), jsonl_bytes(&features)?));
    }

    let mut stale: Vec<String> = DescriptorId::ALL.into_iter().flat_map(stage_outputs).collect();
    stale.extend(downstream_outputs());
    bundle.remove(&stale)?;
    bundle.write_all(files)
}

fn load_features(bundle: &Bundle, index: &DatasetIndex, d: DescriptorId) -> Result<Vec<Vec<f64>>> {
    let records: Vec<FeatureRecord> = bundle.read_jsonl(&features_file(d))?;
    if records.len() != index.images.len() || records.iter().zip(&index.images).any(|(r, i)| r.id != i.id) {
        return Err(Error::Alignment(format!(
            "{} does not list the indexed images in order",
            features_file(d)
        )));
    }
    Ok(records.into_iter().map(|r| r.v).collect())
}

/// Trains one calibrated classifier per descriptor and writes its training-set scores.
pub fn train(bundle: &Bundle) -> Result<TrainSummary> {
    let config: PipelineConfig = bundle.read_json(CONFIG)?;
    let index: DatasetIndex = bundle.read_json(DATASET)?;
    let m = index.num_classes();
    let enabled = config.enabled();

    let trained = enabled
        .par_iter()
        .map(|&d| {
            let features = load_features(bundle, &index, d)?;
            let (ids, x, y): (Vec<&str>, Vec<Vec<f64>>, Vec<usize>) = index
                .images
                .iter()
                .zip(features)
                .filter(|(info, _)| info.partition == Partition::Train)
                .fold(
                    (Vec::new(), Vec::new(), Vec::new()),
                    |(mut ids, mut x, mut y), (info, v)| {
                        ids.push(info.id.as_str());
                        x.push(v);
                        y.push(info.class);
                        (ids, x, y)
                    },
                );
            info!(
                "train {d}: {} samples of dimension {}",
                x.len(),
                x.first().map_or(0, Vec::len)
            );
            let mut clf = ovr_train(&x, &y, m, &config.descriptor(d)?.svm, config.seed)?;
            clf.descriptor = Some(d);
            let rows = x.iter().map(|xi| clf.predict_proba(xi)).collect::<Result<Vec<_>>>()?;
            let table = ScoreTable {
                classifier_id: d.to_string(),
                image_ids: ids.iter().map(|s| s.to_string()).collect(),
                rows,
            };
            Ok((d, clf, table))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut files = Vec::new();
    let mut converged = true;
    for (d, clf, table) in &trained {
        if !clf.converged() {
            warn!("{d}: at least one SMO run stopped at the iteration cap");
            converged = false;
        }
        files.push((svm_file(*d), json_bytes(clf)?));
        files.push((scores_file(*d), table.to_csv()?));
    }
    let mut stale: Vec<String> = DescriptorId::ALL
        .into_iter()
        .flat_map(|d| [svm_file(d), scores_file(d)])
        .collect();
    stale.extend(downstream_outputs());
    bundle.remove(&stale)?;
    bundle.write_all(files)?;
    Ok(TrainSummary {
        descriptors: enabled,
        converged,
    })
}

/// Fits simplex weights on the training scores.
pub fn fuse(bundle: &Bundle) -> Result<WeightFit> {
    let config: PipelineConfig = bundle.read_json(CONFIG)?;
    let index: DatasetIndex = bundle.read_json(DATASET)?;
    let tables = config
        .enabled()
        .into_iter()
        .map(|d| ScoreTable::read_csv(&bundle.path(&scores_file(d)), d.as_str()))
        .collect::<Result<Vec<_>>>()?;
    let tensor = ScoreTensor::stack(tables)?;
    let class_of: BTreeMap<&str, usize> = index.images.iter().map(|i| (i.id.as_str(), i.class)).collect();
    let classes = tensor
        .image_ids()
        .iter()
        .map(|id| {
            class_of
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Alignment(format!("scored image {id} is not in the dataset index")))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = LabelIndicator::new(classes, index.num_classes())?;
    let fit = solve_weights(&tensor, &labels, &config.ensemble)?;
    info!(
        "fuse: J(w*) = {:.6}, J(uniform) = {:.6}, J(single) = {:?}",
        fit.objective, fit.uniform_objective, fit.single_objectives
    );
    let mut stale = downstream_outputs();
    stale.retain(|n| n != WEIGHTS && n != FUSE_LOG);
    bundle.remove(&stale)?;
    bundle.write_all(vec![
        (WEIGHTS.to_string(), json_bytes(&fit.weights)?),
        (FUSE_LOG.to_string(), json_bytes(&fit)?),
    ])?;
    Ok(fit)
}

/// Trained classifiers and fusion weights, ready for scoring.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub config: PipelineConfig,
    pub class_names: Vec<String>,
    pub descriptors: Vec<DescriptorId>,
    pub classifiers: Vec<OvrClassifier>,
    pub weights: EnsembleWeights,
}

/// Per-descriptor probabilities and their fusion for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub per_descriptor: Vec<Vec<f64>>,
    pub fused: Vec<f64>,
    pub label: usize,
}

impl TrainedModels {
    pub fn load(bundle: &Bundle) -> Result<Self> {
        let config: PipelineConfig = bundle.read_json(CONFIG)?;
        let index: DatasetIndex = bundle.read_json(DATASET)?;
        let descriptors = config.enabled();
        let classifiers = descriptors
            .iter()
            .map(|&d| bundle.read_json::<OvrClassifier>(&svm_file(d)))
            .collect::<Result<Vec<_>>>()?;
        let weights: EnsembleWeights = bundle.read_json(WEIGHTS)?;
        let names: Vec<String> = descriptors.iter().map(|d| d.to_string()).collect();
        if weights.classifiers != names {
            return Err(Error::Alignment(format!(
                "weights cover {:?} but the enabled descriptors are {names:?}",
                weights.classifiers
            )));
        }
        let weights = EnsembleWeights::new(weights.classifiers, weights.w)?;
        Ok(Self {
            config,
            class_names: index.class_names,
            descriptors,
            classifiers,
            weights,
        })
    }

    /// `features[i]` is the HMM feature vector for descriptor `i`.
    pub fn score(&self, features: &[&[f64]]) -> Result<Scored> {
        let per_descriptor = self
            .classifiers
            .iter()
            .zip(features)
            .map(|(clf, x)| clf.predict_proba(x))
            .collect::<Result<Vec<_>>>()?;
        let (fused, label) = fuse_probs(&per_descriptor, &self.weights.w)?;
        Ok(Scored {
            per_descriptor,
            fused,
            label,
        })
    }
}

/// Scores the test images and writes `report.json` and `report.txt`.
pub fn eval(bundle: &Bundle) -> Result<EvaluationReport> {
    let models = TrainedModels::load(bundle)?;
    let index: DatasetIndex = bundle.read_json(DATASET)?;
    let m = index.num_classes();
    let features = models
        .descriptors
        .iter()
        .map(|&d| load_features(bundle, &index, d))
        .collect::<Result<Vec<_>>>()?;
    let test: Vec<usize> = (0..index.images.len())
        .filter(|&j| index.images[j].partition == Partition::Test)
        .collect();
    let scored = test
        .par_iter()
        .map(|&j| {
            let x: Vec<&[f64]> = features.iter().map(|f| f[j].as_slice()).collect();
            models.score(&x)
        })
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<usize> = test.iter().map(|&j| index.images[j].class).collect();

    let columns = models
        .descriptors
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let predicted: Vec<usize> = scored.iter().map(|s| argmax(&s.per_descriptor[i])).collect();
            ColumnScores::from_predictions(d.as_str(), &truth, &predicted, m)
        })
        .collect::<Result<Vec<_>>>()?;
    let fused: Vec<usize> = scored.iter().map(|s| s.label).collect();
    let combined = ColumnScores::from_predictions(COMBINE, &truth, &fused, m)?;
    let report = EvaluationReport::new(index.class_names.clone(), columns, combined, models.weights.clone());
    bundle.write_all(vec![
        (REPORT_JSON.to_string(), json_bytes(&report)?),
        (REPORT_TEXT.to_string(), report.to_table().into_bytes()),
    ])?;
    Ok(report)
}

/// Classifies one image with a trained bundle.
pub fn predict(bundle: &Bundle, image: &GrayImage) -> Result<Prediction> {
    let models = TrainedModels::load(bundle)?;
    let features = models
        .descriptors
        .iter()
        .map(|&d| Channel::load(bundle, &models.config, d)?.features(image))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let scored = models.score(&refs)?;
    Ok(Prediction {
        class: scored.label,
        class_name: models.class_names[scored.label].clone(),
        fused: scored.fused,
        per_descriptor: models.descriptors.iter().copied().zip(scored.per_descriptor).collect(),
    })
}

/// Outcome of a full extract, train, fuse and eval pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: EvaluationReport,
    pub fit: WeightFit,
    pub converged: bool,
}

pub fn run_all(
    config: &PipelineConfig,
    set: &LabeledImageSet,
    split: &SplitSpec,
    bundle: &Bundle,
) -> Result<RunOutcome> {
    extract(config, set, split, bundle)?;
    let summary = train(bundle)?;
    let fit = fuse(bundle)?;
    let report = eval(bundle)?;
    Ok(RunOutcome {
        report,
        fit,
        converged: summary.converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub descriptor: DescriptorId,
    pub g: usize,
    pub accuracy: f64,
}

/// Single-descriptor accuracy for every enabled descriptor and grid size.
/// Each run gets its own bundle under `work_dir`.
pub fn sweep(
    config: &PipelineConfig,
    set: &LabeledImageSet,
    split: &SplitSpec,
    grids: &[usize],
    work_dir: &Path,
) -> Result<Vec<SweepRow>> {
    if grids.is_empty() {
        return Err(Error::Config("sweep needs at least one grid size".into()));
    }
    let mut rows = Vec::new();
    for d in config.enabled() {
        for &g in grids {
            let single = config.single(d, g)?;
            let bundle = Bundle::create(&work_dir.join(format!("{d}_g{g}")))?;
            let outcome = run_all(&single, set, split, &bundle)?;
            let accuracy = outcome
                .report
                .descriptor_accuracy(d)
                .ok_or_else(|| Error::MissingArtifact(bundle.path(REPORT_JSON)))?;
            info!("sweep {d} g = {g}: accuracy {accuracy:.4}");
            rows.push(SweepRow {
                descriptor: d,
                g,
                accuracy,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("descriptor,g,accuracy\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.descriptor, r.g, r.accuracy));
    }
    out
}

/// Grid size with the highest accuracy per descriptor; the smallest `g` wins ties.
pub fn best_grids(rows: &[SweepRow]) -> BTreeMap<DescriptorId, usize> {
    let mut best: BTreeMap<DescriptorId, &SweepRow> = BTreeMap::new();
    for r in rows {
        let slot = best.entry(r.descriptor).or_insert(r);
        if r.accuracy > slot.accuracy || (r.accuracy == slot.accuracy && r.g < slot.g) {
            *slot = r;
        }
    }
    best.into_iter().map(|(d, r)| (d, r.g)).collect()
}
