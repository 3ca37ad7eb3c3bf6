use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{dims_match, Error, Result};

const ROW_SUM_TOL: f64 = 1e-6;
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Probability scores of `C` classifiers over the same images.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTensor {
    classifier_ids: Vec<String>,
    image_ids: Vec<String>,
    m: usize,
    /// `scores[i][j * m + k]`: classifier `i`, image `j`, class `k`.
    scores: Vec<Vec<f64>>,
}

impl ScoreTensor {
    /// Builds a tensor from one `N x m` row set per classifier.
    pub fn new(
        classifier_ids: Vec<String>,
        image_ids: Vec<String>,
        per_classifier: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if classifier_ids.is_empty() {
            return Err(Error::Parameter("score tensor needs at least one classifier".into()));
        }
        dims_match("classifier count", classifier_ids.len(), per_classifier.len())?;
        let n = image_ids.len();
        let m = per_classifier[0].first().map_or(0, Vec::len);
        if m < 2 {
            return Err(Error::Dimension("score rows need at least two classes".into()));
        }
        let mut scores = Vec::with_capacity(per_classifier.len());
        for (cid, rows) in classifier_ids.iter().zip(per_classifier) {
            dims_match(&format!("rows of classifier {cid}"), n, rows.len())?;
            let mut flat = Vec::with_capacity(n * m);
            for (row, img) in rows.iter().zip(&image_ids) {
                dims_match("score row", m, row.len())?;
                check_distribution(row, ROW_SUM_TOL)
                    .map_err(|e| Error::Format(format!("classifier {cid}, image {img}: {e}")))?;
                flat.extend_from_slice(row);
            }
            scores.push(flat);
        }
        Ok(Self {
            classifier_ids,
            image_ids,
            m,
            scores,
        })
    }

    /// Joins single-classifier tables that must list the same images in the same order.
    pub fn stack(tables: Vec<ScoreTable>) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::Parameter("no score tables to stack".into()))?;
        let image_ids = first.image_ids.clone();
        for t in &tables[1..] {
            if t.image_ids != image_ids {
                return Err(Error::Alignment(format!(
                    "score table {} covers different images than {}",
                    t.classifier_id, first.classifier_id
                )));
            }
        }
        let ids = tables.iter().map(|t| t.classifier_id.clone()).collect();
        let rows = tables.into_iter().map(|t| t.rows).collect();
        Self::new(ids, image_ids, rows)
    }

    pub fn num_classifiers(&self) -> usize {
        self.scores.len()
    }

    pub fn num_images(&self) -> usize {
        self.image_ids.len()
    }

    pub fn num_classes(&self) -> usize {
        self.m
    }

    pub fn classifier_ids(&self) -> &[String] {
        &self.classifier_ids
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn row(&self, classifier: usize, image: usize) -> &[f64] {
        &self.scores[classifier][image * self.m..(image + 1) * self.m]
    }

    pub fn table(&self, classifier: usize) -> ScoreTable {
        ScoreTable {
            classifier_id: self.classifier_ids[classifier].clone(),
            image_ids: self.image_ids.clone(),
            rows: (0..self.num_images())
                .map(|j| self.row(classifier, j).to_vec())
                .collect(),
        }
    }
}

/// One classifier's scores, the unit of CSV persistence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub classifier_id: String,
    pub image_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let m = self.rows.first().map_or(0, Vec::len);
        let csv_err = |e: csv::Error| Error::Format(format!("score table {}: {e}", self.classifier_id));
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["image_id".to_string()];
        header.extend((0..m).map(|k| format!("class_{k}")));
        w.write_record(&header).map_err(csv_err)?;
        for (id, row) in self.image_ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::Format(format!("score table {}: {e}", self.classifier_id)))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, classifier_id: &str) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let csv_err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.clone();
        let m = header.len().saturating_sub(1);
        let expected: Vec<String> = (0..m).map(|k| format!("class_{k}")).collect();
        if header.get(0) != Some("image_id") || !header.iter().skip(1).eq(expected.iter().map(String::as_str)) {
            return Err(Error::Format(format!("{}: unexpected header", path.display())));
        }
        let mut image_ids = Vec::new();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            image_ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Format(format!("{}: bad score {s:?}: {e}", path.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self {
            classifier_id: classifier_id.to_string(),
            image_ids,
            rows,
        })
    }
}

/// True classes of the scored images, one-hot over `m` classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIndicator {
    classes: Vec<usize>,
    m: usize,
}

impl LabelIndicator {
    pub fn new(classes: Vec<usize>, m: usize) -> Result<Self> {
        if let Some(&bad) = classes.iter().find(|&&c| c >= m) {
            return Err(Error::Dimension(format!("label {bad} outside 0..{m}")));
        }
        Ok(Self { classes, m })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.m
    }

    pub fn class_of(&self, image: usize) -> usize {
        self.classes[image]
    }

    pub fn one_hot(&self, image: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        v[self.classes[image]] = 1.0;
        v
    }
}

/// Non-negative classifier weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub classifiers: Vec<String>,
    pub w: Vec<f64>,
}

impl EnsembleWeights {
    pub fn new(classifiers: Vec<String>, w: Vec<f64>) -> Result<Self> {
        dims_match("weight vector", classifiers.len(), w.len())?;
        check_distribution(&w, WEIGHT_SUM_TOL).map_err(Error::Parameter)?;
        Ok(Self { classifiers, w })
    }

    pub fn uniform(classifiers: Vec<String>) -> Self {
        let c = classifiers.len();
        Self {
            classifiers,
            w: vec![1.0 / c as f64; c],
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

fn check_distribution(v: &[f64], tol: f64) -> std::result::Result<(), String> {
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(format!("entry {x} is not a non-negative number"));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(format!("entries sum to {s}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ScoreTensor {
        ScoreTensor::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![
                vec![vec![0.9, 0.1], vec![0.3, 0.7]],
                vec![vec![0.25, 0.75], vec![1.0 / 3.0, 2.0 / 3.0]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn rows_and_tables() {
        let s = toy();
        assert_eq!(s.row(1, 0), &[0.25, 0.75]);
        assert_eq!(ScoreTensor::stack(vec![s.table(0), s.table(1)]).unwrap(), s);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = ScoreTensor::new(vec!["a".into()], vec!["x".into()], vec![vec![vec![0.6, 0.6]]]);
        assert!(matches!(bad, Err(Error::Format(_))));
        let short = ScoreTensor::new(
            vec!["a".into()],
            vec!["x".into(), "y".into()],
            vec![vec![vec![0.5, 0.5]]],
        );
        assert!(matches!(short, Err(Error::Dimension(_))));
    }

    #[test]
    fn stack_checks_alignment() {
        let s = toy();
        let mut t = s.table(1);
        t.image_ids.swap(0, 1);
        assert!(matches!(
            ScoreTensor::stack(vec![s.table(0), t]),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let t = toy().table(1);
        t.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("image_id,class_0,class_1\n"));
        assert_eq!(ScoreTable::read_csv(&path, "b").unwrap(), t);
        assert!(matches!(
            ScoreTable::read_csv(&dir.path().join("none.csv"), "b"),
            Err(Error::MissingArtifact(_))
        ));
    }

    #[test]
    fn weights_validation() {
        assert!(EnsembleWeights::new(vec!["a".into(), "b".into()], vec![0.25, 0.75]).is_ok());
        assert!(EnsembleWeights::new(vec!["a".into(), "b".into()], vec![0.5, 0.6]).is_err());
        assert!(EnsembleWeights::new(vec!["a".into(), "b".into()], vec![1.5, -0.5]).is_err());
        let json = serde_json::to_string(&EnsembleWeights::uniform(vec!["a".into(), "b".into()])).unwrap();
        assert_eq!(json, r#"{"classifiers":["a","b"],"w":[0.5,0.5]}"#);
    }

    #[test]
    fn label_indicator() {
        let d = LabelIndicator::new(vec![1, 0], 3).unwrap();
        assert_eq!(d.one_hot(0), vec![0.0, 1.0, 0.0]);
        assert!(LabelIndicator::new(vec![3], 3).is_err());
    }
}
