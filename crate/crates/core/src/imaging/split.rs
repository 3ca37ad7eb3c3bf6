use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledImageSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

/// Seeded train/test assignment. Id lists follow dataset item order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_per_class: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl SplitSpec {
    pub fn partition_of(&self, id: &str) -> Option<Partition> {
        if self.train.iter().any(|t| t == id) {
            Some(Partition::Train)
        } else if self.test.iter().any(|t| t == id) {
            Some(Partition::Test)
        } else {
            None
        }
    }

    pub fn train_set(&self) -> BTreeSet<&str> {
        self.train.iter().map(String::as_str).collect()
    }
}

/// Picks `min(train_per_class, size - 1)` training images per class.
pub fn make_split(set: &LabeledImageSet, train_per_class: usize, seed: u64) -> Result<SplitSpec> {
    if train_per_class < 1 {
        return Err(Error::Parameter("train_per_class must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; set.items().len()];
    for class in 0..set.num_classes() {
        let mut members: Vec<usize> = set
            .items()
            .iter()
            .enumerate()
            .filter(|(_, item)| item.class == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(Error::Dataset(format!(
                "class {} has {} images, need at least 2",
                set.class_names()[class],
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let take = train_per_class.min(members.len() - 1);
        for &i in &members[..take] {
            chosen[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (item, is_train) in set.items().iter().zip(chosen) {
        if is_train {
            train.push(item.id.clone());
        } else {
            test.push(item.id.clone());
        }
    }
    Ok(SplitSpec {
        seed,
        train_per_class,
        train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{GrayImage, LabeledImage};

    fn toy(sizes: &[usize]) -> LabeledImageSet {
        let img = GrayImage::from_fn(16, 16, |_, _| 0).unwrap();
        let mut items = Vec::new();
        for (class, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                items.push(LabeledImage {
                    id: format!("c{class}/{i}"),
                    class,
                    image: img.clone(),
                });
            }
        }
        let names = (0..sizes.len()).map(|c| format!("c{c}")).collect();
        LabeledImageSet::new(items, names).unwrap()
    }

    #[test]
    fn cardinality_and_reproducibility() {
        let set = toy(&[5, 4]);
        let a = make_split(&set, 3, 42).unwrap();
        let b = make_split(&set, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.iter().filter(|id| id.starts_with("c0/")).count(), 3);
        assert_eq!(a.test.iter().filter(|id| id.starts_with("c0/")).count(), 2);
    }

    #[test]
    fn all_but_one_cap() {
        let set = toy(&[2, 3]);
        let s = make_split(&set, 100, 1).unwrap();
        assert_eq!(s.train.iter().filter(|id| id.starts_with("c0/")).count(), 1);
        assert_eq!(s.test.iter().filter(|id| id.starts_with("c0/")).count(), 1);
        assert_eq!(s.test.iter().filter(|id| id.starts_with("c1/")).count(), 1);
    }

    #[test]
    fn zero_train_per_class_rejected() {
        assert!(matches!(make_split(&toy(&[3, 3]), 0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn split_is_a_partition() {
        let set = toy(&[7, 9, 3]);
        for seed in 0..20 {
            let s = make_split(&set, 4, seed).unwrap();
            for item in set.items() {
                let hits = s.train.iter().chain(&s.test).filter(|id| **id == item.id).count();
                assert_eq!(hits, 1);
            }
            assert_eq!(s.train.len() + s.test.len(), set.items().len());
        }
    }

    #[test]
    fn json_shape() {
        let s = make_split(&toy(&[2, 2]), 1, 9).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v["seed"], 9);
        assert_eq!(v["train_per_class"], 1);
        assert_eq!(v["train"].as_array().unwrap().len(), 2);
    }
}
