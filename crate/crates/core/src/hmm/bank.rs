use serde::{Deserialize, Serialize};

use crate::error::{dims_match, Error, Result};
use crate::reduce::kmeans_fit;

/// One training sequence fed to [`build_bank`].
#[derive(Debug, Clone, Copy)]
pub struct BankEntry<'a> {
    pub id: &'a str,
    pub class: usize,
    pub observations: &'a [Vec<f64>],
}

/// Per-(class, position) training vectors and their centroids.
///
/// Exemplars are stored flat: slot `j * n + t` owns exemplar indices
/// `offsets[slot]..offsets[slot + 1]`, each `dim` values long in `data`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBank {
    m: usize,
    n: usize,
    dim: usize,
    owners: Vec<String>,
    offsets: Vec<usize>,
    owner_of: Vec<usize>,
    data: Vec<f64>,
    /// `m * n * dim`, slot-major.
    centroids: Vec<f64>,
}

impl ReferenceBank {
    pub fn num_classes(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, class: usize, t: usize) -> &[f64] {
        let slot = class * self.n + t;
        &self.centroids[slot * self.dim..(slot + 1) * self.dim]
    }

    /// `(owner id, vector)` for every exemplar of `class` at position `t`.
    pub fn exemplars(&self, class: usize, t: usize) -> impl Iterator<Item = (&str, &[f64])> {
        let slot = class * self.n + t;
        (self.offsets[slot]..self.offsets[slot + 1]).map(move |e| {
            (
                self.owners[self.owner_of[e]].as_str(),
                &self.data[e * self.dim..(e + 1) * self.dim],
            )
        })
    }

    pub(crate) fn owner_index(&self, id: &str) -> Option<usize> {
        self.owners.iter().position(|o| o == id)
    }

    /// Smallest Euclidean distance from `x` to the class-`j` exemplars at `t`,
    /// skipping vectors owned by `exclude`.
    pub(crate) fn nearest_distance(&self, x: &[f64], class: usize, t: usize, exclude: Option<usize>) -> Option<f64> {
        let slot = class * self.n + t;
        let mut best: Option<f64> = None;
        for e in self.offsets[slot]..self.offsets[slot + 1] {
            if Some(self.owner_of[e]) == exclude {
                continue;
            }
            let v = &self.data[e * self.dim..(e + 1) * self.dim];
            let d2: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            best = Some(best.map_or(d2, |b| b.min(d2)));
        }
        best.map(f64::sqrt)
    }

    /// Checks internal consistency after deserialization.
    pub fn validate(&self) -> Result<()> {
        let slots = self.m * self.n;
        let bad = self.offsets.len() != slots + 1
            || self.offsets.windows(2).any(|w| w[1] <= w[0])
            || self.offsets.first() != Some(&0)
            || self.offsets.last() != Some(&self.owner_of.len())
            || self.data.len() != self.owner_of.len() * self.dim
            || self.centroids.len() != slots * self.dim
            || self.owner_of.iter().any(|&o| o >= self.owners.len())
            || !self.centroids.iter().all(|c| c.is_finite());
        if bad {
            return Err(Error::Format("inconsistent reference bank layout".into()));
        }
        Ok(())
    }
}

/// Groups training vectors by (class, position) and takes one-cluster
/// k-means centroids of every group.
pub fn build_bank(entries: &[BankEntry<'_>], m: usize) -> Result<ReferenceBank> {
    let first = entries
        .first()
        .ok_or_else(|| Error::Coverage("no training sequences".into()))?;
    let n = first.observations.len();
    if n == 0 {
        return Err(Error::Dimension("empty observation sequence".into()));
    }
    let dim = first.observations[0].len();
    let mut per_slot: Vec<Vec<(usize, &[f64])>> = vec![Vec::new(); m * n];
    let mut owners: Vec<String> = Vec::with_capacity(entries.len());
    for entry in entries {
        dims_match("sequence length", n, entry.observations.len())?;
        if entry.class >= m {
            return Err(Error::Coverage(format!(
                "sequence {} has class {} with only {m} classes",
                entry.id, entry.class
            )));
        }
        if owners.iter().any(|o| o == entry.id) {
            return Err(Error::Dataset(format!("duplicate sequence id {}", entry.id)));
        }
        let owner = owners.len();
        owners.push(entry.id.to_owned());
        for (t, obs) in entry.observations.iter().enumerate() {
            dims_match("observation", dim, obs.len())?;
            per_slot[entry.class * n + t].push((owner, obs.as_slice()));
        }
    }
    if let Some(missing) = (0..m).find(|&j| per_slot[j * n].is_empty()) {
        return Err(Error::Coverage(format!("class {missing} has no training sequences")));
    }

    let mut offsets = Vec::with_capacity(m * n + 1);
    let mut owner_of = Vec::new();
    let mut data = Vec::new();
    let mut centroids = Vec::with_capacity(m * n * dim);
    offsets.push(0);
    for slot in &per_slot {
        for &(owner, v) in slot {
            owner_of.push(owner);
            data.extend_from_slice(v);
        }
        offsets.push(owner_of.len());
        let samples: Vec<Vec<f64>> = slot.iter().map(|(_, v)| v.to_vec()).collect();
        let centroid = kmeans_fit(&samples, 1, 0)?;
        centroids.extend_from_slice(&centroid[0].point);
    }
    Ok(ReferenceBank {
        m,
        n,
        dim,
        owners,
        offsets,
        owner_of,
        data,
        centroids,
    })
}
