//! Scoring of inferred assignments against gold labels.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::LabelSpace;
use crate::rng::{stream_rng, SPLIT};

/// Maps every cluster in `0..num_clusters` to the label with the highest
/// add-one smoothed PMI against the labeled subset (`gold[i]` is `Some`).
///
/// For a fixed cluster the PMI order equals the order of
/// `n'(c, l) / n'(l)`, so ties are detected exactly in integers. Ties go to
/// the label with the larger smoothed joint count, then the lower index.
pub fn pmi_align(
    assignments: &[usize],
    gold: &[Option<usize>],
    num_clusters: usize,
    num_labels: usize,
) -> Result<Vec<usize>> {
    if assignments.len() != gold.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} assignments but {} gold entries",
            assignments.len(),
            gold.len()
        )));
    }
    if num_labels == 0 {
        return Err(Error::InvalidArgument("at least one label is required".into()));
    }
    let mut joint = vec![1u64; num_clusters * num_labels];
    let mut labeled = 0;
    for (&c, g) in assignments.iter().zip(gold) {
        if let Some(l) = *g {
            if c >= num_clusters {
                return Err(Error::LabelOutOfRange { index: c, size: num_clusters });
            }
            if l >= num_labels {
                return Err(Error::LabelOutOfRange { index: l, size: num_labels });
            }
            joint[c * num_labels + l] += 1;
            labeled += 1;
        }
    }
    if labeled == 0 {
        return Err(Error::EmptySubset);
    }
    if let Some(&c) = assignments.iter().find(|&&c| c >= num_clusters) {
        return Err(Error::LabelOutOfRange { index: c, size: num_clusters });
    }
    let label_totals: Vec<u64> = (0..num_labels)
        .map(|l| (0..num_clusters).map(|c| joint[c * num_labels + l]).sum())
        .collect();
    let mapping = (0..num_clusters)
        .map(|c| {
            let row = &joint[c * num_labels..(c + 1) * num_labels];
            let mut best = 0;
            for l in 1..num_labels {
                let lhs = row[l] as u128 * label_totals[best] as u128;
                let rhs = row[best] as u128 * label_totals[l] as u128;
                if lhs.cmp(&rhs).then(row[l].cmp(&row[best])) == Ordering::Greater {
                    best = l;
                }
            }
            best
        })
        .collect();
    Ok(mapping)
}

/// Smoothed PMI `log [p(c, l) / (p(c) p(l))]` of every (row, column) cell of a
/// count table, with one added to every joint count.
pub fn smoothed_pmi(counts: &[u32], rows: usize, cols: usize) -> Vec<f64> {
    let smoothed: Vec<f64> = counts.iter().map(|&c| c as f64 + 1.0).collect();
    let total: f64 = smoothed.iter().sum();
    let row_totals: Vec<f64> = (0..rows).map(|r| smoothed[r * cols..(r + 1) * cols].iter().sum()).collect();
    let col_totals: Vec<f64> = (0..cols).map(|c| (0..rows).map(|r| smoothed[r * cols + c]).sum()).collect();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push((smoothed[r * cols + c] * total / (row_totals[r] * col_totals[c])).ln());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl GroupScore {
    fn from_counts(n: usize, correct: usize) -> Self {
        Self {
            n,
            correct,
            accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        }
    }
}

/// Source-type accuracy with its affiliation and role decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub n: usize,
    pub correct: usize,
    /// Exact (affiliation and role) match rate.
    pub overall: f64,
    /// Affiliation-only match rate.
    pub affiliation: f64,
    /// Role-only match rate.
    pub role: f64,
    /// Exact match rate grouped by gold affiliation.
    pub per_affiliation: BTreeMap<String, GroupScore>,
    /// Exact match rate grouped by gold role.
    pub per_role: BTreeMap<String, GroupScore>,
}

/// Scores predicted label indices against gold on the items in `subset`.
pub fn accuracy(predicted: &[usize], gold: &[usize], subset: &[usize], labels: &LabelSpace) -> Result<Accuracy> {
    if predicted.len() != gold.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions but {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let lookup = |i: usize| {
        labels.get(i).ok_or(Error::LabelOutOfRange {
            index: i,
            size: labels.len(),
        })
    };
    let (mut exact, mut aff, mut role) = (0, 0, 0);
    let mut by_aff: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut by_role: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for &i in subset {
        let (Some(&p), Some(&g)) = (predicted.get(i), gold.get(i)) else {
            return Err(Error::InvalidArgument(format!("subset index {i} out of range")));
        };
        let (p, g) = (lookup(p)?, lookup(g)?);
        let hit = p.index == g.index;
        exact += hit as usize;
        aff += (p.affiliation == g.affiliation) as usize;
        role += (p.role == g.role) as usize;
        let e = by_aff.entry(g.affiliation.name().to_string()).or_default();
        e.0 += 1;
        e.1 += hit as usize;
        let e = by_role.entry(g.role.name().to_string()).or_default();
        e.0 += 1;
        e.1 += hit as usize;
    }
    let n = subset.len();
    let finish = |m: BTreeMap<String, (usize, usize)>| {
        m.into_iter()
            .map(|(k, (n, c))| (k, GroupScore::from_counts(n, c)))
            .collect()
    };
    Ok(Accuracy {
        n,
        correct: exact,
        overall: exact as f64 / n as f64,
        affiliation: aff as f64 / n as f64,
        role: role as f64 / n as f64,
        per_affiliation: finish(by_aff),
        per_role: finish(by_role),
    })
}

/// Fraction of positions where `predicted` equals `gold`.
pub fn match_rate(predicted: &[usize], gold: &[usize]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions but {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::EmptySubset);
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Splits items (with parallel gold labels) into train and validation sets.
///
/// `fraction` is the training share. The training size is
/// `round(fraction * n)`; per-label quotas take the floor of their share
/// and the remaining slots go to the largest remainders (lower label first
/// on ties). Members of each label are shuffled with the split stream.
/// Both outputs are sorted.
pub fn train_validation_split(
    items: &[usize],
    gold: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction {fraction} must lie in (0, 1)")));
    }
    if items.len() != gold.len() {
        return Err(Error::ShapeMismatch(format!("{} items but {} gold labels", items.len(), gold.len())));
    }
    let n = items.len();
    let target = (fraction * n as f64).round() as usize;
    if target == 0 || target == n {
        return Err(Error::DegenerateSplit(format!(
            "fraction {fraction} of {n} items leaves one side empty"
        )));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&item, &label) in items.iter().zip(gold) {
        groups.entry(label).or_default().push(item);
    }
    let mut quotas: Vec<(usize, usize, f64)> = groups
        .iter()
        .map(|(&label, members)| {
            let exact = fraction * members.len() as f64;
            (label, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then(quotas[a].0.cmp(&quotas[b].0)));
    for &i in order.iter().take(target.saturating_sub(assigned)) {
        quotas[i].1 += 1;
    }
    let mut rng = stream_rng(seed, SPLIT);
    let mut train = Vec::with_capacity(target);
    let mut validation = Vec::with_capacity(n - target);
    for (label, quota, _) in quotas {
        let mut members = groups.remove(&label).expect("group exists");
        members.shuffle(&mut rng);
        validation.extend_from_slice(&members[quota..]);
        members.truncate(quota);
        train.extend(members);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok((train, validation))
}

/// `matrix[gold][predicted]` counts over `subset`.
pub fn confusion_matrix(predicted: &[usize], gold: &[usize], subset: &[usize], num_labels: usize) -> Result<Vec<Vec<u64>>> {
    let mut matrix = vec![vec![0u64; num_labels]; num_labels];
    for &i in subset {
        let (Some(&p), Some(&g)) = (predicted.get(i), gold.get(i)) else {
            return Err(Error::InvalidArgument(format!("subset index {i} out of range")));
        };
        if p >= num_labels || g >= num_labels {
            return Err(Error::LabelOutOfRange {
                index: p.max(g),
                size: num_labels,
            });
        }
        matrix[g][p] += 1;
    }
    Ok(matrix)
}

/// Confusion matrix as CSV: one row per gold label, one column per prediction.
pub fn confusion_csv(matrix: &[Vec<u64>], labels: &LabelSpace) -> String {
    let names = labels.labels();
    let mut out = String::from("gold\\predicted");
    for name in &names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (name, row) in names.iter().zip(matrix) {
        out.push_str(name);
        for c in row {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_confusion_csv(path: impl AsRef<Path>, matrix: &[Vec<u64>], labels: &LabelSpace) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, confusion_csv(matrix, labels)).map_err(|e| Error::io(path, e))
}

/// Evaluation report written as the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Whether source clusters were mapped to labels by PMI alignment.
    pub aligned: bool,
    /// Number of sources that were clamped during training (excluded from scoring).
    pub clamped_sources: usize,
    pub source_type: Accuracy,
    /// PMI-aligned document-type accuracy, when true document-types are known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doc_type: Option<f64>,
}

pub fn write_metrics(path: impl AsRef<Path>, metrics: &Metrics) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, metrics)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}
