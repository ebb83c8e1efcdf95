//! Corpus-level reports over a trained state.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::eval::smoothed_pmi;
use crate::model::ModelState;

pub const DEFAULT_BUCKET_MONTHS: u32 = 18;
pub const DEFAULT_TOP_M: usize = 3;
pub const TOP_WORDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: u64,
}

/// Count of each (posterior-mode or clamped) source-type, descending, ties
/// in label order. Labels without sources are omitted.
pub fn source_type_counts(state: &ModelState, labels: &[String]) -> Vec<LabelCount> {
    let mut counts = vec![0u64; labels.len()];
    for s in state.source_type_modes() {
        counts[s] += 1;
    }
    let mut rows: Vec<(usize, u64)> = counts.into_iter().enumerate().filter(|(_, c)| *c > 0).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    rows.into_iter()
        .map(|(s, count)| LabelCount {
            label: labels[s].clone(),
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub bucket_start: NaiveDate,
    pub label: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub rows: Vec<ShareRow>,
    /// Documents without a timestamp.
    pub excluded_documents: usize,
    /// Buckets inside the covered range that hold no sources.
    pub empty_buckets: Vec<NaiveDate>,
}

fn month_index(date: NaiveDate) -> i64 {
    date.year() as i64 * 12 + date.month0() as i64
}

fn month_start(index: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(index.div_euclid(12) as i32, index.rem_euclid(12) as u32 + 1, 1).expect("valid month")
}

/// Per-bucket share of each selected label among all sources in the bucket.
///
/// Buckets span `bucket_months` calendar months starting at the first of
/// the month of the earliest dated document. An empty `selected` reports
/// every label.
pub fn counts_over_time(
    state: &ModelState,
    documents: &[Document],
    labels: &[String],
    bucket_months: u32,
    selected: &[usize],
) -> Result<TimeSeries> {
    if bucket_months == 0 {
        return Err(Error::InvalidArgument("bucket_months must be at least 1".into()));
    }
    let modes = state.source_type_modes();
    let total_sources: usize = documents.iter().map(|d| d.sources.len()).sum();
    if total_sources != modes.len() {
        return Err(Error::ShapeMismatch(format!(
            "corpus has {total_sources} sources but the state has {}",
            modes.len()
        )));
    }
    if let Some(&s) = selected.iter().find(|&&s| s >= labels.len()) {
        return Err(Error::LabelOutOfRange { index: s, size: labels.len() });
    }
    let selected: Vec<usize> = if selected.is_empty() { (0..labels.len()).collect() } else { selected.to_vec() };
    let first = documents.iter().filter_map(|d| d.timestamp).map(month_index).min();
    let mut buckets: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
    let mut excluded = 0;
    let mut offset = 0;
    for doc in documents {
        let n = doc.sources.len();
        let types = &modes[offset..offset + n];
        offset += n;
        let (Some(date), Some(first)) = (doc.timestamp, first) else {
            excluded += 1;
            continue;
        };
        let bucket = (month_index(date) - first) / bucket_months as i64;
        let counts = buckets.entry(bucket).or_insert_with(|| vec![0; labels.len()]);
        for &s in types {
            counts[s] += 1;
        }
    }
    let mut rows = Vec::new();
    let mut empty = Vec::new();
    if let (Some(first), Some(&last)) = (first, buckets.keys().next_back()) {
        for b in 0..=last {
            let start = month_start(first + b * bucket_months as i64);
            let counts = buckets.get(&b);
            let total: u64 = counts.map_or(0, |c| c.iter().sum());
            let Some(counts) = counts.filter(|_| total > 0) else {
                empty.push(start);
                continue;
            };
            for &s in &selected {
                rows.push(ShareRow {
                    bucket_start: start,
                    label: labels[s].clone(),
                    share: counts[s] as f64 / total as f64,
                });
            }
        }
    }
    Ok(TimeSeries {
        rows,
        excluded_documents: excluded,
        empty_buckets: empty,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTopic {
    pub topic: usize,
    pub pmi: f64,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTypeTopics {
    pub label: String,
    pub topics: Vec<RankedTopic>,
}

/// Indices of `scores` by descending score, ties to the lower index.
fn rank(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

/// The `n` most probable words of topic `k` under the smoothed estimate
/// `(n_wk + H_w) / (n_k + V H_w)`, which orders words by `n_wk`.
pub fn top_words(state: &ModelState, vocabulary: &[String], k: usize, n: usize) -> Vec<String> {
    let counts = &state.counts;
    let scores: Vec<f64> = (0..vocabulary.len())
        .map(|w| counts.word_by_topic(w, k) as f64)
        .collect();
    rank(&scores).into_iter().take(n).map(|w| vocabulary[w].clone()).collect()
}

/// For each source-type, the `m` topics with the highest smoothed PMI
/// against it in the source-word topic table.
pub fn top_topics_per_source_type(
    state: &ModelState,
    vocabulary: &[String],
    labels: &[String],
    m: usize,
) -> Vec<SourceTypeTopics> {
    let (s_count, k_count) = (state.num_source_types(), state.num_topics());
    let pmi = smoothed_pmi(&state.counts.topic_by_src, s_count, k_count);
    (0..s_count)
        .map(|s| {
            let row = &pmi[s * k_count..(s + 1) * k_count];
            SourceTypeTopics {
                label: labels[s].clone(),
                topics: rank(row)
                    .into_iter()
                    .take(m)
                    .map(|k| RankedTopic {
                        topic: k,
                        pmi: row[k],
                        words: top_words(state, vocabulary, k, TOP_WORDS),
                    })
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLabel {
    pub label: String,
    pub pmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTypeSources {
    pub doc_type: usize,
    pub documents: u32,
    pub source_types: Vec<RankedLabel>,
}

/// For each document-type, the `m` source-types with the highest smoothed
/// PMI against it in the document-type by source-type table.
pub fn doc_type_source_type_table(state: &ModelState, labels: &[String], m: usize) -> Vec<DocTypeSources> {
    let (t_count, s_count) = (state.num_doc_types(), state.num_source_types());
    let pmi = smoothed_pmi(&state.counts.src_by_doc, t_count, s_count);
    (0..t_count)
        .map(|t| {
            let row = &pmi[t * s_count..(t + 1) * s_count];
            DocTypeSources {
                doc_type: t,
                documents: state.counts.doc_type[t],
                source_types: rank(row)
                    .into_iter()
                    .take(m)
                    .map(|s| RankedLabel {
                        label: labels[s].clone(),
                        pmi: row[s],
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Everything written by [`write_reports`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reports {
    pub source_type_counts: Vec<LabelCount>,
    pub counts_over_time: TimeSeries,
    pub topics_by_source_type: Vec<SourceTypeTopics>,
    pub doc_to_source: Vec<DocTypeSources>,
}

/// Parameters and provenance recorded next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub state_sha256: String,
    pub vocabulary_sha256: String,
    pub documents: usize,
    pub sources: usize,
    pub sweeps: u64,
    pub posterior_samples: u64,
    pub bucket_months: u32,
    pub top_m: usize,
    pub selected_labels: Vec<String>,
    pub excluded_documents: usize,
    pub empty_buckets: Vec<NaiveDate>,
    pub files: Vec<String>,
}

pub const REPORT_FILES: [&str; 4] = [
    "source_type_counts.csv",
    "counts_over_time.csv",
    "topics_by_source_type.csv",
    "doc_to_source.csv",
];

pub const MANIFEST_FILE: &str = "manifest.json";

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    };
    let mut writer = csv::Writer::from_path(path).map_err(to_err)?;
    writer.write_record(header).map_err(to_err)?;
    for row in rows {
        writer.write_record(&row).map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes the four CSV reports and the manifest into `dir`.
pub fn write_reports(dir: impl AsRef<Path>, reports: &Reports, manifest: &Manifest) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(
        &dir.join(REPORT_FILES[0]),
        &["label", "count"],
        reports
            .source_type_counts
            .iter()
            .map(|r| vec![r.label.clone(), r.count.to_string()]),
    )?;
    write_csv(
        &dir.join(REPORT_FILES[1]),
        &["bucket_start", "label", "share"],
        reports
            .counts_over_time
            .rows
            .iter()
            .map(|r| vec![r.bucket_start.to_string(), r.label.clone(), r.share.to_string()]),
    )?;
    write_csv(
        &dir.join(REPORT_FILES[2]),
        &["label", "rank", "topic", "pmi", "top_words"],
        reports.topics_by_source_type.iter().flat_map(|s| {
            s.topics.iter().enumerate().map(move |(i, t)| {
                vec![
                    s.label.clone(),
                    (i + 1).to_string(),
                    t.topic.to_string(),
                    t.pmi.to_string(),
                    t.words.join(" "),
                ]
            })
        }),
    )?;
    write_csv(
        &dir.join(REPORT_FILES[3]),
        &["doc_type", "documents", "rank", "label", "pmi"],
        reports.doc_to_source.iter().flat_map(|d| {
            d.source_types.iter().enumerate().map(move |(i, s)| {
                vec![
                    d.doc_type.to_string(),
                    d.documents.to_string(),
                    (i + 1).to_string(),
                    s.label.clone(),
                    s.pmi.to_string(),
                ]
            })
        }),
    )?;
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
