#![allow(dead_code)]

use stm_core::corpus::{EncodedCorpus, EncodedDoc, Gamma};
use stm_core::model::{Hyperparameters, LatentState};

/// `-1` is background, `n >= 0` is source `n`.
pub fn gammas(raw: &[i64]) -> Vec<Gamma> {
    raw.iter()
        .map(|&g| if g < 0 { Gamma::Background } else { Gamma::Source(g as usize) })
        .collect()
}

/// D=2, V=3, sources 1 + 2, tokens 4 + 3.
pub fn tiny_corpus(clamps: [Option<u32>; 3]) -> EncodedCorpus {
    let a = EncodedDoc::new(vec![0, 1, 0, 2], gammas(&[0, 0, -1, -1]), vec![clamps[0]]).unwrap();
    let b = EncodedDoc::new(vec![2, 1, 2], gammas(&[0, -1, 1]), vec![clamps[1], clamps[2]]).unwrap();
    EncodedCorpus::new(vec![a, b], 3, 2).unwrap()
}

pub fn tiny_hyper() -> Hyperparameters {
    Hyperparameters::symmetric(2, 2, 2, 1.0, 0.1, 0.1, 0.01).unwrap()
}

fn lgamma(x: f64) -> f64 {
    // Lanczos (g=7, n=9); independent of the library's lgamma
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - lgamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn dirmult(counts: &[u32], alpha: &[f64]) -> f64 {
    let mass: f64 = alpha.iter().sum();
    let total: u32 = counts.iter().sum();
    let mut lp = lgamma(mass) - lgamma(mass + total as f64);
    for (c, a) in counts.iter().zip(alpha) {
        lp += lgamma(a + *c as f64) - lgamma(*a);
    }
    lp
}

/// Collapsed log joint recomputed by scanning assignments directly.
pub fn brute_log_joint(corpus: &EncodedCorpus, hyper: &Hyperparameters, latent: &LatentState) -> f64 {
    let (t_n, s_n, k_n, v_n) = (
        hyper.num_doc_types(),
        hyper.num_source_types(),
        hyper.num_topics(),
        corpus.vocab_size(),
    );
    let mut docs = vec![0u32; t_n];
    let mut srcs = vec![vec![0u32; s_n]; t_n];
    let mut bg = vec![vec![0u32; k_n]; t_n];
    let mut sw = vec![vec![0u32; k_n]; s_n];
    let mut words = vec![vec![0u32; v_n]; k_n];
    let (mut si, mut ti) = (0, 0);
    for (d, doc) in corpus.docs().iter().enumerate() {
        let t = latent.doc_type[d] as usize;
        docs[t] += 1;
        for n in 0..doc.num_sources() {
            srcs[t][latent.source_type[si + n] as usize] += 1;
        }
        for j in 0..doc.len() {
            let k = latent.word_topic[ti + j] as usize;
            words[k][doc.words()[j] as usize] += 1;
            match doc.gamma()[j] {
                Gamma::Background => bg[t][k] += 1,
                Gamma::Source(n) => sw[latent.source_type[si + n] as usize][k] += 1,
            }
        }
        si += doc.num_sources();
        ti += doc.len();
    }
    let mut lp = dirmult(&docs, &hyper.doc_type);
    for t in 0..t_n {
        lp += dirmult(&srcs[t], &hyper.source_type) + dirmult(&bg[t], &hyper.topic);
    }
    for row in &sw {
        lp += dirmult(row, &hyper.topic);
    }
    let beta = vec![hyper.word; v_n];
    for row in &words {
        lp += dirmult(row, &beta);
    }
    lp
}

/// As-printed conditional over document-types, counted from scratch.
pub fn brute_doc_type_as_printed(
    corpus: &EncodedCorpus,
    hyper: &Hyperparameters,
    latent: &LatentState,
    d: usize,
) -> Vec<f64> {
    let (t_n, s_n, k_n) = (hyper.num_doc_types(), hyper.num_source_types(), hyper.num_topics());
    let mut docs = vec![0f64; t_n];
    let mut srcs = vec![vec![0f64; s_n]; t_n];
    let mut bg = vec![vec![0f64; k_n]; t_n];
    let (mut si, mut ti) = (0, 0);
    let (mut my_src, mut my_bg) = (vec![], vec![]);
    for (e, doc) in corpus.docs().iter().enumerate() {
        let t = latent.doc_type[e] as usize;
        for n in 0..doc.num_sources() {
            let s = latent.source_type[si + n] as usize;
            if e == d {
                my_src.push(s);
            } else {
                srcs[t][s] += 1.0;
            }
        }
        for j in 0..doc.len() {
            if doc.gamma()[j] == Gamma::Background {
                let k = latent.word_topic[ti + j] as usize;
                if e == d {
                    my_bg.push(k);
                } else {
                    bg[t][k] += 1.0;
                }
            }
        }
        if e != d {
            docs[t] += 1.0;
        }
        si += doc.num_sources();
        ti += doc.len();
    }
    let s_mass: f64 = hyper.source_type.iter().sum();
    let k_mass: f64 = hyper.topic.iter().sum();
    let mut w: Vec<f64> = (0..t_n)
        .map(|t| {
            let mut p = hyper.doc_type[t] + docs[t];
            let src_total: f64 = srcs[t].iter().sum();
            for &s in &my_src {
                p *= (hyper.source_type[s] + srcs[t][s]) / (src_total + s_mass);
            }
            let bg_total: f64 = bg[t].iter().sum();
            for &k in &my_bg {
                p *= (hyper.topic[k] + bg[t][k]) / (bg_total + k_mass);
            }
            p
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// As-printed conditional over source-types for flat source `idx` in doc `d`.
pub fn brute_source_type_as_printed(
    corpus: &EncodedCorpus,
    hyper: &Hyperparameters,
    latent: &LatentState,
    d: usize,
    n: usize,
) -> Vec<f64> {
    let (s_n, k_n) = (hyper.num_source_types(), hyper.num_topics());
    let td = latent.doc_type[d] as usize;
    let mut srcs_in_td = vec![0f64; s_n];
    let mut sw = vec![vec![0f64; k_n]; s_n];
    let mut mine = vec![];
    let (mut si, mut ti) = (0, 0);
    for (e, doc) in corpus.docs().iter().enumerate() {
        for m in 0..doc.num_sources() {
            let is_me = e == d && m == n;
            if !is_me && latent.doc_type[e] as usize == td {
                srcs_in_td[latent.source_type[si + m] as usize] += 1.0;
            }
        }
        for j in 0..doc.len() {
            if let Gamma::Source(m) = doc.gamma()[j] {
                let k = latent.word_topic[ti + j] as usize;
                if e == d && m == n {
                    mine.push(k);
                } else {
                    sw[latent.source_type[si + m] as usize][k] += 1.0;
                }
            }
        }
        si += doc.num_sources();
        ti += doc.len();
    }
    let k_mass: f64 = hyper.topic.iter().sum();
    let mut w: Vec<f64> = (0..s_n)
        .map(|s| {
            let mut p = hyper.source_type[s] + srcs_in_td[s];
            let total: f64 = sw[s].iter().sum();
            for &k in &mine {
                p *= (hyper.topic[k] + sw[s][k]) / (total + k_mass);
            }
            p
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// Normalizes `exp(log_joint)` over the values of one variable.
pub fn joint_ratio_conditional(
    corpus: &EncodedCorpus,
    hyper: &Hyperparameters,
    latent: &LatentState,
    arity: usize,
    set: impl Fn(&mut LatentState, u32),
) -> Vec<f64> {
    let lps: Vec<f64> = (0..arity)
        .map(|v| {
            let mut l = latent.clone();
            set(&mut l, v as u32);
            brute_log_joint(corpus, hyper, &l)
        })
        .collect();
    let max = lps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = lps.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// Outcome of running extraction over the hand-annotated parsed fixture.
pub struct ExtractionCheck {
    pub documents: usize,
    pub kept: usize,
    pub mismatches: Vec<String>,
}

fn expand_runs(runs: &serde_json::Value) -> Vec<Gamma> {
    let mut out = Vec::new();
    for run in runs.as_array().unwrap() {
        let g = run[0].as_i64().unwrap();
        let k = run[1].as_u64().unwrap() as usize;
        out.extend(gammas(&vec![g; k]));
    }
    out
}

pub fn check_extraction_fixture() -> ExtractionCheck {
    use stm_core::corpus::io::{parse_jsonl, ParsedDocument};
    use stm_core::corpus::{filter_documents, SpeakingVerbs, Stopwords};

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/extraction");
    let parsed_text = std::fs::read_to_string(format!("{dir}/parsed.jsonl")).unwrap();
    let parsed: Vec<ParsedDocument> = parse_jsonl(&parsed_text, "parsed.jsonl").unwrap();
    let expected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{dir}/expected.json")).unwrap()).unwrap();

    let verbs = SpeakingVerbs::default();
    let stopwords = Stopwords::default();
    let extracted: Vec<_> = parsed.iter().map(|p| p.extract(&verbs, &stopwords).unwrap()).collect();
    let all_ids: Vec<String> = extracted.iter().map(|d| d.doc_id.clone()).collect();
    let (kept, _) = filter_documents(extracted);

    let mut mismatches = Vec::new();
    let dropped: Vec<&str> = expected["dropped"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let actual_dropped: Vec<&str> = all_ids
        .iter()
        .map(String::as_str)
        .filter(|id| !kept.iter().any(|d| d.doc_id == *id))
        .collect();
    if actual_dropped != dropped {
        mismatches.push(format!("dropped {actual_dropped:?}, expected {dropped:?}"));
    }

    let docs = expected["documents"].as_array().unwrap();
    if docs.len() != kept.len() {
        mismatches.push(format!("{} documents kept, expected {}", kept.len(), docs.len()));
    }
    for want in docs {
        let id = want["doc_id"].as_str().unwrap();
        let Some(doc) = kept.iter().find(|d| d.doc_id == id) else {
            mismatches.push(format!("{id}: missing"));
            continue;
        };
        let want_sources = want["sources"].as_array().unwrap();
        let got: Vec<serde_json::Value> = doc
            .sources
            .iter()
            .map(|s| {
                serde_json::json!({
                    "canonical_name": s.canonical_name,
                    "chain_id": s.chain_id,
                    "sentence_indices": s.sentence_indices,
                    "gold_label": s.gold_label,
                    "clamped": s.clamped,
                })
            })
            .collect();
        if &got != want_sources {
            mismatches.push(format!("{id}: sources {got:?}, expected {want_sources:?}"));
        }
        let want_gamma = expand_runs(&want["gamma_runs"]);
        if doc.gamma != want_gamma {
            mismatches.push(format!("{id}: gamma {:?}, expected {want_gamma:?}", doc.gamma));
        }
    }
    ExtractionCheck {
        documents: parsed.len(),
        kept: kept.len(),
        mismatches,
    }
}
