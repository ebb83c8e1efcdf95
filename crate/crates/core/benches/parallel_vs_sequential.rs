use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stm_core::corpus::io::{extract_all, ParsedDocument, ParsedSentence, ParsedToken};
use stm_core::corpus::{SpeakingVerbs, Stopwords};
use stm_core::model::{train_chains, Hyperparameters, SamplerVariant, Schedule};
use stm_core::ontology::make_default_label_space;
use stm_core::par::Execution;
use stm_core::synth::{generate_corpus, sample_parameters, SynthOptions, TrueParameters};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn parameters() -> TrueParameters {
    let hyper = Hyperparameters::with_defaults(5, 8, 10).unwrap();
    let options = SynthOptions {
        vocab_size: 500,
        ..SynthOptions::default()
    };
    sample_parameters(&hyper, &options, 1, 3.0).unwrap()
}

fn generation(c: &mut Criterion) {
    let params = parameters();
    let labels = make_default_label_space().truncated(8).unwrap();
    let mut group = c.benchmark_group("generate_500_docs");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_corpus(&params, &labels, 500, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn chains(c: &mut Criterion) {
    let params = parameters();
    let labels = make_default_label_space().truncated(8).unwrap();
    let corpus = generate_corpus(&params, &labels, 100, 7, Execution::Sequential)
        .unwrap()
        .corpus
        .encode()
        .unwrap();
    let hyper = Hyperparameters::with_defaults(5, 8, 10).unwrap();
    let schedule = Schedule::new(20, 10, 2).unwrap();
    let mut group = c.benchmark_group("train_4_chains");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| train_chains(&corpus, &hyper, 3, 4, schedule, SamplerVariant::default(), exec).unwrap())
        });
    }
    group.finish();
}

fn token(surface: &str, head: usize, rel: &str, ner: &str) -> ParsedToken {
    ParsedToken {
        surface: surface.to_string(),
        lemma: None,
        dep_head: head,
        dep_rel: rel.to_string(),
        ner_tag: ner.to_string(),
        is_stopword: None,
    }
}

fn parsed_documents(n: usize) -> Vec<ParsedDocument> {
    (0..n)
        .map(|d| {
            let sentences = (0..30)
                .map(|s| {
                    let mut tokens = vec![token("Lee", 2, "nsubj", "PERSON"), token("say", 0, "root", "O")];
                    tokens.extend((0..18).map(|i| token(&format!("w{}", (d + s + i) % 97), 2, "dep", "O")));
                    if s % 3 == 0 {
                        tokens[0].ner_tag = "O".to_string();
                    }
                    ParsedSentence { tokens }
                })
                .collect();
            ParsedDocument {
                doc_id: format!("p{d}"),
                timestamp: None,
                sentences,
                coref_chains: vec![],
                gold_sources: Default::default(),
                heldout_sources: Default::default(),
                gold_doc_type: None,
            }
        })
        .collect()
}

fn extraction(c: &mut Criterion) {
    let parsed = parsed_documents(200);
    let verbs = SpeakingVerbs::default();
    let stopwords = Stopwords::default();
    let mut group = c.benchmark_group("extract_200_docs");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| extract_all(&parsed, &verbs, &stopwords, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, generation, chains, extraction);
criterion_main!(benches);
