use rand::Rng;
use stm_core::model::{log_joint, Hyperparameters, LatentState, ModelState, SamplerVariant};
use stm_core::ontology::make_default_label_space;
use stm_core::par::Execution;
use stm_core::rng::stream_rng;
use stm_core::synth::*;

#[test]
fn doc_type_frequencies_follow_the_prior() {
    let hyper = Hyperparameters::with_defaults(4, 2, 2).unwrap();
    let options = SynthOptions {
        vocab_size: 5,
        sources_per_doc: CountDistribution::Fixed { value: 1 },
        words_per_doc: CountDistribution::Fixed { value: 1 },
        ..SynthOptions::default()
    };
    let params = sample_parameters(&hyper, &options, 17, 1.0).unwrap();
    let labels = make_default_label_space().truncated(2).unwrap();
    let n = 10_000;
    let synth = generate_corpus(&params, &labels, n, 23, Execution::default()).unwrap();
    let mut hits = [0usize; 4];
    for r in &synth.truth {
        hits[r.doc_type] += 1;
    }
    for (t, &p) in params.p_t.iter().enumerate() {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let freq = hits[t] as f64 / n as f64;
        assert!((freq - p).abs() <= 3.0 * se + 1e-12, "type {t}: {freq} vs {p}");
    }
}

#[test]
fn labeled_share_at_news_scale() {
    // 125,000 sources with 0.8% labeled
    let hyper = Hyperparameters::with_defaults(2, 3, 2).unwrap();
    let options = SynthOptions {
        vocab_size: 4,
        sources_per_doc: CountDistribution::Fixed { value: 5 },
        words_per_doc: CountDistribution::Fixed { value: 1 },
        ..SynthOptions::default()
    };
    let params = sample_parameters(&hyper, &options, 1, 1.0).unwrap();
    let labels = make_default_label_space().truncated(3).unwrap();
    let synth = generate_corpus(&params, &labels, 25_000, 2, Execution::default()).unwrap();
    assert_eq!(synth.corpus.num_sources(), 125_000);
    let clamped = clamp_fraction(&synth.corpus, &synth.truth, 0.008, 3).unwrap();
    let n = clamped.documents.iter().flat_map(|d| &d.sources).filter(|s| s.clamped).count();
    assert_eq!(n, 1_000);
}

#[test]
fn true_latents_beat_random_latents() {
    let hyper = Hyperparameters::with_defaults(3, 4, 5).unwrap();
    let options = SynthOptions {
        vocab_size: 50,
        sources_per_doc: CountDistribution::Poisson { mean: 2.0, offset: 1 },
        words_per_doc: CountDistribution::Poisson { mean: 30.0, offset: 1 },
        ..SynthOptions::default()
    };
    let labels = make_default_label_space().truncated(4).unwrap();
    let mut wins = 0;
    for seed in 0..100u64 {
        let params = sample_parameters(&hyper, &options, seed, 2.0).unwrap();
        let synth = generate_corpus(&params, &labels, 20, seed, Execution::Sequential).unwrap();
        let encoded = synth.corpus.encode().unwrap();
        let truth = ModelState::from_latent(&encoded, &hyper, synth.latent.clone(), seed, 0, SamplerVariant::AsPrinted).unwrap();
        let mut rng = stream_rng(seed, 99);
        let random = LatentState {
            doc_type: synth.latent.doc_type.iter().map(|_| rng.random_range(0..3)).collect(),
            source_type: synth.latent.source_type.iter().map(|_| rng.random_range(0..4)).collect(),
            word_topic: synth.latent.word_topic.iter().map(|_| rng.random_range(0..5)).collect(),
            clamped: synth.latent.clamped.clone(),
        };
        let random = ModelState::from_latent(&encoded, &hyper, random, seed, 0, SamplerVariant::AsPrinted).unwrap();
        if log_joint(&truth) > log_joint(&random) {
            wins += 1;
        }
    }
    assert!(wins >= 99, "{wins}/100");
}

#[test]
fn truth_file_round_trip() {
    let hyper = Hyperparameters::with_defaults(2, 2, 3).unwrap();
    let options = SynthOptions {
        vocab_size: 20,
        ..SynthOptions::default()
    };
    let params = sample_parameters(&hyper, &options, 4, 3.0).unwrap();
    let labels = make_default_label_space().truncated(2).unwrap();
    let synth = generate_corpus(&params, &labels, 12, 5, Execution::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("truth.jsonl");
    write_truth(&path, &synth.truth).unwrap();
    assert_eq!(read_truth(&path).unwrap(), synth.truth);
    let ids: Vec<String> = synth.corpus.documents.iter().map(|d| d.doc_id.clone()).collect();
    let per_doc: Vec<usize> = synth.corpus.documents.iter().map(|d| d.sources.len()).collect();
    let (types, sources) = align_truth(&ids, &per_doc, &synth.truth, &labels).unwrap();
    assert_eq!(types, synth.latent.doc_type.iter().map(|&t| t as usize).collect::<Vec<_>>());
    assert_eq!(sources, synth.latent.source_type.iter().map(|&s| s as usize).collect::<Vec<_>>());
}
