use libm::lgamma;

use crate::model::{CountTables, Hyperparameters, ModelState};

/// Log Dirichlet-multinomial probability of one count sequence.
fn log_dirmult(counts: impl Iterator<Item = u32>, prior: impl Fn(usize) -> f64, mass: f64) -> f64 {
    let mut total = 0u64;
    let mut acc = 0.0;
    for (i, c) in counts.enumerate() {
        if c > 0 {
            let a = prior(i);
            acc += lgamma(a + c as f64) - lgamma(a);
            total += c as u64;
        }
    }
    if total == 0 {
        return 0.0;
    }
    acc + lgamma(mass) - lgamma(mass + total as f64)
}

/// Collapsed log joint of words and latent assignments given the switch.
pub fn log_joint_counts(counts: &CountTables, hyper: &Hyperparameters) -> f64 {
    let (t_n, s_n, k_n, v_n) = (
        counts.num_doc_types,
        counts.num_source_types,
        counts.num_topics,
        counts.vocab_size,
    );
    let t_mass: f64 = hyper.doc_type.iter().sum();
    let s_mass: f64 = hyper.source_type.iter().sum();
    let k_mass: f64 = hyper.topic.iter().sum();
    let beta = hyper.word;

    let mut lp = log_dirmult(counts.doc_type.iter().copied(), |t| hyper.doc_type[t], t_mass);
    for t in 0..t_n {
        lp += log_dirmult(
            counts.src_by_doc[t * s_n..(t + 1) * s_n].iter().copied(),
            |s| hyper.source_type[s],
            s_mass,
        );
        lp += log_dirmult(
            counts.topic_by_doc[t * k_n..(t + 1) * k_n].iter().copied(),
            |k| hyper.topic[k],
            k_mass,
        );
    }
    for s in 0..s_n {
        lp += log_dirmult(
            counts.topic_by_src[s * k_n..(s + 1) * k_n].iter().copied(),
            |k| hyper.topic[k],
            k_mass,
        );
    }
    for k in 0..k_n {
        lp += log_dirmult(
            (0..v_n).map(|w| counts.word_by_topic[w * k_n + k]),
            |_| beta,
            v_n as f64 * beta,
        );
    }
    lp
}

/// Collapsed log joint at the state's current assignments.
pub fn log_joint(state: &ModelState) -> f64 {
    log_joint_counts(&state.counts, &state.hyper)
}
