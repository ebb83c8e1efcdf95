use crate::corpus::EncodedCorpus;
use crate::error::{Error, Result};
use crate::model::{init_chain, log_joint, sweep, Hyperparameters, ModelState, SamplerVariant};
use crate::par::Execution;

pub const DEFAULT_SWEEPS: u64 = 2000;
pub const DEFAULT_BURN_IN: u64 = 500;
pub const DEFAULT_LAG: u64 = 10;

/// Sweep budget and posterior sampling cadence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub num_sweeps: u64,
    pub burn_in: u64,
    pub lag: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            num_sweeps: DEFAULT_SWEEPS,
            burn_in: DEFAULT_BURN_IN,
            lag: DEFAULT_LAG,
        }
    }
}

impl Schedule {
    pub fn new(num_sweeps: u64, burn_in: u64, lag: u64) -> Result<Self> {
        let schedule = Self {
            num_sweeps,
            burn_in,
            lag,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sweeps <= self.burn_in {
            return Err(Error::InvalidSchedule(format!(
                "num_sweeps ({}) must exceed burn_in ({})",
                self.num_sweeps, self.burn_in
            )));
        }
        if self.lag == 0 {
            return Err(Error::InvalidSchedule("sample lag must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether the state after completed sweep `sweep` (1-based) is kept.
    pub fn collects(&self, sweep: u64) -> bool {
        sweep > self.burn_in && (sweep - self.burn_in).is_multiple_of(self.lag)
    }
}

/// Fresh chain 0 trained for the whole schedule.
pub fn train(
    corpus: &EncodedCorpus,
    hyper: &Hyperparameters,
    seed: u64,
    schedule: Schedule,
    variant: SamplerVariant,
) -> Result<ModelState> {
    train_chain(corpus, hyper, seed, 0, schedule, variant)
}

pub fn train_chain(
    corpus: &EncodedCorpus,
    hyper: &Hyperparameters,
    seed: u64,
    chain: u64,
    schedule: Schedule,
    variant: SamplerVariant,
) -> Result<ModelState> {
    schedule.validate()?;
    let mut state = init_chain(corpus, hyper, seed, chain, variant)?;
    continue_training(&mut state, corpus, schedule)?;
    Ok(state)
}

/// Runs sweeps until `state.sweep == schedule.num_sweeps`, recording the
/// log joint after each sweep and accumulating posterior visits after
/// burn-in. Resuming a snapshot through here reproduces an uninterrupted
/// run exactly.
pub fn continue_training(state: &mut ModelState, corpus: &EncodedCorpus, schedule: Schedule) -> Result<()> {
    schedule.validate()?;
    if corpus.num_docs() == 0 {
        return Err(Error::EmptyCorpus);
    }
    while state.sweep < schedule.num_sweeps {
        sweep(state, corpus)?;
        state.trace.push(log_joint(state));
        if schedule.collects(state.sweep) {
            state.accumulate_posterior();
        }
    }
    Ok(())
}

/// Independent chains with distinct streams of `seed`; returns the chain
/// whose final log joint is highest (lowest chain id on ties) and every
/// chain's final log joint.
pub fn train_chains(
    corpus: &EncodedCorpus,
    hyper: &Hyperparameters,
    seed: u64,
    chains: u64,
    schedule: Schedule,
    variant: SamplerVariant,
    exec: Execution,
) -> Result<(ModelState, Vec<f64>)> {
    if chains == 0 {
        return Err(Error::InvalidArgument("at least one chain is required".into()));
    }
    let runs = exec.map((0..chains).collect(), |c| {
        train_chain(corpus, hyper, seed, c, schedule, variant)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = runs.iter().map(|s| s.trace.last().copied().unwrap_or(f64::NEG_INFINITY)).collect();
    let mut best = 0;
    for (i, f) in finals.iter().enumerate() {
        if *f > finals[best] {
            best = i;
        }
    }
    let state = runs.into_iter().nth(best).expect("chains > 0");
    Ok((state, finals))
}
