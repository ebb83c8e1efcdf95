//! Seed derivation.
//!
//! Every random draw descends from one user seed. Components get their own
//! ChaCha stream of that seed, so adding draws in one component never
//! perturbs another:
//!
//! | stream                    | consumer                                |
//! |---------------------------|-----------------------------------------|
//! | `PARAMETERS`              | synthetic parameter draws               |
//! | `DOC_BASE + d`            | synthetic document `d`                  |
//! | `CLAMP`                   | choice of clamped sources               |
//! | `SPLIT`                   | train/validation split                  |
//! | `CHAIN_BASE + c`          | Gibbs chain `c` (init and all sweeps)   |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StmRng = ChaCha8Rng;

pub const PARAMETERS: u64 = 1;
pub const CLAMP: u64 = 2;
pub const SPLIT: u64 = 3;
pub const CHAIN_BASE: u64 = 1 << 32;
pub const DOC_BASE: u64 = 1 << 40;

pub fn stream_rng(seed: u64, stream: u64) -> StmRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn chain_rng(seed: u64, chain: u64) -> StmRng {
    stream_rng(seed, CHAIN_BASE + chain)
}
