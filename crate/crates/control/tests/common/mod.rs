#![allow(dead_code)]

use handtwin_core::model::{HandModel, ACTUATED_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_actuated(model: &HandModel, rng: &mut impl Rng) -> [f64; ACTUATED_COUNT] {
    std::array::from_fn(|c| {
        let [lo, hi] = model.channel_joint(c).limits;
        rng.random_range(lo..=hi)
    })
}
