#![allow(dead_code)]

use handtwin_core::linkage::AntiparallelogramLinkage;
use handtwin_core::model::{FingerName, HandDescription, ACTUATED_COUNT};
use handtwin_core::HandModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in-limit actuated vector.
pub fn random_actuated(model: &HandModel, rng: &mut impl Rng) -> [f64; ACTUATED_COUNT] {
    std::array::from_fn(|c| {
        let [lo, hi] = model.channel_joint(c).limits;
        rng.random_range(lo..=hi)
    })
}

/// Default model with one finger's coupling ratio replaced.
pub fn model_with_k(finger: FingerName, k: f64) -> HandModel {
    let mut desc: HandDescription = HandModel::default_model().description().clone();
    let f = desc.fingers.iter_mut().find(|f| f.name == finger).unwrap();
    f.coupling = Some(AntiparallelogramLinkage::from_ratio(k, 0.04).unwrap());
    HandModel::new(desc).unwrap()
}
