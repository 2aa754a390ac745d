//! Least-squares fit of the coupling ratio to a target DIP/PIP trajectory.

use serde::Serialize;

use super::{coupling_value, AntiparallelogramLinkage, TrajectoryTable};
use crate::error::{Error, Result};
use crate::optimize::minimize_on_interval;

const K_MIN: f64 = 1e-6;
const K_MAX: f64 = 1.0 - 1e-6;
const GRID_CELLS: usize = 2000;

/// Result of [`synthesize_linkage`].
#[derive(Debug, Clone, Serialize)]
pub struct LinkageFit {
    #[serde(skip)]
    pub linkage: AntiparallelogramLinkage,
    pub k: f64,
    pub l1: f64,
    pub l2: f64,
    /// Root-mean-square DIP error over the samples (rad).
    pub rms: f64,
    /// `coupling(pip_i) - dip_i` per sample (rad).
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Chooses `k` in `(0, 1)` minimizing the summed squared DIP error; `l_sum`
/// fixes the scale as `l1 + l2`.
pub fn synthesize_linkage(target: &TrajectoryTable, l_sum: f64) -> Result<LinkageFit> {
    if target.is_empty() {
        return Err(Error::Empty("trajectory table"));
    }
    if !(l_sum > 0.0 && l_sum.is_finite()) {
        return Err(Error::validation("l_sum", format!("must be positive, got {l_sum}")));
    }
    let samples = target.samples();

    let objective = |k: f64| {
        let (mut f, mut g, mut h) = (0.0, 0.0, 0.0);
        for &(pip, dip) in samples {
            let t = (0.5 * pip).tan();
            let den = 1.0 + k * k * t * t;
            let r = coupling_value(k, pip) - dip;
            let dk = 2.0 * t / den;
            let dkk = -4.0 * k * t * t * t / (den * den);
            f += r * r;
            g += 2.0 * r * dk;
            h += 2.0 * (dk * dk + r * dkk);
        }
        (f, g, h)
    };

    let best = minimize_on_interval(objective, K_MIN, K_MAX, GRID_CELLS);
    let k = best.x;
    let linkage = AntiparallelogramLinkage::from_ratio(k, l_sum)?;
    let residuals: Vec<f64> = samples.iter().map(|&(pip, dip)| coupling_value(k, pip) - dip).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(LinkageFit { linkage, k, l1: linkage.l1(), l2: linkage.l2(), rms, residuals, iterations: best.iterations })
}
