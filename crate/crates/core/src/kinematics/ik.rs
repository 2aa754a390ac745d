use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::chain::{finger_angles, finger_frames, jacobian_at};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{resolve_full_state, FingerName, HandModel, JointState, ACTUATED_COUNT};

/// Damping increases tried before an iteration is declared stalled.
const MAX_RETRIES: usize = 24;
/// Bounds on the adaptive damping (m).
/// Restarts away from the joint limits after a stall.
const MAX_ESCAPES: usize = 3;
/// Fraction of the joint range a restart moves a joint off its limit.
const ESCAPE_INSET: f64 = 0.25;
const MIN_DAMPING: f64 = 1e-9;
const MAX_DAMPING: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkOptions {
    /// Initial damping λ of `Δq = Jᵀ (J Jᵀ + λ² I)⁻¹ e` (m). It is halved
    /// after every accepted step and quadrupled after every rejected one.
    pub damping: f64,
    pub max_iters: usize,
    /// Position tolerance (m).
    pub tol: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self { damping: 0.05, max_iters: 200, tol: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkSolution {
    /// Best state found; the other fingers are untouched from the seed.
    pub state: JointState,
    pub converged: bool,
    /// Accepted update steps.
    pub iterations: usize,
    /// `|tip - target|` at `state` (m).
    pub residual: f64,
    /// Residual at the seed and after each accepted step or kept restart;
    /// non-increasing.
    pub history: Vec<f64>,
}

/// Moves the actuated joints of `finger` so its tip reaches `target`.
///
/// Each iterate is clamped into the joint limits and the passive joints are
/// re-derived from the clamped drivers, so every iterate is a feasible state.
/// Joints resting on a limit that the step would push further out are frozen
/// for that step. A step that does not reduce the residual is retried with
/// more damping. After a stall with joints on their limits the descent is
/// restarted with those joints moved inward, and the restart is kept only if
/// it ends closer to the target. The reported state is the best one found.
pub fn inverse_kinematics(
    model: &HandModel,
    finger: FingerName,
    target: Point3<f64>,
    seed: &JointState,
    opts: &IkOptions,
) -> Result<IkSolution> {
    if !target.coords.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("IK target"));
    }
    if !(opts.tol > 0.0) || !(opts.damping >= 0.0) {
        return Err(Error::validation("ik options", "tol must be positive and damping non-negative"));
    }

    let channels = model.finger_channels(finger);
    let (state, tip) = evaluate(model, finger, seed.actuated())?;
    let mut best = Descent { state, err: target - tip, residual: (target - tip).norm(), iterations: 0 };
    let mut history = vec![best.residual];
    descend(model, finger, &channels, target, opts, &mut best, &mut history)?;

    // A stall with joints on their limits is usually a corner of the joint
    // box. Restart from those joints pulled inward and keep any improvement.
    let mut escapes = 0;
    while best.residual > opts.tol && best.iterations < opts.max_iters && escapes < MAX_ESCAPES {
        escapes += 1;
        let mut q = *best.state.actuated();
        let mut moved = false;
        for &c in &channels {
            let j = model.channel_joint(c);
            let inset = ESCAPE_INSET * (j.max() - j.min());
            if q[c] <= j.min() {
                q[c] = j.min() + inset;
                moved = true;
            } else if q[c] >= j.max() {
                q[c] = j.max() - inset;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        let (state, tip) = evaluate(model, finger, &q)?;
        let mut trial =
            Descent { state, err: target - tip, residual: (target - tip).norm(), iterations: best.iterations };
        let mut scratch = Vec::new();
        descend(model, finger, &channels, target, opts, &mut trial, &mut scratch)?;
        if trial.residual < best.residual {
            history.push(trial.residual);
            best = trial;
        } else {
            break;
        }
    }

    Ok(IkSolution {
        converged: best.residual <= opts.tol,
        iterations: best.iterations,
        residual: best.residual,
        state: best.state,
        history,
    })
}

struct Descent {
    state: JointState,
    err: Vector3<f64>,
    residual: f64,
    iterations: usize,
}

/// Damped least squares from `cur` until the tolerance, the iteration budget
/// or a stall. Accepted residuals are appended to `history`.
fn descend(
    model: &HandModel,
    finger: FingerName,
    channels: &[usize],
    target: Point3<f64>,
    opts: &IkOptions,
    cur: &mut Descent,
    history: &mut Vec<f64>,
) -> Result<()> {
    let mut lambda = opts.damping.clamp(MIN_DAMPING, MAX_DAMPING);
    while cur.residual > opts.tol && cur.iterations < opts.max_iters {
        let q = *cur.state.actuated();
        let mut jac = jacobian_at(model, finger, cur.state.full());
        let grad = jac.transpose() * cur.err;
        for (i, &c) in channels.iter().enumerate() {
            let j = model.channel_joint(c);
            if (q[c] <= j.min() && grad[i] < 0.0) || (q[c] >= j.max() && grad[i] > 0.0) {
                jac.column_mut(i).fill(0.0);
            }
        }
        let jjt = &jac * jac.transpose();

        let mut accepted = None;
        for _ in 0..MAX_RETRIES {
            let Some(solve) = (jjt + Matrix3::identity() * (lambda * lambda)).cholesky() else {
                lambda = (lambda * 4.0).min(MAX_DAMPING);
                continue;
            };
            let dq = jac.transpose() * solve.solve(&cur.err);
            let mut trial = q;
            for (i, &c) in channels.iter().enumerate() {
                trial[c] += dq[i];
            }
            let (trial_state, trial_tip) = evaluate(model, finger, &trial)?;
            let trial_err = target - trial_tip;
            let trial_res = trial_err.norm();
            if trial_res < cur.residual {
                lambda = (lambda * 0.5).max(MIN_DAMPING);
                accepted = Some((trial_state, trial_err, trial_res));
                break;
            }
            if lambda >= MAX_DAMPING {
                break;
            }
            lambda = (lambda * 4.0).min(MAX_DAMPING);
        }
        let Some((state, err, residual)) = accepted else {
            break;
        };
        cur.state = state;
        cur.err = err;
        cur.residual = residual;
        cur.iterations += 1;
        history.push(residual);
    }
    Ok(())
}

fn evaluate(model: &HandModel, finger: FingerName, q: &[f64; ACTUATED_COUNT]) -> Result<(JointState, Point3<f64>)> {
    let state = resolve_full_state(model, q)?;
    let angles = finger_angles(model, finger, state.full());
    let tip = finger_frames(model, finger, &angles).tip;
    Ok((state, tip))
}

/// One IK problem of a batch.
#[derive(Debug, Clone)]
pub struct IkJob {
    pub target: Point3<f64>,
    pub seed: JointState,
}

/// Solves independent IK problems for one finger; results keep job order.
pub fn solve_ik_batch(
    model: &HandModel,
    finger: FingerName,
    jobs: &[IkJob],
    opts: &IkOptions,
    exec: Execution,
) -> Vec<Result<IkSolution>> {
    exec.map(jobs, |job| inverse_kinematics(model, finger, job.target, &job.seed, opts))
}
