use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Duration;

use handtwin_acceptance::{timed, Suite, Verdict};
use handtwin_control::controller::smoothstep;
use handtwin_control::messages::Inbound;
use handtwin_control::protocol::{decode_frame, encode_frame, tick_quantum, FrameDecoder, Packet, JOINT_FRAME_LEN};
use handtwin_control::{ControlConfig, ControlCore, Controller, LoopbackDevice};
use handtwin_core::evaluation::{run_kapandji, validate_grasp_library, GraspLibrary, KapandjiFile, KapandjiOptions};
use handtwin_core::kinematics::{
    fingertip_jacobian, force_limit, forward_kinematics, inverse_kinematics, max_fingertip_force, IkOptions,
    NULL_DIRECTION_EPS,
};
use handtwin_core::linkage::{four_bar_oracle, synthesize_linkage, AntiparallelogramLinkage, TrajectoryTable};
use handtwin_core::model::{resolve_full_state, FingerName, HandDescription, HandModel, ACTUATED_COUNT};
use handtwin_core::retarget::{human_to_robot, landmarks_to_human_angles, synthetic_landmarks, RetargetConfig};
use handtwin_core::Execution;
use nalgebra::{Matrix3xX, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Actuated = [f64; ACTUATED_COUNT];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_actuated(model: &HandModel, rng: &mut impl Rng) -> Actuated {
    std::array::from_fn(|c| {
        let [lo, hi] = model.channel_joint(c).limits;
        rng.random_range(lo..=hi)
    })
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn coupling_fidelity() -> Verdict {
    let mut rng = rng(1);
    let (worst, elapsed) = timed(|| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let l2 = rng.random_range(0.005..0.03);
            let link = AntiparallelogramLinkage::new(l2 * rng.random_range(1.05..6.0), l2).unwrap();
            for i in 0..200 {
                let theta = PI * (i as f64 + 0.5) / 200.0;
                let a = link.interior_coupling(theta).unwrap();
                let b = four_bar_oracle(&link, theta).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
        worst
    });
    Verdict::new(
        worst < 1e-9 && elapsed < Duration::from_secs(1),
        format!("max |closed form - oracle| = {worst:.2e} rad over 4000 points"),
    )
}

fn rms_at(k: f64, table: &TrajectoryTable) -> f64 {
    let link = AntiparallelogramLinkage::from_ratio(k, 1.0).unwrap();
    let s = table.samples();
    (s.iter().map(|&(p, d)| (link.flexion_coupling(p).unwrap() - d).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
}

fn linkage_synthesis() -> Verdict {
    let mut rng = rng(2);
    let mut worst_k = 0.0f64;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut slowest = Duration::ZERO;
    for _ in 0..20 {
        let k = rng.random_range(0.02..0.95);
        let truth = AntiparallelogramLinkage::from_ratio(k, 0.05).unwrap();
        let samples = (0..50).map(|i| {
            let p = 0.05 * i as f64;
            (p, truth.flexion_coupling(p).unwrap())
        });
        let table = TrajectoryTable::new(samples.collect()).unwrap();
        let (fit, t) = timed(|| synthesize_linkage(&table, 0.05).unwrap());
        slowest = slowest.max(t);
        worst_k = worst_k.max((fit.k - k).abs());

        // Targets that no linkage produces exactly.
        let n = rng.random_range(3..40);
        let mut pips: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        pips.sort_by(f64::total_cmp);
        pips.dedup();
        let noisy = TrajectoryTable::new(pips.iter().map(|&p| (p, rng.random_range(0.0..2.5))).collect()).unwrap();
        let (fit, t) = timed(|| synthesize_linkage(&noisy, 0.04).unwrap());
        slowest = slowest.max(t);
        let grid = (1..2000).map(|i| rms_at(i as f64 / 2000.0, &noisy)).fold(f64::INFINITY, f64::min);
        worst_gap = worst_gap.max(fit.rms - grid);
    }
    Verdict::new(
        worst_k < 1e-6 && worst_gap <= 1e-9 && slowest < Duration::from_secs(1),
        format!("k error {worst_k:.2e}, rms - grid best {worst_gap:.2e}, slowest fit {:.4} s", secs(slowest)),
    )
}

fn jacobian() -> Verdict {
    let model = HandModel::default_model();
    let mut rng = rng(3);
    let h = 1e-7;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q: Actuated = std::array::from_fn(|c| {
            let [lo, hi] = model.channel_joint(c).limits;
            rng.random_range(lo + 1e-4..hi - 1e-4)
        });
        let state = resolve_full_state(&model, &q).unwrap();
        for finger in FingerName::ALL {
            let analytic = fingertip_jacobian(&model, &state, finger);
            for (col, &c) in model.finger_channels(finger).iter().enumerate() {
                let (mut plus, mut minus) = (q, q);
                plus[c] += h;
                minus[c] -= h;
                let tp = forward_kinematics(&model, &resolve_full_state(&model, &plus).unwrap()).finger(finger).tip;
                let tm = forward_kinematics(&model, &resolve_full_state(&model, &minus).unwrap()).finger(finger).tip;
                let fd = (tp - tm) / (2.0 * h);
                worst = worst.max((analytic.column(col) - fd).amax());
            }
        }
    }
    Verdict::new(worst < 1e-6, format!("max |analytic - central difference| = {worst:.2e} m/rad"))
}

fn ik_round_trip() -> Verdict {
    let model = HandModel::default_model();
    let opts = IkOptions { tol: 1e-7, ..IkOptions::default() };
    let mut rng = rng(4);
    let total = 1000;
    let ((converged, coupling_ok), elapsed) = timed(|| {
        let mut converged = 0;
        let mut coupling_ok = true;
        for i in 0..total {
            let finger = FingerName::ALL[i % 5];
            let goal = resolve_full_state(&model, &random_actuated(&model, &mut rng)).unwrap();
            let target = forward_kinematics(&model, &goal).finger(finger).tip;
            let seed = resolve_full_state(&model, &random_actuated(&model, &mut rng)).unwrap();
            let sol = inverse_kinematics(&model, finger, target, &seed, &opts).unwrap();
            let again = resolve_full_state(&model, sol.state.actuated()).unwrap();
            coupling_ok &= again.full() == sol.state.full();
            coupling_ok &= sol.history.windows(2).all(|w| w[1] <= w[0]);
            if sol.residual < 1e-6 {
                converged += 1;
            }
        }
        (converged, coupling_ok)
    });
    Verdict::new(
        converged * 100 >= total * 99 && coupling_ok && elapsed < Duration::from_secs(10),
        format!("{converged}/{total} converged, coupling exact: {coupling_ok}"),
    )
}

fn grasp_taxonomy() -> Verdict {
    let model = HandModel::default_model();
    let mut poses = GraspLibrary::default_library().poses;
    let base = validate_grasp_library(&model, &poses, Execution::Parallel).unwrap();
    let by_id = |r: &handtwin_core::evaluation::GraspReport| {
        r.poses.iter().map(|v| (v.id, v.clone())).collect::<BTreeMap<_, _>>()
    };
    let expected = by_id(&base);
    let mut rng = rng(5);
    let mut stable = true;
    for _ in 0..10 {
        poses.shuffle(&mut rng);
        let r = validate_grasp_library(&model, &poses, Execution::Parallel).unwrap();
        stable &= r.valid_count == base.valid_count && by_id(&r) == expected;
    }
    Verdict::new(
        base.valid_count == 33 && base.total == 33 && stable,
        format!("{}/{} valid, shuffled order stable: {stable}", base.valid_count, base.total),
    )
}

fn kapandji() -> Verdict {
    let model = HandModel::default_model();
    let targets = KapandjiFile::default_targets().targets;
    let report = run_kapandji(&model, &targets, &KapandjiOptions::default(), Execution::Parallel).unwrap();
    let mut last = 0;
    let mut monotone = true;
    for tol in [0.0, 1e-6, 1e-4, 0.001, 0.005, 0.013, 0.02, 0.05, 0.5] {
        let opts = KapandjiOptions { tol, ..KapandjiOptions::default() };
        let r = run_kapandji(&model, &targets, &opts, Execution::Parallel).unwrap();
        monotone &= r.score >= last;
        last = r.score;
    }
    Verdict::new(
        report.score == 9 && report.total == 11 && report.unreachable == [0, 8] && monotone,
        format!(
            "score {}/{}, unreachable {:?}, monotone in tolerance: {monotone}",
            report.score, report.total, report.unreachable
        ),
    )
}

fn force() -> Verdict {
    let single = Matrix3xX::from_column_slice(&[0.0, 0.05, 0.0]);
    let f_single = force_limit(&single, &[0.1], &Vector3::y(), NULL_DIRECTION_EPS).unwrap().value();

    let model = HandModel::default_model();
    let mut desc: HandDescription = model.description().clone();
    for a in desc.actuation.values_mut() {
        a.servo_torque_limit *= 3.0;
    }
    let tripled = HandModel::new(desc).unwrap();
    let mut rng = rng(6);
    let mut scaling = true;
    for _ in 0..100 {
        let q = random_actuated(&model, &mut rng);
        let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            .normalize();
        let finger = FingerName::ALL[rng.random_range(0..5)];
        let a = max_fingertip_force(&model, &resolve_full_state(&model, &q).unwrap(), finger, &dir).unwrap().value();
        let b =
            max_fingertip_force(&tripled, &resolve_full_state(&tripled, &q).unwrap(), finger, &dir).unwrap().value();
        scaling &= (a.is_infinite() && b.is_infinite()) || (b - 3.0 * a).abs() <= 1e-9 * b.max(1.0);
    }

    let rest = resolve_full_state(&model, &model.zero_pose()).unwrap();
    let index = max_fingertip_force(&model, &rest, FingerName::Index, &-Vector3::z()).unwrap().value();
    Verdict::new(
        f_single == 2.0 && scaling && (1.9..=2.4).contains(&index),
        format!("single link {f_single} N, linear in torque: {scaling}, index {index:.4} N"),
    )
}

fn protocol() -> Verdict {
    let model = HandModel::default_model();
    let mut rng = rng(7);
    let mut round_trip = true;
    for _ in 0..100_000 {
        let q = random_actuated(&model, &mut rng);
        match decode_frame(&model, &encode_frame(&model, &q)) {
            Ok(Packet::Joint { actuated, .. }) => {
                round_trip &= (0..ACTUATED_COUNT).all(|c| (actuated[c] - q[c]).abs() <= tick_quantum(&model, c))
            }
            _ => round_trip = false,
        }
    }

    let frame = encode_frame(&model, &random_actuated(&model, &mut rng));
    let mut caught = 0;
    for bit in 0..JOINT_FRAME_LEN * 8 {
        let mut bad = frame;
        bad[bit / 8] ^= 1 << (bit % 8);
        let mut dec = FrameDecoder::new();
        let joints = dec.push(&model, &bad).iter().filter(|p| matches!(p, Packet::Joint { .. })).count();
        if decode_frame(&model, &bad).is_err() && joints == 0 {
            caught += 1;
        }
    }

    let mut bytes = vec![0x13, 0x37, 0xAA, 0x00, 0x55, 0xFF, 0xAA];
    bytes.extend(encode_frame(&model, &model.zero_pose()));
    bytes.extend([0x00, 0xAA, 0x55]);
    bytes.extend(encode_frame(&model, &model.zero_pose()));
    let mut dec = FrameDecoder::new();
    let recovered = dec.push(&model, &bytes).len();

    Verdict::new(
        round_trip && caught == 296 && recovered == 2,
        format!(
            "10^5 round trips within a quantum: {round_trip}, bit flips caught {caught}/296, frames after garbage {recovered}/2"
        ),
    )
}

fn retarget() -> Verdict {
    let model = HandModel::default_model();
    let mut rng = rng(8);
    let mut worst = 0.0f64;
    let mut worst_scale = 0.0f64;
    for i in 0..500 {
        let q = random_actuated(&model, &mut rng);
        let state = resolve_full_state(&model, &q).unwrap();
        let frame = synthetic_landmarks(&model, &state, 0.0);
        let human = landmarks_to_human_angles(&frame);
        let cfg = RetargetConfig { coupling_weight: [0.0, 0.5, 1.0][i % 3], ..RetargetConfig::default() };
        let back = human_to_robot(&model, &human, &cfg);
        worst = worst.max(back.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let scaled = landmarks_to_human_angles(&frame.scaled(1000.0));
        for (a, b) in human.values().iter().zip(scaled.values()) {
            worst_scale = worst_scale.max((a - b).abs());
        }
    }
    Verdict::new(
        worst < 0.035 && worst_scale < 1e-9,
        format!("worst joint error {worst:.4} rad, scale deviation {worst_scale:.2e}"),
    )
}

fn control_loop() -> Verdict {
    let endpoints = smoothstep(0.0) == 0.0 && smoothstep(1.0) == 1.0;

    let model = HandModel::default_model();
    let mut ctl =
        Controller::new(&model, ControlConfig::default(), RetargetConfig::default(), model.zero_pose()).unwrap();
    let bound = ctl.config().max_step() * (1.0 + 1e-12);
    let lib = GraspLibrary::default_library();
    let mut rng = rng(9);
    let mut bounded = true;
    let mut continuous = true;
    let mut t = 0.0;
    for round in 0..200 {
        let before = *ctl.output();
        match round % 4 {
            0 => ctl.set_joint(rng.random_range(0..ACTUATED_COUNT), rng.random_range(-3.0..3.0)).unwrap(),
            1 => {
                let id = rng.random_range(1..=33);
                ctl.start_trajectory(&model, &lib.pose(id).unwrap().actuated, rng.random_range(0.05..1.0)).unwrap()
            }
            2 => ctl.set_shadow(&model).unwrap(),
            _ => ctl.set_joint_level(None).unwrap(),
        }
        continuous &= ctl.output() == &before;
        let mut prev = before;
        for _ in 0..rng.random_range(1..15) {
            if round % 4 == 2 {
                t += 0.02;
                let state = resolve_full_state(&model, &random_actuated(&model, &mut rng)).unwrap();
                ctl.push_landmarks(&model, &synthetic_landmarks(&model, &state, t));
            }
            let out = ctl.step(&model);
            bounded &= model.validate_actuated(&out).is_ok();
            bounded &= out.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= bound);
            prev = out;
        }
    }

    // Full loop against the simulated device.
    let mut core = ControlCore::new(
        model.clone(),
        lib.clone(),
        ControlConfig::default(),
        RetargetConfig::default(),
        Box::new(LoopbackDevice::new()),
    )
    .unwrap();
    core.handle(Inbound::Grasp { id: 12, duration: 1.0 }).unwrap();
    let mut last = core.snapshot();
    for _ in 0..80 {
        last = core.step().unwrap();
    }
    let goal = lib.pose(12).unwrap().actuated;
    let loopback = (0..ACTUATED_COUNT).all(|c| (last.actuated[c] - goal[c]).abs() <= tick_quantum(&model, c));

    Verdict::new(
        endpoints && bounded && continuous && loopback,
        format!(
            "smoothstep endpoints exact: {endpoints}, steps bounded: {bounded}, switches continuous: {continuous}, loopback settles: {loopback}"
        ),
    )
}

fn main() {
    let mut suite = Suite::new();
    suite.check("coupling closed form vs four-bar geometry", coupling_fidelity);
    suite.check("linkage synthesis", linkage_synthesis);
    suite.check("fingertip jacobian", jacobian);
    suite.check("fk/ik round trip", ik_round_trip);
    suite.check("grasp taxonomy", grasp_taxonomy);
    suite.check("kapandji opposition", kapandji);
    suite.check("fingertip force", force);
    suite.check("serial protocol", protocol);
    suite.check("landmark retargeting", retarget);
    suite.check("control loop", control_loop);

    let failed = suite.failures();
    println!("{} checks, {} failed", suite.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
