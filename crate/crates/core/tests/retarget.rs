mod common;

use handtwin_core::model::{resolve_full_state, FingerName, HandModel, JointKind, ACTUATED_COUNT};
use handtwin_core::retarget::{
    human_to_robot, landmarks_to_human_angles, read_landmark_stream, smooth_stream, synthetic_landmarks, Actuated,
    HumanAngles, LandmarkFrame, RetargetConfig, Retargeter, LANDMARK_COUNT,
};
use proptest::prelude::*;

#[test]
fn fk_landmarks_recover_flexions() {
    let model = HandModel::default_model();
    let mut rng = common::rng(31);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let state = resolve_full_state(&model, &common::random_actuated(&model, &mut rng)).unwrap();
        let human = landmarks_to_human_angles(&synthetic_landmarks(&model, &state, 0.0));
        for (i, (&h, &q)) in human.values().iter().zip(state.full()).enumerate() {
            let joint = model.full_joint(i);
            // Abduction on the long fingers is measured against a projected
            // root direction; every other angle is exact.
            if joint.id.ends_with("mcp_abd") && !joint.id.starts_with("thumb") {
                continue;
            }
            worst = worst.max((h - q).abs());
        }
    }
    assert!(worst < 1e-6, "worst flexion error {worst}");
}

#[test]
fn angles_ignore_landmark_units() {
    let model = HandModel::default_model();
    let mut rng = common::rng(32);
    for _ in 0..100 {
        let state = resolve_full_state(&model, &common::random_actuated(&model, &mut rng)).unwrap();
        let frame = synthetic_landmarks(&model, &state, 0.0);
        let a = landmarks_to_human_angles(&frame);
        let b = landmarks_to_human_angles(&frame.scaled(1000.0));
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

fn max_round_trip_error(model: &HandModel, q: &[f64; ACTUATED_COUNT], weight: f64) -> f64 {
    let state = resolve_full_state(model, q).unwrap();
    let human = landmarks_to_human_angles(&synthetic_landmarks(model, &state, 0.0));
    let cfg = RetargetConfig { coupling_weight: weight, ..RetargetConfig::default() };
    let back = human_to_robot(model, &human, &cfg);
    back.iter().zip(state.actuated()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn robot_to_landmarks_to_robot() {
    let model = HandModel::default_model();
    let mut rng = common::rng(33);
    for i in 0..500 {
        let q = common::random_actuated(&model, &mut rng);
        let w = [0.0, 0.5, 1.0][i % 3];
        let err = max_round_trip_error(&model, &q, w);
        assert!(err < 0.035, "state {i}: {err} rad");
    }
}

#[test]
fn landmark_stream_through_the_retargeter() {
    let model = HandModel::default_model();
    let mut rng = common::rng(34);
    let mut text = String::from("# synthetic capture\n");
    let mut goals = Vec::new();
    for n in 0..30 {
        let q = common::random_actuated(&model, &mut rng);
        let state = resolve_full_state(&model, &q).unwrap();
        let frame = synthetic_landmarks(&model, &state, n as f64 / 30.0);
        text.push_str(&serde_json::to_string(&frame).unwrap());
        text.push('\n');
        goals.push(q);
    }
    let frames = read_landmark_stream(text.as_bytes()).unwrap();
    assert_eq!(frames.len(), 30);

    let cfg = RetargetConfig::default();
    let mut rt = Retargeter::new(&model, cfg.clone(), model.zero_pose()).unwrap();
    let mut prev: Option<(f64, Actuated)> = None;
    for f in &frames {
        let out = rt.push(&model, f).unwrap();
        model.validate_actuated(&out).unwrap();
        if let Some((t, p)) = prev {
            for (a, b) in out.iter().zip(&p) {
                assert!((a - b).abs() <= cfg.max_velocity * (f.timestamp - t) * (1.0 + 1e-12));
            }
        }
        prev = Some((f.timestamp, out));
    }
    // A stale frame is dropped without changing the output.
    assert!(rt.push(&model, &frames[3]).is_none());
    assert_eq!(rt.dropped(), 1);
    assert_eq!(rt.last_output(), Some(&prev.unwrap().1));
}

#[test]
fn degenerate_frame_holds_previous_joints() {
    let model = HandModel::default_model();
    let mut q = model.zero_pose();
    q[model.channel_of("index_pip").unwrap()] = 0.8;
    let state = resolve_full_state(&model, &q).unwrap();
    let good = synthetic_landmarks(&model, &state, 0.0);
    let mut bad = synthetic_landmarks(&model, &state, 0.1);
    // The whole index finger collapses onto its MCP.
    for i in 6..9 {
        bad.points[i] = bad.points[5];
    }

    let cfg = RetargetConfig { alpha: 1.0, max_velocity: 1e6, ..RetargetConfig::default() };
    let mut rt = Retargeter::new(&model, cfg, model.zero_pose()).unwrap();
    let first = rt.push(&model, &good).unwrap();
    let second = rt.push(&model, &bad).unwrap();
    let pip = model.channel_of("index_pip").unwrap();
    assert!((first[pip] - 0.8).abs() < 1e-6);
    let index = model.finger_channels(FingerName::Index);
    for c in 0..ACTUATED_COUNT {
        if index.contains(&c) {
            assert_eq!(second[c], first[c]);
        }
    }
}

#[test]
fn smoothing_is_causal() {
    let model = HandModel::default_model();
    let mut rng = common::rng(35);
    let stream: Vec<(f64, Actuated)> =
        (0..60).map(|n| (n as f64 * 0.02, common::random_actuated(&model, &mut rng))).collect();
    let full = smooth_stream(&stream, 0.4, 8.0).unwrap();
    for cut in [1, 10, 37, 59] {
        let prefix = smooth_stream(&stream[..cut], 0.4, 8.0).unwrap();
        assert_eq!(prefix.frames[..], full.frames[..cut]);
    }
    assert_eq!(smooth_stream(&stream, 0.4, 8.0).unwrap().frames, full.frames);
}

#[test]
fn constant_stream_is_unchanged() {
    let q = [0.3; ACTUATED_COUNT];
    let stream: Vec<_> = (0..20).map(|n| (n as f64 * 0.02, q)).collect();
    let out = smooth_stream(&stream, 0.4, 8.0).unwrap();
    assert!(out.frames.iter().all(|(_, v)| *v == q));
}

fn human_angles() -> impl Strategy<Value = HumanAngles> {
    prop::array::uniform21(prop_oneof![
        8 => -10.0f64..10.0,
        1 => Just(f64::NAN),
        1 => Just(f64::INFINITY),
    ])
    .prop_map(HumanAngles)
}

proptest! {
    #[test]
    fn outputs_stay_within_limits(human in human_angles(), w in 0.0f64..=1.0, scale in -3.0f64..3.0, offset in -2.0f64..2.0) {
        let model = HandModel::default_model();
        let mut cfg = RetargetConfig { coupling_weight: w, ..RetargetConfig::default() };
        cfg.affine.insert("middle_pip".into(), handtwin_core::retarget::AffineMap { scale, offset });
        let q = human_to_robot(&model, &human, &cfg);
        prop_assert!(model.validate_actuated(&q).is_ok());
    }

    #[test]
    fn arbitrary_landmarks_never_break_limits(coords in prop::collection::vec(-1.0f64..1.0, 3 * LANDMARK_COUNT)) {
        let model = HandModel::default_model();
        let frame = LandmarkFrame::from_flat(0.0, &coords).unwrap();
        let mut rt = Retargeter::new(&model, RetargetConfig::default(), model.zero_pose()).unwrap();
        let out = rt.push(&model, &frame).unwrap();
        prop_assert!(model.validate_actuated(&out).is_ok());
    }
}

#[test]
fn passive_joints_are_not_outputs() {
    let model = HandModel::default_model();
    let passive = (0..21).filter(|&i| model.full_joint(i).kind == JointKind::Coupled).count();
    assert_eq!(passive, 5);
    assert_eq!(model.finger_channels(FingerName::Thumb).len(), 4);
}
