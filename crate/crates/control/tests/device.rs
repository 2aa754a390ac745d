use handtwin_control::device::send_command;
use handtwin_control::protocol::{decode_frame, tick_quantum, Packet, JOINT_FRAME_LEN};
use handtwin_control::{Device, LoopbackDevice, SerialDevice};
use handtwin_core::model::{HandModel, ACTUATED_COUNT};

#[test]
fn loopback_echoes_after_one_period() {
    let model = HandModel::default_model();
    let mut dev = LoopbackDevice::new();
    let mut q = model.zero_pose();
    let [lo, hi] = model.channel_joint(2).limits;
    q[2] = 0.5 * (lo + hi);
    send_command(&mut dev, &model, &q).unwrap();
    assert_eq!(dev.measured(), None);
    dev.advance(0.02);
    assert_eq!(dev.measured(), None);
    dev.advance(0.02);
    let m = dev.measured().unwrap();
    for c in 0..ACTUATED_COUNT {
        assert!((m[c] - q[c]).abs() <= tick_quantum(&model, c));
    }
    assert_eq!(dev.decoder_stats().frames, 1);
}

#[test]
fn lag_approaches_the_command() {
    let model = HandModel::default_model();
    let mut dev = LoopbackDevice::with_lag([0.1; ACTUATED_COUNT]);
    send_command(&mut dev, &model, &model.zero_pose()).unwrap();
    dev.advance(0.02);
    dev.advance(0.02);
    let mut q = model.zero_pose();
    q[5] = 1.0;
    send_command(&mut dev, &model, &q).unwrap();
    dev.advance(0.02);
    let mut prev = dev.measured().unwrap()[5];
    for _ in 0..100 {
        dev.advance(0.02);
        let now = dev.measured().unwrap()[5];
        assert!(now >= prev && now <= 1.0 + tick_quantum(&model, 5));
        prev = now;
    }
    assert!((prev - 1.0).abs() < 1e-3);
}

#[test]
fn serial_device_writes_raw_frames() {
    let model = HandModel::default_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tty");
    let mut dev = SerialDevice::open(&path).unwrap();
    send_command(&mut dev, &model, &model.zero_pose()).unwrap();
    send_command(&mut dev, &model, &model.zero_pose()).unwrap();
    drop(dev);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 2 * JOINT_FRAME_LEN);
    assert!(matches!(decode_frame(&model, &bytes[..JOINT_FRAME_LEN]).unwrap(), Packet::Joint { .. }));
}
