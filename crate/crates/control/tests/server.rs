use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use handtwin_control::messages::{Outbound, StateMessage};
use handtwin_control::{serve_ws, ControlConfig, ControlCore, LoopbackDevice, ModeName};
use handtwin_core::evaluation::GraspLibrary;
use handtwin_core::model::HandModel;
use handtwin_core::retarget::RetargetConfig;
use tokio::net::TcpStream;
use tokio::time::timeout;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Client = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn core() -> ControlCore {
    ControlCore::new(
        HandModel::default_model(),
        GraspLibrary::default_library(),
        ControlConfig::default(),
        RetargetConfig::default(),
        Box::new(LoopbackDevice::new()),
    )
    .unwrap()
}

async fn connect(addr: SocketAddr) -> Client {
    let (ws, _) = connect_async(format!("ws://{addr}")).await.unwrap();
    ws
}

async fn next(ws: &mut Client) -> Outbound {
    loop {
        let msg = timeout(Duration::from_secs(5), ws.next()).await.expect("message in time").unwrap().unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn next_state(ws: &mut Client) -> StateMessage {
    loop {
        if let Outbound::State(s) = next(ws).await {
            return s;
        }
    }
}

async fn send(ws: &mut Client, text: &str) {
    ws.send(Message::text(text.to_string())).await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn slider_command_reaches_the_state_stream() {
    let server = serve_ws("127.0.0.1:0".parse().unwrap(), core()).await.unwrap();
    let mut ws = connect(server.local_addr()).await;
    let first = next_state(&mut ws).await;
    assert_eq!(first.schema_version, 1);
    assert_eq!(first.actuated.len(), 16);
    assert_eq!(first.full.len(), 21);
    assert_eq!(first.tips.len(), 5);
    assert_eq!(first.skeleton.len(), 5);

    send(&mut ws, r#"{"type":"set_joint","channel":3,"rad":0.8}"#).await;
    let mut reached = None;
    for _ in 0..60 {
        let s = next_state(&mut ws).await;
        if (s.actuated[3] - 0.8).abs() < 1e-3 {
            reached = Some(s);
            break;
        }
    }
    let s = reached.expect("state reflects the command");
    assert_eq!(s.mode, ModeName::JointLevel);
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_message_gets_an_error_and_keeps_the_connection() {
    let server = serve_ws("127.0.0.1:0".parse().unwrap(), core()).await.unwrap();
    let mut ws = connect(server.local_addr()).await;
    send(&mut ws, r#"{"type":"set_joint","chan":3}"#).await;
    let err = loop {
        if let Outbound::Error { schema_version, message } = next(&mut ws).await {
            break (schema_version, message);
        }
    };
    assert_eq!(err.0, 1);
    assert!(err.1.contains("schema version 1"), "{}", err.1);

    send(&mut ws, r#"{"type":"grasp","id":77,"duration":1.0}"#).await;
    let err = loop {
        if let Outbound::Error { message, .. } = next(&mut ws).await {
            break message;
        }
    };
    assert!(err.contains("77"));
    // Still connected and streaming.
    next_state(&mut ws).await;
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn grasp_progress_is_monotone() {
    let server = serve_ws("127.0.0.1:0".parse().unwrap(), core()).await.unwrap();
    let mut ws = connect(server.local_addr()).await;
    send(&mut ws, r#"{"type":"grasp","id":1,"duration":0.5}"#).await;
    let mut progress = 0.0;
    let mut done = false;
    for _ in 0..200 {
        let s = next_state(&mut ws).await;
        if let Some(p) = s.progress {
            assert_eq!(s.mode, ModeName::TaskBased);
            assert!(p >= progress);
            progress = p;
            if p == 1.0 {
                done = true;
                break;
            }
        }
    }
    assert!(done);
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn busy_port_fails_at_startup() {
    let server = serve_ws("127.0.0.1:0".parse().unwrap(), core()).await.unwrap();
    assert!(serve_ws(server.local_addr(), core()).await.is_err());
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn broadcasts_are_rate_limited() {
    let server = serve_ws("127.0.0.1:0".parse().unwrap(), core()).await.unwrap();
    let mut ws = connect(server.local_addr()).await;
    let a = next_state(&mut ws).await;
    let mut count = 0;
    let start = tokio::time::Instant::now();
    while start.elapsed() < Duration::from_millis(500) {
        next_state(&mut ws).await;
        count += 1;
    }
    let b = next_state(&mut ws).await;
    assert!(b.tick > a.tick);
    // 30 Hz over half a second, with slack for timer jitter.
    assert!(count <= 18, "{count} states in 0.5 s");
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn landmark_relay_drives_shadow_mode() {
    use handtwin_core::model::resolve_full_state;
    use handtwin_core::retarget::synthetic_landmarks;

    let model = HandModel::default_model();
    let pip = model.channel_of("middle_pip").unwrap();
    let mut q = model.zero_pose();
    q[pip] = 1.0;
    let state = resolve_full_state(&model, &q).unwrap();

    let server = serve_ws("127.0.0.1:0".parse().unwrap(), core()).await.unwrap();
    let mut ws = connect(server.local_addr()).await;
    send(&mut ws, r#"{"type":"set_mode","mode":"shadow"}"#).await;
    for n in 0..50 {
        let frame = synthetic_landmarks(&model, &state, n as f64 * 0.02);
        let msg =
            serde_json::json!({"type": "landmarks", "timestamp": frame.timestamp, "points": frame.points.concat()});
        send(&mut ws, &msg.to_string()).await;
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let mut last = next_state(&mut ws).await;
    for _ in 0..10 {
        last = next_state(&mut ws).await;
    }
    assert_eq!(last.mode, ModeName::Shadow);
    assert!((last.actuated[pip] - 1.0).abs() < 0.01, "{}", last.actuated[pip]);
    server.shutdown().await;
}
