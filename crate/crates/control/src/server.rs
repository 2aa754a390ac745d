//! Websocket service around [`ControlCore`].
//!
//! One task owns the core and runs the control loop. Commands reach it over a
//! bounded queue; landmark frames go through a latest-wins slot so a slow loop
//! never works through a backlog. Each connection forwards the newest state
//! at most at the broadcast rate.

use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, watch};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message;
use tracing::{debug, info, warn};

use crate::core::ControlCore;
use crate::error::Result;
use crate::messages::{parse_inbound, Inbound, Outbound, StateMessage};

const COMMAND_QUEUE: usize = 256;

struct Command {
    msg: Inbound,
    reply: mpsc::Sender<Outbound>,
}

/// A running service. Dropping the handle leaves it running; call
/// [`ServerHandle::shutdown`] to stop it.
pub struct ServerHandle {
    local_addr: SocketAddr,
    stop: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        for t in self.tasks {
            let _ = t.await;
        }
    }
}

/// Binds `addr` and starts the control loop and the listener. Fails if the
/// port is taken.
pub async fn serve_ws(addr: SocketAddr, core: ControlCore) -> Result<ServerHandle> {
    let listener = TcpListener::bind(addr).await?;
    let local_addr = listener.local_addr()?;
    let cfg = *core.controller().config();
    let (stop, stop_rx) = watch::channel(false);
    let (cmd_tx, cmd_rx) = mpsc::channel::<Command>(COMMAND_QUEUE);
    let (frame_tx, frame_rx) = watch::channel::<Option<Inbound>>(None);
    let (state_tx, state_rx) = watch::channel(core.snapshot());

    let control = tokio::spawn(control_loop(core, cmd_rx, frame_rx, state_tx, stop_rx.clone()));
    let broadcast_period = Duration::from_secs_f64(1.0 / cfg.broadcast_hz);
    let accept = tokio::spawn(accept_loop(listener, cmd_tx, frame_tx, state_rx, stop_rx, broadcast_period));
    info!(%local_addr, "websocket service listening");
    Ok(ServerHandle { local_addr, stop, tasks: vec![control, accept] })
}

async fn control_loop(
    mut core: ControlCore,
    mut commands: mpsc::Receiver<Command>,
    mut frames: watch::Receiver<Option<Inbound>>,
    states: watch::Sender<StateMessage>,
    mut stop: watch::Receiver<bool>,
) {
    let period = Duration::from_secs_f64(core.controller().config().period);
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            _ = stop.changed() => break,
            _ = ticker.tick() => {}
        }
        while let Ok(Command { msg, reply }) = commands.try_recv() {
            if let Err(e) = core.handle(msg) {
                let _ = reply.try_send(Outbound::error(e.to_string()));
            }
        }
        if frames.has_changed().unwrap_or(false) {
            let latest = frames.borrow_and_update().clone();
            if let Some(msg) = latest {
                if let Err(e) = core.handle(msg) {
                    debug!("landmark frame rejected: {e}");
                }
            }
        }
        match core.step() {
            Ok(state) => {
                let _ = states.send(state);
            }
            Err(e) => warn!("control step failed: {e}"),
        }
    }
}

async fn accept_loop(
    listener: TcpListener,
    commands: mpsc::Sender<Command>,
    frames: watch::Sender<Option<Inbound>>,
    states: watch::Receiver<StateMessage>,
    mut stop: watch::Receiver<bool>,
    broadcast_period: Duration,
) {
    loop {
        let stream = tokio::select! {
            _ = stop.changed() => break,
            r = listener.accept() => match r {
                Ok((stream, peer)) => {
                    debug!(%peer, "connection");
                    stream
                }
                Err(e) => {
                    warn!("accept failed: {e}");
                    continue;
                }
            },
        };
        tokio::spawn(connection(
            stream,
            commands.clone(),
            frames.clone(),
            states.clone(),
            stop.clone(),
            broadcast_period,
        ));
    }
}

async fn connection(
    stream: TcpStream,
    commands: mpsc::Sender<Command>,
    frames: watch::Sender<Option<Inbound>>,
    mut states: watch::Receiver<StateMessage>,
    mut stop: watch::Receiver<bool>,
    broadcast_period: Duration,
) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            debug!("handshake failed: {e}");
            return;
        }
    };
    let (mut sink, mut source) = ws.split();
    let (reply_tx, mut reply_rx) = mpsc::channel::<Outbound>(32);
    let mut broadcast = tokio::time::interval(broadcast_period);
    broadcast.set_missed_tick_behavior(MissedTickBehavior::Delay);
    states.mark_changed();

    loop {
        let out = tokio::select! {
            _ = stop.changed() => break,
            _ = broadcast.tick() => {
                if !states.has_changed().unwrap_or(false) {
                    continue;
                }
                Outbound::State(states.borrow_and_update().clone())
            }
            Some(reply) = reply_rx.recv() => reply,
            incoming = source.next() => match incoming {
                Some(Ok(Message::Text(text))) => match parse_inbound(&text) {
                    Ok(msg @ Inbound::Landmarks { .. }) => {
                        frames.send_replace(Some(msg));
                        continue;
                    }
                    Ok(msg) => {
                        let cmd = Command { msg, reply: reply_tx.clone() };
                        if commands.try_send(cmd).is_ok() {
                            continue;
                        }
                        Outbound::error("command queue full")
                    }
                    Err(e) => Outbound::error(e),
                },
                Some(Ok(Message::Binary(_))) => Outbound::error("binary messages are not supported"),
                Some(Ok(Message::Close(_))) | None => break,
                Some(Ok(_)) => continue,
                Some(Err(e)) => {
                    debug!("connection error: {e}");
                    break;
                }
            },
        };
        if sink.send(Message::text(out.to_json())).await.is_err() {
            break;
        }
    }
    let _ = sink.close().await;
}
