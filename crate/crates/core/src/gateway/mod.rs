//! Client gateway: JSON frames over length-delimited TCP, and the same
//! frames as WebSocket text messages for browser clients.
//!
//! Every frame is `{type, name, id, body}`. Responses reuse the request's
//! type and id; failures come back as `ERROR` frames with `{code, message}`
//! and leave the session open. Subscriptions stream `EVENT` frames tagged
//! with the subscription id and carrying records exactly as fetched.

mod commands;
mod frame;
mod session;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::task::{JoinHandle, JoinSet};
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_util::codec::{Framed, LengthDelimitedCodec};

pub use commands::{publish, run_command, Failure, COMMANDS};
pub use frame::{record_json, Frame, FrameType};

use crate::config::GatewaySettings;
use crate::coordinator::Coordinator;

/// Largest frame accepted on the TCP transport.
pub const MAX_FRAME_BYTES: usize = 16 * 1024 * 1024;

/// How often live intents are advanced under a wall clock.
pub const TICK_INTERVAL: Duration = Duration::from_millis(10);

pub fn codec() -> LengthDelimitedCodec {
    LengthDelimitedCodec::builder().max_frame_length(MAX_FRAME_BYTES).new_codec()
}

/// Running listeners. Dropping the handle leaves them running; call
/// [`GatewayHandle::shutdown`] to stop them and every open session.
pub struct GatewayHandle {
    pub tcp_addr: SocketAddr,
    pub ws_addr: Option<SocketAddr>,
    tasks: Vec<JoinHandle<()>>,
}

impl GatewayHandle {
    pub fn shutdown(self) {
        for task in self.tasks {
            task.abort();
        }
    }

    /// Resolves when every listener has stopped.
    pub async fn join(self) {
        for task in self.tasks {
            let _ = task.await;
        }
    }
}

/// Binds the listeners and starts serving. Must run inside a tokio runtime.
pub async fn serve(coordinator: Arc<Coordinator>, settings: &GatewaySettings) -> std::io::Result<GatewayHandle> {
    let tcp = TcpListener::bind(&settings.bind).await?;
    let tcp_addr = tcp.local_addr()?;
    let mut tasks = vec![tokio::spawn(accept_tcp(tcp, coordinator.clone()))];
    let ws_addr = match &settings.ws_bind {
        Some(bind) => {
            let ws = TcpListener::bind(bind).await?;
            let addr = ws.local_addr()?;
            tasks.push(tokio::spawn(accept_ws(ws, coordinator.clone())));
            Some(addr)
        }
        None => None,
    };
    if !coordinator.clock().is_logical() {
        tasks.push(tokio::spawn(ticker(coordinator)));
    }
    tracing::info!(%tcp_addr, ?ws_addr, "gateway listening");
    Ok(GatewayHandle { tcp_addr, ws_addr, tasks })
}

async fn ticker(coordinator: Arc<Coordinator>) {
    let mut interval = tokio::time::interval(TICK_INTERVAL);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    loop {
        interval.tick().await;
        if let Err(e) = coordinator.tick() {
            tracing::warn!(error = %e, "intent tick failed");
        }
    }
}

async fn accept_tcp(listener: TcpListener, coordinator: Arc<Coordinator>) {
    let mut sessions = JoinSet::new();
    loop {
        let (stream, peer) = match listener.accept().await {
            Ok(conn) => conn,
            Err(e) => {
                tracing::warn!(error = %e, "accept failed");
                continue;
            }
        };
        tracing::debug!(%peer, "tcp client connected");
        sessions.spawn(serve_tcp(stream, peer, coordinator.clone()));
        while sessions.try_join_next().is_some() {}
    }
}

async fn serve_tcp(stream: TcpStream, peer: SocketAddr, coordinator: Arc<Coordinator>) {
    let _ = stream.set_nodelay(true);
    let (sink, stream) = Framed::new(stream, codec()).split();
    let incoming = stream.map(|r| r.map(|b| b.to_vec()).map_err(|e| e.to_string()));
    let outgoing = sink.with(|v: Vec<u8>| async move { Ok::<_, std::io::Error>(bytes::Bytes::from(v)) });
    session::run(coordinator, incoming, Box::pin(outgoing), peer.to_string()).await;
}

async fn accept_ws(listener: TcpListener, coordinator: Arc<Coordinator>) {
    let mut sessions = JoinSet::new();
    loop {
        let (stream, peer) = match listener.accept().await {
            Ok(conn) => conn,
            Err(e) => {
                tracing::warn!(error = %e, "accept failed");
                continue;
            }
        };
        sessions.spawn(serve_ws(stream, peer, coordinator.clone()));
        while sessions.try_join_next().is_some() {}
    }
}

async fn serve_ws(stream: TcpStream, peer: SocketAddr, coordinator: Arc<Coordinator>) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            tracing::debug!(%peer, error = %e, "websocket handshake failed");
            return;
        }
    };
    tracing::debug!(%peer, "websocket client connected");
    let (sink, stream) = ws.split();
    // Control messages are handled by tungstenite; only data frames reach
    // the session.
    let incoming = stream.filter_map(|m| async move {
        match m {
            Ok(WsMessage::Text(t)) => Some(Ok(t.as_bytes().to_vec())),
            Ok(WsMessage::Binary(b)) => Some(Ok(b.to_vec())),
            Ok(WsMessage::Close(_)) => Some(Err("closed".to_string())),
            Ok(_) => None,
            Err(e) => Some(Err(e.to_string())),
        }
    });
    let outgoing = sink.with(|v: Vec<u8>| async move {
        let text = String::from_utf8(v).expect("frames are JSON text");
        Ok::<_, tokio_tungstenite::tungstenite::Error>(WsMessage::text(text))
    });
    session::run(coordinator, Box::pin(incoming), Box::pin(outgoing), peer.to_string()).await;
}
