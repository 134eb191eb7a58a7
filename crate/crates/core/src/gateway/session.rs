use std::collections::HashMap;
use std::sync::Arc;

use futures::{Sink, SinkExt, Stream, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

use super::commands::{self, Failure};
use super::frame::{record_json, Frame, FrameType};
use crate::broker::Broker;
use crate::coordinator::Coordinator;

const OUTBOX: usize = 1024;
const PUMP_BATCH: usize = 256;
const MAX_FETCH: usize = 10_000;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct SubscribeArgs {
    from_offset: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FetchArgs {
    from_offset: u64,
    max_records: usize,
}

impl Default for FetchArgs {
    fn default() -> Self {
        FetchArgs { from_offset: 0, max_records: 100 }
    }
}

fn args<T: for<'de> Deserialize<'de> + Default>(body: Value) -> Result<T, Failure> {
    if body.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(body).map_err(|e| Failure::new("BadRequest", e.to_string()))
}

/// Serves one client until its transport closes. `incoming` yields raw
/// frame bytes; `outgoing` accepts them.
pub(crate) async fn run<R, W>(coordinator: Arc<Coordinator>, mut incoming: R, outgoing: W, peer: String)
where
    R: Stream<Item = Result<Vec<u8>, String>> + Unpin,
    W: Sink<Vec<u8>> + Unpin + Send + 'static,
{
    let (tx, mut rx) = mpsc::channel::<Frame>(OUTBOX);
    let writer = tokio::spawn(async move {
        let mut outgoing = outgoing;
        while let Some(frame) = rx.recv().await {
            if outgoing.send(frame.to_bytes()).await.is_err() {
                break;
            }
        }
    });

    let mut session = Session { coordinator, tx, subscriptions: HashMap::new() };
    while let Some(item) = incoming.next().await {
        let bytes = match item {
            Ok(bytes) => bytes,
            Err(e) => {
                tracing::debug!(%peer, error = %e, "transport error");
                break;
            }
        };
        let reply = match Frame::parse(&bytes) {
            Ok(frame) => session.handle(frame).await,
            Err(e) => Some(Frame::error("", 0, "MalformedFrame", e)),
        };
        if let Some(reply) = reply {
            if session.tx.send(reply).await.is_err() {
                break;
            }
        }
    }
    tracing::debug!(%peer, "session closed");
    for (_, pump) in session.subscriptions.drain() {
        pump.abort();
    }
    drop(session);
    let _ = writer.await;
}

struct Session {
    coordinator: Arc<Coordinator>,
    tx: mpsc::Sender<Frame>,
    subscriptions: HashMap<u64, JoinHandle<()>>,
}

impl Session {
    async fn handle(&mut self, frame: Frame) -> Option<Frame> {
        let (kind, name, id) = (frame.kind, frame.name.clone(), frame.id);
        let result = match kind {
            FrameType::Subscribe => return self.subscribe(frame).await,
            FrameType::Fetch => self.fetch(&frame.name, frame.body),
            FrameType::Command if frame.name == "unsubscribe" => self.unsubscribe(frame.body),
            FrameType::Command => {
                let c = self.coordinator.clone();
                blocking(move || commands::run_command(&c, &frame.name, frame.body)).await
            }
            FrameType::Publish => {
                let c = self.coordinator.clone();
                blocking(move || commands::publish(&c, &frame.name, &frame.body)).await
            }
            FrameType::Event | FrameType::Error => {
                Err(Failure::new("UnsupportedFrame", format!("clients may not send {kind:?} frames")))
            }
        };
        Some(match result {
            Ok(body) => Frame::new(kind, name, id, body),
            Err(f) => Frame::error(name, id, &f.code, f.message),
        })
    }

    fn fetch(&self, topic: &str, body: Value) -> Result<Value, Failure> {
        let a: FetchArgs = args(body)?;
        let broker = self.coordinator.broker();
        let records = broker
            .fetch(topic, a.from_offset, a.max_records.min(MAX_FETCH))
            .map_err(|e| Failure::new("TopicNotFound", e.to_string()))?;
        let next = records.last().map_or(a.from_offset, |r| r.offset + 1);
        let records: Vec<Value> = records.iter().map(record_json).collect();
        Ok(json!({ "topic": topic, "records": records, "next_offset": next }))
    }

    fn unsubscribe(&mut self, body: Value) -> Result<Value, Failure> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct A {
            subscription: u64,
        }
        let a: A = serde_json::from_value(body).map_err(|e| Failure::new("BadRequest", e.to_string()))?;
        let found = self.subscriptions.remove(&a.subscription).map(|pump| pump.abort()).is_some();
        Ok(json!({ "subscription": a.subscription, "removed": found }))
    }

    /// Replies before the pump starts so the acknowledgement always
    /// precedes the subscription's first EVENT.
    async fn subscribe(&mut self, frame: Frame) -> Option<Frame> {
        let (topic, id) = (frame.name.clone(), frame.id);
        let a: SubscribeArgs = match args(frame.body) {
            Ok(a) => a,
            Err(f) => return Some(Frame::error(topic, id, &f.code, f.message)),
        };
        let broker = self.coordinator.broker().clone();
        let signal = match broker.subscribe_signal(&topic, a.from_offset) {
            Ok(s) => s,
            Err(e) => return Some(Frame::error(topic, id, "TopicNotFound", e.to_string())),
        };
        let ack = Frame::new(FrameType::Subscribe, topic.clone(), id, json!({ "topic": topic, "position": a.from_offset }));
        if self.tx.send(ack).await.is_err() {
            return None;
        }
        let pump = tokio::spawn(pump(broker, topic, id, signal, self.tx.clone()));
        if let Some(old) = self.subscriptions.insert(id, pump) {
            old.abort();
        }
        None
    }
}

async fn pump(
    broker: Arc<Broker>,
    topic: String,
    id: u64,
    mut signal: crate::broker::ReadinessSignal,
    tx: mpsc::Sender<Frame>,
) {
    loop {
        signal.ready().await;
        let records = match broker.fetch(&topic, signal.position(), PUMP_BATCH) {
            Ok(records) => records,
            Err(e) => {
                let _ = tx.send(Frame::error(topic.clone(), id, "BrokerError", e.to_string())).await;
                return;
            }
        };
        let Some(last) = records.last() else { continue };
        signal.acknowledge(last.offset + 1);
        for record in &records {
            if tx.send(Frame::event(id, record)).await.is_err() {
                return;
            }
        }
    }
}

async fn blocking<F>(f: F) -> Result<Value, Failure>
where
    F: FnOnce() -> Result<Value, Failure> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(Failure::new("InternalError", e.to_string())))
}
