use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_util::codec::Framed;

use holointent::config::AssetSettings;
use holointent::broker::{Broker, BrokerConfig};
use holointent::clock::{Clock, LogicalClock, WallClock};
use holointent::config::GatewaySettings;
use holointent::coordinator::Coordinator;
use holointent::gateway::{self, record_json, Frame, FrameType, GatewayHandle};
use holointent::intent::{IntentConfig, INTENT_EVENTS_TOPIC};
use holointent::message::{IntentEvent, IntentPhase};

const WAIT: Duration = Duration::from_secs(5);

struct Client {
    io: Framed<TcpStream, tokio_util::codec::LengthDelimitedCodec>,
    next_id: u64,
    /// EVENT frames that arrived while waiting for a reply.
    pending: VecDeque<Frame>,
}

impl Client {
    async fn connect(handle: &GatewayHandle) -> Client {
        let stream = TcpStream::connect(handle.tcp_addr).await.unwrap();
        Client { io: Framed::new(stream, gateway::codec()), next_id: 1, pending: VecDeque::new() }
    }

    async fn send_raw(&mut self, bytes: &[u8]) {
        self.io.send(bytes::Bytes::copy_from_slice(bytes)).await.unwrap();
    }

    async fn send(&mut self, kind: FrameType, name: &str, body: Value) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.send_raw(&Frame::new(kind, name, id, body).to_bytes()).await;
        id
    }

    async fn recv(&mut self) -> Frame {
        match self.pending.pop_front() {
            Some(frame) => frame,
            None => self.recv_wire().await,
        }
    }

    async fn recv_wire(&mut self) -> Frame {
        let bytes = tokio::time::timeout(WAIT, self.io.next()).await.expect("frame in time").unwrap().unwrap();
        Frame::parse(&bytes).unwrap()
    }

    async fn call(&mut self, kind: FrameType, name: &str, body: Value) -> Frame {
        let id = self.send(kind, name, body).await;
        loop {
            let reply = self.recv_wire().await;
            if reply.kind == FrameType::Event {
                self.pending.push_back(reply);
                continue;
            }
            assert_eq!(reply.id, id, "{reply:?}");
            return reply;
        }
    }

    async fn command(&mut self, name: &str, body: Value) -> Value {
        let reply = self.call(FrameType::Command, name, body).await;
        assert_eq!(reply.kind, FrameType::Command, "{name}: {:?}", reply.body);
        reply.body
    }
}

fn coordinator(clock: Arc<dyn Clock>, delay: f64) -> Arc<Coordinator> {
    let config = IntentConfig { delay_seconds: delay, ..IntentConfig::default() };
    Arc::new(
        Coordinator::new(
            Arc::new(Broker::in_memory(BrokerConfig::default())),
            clock,
            config,
            AssetSettings::default(),
        )
        .unwrap(),
    )
}

async fn start(c: Arc<Coordinator>) -> GatewayHandle {
    let settings =
        GatewaySettings { bind: "127.0.0.1:0".into(), ws_bind: Some("127.0.0.1:0".into()) };
    gateway::serve(c, &settings).await.unwrap()
}

fn plan() -> Value {
    json!({
        "header": {"stamp": 0, "frame_id": "anchor"},
        "poses": [
            {"header": {"stamp": 0, "frame_id": "anchor"},
             "pose": {"position": {"x": 0.0, "y": 0.0, "z": 0.0},
                      "orientation": {"x": 0.0, "y": 0.0, "z": 0.0, "w": 1.0}}},
            {"header": {"stamp": 100000000, "frame_id": "anchor"},
             "pose": {"position": {"x": 1.0, "y": 0.0, "z": 0.0},
                      "orientation": {"x": 0.0, "y": 0.0, "z": 0.0, "w": 1.0}}}
        ]
    })
}

fn intent_event(frame: &Frame) -> IntentEvent {
    assert_eq!(frame.kind, FrameType::Event, "{frame:?}");
    serde_json::from_str(frame.body["payload"].as_str().unwrap()).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn subscribed_client_sees_preview_then_execution() {
    let c = coordinator(Arc::new(WallClock::new()), 0.2);
    let handle = start(c.clone()).await;
    let mut client = Client::connect(&handle).await;
    let robot = client.command("register_robot", json!({"marker": "cell-A"})).await;
    assert_eq!(robot["id"], 0);

    let ack = client.call(FrameType::Subscribe, INTENT_EVENTS_TOPIC, json!({})).await;
    assert_eq!(ack.kind, FrameType::Subscribe);
    assert_eq!(ack.body["position"], 0);
    let sub = ack.id;

    let published = client.call(FrameType::Publish, "/robot/0/navigation_plan", plan()).await;
    assert_eq!(published.kind, FrameType::Publish, "{:?}", published.body);
    let intent_id = published.body["intent"]["id"].as_u64().unwrap();

    let mut phases = Vec::new();
    while phases.len() < 3 {
        let frame = client.recv().await;
        assert_eq!(frame.id, sub);
        let ev = intent_event(&frame);
        assert_eq!(ev.intent_id, intent_id);
        phases.push((ev.phase, ev.stamp));
    }
    assert_eq!(phases[0].0, IntentPhase::PreviewStarted);
    assert_eq!(phases[1].0, IntentPhase::ExecutionStarted);
    assert_eq!(phases[2].0, IntentPhase::Completed);
    assert_eq!(phases[1].1 - phases[0].1, 200_000_000);
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread")]
async fn invalid_publish_is_rejected_without_a_write() {
    let c = coordinator(Arc::new(LogicalClock::new()), 3.0);
    let handle = start(c.clone()).await;
    let mut client = Client::connect(&handle).await;
    client.command("register_robot", json!({"marker": "cell-A"})).await;
    let before = c.broker().len("/robot/0/navigation_plan").unwrap();

    let mut bad = plan();
    bad["poses"][0]["pose"]["orientation"]["w"] = json!(0.0);
    let reply = client.call(FrameType::Publish, "/robot/0/navigation_plan", bad).await;
    assert_eq!(reply.kind, FrameType::Error);
    assert_eq!(reply.body["code"], "ValidationError");

    let wrong_type = client.call(FrameType::Publish, "/robot/0/navigation_plan", json!({"x": 1})).await;
    assert_eq!(wrong_type.kind, FrameType::Error);

    let system = client.call(FrameType::Publish, INTENT_EVENTS_TOPIC, json!({})).await;
    assert_eq!(system.body["code"], "SystemTopic");

    let missing = client.call(FrameType::Publish, "/robot/9/navigation_plan", plan()).await;
    assert_eq!(missing.body["code"], "TopicNotFound");

    assert_eq!(c.broker().len("/robot/0/navigation_plan").unwrap(), before);
    assert_eq!(c.broker().len(INTENT_EVENTS_TOPIC).unwrap(), 0);
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_frames_keep_the_session() {
    let c = coordinator(Arc::new(LogicalClock::new()), 3.0);
    let handle = start(c).await;
    let mut client = Client::connect(&handle).await;
    client.send_raw(b"{not json").await;
    let err = client.recv().await;
    assert_eq!(err.kind, FrameType::Error);
    assert_eq!(err.body["code"], "MalformedFrame");

    let unknown = client.call(FrameType::Command, "reboot", json!({})).await;
    assert_eq!(unknown.body["code"], "UnknownCommand");
    let bad_args = client.call(FrameType::Command, "register_robot", json!({"label": 1})).await;
    assert_eq!(bad_args.body["code"], "BadRequest");
    let event = client.call(FrameType::Event, "/system/registry", json!({})).await;
    assert_eq!(event.body["code"], "UnsupportedFrame");

    let config = client.command("get_config", Value::Null).await;
    assert_eq!(config["delay_seconds"], 3.0);
    let merged = client.command("configure", json!({"pose_rate_hz": 10.0})).await;
    assert_eq!(merged, json!({"delay_seconds": 3.0, "pose_rate_hz": 10.0}));
    let rejected = client.call(FrameType::Command, "configure", json!({"pose_rate_hz": 31.0})).await;
    assert_eq!(rejected.body["code"], "ValidationError");
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread")]
async fn events_fan_out_and_match_direct_fetch() {
    let c = coordinator(Arc::new(LogicalClock::new()), 3.0);
    let handle = start(c.clone()).await;
    let mut a = Client::connect(&handle).await;
    let mut b = Client::connect(&handle).await;
    a.command("register_object", json!({"category": "hammer"})).await;
    for client in [&mut a, &mut b] {
        let ack = client.call(FrameType::Subscribe, "/object/0/state", json!({"from_offset": 0})).await;
        assert_eq!(ack.kind, FrameType::Subscribe);
    }

    for i in 0..5 {
        let state = json!({
            "category": "hammer",
            "pose": {"position": {"x": i as f64, "y": 0.0, "z": 0.0},
                     "orientation": {"x": 0.0, "y": 0.0, "z": 0.0, "w": 1.0}},
            "joint_names": [],
            "joint_positions": []
        });
        let reply = a.call(FrameType::Publish, "/object/0/state", state).await;
        if reply.kind == FrameType::Error {
            panic!("{:?}", reply.body);
        }
    }

    let direct: Vec<Value> =
        c.broker().fetch("/object/0/state", 0, 100).unwrap().iter().map(record_json).collect();
    assert_eq!(direct.len(), 5);
    let mut got_a = Vec::new();
    while got_a.len() < 5 {
        got_a.push(a.recv().await.body);
    }
    let mut got_b = Vec::new();
    while got_b.len() < 5 {
        got_b.push(b.recv().await.body);
    }
    assert_eq!(got_a, direct);
    assert_eq!(got_b, direct);

    let fetched = b.call(FrameType::Fetch, "/object/0/state", json!({"from_offset": 3})).await;
    assert_eq!(fetched.body["records"], json!(direct[3..]));
    assert_eq!(fetched.body["next_offset"], 5);
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread")]
async fn websocket_clients_speak_the_same_frames() {
    let c = coordinator(Arc::new(LogicalClock::new()), 3.0);
    let handle = start(c).await;
    let url = format!("ws://{}", handle.ws_addr.unwrap());
    let (mut ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
    let req = Frame::new(FrameType::Command, "register_hmd", 42, json!({}));
    ws.send(WsMessage::text(String::from_utf8(req.to_bytes()).unwrap())).await.unwrap();
    let reply = loop {
        match tokio::time::timeout(WAIT, ws.next()).await.unwrap().unwrap().unwrap() {
            WsMessage::Text(t) => break Frame::parse(t.as_bytes()).unwrap(),
            _ => continue,
        }
    };
    assert_eq!(reply.id, 42);
    assert_eq!(reply.body["topics"], json!(["/hmd/0/pose"]));
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread")]
async fn one_clients_garbage_does_not_disturb_another() {
    let c = coordinator(Arc::new(LogicalClock::new()), 3.0);
    let handle = start(c.clone()).await;
    let mut good = Client::connect(&handle).await;
    let mut noisy = Client::connect(&handle).await;
    good.command("register_hmd", json!({})).await;
    good.command("observe_marker", json!({
        "label": "anchor",
        "marker_in_hmd": {"translation": {"x": 0.0, "y": 0.0, "z": 1.0},
                          "rotation": {"x": 0.0, "y": 0.0, "z": 0.0, "w": 1.0}}
    }))
    .await;
    good.call(FrameType::Subscribe, "/hmd/0/pose", json!({})).await;

    let pose = json!({"translation": {"x": 0.0, "y": 0.0, "z": 0.0}, "rotation": {"x": 0.0, "y": 0.0, "z": 0.0, "w": 1.0}});
    for stamp in 1..=3u64 {
        noisy.send_raw(&[0xff, 0x00, b'{']).await;
        assert_eq!(noisy.recv().await.body["code"], "MalformedFrame");
        good.command("push_hmd_pose", json!({"hmd": 0, "pose": pose, "stamp": stamp})).await;
    }
    let mut got = Vec::new();
    for _ in 0..3 {
        got.push(good.recv().await.body["offset"].as_u64().unwrap());
    }
    assert_eq!(got, [0, 1, 2]);
    handle.shutdown();
}
