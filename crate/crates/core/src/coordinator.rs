//! One facade over the broker, topic registry, anchors, intent scheduler,
//! model library and headset streams. The scenario runner and the gateway
//! both drive the system through it.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use crate::anchor::{AnchorError, AnchorEvent, AnchorRegistry};
use crate::assets::{AssetError, AssetLibrary, KinematicTree, RepositoryManifest};
use crate::broker::{Broker, BrokerError};
use crate::clock::Clock;
use crate::config::AssetSettings;
use crate::geometry::Transform;
use crate::intent::{
    sample_preview, IntentConfig, IntentError, IntentPayload, IntentScheduler, PoseRateGate,
    PreviewState, ScheduledIntent, INTENT_EVENTS_TOPIC,
};
use crate::message::{
    encode, CodecError, Header, IntentEvent, JointTrajectory, Message, Nanos, ObjectState, Path,
    PoseStamped,
};
use crate::topics::{format_topic, Channel, EntityKind, EntityRecord, RegistryError, TopicRegistry};

/// Marker placements, hologram adjustments, model assignments and
/// configuration changes, in the order they happened.
pub const SCENE_EVENTS_TOPIC: &str = "/system/scene_events";

/// Frame every headset pose is expressed in.
pub const ANCHOR_FRAME: &str = "anchor";

#[derive(Debug, thiserror::Error)]
pub enum CoordinatorError {
    #[error("robot not found: {0}")]
    RobotNotFound(u32),
    #[error("hmd not found: {0}")]
    HmdNotFound(u32),
    #[error("object not found: {0}")]
    ObjectNotFound(u32),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Broker(#[from] BrokerError),
    #[error(transparent)]
    Anchor(#[from] AnchorError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl CoordinatorError {
    /// Stable name used in ERROR frames and run reports.
    pub fn code(&self) -> &'static str {
        use CoordinatorError as E;
        match self {
            E::RobotNotFound(_) | E::Intent(IntentError::RobotNotFound(_)) => "RobotNotFound",
            E::HmdNotFound(_) => "HmdNotFound",
            E::ObjectNotFound(_) => "ObjectNotFound",
            E::Registry(RegistryError::Validation(_)) => "ValidationError",
            E::Registry(RegistryError::Broker(_)) | E::Broker(_) => "BrokerError",
            E::Registry(RegistryError::Corrupt { .. }) => "CorruptLog",
            E::Anchor(AnchorError::LocalizationUnavailable) => "LocalizationUnavailable",
            E::Anchor(AnchorError::MarkerNotFound(_)) => "MarkerNotFound",
            E::Anchor(AnchorError::StampNotIncreasing { .. }) => "StampNotIncreasing",
            E::Anchor(_) => "ValidationError",
            E::Intent(IntentError::Validation(_)) => "ValidationError",
            E::Intent(IntentError::Clock { .. }) => "ClockError",
            E::Intent(IntentError::UnknownJoint { .. }) => "UnknownJoint",
            E::Intent(IntentError::ModelNotLoaded(_)) => "ModelNotLoaded",
            E::Intent(IntentError::IntentNotFound(_)) => "IntentNotFound",
            E::Asset(AssetError::Parse(_)) => "ParseError",
            E::Asset(AssetError::Structure(_)) => "StructureError",
            E::Asset(AssetError::UnsupportedJoint { .. }) => "UnsupportedJoint",
            E::Asset(AssetError::Config(_)) => "ConfigError",
            E::Asset(AssetError::Limit { .. }) => "LimitError",
            E::Asset(AssetError::Fetch { .. }) => "FetchError",
            E::Asset(AssetError::Integrity { .. }) => "IntegrityError",
            E::Asset(AssetError::Validation(_)) => "ValidationError",
            E::Asset(AssetError::NotFound(_)) => "NotFound",
            E::Codec(CodecError::Decode(_)) => "DecodeError",
            E::Codec(CodecError::SchemaMismatch { .. }) => "SchemaMismatch",
            E::Codec(CodecError::Validation(_)) => "ValidationError",
        }
    }
}

pub type Result<T, E = CoordinatorError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SceneEvent {
    Marker { hmd_id: Option<u32>, observation: AnchorEvent },
    HologramAdjusted { robot_id: u32, delta: Transform, offset: Transform },
    ModelAssigned { robot_id: u32, model: String },
    Configured { config: IntentConfig },
}

/// What a submit produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Submission {
    pub intent: ScheduledIntent,
    pub plan_offset: u64,
    pub events: Vec<IntentEvent>,
}

#[derive(Default)]
struct HmdStream {
    gate: Option<PoseRateGate>,
    pose: Transform,
}

struct State {
    anchors: AnchorRegistry,
    scheduler: IntentScheduler,
    models: BTreeMap<u32, (String, Arc<KinematicTree>)>,
    hmds: BTreeMap<u32, HmdStream>,
    robot_manifest: Option<RepositoryManifest>,
    object_manifest: Option<RepositoryManifest>,
}

pub struct Coordinator {
    broker: Arc<Broker>,
    registry: TopicRegistry,
    library: AssetLibrary,
    repositories: AssetSettings,
    clock: Arc<dyn Clock>,
    state: Mutex<State>,
}

impl Coordinator {
    pub fn new(
        broker: Arc<Broker>,
        clock: Arc<dyn Clock>,
        config: IntentConfig,
        repositories: AssetSettings,
    ) -> Result<Coordinator> {
        config.validate()?;
        let registry = TopicRegistry::open(broker.clone())?;
        broker.create_topic(INTENT_EVENTS_TOPIC)?;
        broker.create_topic(SCENE_EVENTS_TOPIC)?;
        let hmds = registry
            .entities()
            .into_iter()
            .filter(|e| e.kind == EntityKind::Hmd)
            .map(|e| (e.id, HmdStream::default()))
            .collect();
        Ok(Coordinator {
            broker,
            registry,
            library: AssetLibrary::default(),
            repositories,
            clock,
            state: Mutex::new(State {
                anchors: AnchorRegistry::new(),
                scheduler: IntentScheduler::new(config),
                models: BTreeMap::new(),
                hmds,
                robot_manifest: None,
                object_manifest: None,
            }),
        })
    }

    pub fn with_library(mut self, library: AssetLibrary) -> Self {
        self.library = library;
        self
    }

    pub fn broker(&self) -> &Arc<Broker> {
        &self.broker
    }

    pub fn registry(&self) -> &TopicRegistry {
        &self.registry
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn now(&self) -> Nanos {
        self.clock.now()
    }

    fn state(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn publish_scene(&self, event: &SceneEvent, now: Nanos) -> Result<u64> {
        let payload = serde_json::to_vec(event).expect("scene events serialize");
        Ok(self.broker.publish(SCENE_EVENTS_TOPIC, payload, now)?)
    }

    fn publish_message(&self, topic: &str, message: &Message, now: Nanos) -> Result<u64> {
        Ok(self.broker.publish(topic, encode(message)?, now)?)
    }

    fn robot(&self, id: u32) -> Result<EntityRecord> {
        self.registry.get(EntityKind::Robot, id).ok_or(CoordinatorError::RobotNotFound(id))
    }

    // ---- registration and models ----

    /// Registers (or looks up) the robot behind a marker payload, optionally
    /// loading its model from the robot repository.
    pub fn register_robot(&self, marker: &str, model: Option<&str>) -> Result<EntityRecord> {
        let record = self.registry.register_robot(marker)?;
        if let Some(model) = model {
            self.assign_model(record.id, model)?;
        }
        Ok(record)
    }

    pub fn register_hmd(&self) -> Result<EntityRecord> {
        let record = self.registry.register_hmd()?;
        let mut st = self.state();
        let rate = st.scheduler.config().pose_rate_hz;
        let mut stream = HmdStream::default();
        if st.anchors.is_anchored() {
            let mut gate = PoseRateGate::new(rate);
            gate.start(self.clock.now());
            stream.gate = Some(gate);
        }
        st.hmds.insert(record.id, stream);
        Ok(record)
    }

    pub fn register_object(&self, category: &str) -> Result<EntityRecord> {
        Ok(self.registry.register_object(category)?)
    }

    fn manifest(&self, robots: bool, refresh: bool) -> Result<RepositoryManifest> {
        let cached = {
            let st = self.state();
            if robots { st.robot_manifest.clone() } else { st.object_manifest.clone() }
        };
        if let (Some(m), false) = (cached, refresh) {
            return Ok(m);
        }
        let uri = if robots {
            &self.repositories.robot_repository
        } else {
            &self.repositories.object_repository
        };
        let manifest = self.library.fetch_manifest(uri)?;
        let mut st = self.state();
        let slot = if robots { &mut st.robot_manifest } else { &mut st.object_manifest };
        *slot = Some(manifest.clone());
        Ok(manifest)
    }

    /// Re-fetches both manifests so newly uploaded models show up.
    pub fn list_models(&self) -> Result<(RepositoryManifest, RepositoryManifest)> {
        Ok((self.manifest(true, true)?, self.manifest(false, true)?))
    }

    /// Kinematic tree for a robot model, or an articulated object model.
    pub fn resolve_model(&self, name: &str) -> Result<Arc<KinematicTree>> {
        let robots = self.manifest(true, false)?;
        if robots.entry(name).is_some() {
            return Ok(self.library.resolve_robot(name, &robots)?);
        }
        let objects = self.manifest(false, false)?;
        Ok(self.library.resolve_robot(name, &objects)?)
    }

    pub fn assign_model(&self, robot_id: u32, model: &str) -> Result<Arc<KinematicTree>> {
        self.robot(robot_id)?;
        let tree = self.resolve_model(model)?;
        let now = self.clock.now();
        let mut st = self.state();
        let changed = st.models.get(&robot_id).is_none_or(|(m, _)| m != model);
        st.models.insert(robot_id, (model.to_string(), tree.clone()));
        if changed {
            self.publish_scene(&SceneEvent::ModelAssigned { robot_id, model: model.into() }, now)?;
        }
        Ok(tree)
    }

    pub fn robot_model(&self, robot_id: u32) -> Option<(String, Arc<KinematicTree>)> {
        self.state().models.get(&robot_id).cloned()
    }

    pub fn publish_object_state(&self, object_id: u32, state: ObjectState) -> Result<u64> {
        self.registry
            .get(EntityKind::Object, object_id)
            .ok_or(CoordinatorError::ObjectNotFound(object_id))?;
        let topic = format_topic(EntityKind::Object, object_id, Channel::State);
        let now = self.clock.now();
        let _st = self.state();
        self.publish_message(&topic, &Message::ObjectState(state), now)
    }

    // ---- localization ----

    /// Records a marker sighting. The headset's anchor-frame pose comes from
    /// `hmd_in_anchor` when given, otherwise from the last pose of `hmd_id`.
    pub fn observe_marker(
        &self,
        label: &str,
        marker_in_hmd: &Transform,
        hmd_id: Option<u32>,
        hmd_in_anchor: Option<Transform>,
    ) -> Result<AnchorEvent> {
        let now = self.clock.now();
        let mut st = self.state();
        let known_pose = match hmd_id {
            Some(id) => {
                let stream = st.hmds.get(&id).ok_or(CoordinatorError::HmdNotFound(id))?;
                (st.anchors.is_anchored()).then_some(stream.pose)
            }
            None => None,
        };
        let event = st.anchors.observe_marker(label, marker_in_hmd, hmd_in_anchor.or(known_pose).as_ref())?;
        if let AnchorEvent::AnchorEstablished { hmd_in_anchor: derived, .. } = &event {
            let rate = st.scheduler.config().pose_rate_hz;
            for (id, stream) in st.hmds.iter_mut() {
                if Some(*id) == hmd_id {
                    stream.pose = *derived;
                }
                let mut gate = PoseRateGate::new(rate);
                gate.start(now);
                stream.gate = Some(gate);
            }
        }
        self.publish_scene(&SceneEvent::Marker { hmd_id, observation: event.clone() }, now)?;
        Ok(event)
    }

    pub fn relative_transform(&self, a: &str, b: &str) -> Result<Transform> {
        Ok(self.state().anchors.relative_transform(a, b)?)
    }

    pub fn marker_poses(&self) -> BTreeMap<String, Transform> {
        self.state().anchors.markers().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    pub fn primary_marker(&self) -> Option<String> {
        self.state().anchors.primary_marker().map(str::to_string)
    }

    pub fn adjust_hologram(&self, robot_id: u32, delta: &Transform) -> Result<Transform> {
        self.robot(robot_id)?;
        let now = self.clock.now();
        let mut st = self.state();
        let offset = st.anchors.adjust_hologram(robot_id, delta)?;
        self.publish_scene(&SceneEvent::HologramAdjusted { robot_id, delta: *delta, offset }, now)?;
        Ok(offset)
    }

    /// Render pose of a robot hologram: its marker pose with the manual
    /// offset on top.
    pub fn hologram_pose(&self, robot_id: u32) -> Result<Transform> {
        let robot = self.robot(robot_id)?;
        Ok(self.state().anchors.hologram_pose(&robot.label, robot_id)?)
    }

    /// Sets the pose the headset reports from its next rate-gated sample.
    pub fn set_hmd_pose(&self, hmd_id: u32, pose: Transform) -> Result<()> {
        if !pose.is_valid() {
            return Err(AnchorError::InvalidTransform.into());
        }
        let mut st = self.state();
        st.hmds.get_mut(&hmd_id).ok_or(CoordinatorError::HmdNotFound(hmd_id))?.pose = pose;
        Ok(())
    }

    /// Publishes one headset pose sample immediately.
    pub fn push_hmd_pose(&self, hmd_id: u32, pose: Transform, stamp: Nanos) -> Result<u64> {
        let now = self.clock.now();
        let mut st = self.state();
        let stream = st.hmds.get_mut(&hmd_id).ok_or(CoordinatorError::HmdNotFound(hmd_id))?;
        if !pose.is_valid() {
            return Err(AnchorError::InvalidTransform.into());
        }
        stream.pose = pose;
        st.anchors.accept_hmd_sample(hmd_id, stamp)?;
        self.publish_hmd(hmd_id, pose, stamp, now)
    }

    fn publish_hmd(&self, hmd_id: u32, pose: Transform, stamp: Nanos, now: Nanos) -> Result<u64> {
        let msg = PoseStamped { header: Header::new(stamp, ANCHOR_FRAME), pose: pose.into() };
        let topic = format_topic(EntityKind::Hmd, hmd_id, Channel::Pose);
        self.publish_message(&topic, &Message::PoseStamped(msg), now.max(stamp))
    }

    // ---- intents ----

    pub fn submit_navigation(&self, robot_id: u32, plan: Path) -> Result<Submission> {
        self.robot(robot_id)?;
        self.submit(robot_id, Channel::NavigationPlan, IntentPayload::Navigation(plan))
    }

    pub fn submit_manipulation(&self, robot_id: u32, traj: JointTrajectory) -> Result<Submission> {
        self.robot(robot_id)?;
        {
            let st = self.state();
            let (_, tree) = st.models.get(&robot_id).ok_or(IntentError::ModelNotLoaded(robot_id))?;
            if let Some(bad) = traj.joint_names.iter().find(|n| tree.joint(n).is_none_or(|j| !j.kind.is_moving())) {
                return Err(IntentError::UnknownJoint { robot_id, joint: bad.clone() }.into());
            }
        }
        self.submit(robot_id, Channel::JointTrajectory, IntentPayload::Manipulation(traj))
    }

    fn submit(&self, robot_id: u32, channel: Channel, payload: IntentPayload) -> Result<Submission> {
        let message = match &payload {
            IntentPayload::Navigation(p) => Message::Path(p.clone()),
            IntentPayload::Manipulation(t) => Message::JointTrajectory(t.clone()),
        };
        let bytes = encode(&message)?;
        let now = self.clock.now();
        let mut st = self.state();
        let (intent, events) = st.scheduler.submit(robot_id, payload, now)?;
        let topic = format_topic(EntityKind::Robot, robot_id, channel);
        let plan_offset = self.broker.publish(&topic, bytes, now)?;
        for e in &events {
            self.publish_message(INTENT_EVENTS_TOPIC, &Message::IntentEvent(e.clone()), now)?;
        }
        Ok(Submission { intent, plan_offset, events })
    }

    pub fn intent(&self, id: u64) -> Result<ScheduledIntent> {
        self.state().scheduler.get(id).cloned().ok_or_else(|| IntentError::IntentNotFound(id).into())
    }

    pub fn sample_preview(&self, intent_id: u64, t: f64) -> Result<PreviewState> {
        Ok(sample_preview(&self.intent(intent_id)?, t))
    }

    pub fn config(&self) -> IntentConfig {
        self.state().scheduler.config()
    }

    pub fn configure(&self, config: IntentConfig) -> Result<()> {
        let now = self.clock.now();
        let mut st = self.state();
        st.scheduler.configure(config)?;
        for stream in st.hmds.values_mut() {
            if let Some(g) = &mut stream.gate {
                g.set_rate(config.pose_rate_hz);
            }
        }
        self.publish_scene(&SceneEvent::Configured { config }, now)?;
        Ok(())
    }

    // ---- time ----

    /// Emits every headset sample and intent transition due by the clock's
    /// current time.
    pub fn tick(&self) -> Result<Vec<IntentEvent>> {
        let now = self.clock.now();
        let mut st = self.state();
        let st = &mut *st;
        for (id, stream) in st.hmds.iter_mut() {
            let Some(gate) = &mut stream.gate else { continue };
            while let Some(due) = gate.take_due(now) {
                if st.anchors.accept_hmd_sample(*id, due).is_ok() {
                    self.publish_hmd(*id, stream.pose, due, now)?;
                }
            }
        }
        let events = st.scheduler.tick(now)?;
        for e in &events {
            self.publish_message(INTENT_EVENTS_TOPIC, &Message::IntentEvent(e.clone()), now)?;
        }
        Ok(events)
    }

    /// Earliest time at which [`tick`](Self::tick) has work.
    pub fn next_due(&self) -> Option<Nanos> {
        let st = self.state();
        let gates = st.hmds.values().filter_map(|s| s.gate.as_ref()?.next_due());
        gates.chain(st.scheduler.next_due()).min()
    }

    /// Earliest pending intent transition, ignoring headset streams.
    pub fn intents_next_due(&self) -> Option<Nanos> {
        self.state().scheduler.next_due()
    }

    /// Ticks at every due time up to and including `target`, waiting on the
    /// clock in between.
    pub fn run_until(&self, target: Nanos) -> Result<Vec<IntentEvent>> {
        let mut out = Vec::new();
        loop {
            match self.next_due() {
                Some(due) if due <= target => {
                    self.clock.wait_until(due);
                    out.extend(self.tick()?);
                }
                _ => break,
            }
        }
        self.clock.wait_until(target);
        out.extend(self.tick()?);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broker::BrokerConfig;
    use crate::clock::LogicalClock;
    use crate::intent::IntentStatus;
    use crate::message::{IntentPhase, JointTrajectoryPoint};

    const S: Nanos = 1_000_000_000;

    fn system() -> (Coordinator, Arc<LogicalClock>) {
        let clock = Arc::new(LogicalClock::new());
        let c = Coordinator::new(
            Arc::new(Broker::in_memory(BrokerConfig::default())),
            clock.clone(),
            IntentConfig::default(),
            AssetSettings::default(),
        )
        .unwrap();
        (c, clock)
    }

    fn ur5_traj(names: &[&str]) -> JointTrajectory {
        JointTrajectory {
            header: Header::new(0, "base_link"),
            joint_names: names.iter().map(|s| s.to_string()).collect(),
            points: vec![
                JointTrajectoryPoint::at(0.0, vec![0.0; names.len()]),
                JointTrajectoryPoint::at(0.5, vec![0.3; names.len()]),
            ],
        }
    }

    const UR5_JOINTS: [&str; 6] = [
        "shoulder_pan_joint",
        "shoulder_lift_joint",
        "elbow_joint",
        "wrist_1_joint",
        "wrist_2_joint",
        "wrist_3_joint",
    ];

    #[test]
    fn manipulation_checks_model() {
        let (c, _) = system();
        let r = c.register_robot("robot-A", None).unwrap();
        let err = c.submit_manipulation(r.id, ur5_traj(&UR5_JOINTS)).unwrap_err();
        assert_eq!(err.code(), "ModelNotLoaded");
        c.assign_model(r.id, "ur5").unwrap();
        c.submit_manipulation(r.id, ur5_traj(&UR5_JOINTS)).unwrap();
        let err = c.submit_manipulation(r.id, ur5_traj(&["elbow_zz"])).unwrap_err();
        assert_eq!(err.code(), "UnknownJoint");
        assert_eq!(c.submit_manipulation(9, ur5_traj(&UR5_JOINTS)).unwrap_err().code(), "RobotNotFound");
    }

    #[test]
    fn lifecycle_is_published() {
        let (c, clock) = system();
        let r = c.register_robot("robot-A", Some("ur5")).unwrap();
        clock.set(S);
        let sub = c.submit_manipulation(r.id, ur5_traj(&UR5_JOINTS)).unwrap();
        assert_eq!(sub.intent.execute_epoch, 4 * S);
        let events = c.run_until(10 * S).unwrap();
        let phases: Vec<_> = events.iter().map(|e| (e.phase, e.stamp)).collect();
        assert_eq!(
            phases,
            [(IntentPhase::ExecutionStarted, 4 * S), (IntentPhase::Completed, 4 * S + S / 2)]
        );
        assert_eq!(c.broker().len(INTENT_EVENTS_TOPIC).unwrap(), 3);
        assert_eq!(c.broker().len("/robot/0/joint_trajectory").unwrap(), 1);
        assert_eq!(c.state().scheduler.status(0), Some(IntentStatus::Completed));
    }

    #[test]
    fn hmd_streams_start_with_anchor() {
        let (c, _) = system();
        let h = c.register_hmd().unwrap();
        c.configure(IntentConfig::new(3.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.next_due(), None);
        assert_eq!(c.push_hmd_pose(h.id, Transform::IDENTITY, 0).unwrap_err().code(), "LocalizationUnavailable");
        c.observe_marker("robot-A", &Transform::from_translation(0.0, 0.0, 2.0), Some(h.id), None).unwrap();
        c.run_until(10 * S).unwrap();
        assert_eq!(c.broker().len("/hmd/0/pose").unwrap(), 11);
    }

    #[test]
    fn hologram_adjustment_needs_robot() {
        let (c, _) = system();
        assert_eq!(c.adjust_hologram(0, &Transform::IDENTITY).unwrap_err().code(), "RobotNotFound");
        c.register_robot("m", None).unwrap();
        c.observe_marker("m", &Transform::IDENTITY, None, None).unwrap();
        let off = c.adjust_hologram(0, &Transform::from_translation(0.05, 0.0, 0.0)).unwrap();
        assert_eq!(c.hologram_pose(0).unwrap(), off);
    }

    #[test]
    fn configure_rejects_out_of_range_rate() {
        let (c, _) = system();
        let bad = IntentConfig { delay_seconds: 3.0, pose_rate_hz: 31.0 };
        assert_eq!(c.configure(bad).unwrap_err().code(), "ValidationError");
    }
}
