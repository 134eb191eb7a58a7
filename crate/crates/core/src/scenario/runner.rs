use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::report::{ClockMode, IntentReport, PoseRateReport, RunReport, StepError};
use super::script::{Action, ScenarioScript};
use super::ScenarioError;
use crate::broker::{Broker, BrokerConfig};
use crate::clock::{Clock, LogicalClock, WallClock};
use crate::config::AssetSettings;
use crate::coordinator::{Coordinator, CoordinatorError};
use crate::intent::{IntentConfig, INTENT_EVENTS_TOPIC};
use crate::logio::{import_log, LogIoError};
use crate::message::{
    decode, nanos_to_seconds, seconds_to_nanos, IntentEvent, IntentPhase, Message, MessageKind,
    Nanos, PoseStamped,
};
use crate::topics::EntityKind;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub clock: ClockMode,
    /// Defaults for anything the script does not set.
    pub config: IntentConfig,
    pub repositories: AssetSettings,
    /// Persist the broker log here instead of keeping it in memory.
    pub data_dir: Option<PathBuf>,
    pub replicas: usize,
    /// Directory `replay_log` paths resolve against.
    pub base_dir: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            clock: ClockMode::Logical,
            config: IntentConfig::default(),
            repositories: AssetSettings::default(),
            data_dir: None,
            replicas: BrokerConfig::default().replicas,
            base_dir: PathBuf::from("."),
        }
    }
}

pub fn run_scenario_file(path: &Path, mut options: RunOptions) -> Result<RunReport, ScenarioError> {
    let script = ScenarioScript::from_json(&std::fs::read(path)?)?;
    options.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_scenario(&script, &options)
}

#[derive(Debug, thiserror::Error)]
enum StepFailure {
    #[error(transparent)]
    System(#[from] CoordinatorError),
    #[error("replaying log: {0}")]
    Replay(LogIoError),
}

impl StepFailure {
    fn code(&self) -> &'static str {
        match self {
            StepFailure::System(e) => e.code(),
            StepFailure::Replay(_) => "ReplayError",
        }
    }
}

struct Run<'a> {
    system: Coordinator,
    clock: Arc<dyn Clock>,
    observed: BTreeMap<u64, Nanos>,
    options: &'a RunOptions,
}

impl Run<'_> {
    /// Ticks at every due time up to `target`, noting when each execution
    /// was actually released.
    fn advance_to(&mut self, target: Nanos) -> Result<(), CoordinatorError> {
        loop {
            let due = self.system.next_due().filter(|d| *d <= target);
            self.clock.wait_until(due.unwrap_or(target));
            let events = self.system.tick()?;
            let now = self.clock.now();
            for e in events.iter().filter(|e| e.phase == IntentPhase::ExecutionStarted) {
                self.observed.insert(e.intent_id, now);
            }
            if due.is_none() {
                return Ok(());
            }
        }
    }

    fn step(&mut self, action: &Action) -> Result<(), StepFailure> {
        let s = &self.system;
        match action {
            Action::RegisterRobot { marker, model } => {
                s.register_robot(marker, model.as_deref())?;
            }
            Action::RegisterHmd {} => {
                s.register_hmd()?;
            }
            Action::RegisterObject { category } => {
                s.register_object(category)?;
            }
            Action::ObserveMarker { label, marker_in_hmd, hmd, hmd_in_anchor } => {
                s.observe_marker(label, marker_in_hmd, *hmd, *hmd_in_anchor)?;
            }
            Action::SetHmdPose { hmd, pose } => s.set_hmd_pose(*hmd, *pose)?,
            Action::SubmitNavigation { robot, plan } => {
                s.submit_navigation(*robot, plan.clone())?;
            }
            Action::SubmitManipulation { robot, trajectory } => {
                s.submit_manipulation(*robot, trajectory.clone())?;
            }
            Action::PublishObjectState { object, state } => {
                s.publish_object_state(*object, state.clone())?;
            }
            Action::Configure { delay_seconds, pose_rate_hz } => {
                let current = s.config();
                s.configure(IntentConfig {
                    delay_seconds: delay_seconds.unwrap_or(current.delay_seconds),
                    pose_rate_hz: pose_rate_hz.unwrap_or(current.pose_rate_hz),
                })?;
            }
            Action::AdjustHologram { robot, delta } => {
                s.adjust_hologram(*robot, delta)?;
            }
            Action::AdvanceClock { seconds } => {
                let target = self.clock.now() + seconds_to_nanos(*seconds);
                self.advance_to(target)?;
            }
            Action::ReplayLog { path } => {
                let full = self.options.base_dir.join(path);
                import_log(s.broker(), &full).map_err(StepFailure::Replay)?;
            }
        }
        Ok(())
    }
}

/// Runs `script` against a fresh system. Reference errors in the script are
/// reported before anything runs; failures of individual steps at run time
/// are recorded in the report and the run continues.
pub fn run_scenario(script: &ScenarioScript, options: &RunOptions) -> Result<RunReport, ScenarioError> {
    script.validate()?;
    let setup = |e: &dyn std::fmt::Display| ScenarioError::Setup(e.to_string());
    let broker_config = BrokerConfig { replicas: options.replicas };
    let broker = Arc::new(match &options.data_dir {
        Some(dir) => Broker::open(dir, broker_config).map_err(|e| setup(&e))?,
        None => Broker::in_memory(broker_config),
    });
    let clock: Arc<dyn Clock> = match options.clock {
        ClockMode::Logical => Arc::new(LogicalClock::new()),
        ClockMode::Wall => Arc::new(WallClock::new()),
    };
    let config = script.config.unwrap_or(options.config);
    let system = Coordinator::new(broker, clock.clone(), config, options.repositories.clone())
        .map_err(|e| setup(&e))?;
    let mut run = Run { system, clock, observed: BTreeMap::new(), options };
    let mut errors = Vec::new();

    for (index, step) in script.steps.iter().enumerate() {
        let result = match step.at {
            Some(at) => run.advance_to(seconds_to_nanos(at)).map_err(StepFailure::from),
            None => Ok(()),
        }
        .and_then(|()| run.step(&step.action));
        if let Err(e) = result {
            tracing::warn!(step = index, op = step.action.name(), error = %e, "scenario step failed");
            errors.push(StepError {
                step: index,
                op: step.action.name().into(),
                code: e.code().into(),
                message: e.to_string(),
            });
        }
    }
    // Let every scheduled intent finish.
    while let Some(due) = run.system.intents_next_due() {
        if let Err(e) = run.advance_to(due) {
            errors.push(StepError {
                step: script.steps.len(),
                op: "drain".into(),
                code: e.code().into(),
                message: e.to_string(),
            });
            break;
        }
    }
    Ok(build_report(script, options.clock, &run, errors))
}

fn build_report(script: &ScenarioScript, mode: ClockMode, run: &Run, errors: Vec<StepError>) -> RunReport {
    let broker = run.system.broker();
    let final_time = run.clock.now();
    let topic_counts: BTreeMap<String, u64> = broker
        .topic_names()
        .into_iter()
        .map(|t| {
            let n = broker.len(&t).unwrap_or(0);
            (t, n)
        })
        .collect();

    let mut intents: BTreeMap<u64, IntentReport> = BTreeMap::new();
    for record in broker.fetch(INTENT_EVENTS_TOPIC, 0, usize::MAX).unwrap_or_default() {
        let Ok(Message::IntentEvent(e)) = decode(MessageKind::IntentEvent, &record.payload) else {
            continue;
        };
        let IntentEvent { intent_id, robot_id, kind, phase, stamp } = e;
        let entry = intents.entry(intent_id).or_insert(IntentReport {
            intent_id,
            robot_id,
            kind,
            preview_stamp: stamp,
            execution_stamp: None,
            completed_stamp: None,
            cancelled: false,
            lead_time_ns: None,
            lead_time_seconds: None,
            observed_lead_seconds: None,
        });
        match phase {
            IntentPhase::PreviewStarted => entry.preview_stamp = stamp,
            IntentPhase::ExecutionStarted => {
                entry.execution_stamp = Some(stamp);
                let lead = stamp - entry.preview_stamp;
                entry.lead_time_ns = Some(lead);
                entry.lead_time_seconds = Some(nanos_to_seconds(lead));
                entry.observed_lead_seconds = run
                    .observed
                    .get(&intent_id)
                    .map(|t| nanos_to_seconds(t.saturating_sub(entry.preview_stamp)));
            }
            IntentPhase::Completed => entry.completed_stamp = Some(stamp),
            IntentPhase::Cancelled => entry.cancelled = true,
        }
    }

    let rate = run.system.config().pose_rate_hz;
    let pose_rate = run
        .system
        .registry()
        .entities()
        .into_iter()
        .filter(|e| e.kind == EntityKind::Hmd)
        .map(|hmd| {
            let topic = &hmd.topics[0];
            let records = broker.len(topic).unwrap_or(0);
            let start = broker
                .fetch(topic, 0, 1)
                .ok()
                .and_then(|r| r.into_iter().next())
                .and_then(|r| serde_json::from_slice::<PoseStamped>(&r.payload).ok())
                .map(|p| p.header.stamp);
            let window = start.map_or(0.0, |s| nanos_to_seconds(final_time.saturating_sub(s)));
            let expected = (window * rate).floor() as u64;
            PoseRateReport {
                hmd_id: hmd.id,
                rate_hz: rate,
                window_seconds: window,
                records,
                expected,
                compliant: records.abs_diff(expected) <= 1,
            }
        })
        .collect();

    RunReport {
        scenario: script.name.clone(),
        clock: mode,
        final_time_ns: final_time,
        intents: intents.into_values().collect(),
        topic_counts,
        pose_rate,
        errors,
    }
}
