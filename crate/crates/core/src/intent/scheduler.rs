use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{IntentConfig, IntentError};
use crate::message::{
    nanos_to_seconds, seconds_to_nanos, validate, IntentEvent, IntentKind, IntentPhase,
    JointTrajectory, Message, Nanos, Path,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum IntentPayload {
    Navigation(Path),
    Manipulation(JointTrajectory),
}

impl IntentPayload {
    pub fn kind(&self) -> IntentKind {
        match self {
            IntentPayload::Navigation(_) => IntentKind::Navigation,
            IntentPayload::Manipulation(_) => IntentKind::Manipulation,
        }
    }

    /// How long the action takes when executed at its own timing.
    pub fn native_duration(&self) -> Nanos {
        match self {
            IntentPayload::Navigation(p) => match (p.poses.first(), p.poses.last()) {
                (Some(a), Some(b)) => b.header.stamp.saturating_sub(a.header.stamp),
                _ => 0,
            },
            IntentPayload::Manipulation(t) => {
                t.points.last().map_or(0, |p| seconds_to_nanos(p.time_from_start))
            }
        }
    }

    fn check(&self) -> Result<(), IntentError> {
        let (empty, message) = match self {
            IntentPayload::Navigation(p) => (p.poses.is_empty(), Message::from(p.clone())),
            IntentPayload::Manipulation(t) => (t.points.is_empty(), Message::from(t.clone())),
        };
        if empty {
            return Err(IntentError::Validation(format!("{} has no points", message.kind())));
        }
        let violations = validate(&message);
        if violations.is_empty() {
            Ok(())
        } else {
            let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
            Err(IntentError::Validation(text.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentStatus {
    Previewing,
    Executing,
    Completed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledIntent {
    pub id: u64,
    pub robot_id: u32,
    pub kind: IntentKind,
    pub payload: IntentPayload,
    pub preview_epoch: Nanos,
    pub execute_epoch: Nanos,
    /// Delay in force when the intent was submitted.
    pub delay: Nanos,
    pub native_duration: Nanos,
}

impl ScheduledIntent {
    pub fn complete_epoch(&self) -> Nanos {
        self.execute_epoch + self.native_duration
    }

    /// Length of the hologram animation. Navigation stretches to at least
    /// the delay; manipulation plays at native speed.
    pub fn preview_duration_seconds(&self) -> f64 {
        match self.kind {
            IntentKind::Navigation => nanos_to_seconds(self.delay.max(self.native_duration)),
            IntentKind::Manipulation => nanos_to_seconds(self.native_duration),
        }
    }

    fn event(&self, phase: IntentPhase, stamp: Nanos) -> IntentEvent {
        IntentEvent { intent_id: self.id, robot_id: self.robot_id, kind: self.kind, phase, stamp }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    intent: ScheduledIntent,
    status: IntentStatus,
}

/// Single-writer lifecycle state for all intents.
#[derive(Debug, Clone)]
pub struct IntentScheduler {
    config: IntentConfig,
    next_id: u64,
    last_now: Nanos,
    entries: BTreeMap<u64, Entry>,
    /// Latest intent per robot that has not started executing.
    pending: BTreeMap<u32, u64>,
}

impl Default for IntentScheduler {
    fn default() -> Self {
        Self::new(IntentConfig::default())
    }
}

impl IntentScheduler {
    pub fn new(config: IntentConfig) -> Self {
        Self { config, next_id: 0, last_now: 0, entries: BTreeMap::new(), pending: BTreeMap::new() }
    }

    pub fn config(&self) -> IntentConfig {
        self.config
    }

    /// Takes effect for intents submitted afterwards.
    pub fn configure(&mut self, config: IntentConfig) -> Result<(), IntentError> {
        config.validate()?;
        self.config = config;
        Ok(())
    }

    fn observe(&mut self, now: Nanos) -> Result<(), IntentError> {
        if now < self.last_now {
            return Err(IntentError::Clock { now, last: self.last_now });
        }
        self.last_now = now;
        Ok(())
    }

    /// Schedules a preview at `now` and execution at `now + delay`.
    ///
    /// Returns the intent and the events it caused: a `cancelled` event for
    /// a superseded predecessor, if any, followed by `preview_started`.
    pub fn submit(
        &mut self,
        robot_id: u32,
        payload: IntentPayload,
        now: Nanos,
    ) -> Result<(ScheduledIntent, Vec<IntentEvent>), IntentError> {
        payload.check()?;
        self.observe(now)?;
        let mut events = Vec::with_capacity(2);
        if let Some(prev) = self.pending.remove(&robot_id) {
            let entry = self.entries.get_mut(&prev).expect("pending intent is tracked");
            entry.status = IntentStatus::Cancelled;
            events.push(entry.intent.event(IntentPhase::Cancelled, now));
        }
        let delay = seconds_to_nanos(self.config.delay_seconds);
        let intent = ScheduledIntent {
            id: self.next_id,
            robot_id,
            kind: payload.kind(),
            native_duration: payload.native_duration(),
            payload,
            preview_epoch: now,
            execute_epoch: now + delay,
            delay,
        };
        self.next_id += 1;
        events.push(intent.event(IntentPhase::PreviewStarted, now));
        self.pending.insert(robot_id, intent.id);
        self.entries.insert(intent.id, Entry { intent: intent.clone(), status: IntentStatus::Previewing });
        Ok((intent, events))
    }

    /// Emits every lifecycle transition due by `now`, stamped with its
    /// scheduled epoch and ordered by (stamp, intent id, phase).
    pub fn tick(&mut self, now: Nanos) -> Result<Vec<IntentEvent>, IntentError> {
        self.observe(now)?;
        let mut events = Vec::new();
        for entry in self.entries.values_mut() {
            let intent = &entry.intent;
            if entry.status == IntentStatus::Previewing && intent.execute_epoch <= now {
                events.push(intent.event(IntentPhase::ExecutionStarted, intent.execute_epoch));
                entry.status = IntentStatus::Executing;
                if self.pending.get(&intent.robot_id) == Some(&intent.id) {
                    self.pending.remove(&intent.robot_id);
                }
            }
            if entry.status == IntentStatus::Executing && intent.complete_epoch() <= now {
                events.push(intent.event(IntentPhase::Completed, intent.complete_epoch()));
                entry.status = IntentStatus::Completed;
            }
        }
        events.sort_by_key(|e| (e.stamp, e.intent_id, e.phase));
        Ok(events)
    }

    /// Earliest epoch at which [`tick`](Self::tick) would emit something.
    pub fn next_due(&self) -> Option<Nanos> {
        self.entries
            .values()
            .filter_map(|e| match e.status {
                IntentStatus::Previewing => Some(e.intent.execute_epoch),
                IntentStatus::Executing => Some(e.intent.complete_epoch()),
                _ => None,
            })
            .min()
    }

    pub fn get(&self, id: u64) -> Option<&ScheduledIntent> {
        self.entries.get(&id).map(|e| &e.intent)
    }

    pub fn status(&self, id: u64) -> Option<IntentStatus> {
        self.entries.get(&id).map(|e| e.status)
    }

    pub fn intents(&self) -> impl Iterator<Item = (&ScheduledIntent, IntentStatus)> {
        self.entries.values().map(|e| (&e.intent, e.status))
    }

    /// Intents per robot that have been submitted but not started.
    pub fn unexecuted_count(&self, robot_id: u32) -> usize {
        self.entries
            .values()
            .filter(|e| e.intent.robot_id == robot_id && e.status == IntentStatus::Previewing)
            .count()
    }
}
