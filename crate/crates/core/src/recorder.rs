//! Demonstration capture: every event is stored with the screen as it was
//! just before the event was injected.

use thiserror::Error;

use crate::device::{DeviceError, InputEvent, SimDevice, TransitionOutcome};
use crate::vision::Image;

/// Logical milliseconds between consecutive steps.
pub const TICK_MS: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoStep {
    pub index: usize,
    pub pre_screenshot: Image,
    pub event: InputEvent,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoTrace {
    pub utterance: String,
    pub package_id: String,
    pub steps: Vec<DemoStep>,
}

impl DemoTrace {
    /// Indices consecutive from zero, timestamps non-decreasing, exactly one
    /// terminal `EndDemo`.
    pub fn validate(&self) -> Result<(), RecorderError> {
        let bad = |m: String| Err(RecorderError::InvalidTrace(m));
        if self.steps.len() < 2 {
            return bad("a trace needs at least one event and the end marker".into());
        }
        for (i, s) in self.steps.iter().enumerate() {
            if s.index != i {
                return bad(format!("step {i} has index {}", s.index));
            }
            if i > 0 && s.timestamp_ms < self.steps[i - 1].timestamp_ms {
                return bad(format!("step {i} goes back in time"));
            }
            let is_end = matches!(s.event, InputEvent::EndDemo);
            if is_end != (i + 1 == self.steps.len()) {
                return bad(format!("step {i}: the end marker must be the last step and only there"));
            }
        }
        Ok(())
    }

    /// Events without the end marker.
    pub fn events(&self) -> impl Iterator<Item = &InputEvent> {
        self.steps.iter().map(|s| &s.event).filter(|e| !matches!(e, InputEvent::EndDemo))
    }

    /// Screen at the end of the demonstration.
    pub fn final_screenshot(&self) -> Option<&Image> {
        self.steps.last().map(|s| &s.pre_screenshot)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecorderError {
    #[error("recording state: {0}")]
    State(String),
    #[error("demonstration has no events")]
    EmptyDemonstration,
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// An open demonstration. The device is passed to each call so callers keep
/// ownership of it.
#[derive(Debug)]
pub struct RecordingSession {
    utterance: String,
    package_id: String,
    steps: Vec<DemoStep>,
    open: bool,
}

/// Resets the device and starts recording.
pub fn begin_demo(device: &mut SimDevice, utterance: &str) -> Result<RecordingSession, RecorderError> {
    if device.session_active {
        return Err(RecorderError::State("a demonstration is already being recorded on this device".into()));
    }
    device.reset();
    device.session_active = true;
    Ok(RecordingSession {
        utterance: utterance.to_string(),
        package_id: device.package().id().to_string(),
        steps: Vec::new(),
        open: true,
    })
}

impl RecordingSession {
    pub fn utterance(&self) -> &str {
        &self.utterance
    }

    pub fn steps(&self) -> &[DemoStep] {
        &self.steps
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    fn check_open(&self) -> Result<(), RecorderError> {
        if self.open {
            Ok(())
        } else {
            Err(RecorderError::State("recording session is closed".into()))
        }
    }

    /// Captures the screen, injects the event and appends the step. A
    /// rejected event is not recorded.
    pub fn record_event(
        &mut self,
        device: &mut SimDevice,
        event: InputEvent,
    ) -> Result<TransitionOutcome, RecorderError> {
        self.check_open()?;
        if matches!(event, InputEvent::EndDemo) {
            return Err(RecorderError::State("use end_demo to finish the demonstration".into()));
        }
        let pre = device.screenshot();
        let outcome = device.inject(&event)?;
        let index = self.steps.len();
        self.steps.push(DemoStep { index, pre_screenshot: pre, event, timestamp_ms: index as u64 * TICK_MS });
        Ok(outcome)
    }

    /// Appends the end marker and closes the session.
    pub fn end_demo(&mut self, device: &mut SimDevice) -> Result<DemoTrace, RecorderError> {
        self.check_open()?;
        if self.steps.is_empty() {
            return Err(RecorderError::EmptyDemonstration);
        }
        let index = self.steps.len();
        self.steps.push(DemoStep {
            index,
            pre_screenshot: device.screenshot(),
            event: InputEvent::EndDemo,
            timestamp_ms: index as u64 * TICK_MS,
        });
        self.open = false;
        device.session_active = false;
        Ok(DemoTrace {
            utterance: self.utterance.clone(),
            package_id: self.package_id.clone(),
            steps: std::mem::take(&mut self.steps),
        })
    }

    /// Closes the session without producing a trace.
    pub fn abandon(mut self, device: &mut SimDevice) {
        self.open = false;
        device.session_active = false;
    }
}

/// Records a whole event sequence as one demonstration.
pub fn record_events(
    device: &mut SimDevice,
    utterance: &str,
    events: &[InputEvent],
) -> Result<DemoTrace, RecorderError> {
    let mut session = begin_demo(device, utterance)?;
    for e in events {
        if let Err(err) = session.record_event(device, e.clone()) {
            session.abandon(device);
            return Err(err);
        }
    }
    let trace = session.end_demo(device);
    if device.session_active {
        device.session_active = false;
    }
    trace
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::device::sample::*;

    fn device() -> SimDevice {
        SimDevice::new(Arc::new(sample_package()))
    }

    #[test]
    fn begin_resets_and_blocks_second_session() {
        let mut d = device();
        d.inject(&InputEvent::AppLaunch { app: "pizza".into() }).unwrap();
        let s = begin_demo(&mut d, "order pizza").unwrap();
        assert_eq!(d.current_screen(), "launcher");
        assert!(matches!(begin_demo(&mut d, "again"), Err(RecorderError::State(_))));
        s.abandon(&mut d);
        assert!(begin_demo(&mut d, "again").is_ok());
    }

    #[test]
    fn steps_store_pre_event_screens() {
        let mut d = device();
        let mut s = begin_demo(&mut d, "open school").unwrap();
        let launcher = d.screenshot();
        let (x, y) = app_icon_rect(2).center();
        s.record_event(&mut d, InputEvent::tap(x, y)).unwrap();
        assert_eq!(s.steps()[0].pre_screenshot, launcher);
        let (x, y) = school_icon_rect(0).center();
        s.record_event(&mut d, InputEvent::tap(x, y)).unwrap();
        let trace = s.end_demo(&mut d).unwrap();
        assert_eq!(trace.steps.len(), 3);
        assert_eq!(trace.steps[2].event, InputEvent::EndDemo);
        assert_eq!(trace.final_screenshot(), Some(&d.screenshot()));
        trace.validate().unwrap();
        assert!(!d.is_recording());
    }

    #[test]
    fn typing_is_recorded_per_character() {
        let mut d = device();
        let mut s = begin_demo(&mut d, "text team").unwrap();
        s.record_event(&mut d, InputEvent::AppLaunch { app: "messages".into() }).unwrap();
        let (x, y) = menu_button_rect(1).center();
        s.record_event(&mut d, InputEvent::tap(x, y)).unwrap();
        let (x, y) = CHAT_FIELD.center();
        s.record_event(&mut d, InputEvent::tap(x, y)).unwrap();
        for c in "hey".chars() {
            s.record_event(&mut d, InputEvent::ch(c)).unwrap();
        }
        let trace = s.end_demo(&mut d).unwrap();
        assert_eq!(trace.steps.len(), 3 + 3 + 1);
    }

    #[test]
    fn empty_and_closed_sessions_error() {
        let mut d = device();
        let mut s = begin_demo(&mut d, "nothing").unwrap();
        assert_eq!(s.end_demo(&mut d), Err(RecorderError::EmptyDemonstration));
        s.record_event(&mut d, InputEvent::tap(5, 100)).unwrap();
        s.end_demo(&mut d).unwrap();
        assert!(matches!(s.record_event(&mut d, InputEvent::tap(5, 100)), Err(RecorderError::State(_))));
        let mut s = begin_demo(&mut d, "bad").unwrap();
        assert!(matches!(s.record_event(&mut d, InputEvent::ch('x')), Err(RecorderError::Device(_))));
        assert!(s.steps().is_empty());
    }
}
