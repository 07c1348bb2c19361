mod common;

use common::*;
use showme_core::device::InputEvent;
use showme_core::nlu::AssignmentKind;
use showme_service::session::*;
use showme_service::{Service, ServiceError, SessionState};

#[test]
fn unknown_task_is_demonstrated_and_learned() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    let r = svc.handle_utterance("tell the team hello").unwrap();
    assert_eq!(r.message, "I do not know how to do that. Can you show me?");
    assert_eq!(r.assignment.unwrap().kind, AssignmentKind::NewCluster);
    assert!(matches!(svc.state(), SessionState::AwaitingDemoConsent { .. }));
    svc.consent(true).unwrap();
    assert!(matches!(svc.state(), SessionState::Demonstrating { steps: 0, .. }));
    for e in message().events {
        svc.event(e).unwrap();
    }
    assert!(matches!(svc.state(), SessionState::Demonstrating { steps: 9, .. }));
    let learned = svc.end_demo().unwrap();
    assert_eq!(learned.task_id.as_deref(), Some("task-0001"));
    assert_eq!(learned.trace_id.as_deref(), Some("trace-0001"));
    assert_eq!(learned.params.values().collect::<Vec<_>>(), ["Team", "hello"]);
    assert_eq!(svc.state(), &SessionState::Idle);
    assert_eq!(svc.clusters().len(), 1);
    assert_eq!(svc.clusters().clusters()[0].script.as_deref(), Some("task-0001"));
}

#[test]
fn known_task_runs_with_predicted_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    teach(&mut svc, &message());
    let r = svc.handle_utterance("tell alice bye").unwrap();
    assert_eq!(r.assignment.unwrap().kind, AssignmentKind::AssignedHard);
    let report = r.report.unwrap();
    assert!(report.success, "{report:?}");
    assert_eq!(r.params.get("s0").map(String::as_str), Some("alice"));
    assert_eq!(r.params.get("s1").map(String::as_str), Some("bye"));
    assert_eq!(svc.device().current_screen(), "chat_alice");
    assert_eq!(svc.device().submitted("alice_msg"), Some("bye"));
    assert!(svc.workspace().report_path(r.report_id.as_deref().unwrap()).exists());
    assert_eq!(svc.clusters().clusters()[0].members.len(), 2);
}

#[test]
fn clicked_parameter_changes_the_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    teach(&mut svc, &pizza());
    let r = svc.handle_utterance("order a small veggie pizza").unwrap();
    assert!(r.report.unwrap().success);
    assert_eq!(svc.device().current_screen(), "placed_veggie");
}

#[test]
fn soft_match_asks_and_rejection_creates_a_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    teach(&mut svc, &pizza());
    let r = svc.handle_utterance("menu").unwrap();
    assert_eq!(r.message, "Did you mean a task similar to: 'order a large pepperoni pizza'?");
    let SessionState::AwaitingVerification { similarity, .. } = svc.state().clone() else { panic!() };
    assert!(similarity > 0.6 && similarity <= 0.7);
    let r = svc.verify(false).unwrap();
    assert_eq!(r.assignment.unwrap().kind, AssignmentKind::RejectedVerifyNewCluster);
    assert_eq!(svc.clusters().len(), 2);
    assert!(matches!(svc.state(), SessionState::AwaitingDemoConsent { .. }));
    svc.consent(false).unwrap();
    assert_eq!(svc.clusters().len(), 1);
    assert_eq!(svc.state(), &SessionState::Idle);
}

#[test]
fn soft_match_accepted_joins_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    teach(&mut svc, &pizza());
    svc.handle_utterance("menu").unwrap();
    let r = svc.verify(true).unwrap();
    assert_eq!(r.assignment.unwrap().kind, AssignmentKind::AssignedAfterVerify);
    assert!(r.report.is_some());
    assert_eq!(svc.clusters().clusters()[0].members.len(), 2);
}

#[test]
fn explicit_run_defaults_missing_slots() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    teach(&mut svc, &pizza());
    let r = svc.execute("task-0001", &[("s1".to_string(), "Hawaiian".to_string())].into()).unwrap();
    assert_eq!(r.defaulted, ["s0"]);
    assert!(r.message.contains("demonstrated values for s0"));
    assert_eq!(svc.device().current_screen(), "placed_hawaiian");
    let err = svc.execute("task-0001", &[("s7".to_string(), "x".to_string())].into()).unwrap_err();
    assert!(matches!(err, ServiceError::Validation(_)));
    assert!(matches!(svc.execute("task-0042", &Default::default()), Err(ServiceError::NotFound(_))));
}

#[test]
fn state_survives_reopening_and_is_locked_meanwhile() {
    let dir = tempfile::tempdir().unwrap();
    {
        let mut svc = service(dir.path());
        teach(&mut svc, &message());
        assert!(matches!(Service::open(config(dir.path())), Err(ServiceError::State(_))));
    }
    let mut svc = service(dir.path());
    assert_eq!(svc.tasks().unwrap().len(), 1);
    let r = svc.handle_utterance("tell alice thanks").unwrap();
    assert!(r.report.as_ref().unwrap().success, "{r:#?}");
    assert_eq!(svc.device().submitted("alice_msg"), Some("thanks"));
}

#[test]
fn failed_learning_leaves_no_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    svc.handle_utterance("order a pizza").unwrap();
    svc.consent(true).unwrap();
    svc.event(InputEvent::tap(4, 380)).unwrap();
    assert!(matches!(svc.end_demo(), Err(ServiceError::Validation(_))));
    assert_eq!(svc.state(), &SessionState::Idle);
    assert!(svc.clusters().is_empty());
}

#[test]
fn empty_demonstration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut svc = service(dir.path());
    svc.handle_utterance("order a pizza").unwrap();
    svc.consent(true).unwrap();
    assert!(svc.end_demo().is_err());
    assert_eq!(svc.state(), &SessionState::Idle);
    assert!(svc.clusters().is_empty());
}

fn apply(svc: &mut Service, c: Command) -> Result<(), ServiceError> {
    match c {
        Command::Utterance => svc.handle_utterance("show my grades").map(drop),
        Command::Consent => svc.consent(false).map(drop),
        Command::Verify => svc.verify(false).map(drop),
        Command::Event => svc.event(InputEvent::AppLaunch { app: "school".into() }).map(drop),
        Command::EndDemo => svc.end_demo().map(drop),
        Command::Execute => svc.execute("task-0001", &Default::default()).map(drop),
        Command::Cancel => svc.cancel().map(drop),
    }
}

fn enter(svc: &mut Service, k: StateKind) {
    match k {
        StateKind::Idle => {}
        StateKind::AwaitingDemoConsent => {
            svc.handle_utterance("open the contact jack").unwrap();
        }
        StateKind::AwaitingVerification => {
            svc.handle_utterance("menu").unwrap();
        }
        StateKind::Demonstrating => {
            svc.handle_utterance("open the contact jack").unwrap();
            svc.consent(true).unwrap();
        }
        StateKind::Learning | StateKind::Executing => unreachable!(),
    }
    assert_eq!(svc.state().kind(), k);
}

#[test]
fn every_illegal_transition_is_rejected() {
    for k in StateKind::ALL {
        for c in Command::ALL {
            if matches!(k, StateKind::Learning | StateKind::Executing) {
                assert!(!allowed(k, c), "{k:?} {c:?}");
                continue;
            }
            let dir = tempfile::tempdir().unwrap();
            let mut svc = service(dir.path());
            teach(&mut svc, &pizza());
            enter(&mut svc, k);
            let before = svc.state().clone();
            let result = apply(&mut svc, c);
            if allowed(k, c) {
                assert!(!matches!(result, Err(ServiceError::State(_))), "{k:?} {c:?}: {result:?}");
            } else {
                assert!(matches!(result, Err(ServiceError::State(_))), "{k:?} {c:?}: {result:?}");
                assert_eq!(svc.state(), &before);
            }
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(ServiceError::Validation(String::new()).exit_code(), 2);
    assert_eq!(ServiceError::Execution(String::new()).exit_code(), 3);
    assert_eq!(ServiceError::State(String::new()).exit_code(), 4);
    assert_eq!(ServiceError::Other(String::new()).exit_code(), 1);
}
