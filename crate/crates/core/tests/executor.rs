mod common;

use common::Rig;
use showme_core::device::sample::*;
use showme_core::device::InputEvent;
use showme_core::device::{icon_swap, mutate_package, Mutation, SimDevice};
use showme_core::executor::*;
use showme_core::learner::{learn, parameterize, AutomationScript, ScriptStep};
use showme_core::nlu::bootstrap_parameters;
use showme_core::recorder::record_events;
use showme_core::vision::Image;

fn run(
    rig: &Rig,
    script: &AutomationScript,
    params: &ParameterAssignment,
    config: ExecConfig,
) -> (ExecutionReport, SimDevice) {
    let mut device = rig.device();
    let exec = Executor { detector: &rig.detector, ocr: &rig.ocr, config };
    let report = exec.execute_script(&mut device, script, params).unwrap();
    (report, device)
}

fn last(report: &ExecutionReport) -> &StepReport {
    report.steps.last().unwrap()
}

#[test]
fn unchanged_package_replays_verbatim() {
    let rig = Rig::sample();
    for demo in sample_demos() {
        let mut demo_device = rig.device();
        record_events(&mut demo_device, demo.utterance, &demo.events).unwrap();
        let script = rig.learn(&demo);
        let (report, device) = run(&rig, &script, &ParameterAssignment::new(), ExecConfig::default());
        assert!(report.success, "{}: {report:?}", demo.utterance);
        assert_eq!(device.current_screen(), demo_device.current_screen(), "{}", demo.utterance);
        assert_eq!(device.screenshot(), demo_device.screenshot());
        for s in &report.steps {
            let searched = s.synthetic_swipes > 0 && matches!(s.outcome, StepOutcome::Relocated { .. });
            assert!(
                searched || matches!(s.outcome, StepOutcome::ReplayedVerbatim | StepOutcome::FoldedIntoSearch { .. }),
                "{}: {s:?}",
                demo.utterance
            );
        }
    }
}

#[test]
fn shifted_elements_are_relocated() {
    let rig = Rig::sample();
    let script = rig.learn(&school_demo("show my grades", 0));
    let moved =
        mutate_package(&rig.pkg, &Mutation::ShiftRegions { dx: 40, dy: 0, screens: vec!["school_home".into()] })
            .unwrap();
    let target = Rig::new(moved);
    let (report, device) = run(&target, &script, &ParameterAssignment::new(), ExecConfig::default());
    assert!(report.success);
    assert_eq!(device.current_screen(), "grades");
    let StepOutcome::Relocated { rect } = last(&report).outcome else { panic!("{report:?}") };
    assert_eq!(rect, school_icon_rect(0).translated(40, 0).unwrap());
    assert_eq!(last(&report).probes, FindTrace { template_at: 1, template_global: 1, text_search: 0 });
}

#[test]
fn reskinned_icon_is_found_by_text() {
    let rig = Rig::sample();
    let script = rig.learn(&school_demo("show my courses", 1));
    let swap = icon_swap(&rig.pkg, "school_home", 1, 999).unwrap();
    let skinned = mutate_package(&rig.pkg, &Mutation::Reskin { swaps: vec![swap] }).unwrap();
    let target = Rig::new(skinned);
    let (report, device) = run(&target, &script, &ParameterAssignment::new(), ExecConfig::default());
    assert!(report.success, "{report:?}");
    assert_eq!(device.current_screen(), "courses");
    assert!(
        matches!(last(&report).outcome, StepOutcome::TextMatched { similarity, ambiguous: false, .. } if similarity == 1.0)
    );
    assert_eq!(last(&report).probes, FindTrace { template_at: 1, template_global: 1, text_search: 1 });
}

#[test]
fn reordered_list_is_searched_from_the_top() {
    let rig = Rig::sample();
    let script = rig.learn(&contact_demo("open the contact jack", 4, 35));
    let mut permutation: Vec<usize> = (0..contact_names().len()).collect();
    permutation.swap(30, 35);
    let reordered =
        mutate_package(&rig.pkg, &Mutation::ReorderList { list: "contacts_list".into(), permutation }).unwrap();
    let target = Rig::new(reordered);
    let (report, device) = run(&target, &script, &ParameterAssignment::new(), ExecConfig::default());
    assert!(report.success, "{report:?}");
    assert_eq!(device.current_screen(), "contact_35");
    let step = last(&report);
    assert_eq!(step.synthetic_swipes, 3);
    assert!(matches!(step.outcome, StepOutcome::Relocated { .. }));
    assert_eq!(report.count(|o| matches!(o, StepOutcome::FoldedIntoSearch { target: 5 })), 4);
    assert_eq!(report.steps.len(), script.steps.len());
}

fn missing_contact(rig: &Rig) -> AutomationScript {
    let mut script = rig.learn(&contact_demo("open the contact jack", 4, 35));
    if let Some(ScriptStep::ElementInteraction { signature, .. }) = script.steps.last_mut() {
        signature.text = "Zed".into();
        signature.template = Image::filled(signature.rect.w, signature.rect.h, [1, 2, 3]);
    }
    script
}

#[test]
fn search_stops_when_scrolling_has_no_effect() {
    let rig = Rig::sample();
    let (report, _) = run(&rig, &missing_contact(&rig), &ParameterAssignment::new(), ExecConfig::default());
    assert!(!report.success);
    // 1440 px at 320 px per swipe plus one idle swipe, then the same back up
    assert_eq!(last(&report).synthetic_swipes, 12);
    assert!(matches!(&last(&report).outcome, StepOutcome::Failed { reason } if reason.contains("end")));
}

#[test]
fn search_turns_around_at_the_end() {
    let rig = Rig::sample();
    let u = "open the contact marco";
    // the first swipe pulls at the top of the list and does nothing, so the net
    // finger movement points the wrong way
    let (x, _, _, _) = CONTACT_SWIPE;
    let mut events = vec![
        contact_demo(u, 0, 0).events[0].clone(),
        InputEvent::swipe(x, 58, x, 340),
        InputEvent::swipe(x, 358, x, 95),
    ];
    let (tx, ty) = contact_row_center(12, 263);
    events.push(InputEvent::tap(tx, ty));
    let mut demo_device = rig.device();
    let trace = record_events(&mut demo_device, u, &events).unwrap();
    assert_eq!(demo_device.current_screen(), "contact_12");
    let script = learn(&trace, &rig.detector, &rig.ocr, &rig.pkg).unwrap();
    let (report, device) = run(&rig, &script, &ParameterAssignment::new(), ExecConfig::default());
    assert!(report.success, "{report:?}");
    assert_eq!(device.current_screen(), "contact_12");
    // one idle swipe upwards, then one swipe back down exposes row 12
    assert_eq!(last(&report).synthetic_swipes, 2);
}

#[test]
fn search_respects_swipe_cap() {
    let rig = Rig::sample();
    let cfg = ExecConfig { max_swipes: 2, ..ExecConfig::default() };
    let (report, _) = run(&rig, &missing_contact(&rig), &ParameterAssignment::new(), cfg);
    assert!(!report.success);
    assert_eq!(last(&report).synthetic_swipes, 2);
}

fn pizza_script(rig: &Rig) -> AutomationScript {
    let u = "order a large pepperoni pizza";
    let script = rig.learn(&pizza_demo(u, 2, 0));
    let b = bootstrap_parameters(u, &script.artifacts());
    parameterize(&script, &b).unwrap()
}

#[test]
fn changed_slot_goes_straight_to_text_search() {
    let rig = Rig::sample();
    let script = pizza_script(&rig);
    let params: ParameterAssignment =
        [("s0".to_string(), "small".to_string()), ("s1".to_string(), "Hawaiian".to_string())].into();
    let (report, device) = run(&rig, &script, &params, ExecConfig::default());
    assert!(report.success, "{report:?}");
    assert_eq!(device.current_screen(), "placed_hawaiian");
    for k in [1, 2] {
        assert_eq!(report.steps[k].probes, FindTrace { template_at: 0, template_global: 0, text_search: 1 });
        assert!(matches!(report.steps[k].outcome, StepOutcome::TextMatched { .. }));
    }
    assert_eq!(report.steps[3].outcome, StepOutcome::ReplayedVerbatim);
}

#[test]
fn same_value_in_other_case_keeps_the_template() {
    let rig = Rig::sample();
    let script = pizza_script(&rig);
    let params: ParameterAssignment = [("s0".to_string(), "LARGE".to_string())].into();
    let (report, _) = run(&rig, &script, &params, ExecConfig::default());
    assert_eq!(report.steps[1].outcome, StepOutcome::ReplayedVerbatim);
}

#[test]
fn typed_slot_is_substituted() {
    let rig = Rig::sample();
    let u = "tell the team hello";
    let script = rig.learn(&message_demo(u, 1, "hello"));
    let script = parameterize(&script, &bootstrap_parameters(u, &script.artifacts())).unwrap();
    let slot = script.slots.iter().find(|(_, v)| *v == "hello").unwrap().0.clone();
    let (report, device) = run(&rig, &script, &[(slot, "bye".to_string())].into(), ExecConfig::default());
    assert!(report.success);
    assert_eq!(device.submitted("team_msg"), Some("bye"));
}

#[test]
fn unknown_slot_is_an_error() {
    let rig = Rig::sample();
    let script = pizza_script(&rig);
    let exec = Executor { detector: &rig.detector, ocr: &rig.ocr, config: ExecConfig::default() };
    let err =
        exec.execute_script(&mut rig.device(), &script, &[("s9".to_string(), "x".to_string())].into()).unwrap_err();
    assert_eq!(err, ExecError::UnknownSlot("s9".into()));
}

#[test]
fn unfindable_value_fails_at_that_step() {
    let rig = Rig::sample();
    let script = pizza_script(&rig);
    let (report, device) =
        run(&rig, &script, &[("s0".to_string(), "gigantic".to_string())].into(), ExecConfig::default());
    assert!(!report.success);
    assert_eq!(report.steps.len(), 2);
    assert_eq!(device.current_screen(), "pizza_size");
}

#[test]
fn complete_assignment_fills_defaults() {
    let rig = Rig::sample();
    let script = pizza_script(&rig);
    let full = complete_assignment(&script, &[("s1".to_string(), "Veggie".to_string())].into());
    assert_eq!(full.get("s0").map(String::as_str), Some("Large"));
    assert_eq!(full.get("s1").map(String::as_str), Some("Veggie"));
}

#[test]
fn report_serializes() {
    let rig = Rig::sample();
    let (report, _) = run(&rig, &pizza_script(&rig), &ParameterAssignment::new(), ExecConfig::default());
    let json = serde_json::to_string(&report).unwrap();
    let back: ExecutionReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}

#[test]
fn target_moved_up_is_found_without_swiping() {
    let rig = Rig::sample();
    let script = rig.learn(&contact_demo("open the contact jack", 4, 35));
    let mut permutation: Vec<usize> = (0..contact_names().len()).collect();
    permutation.swap(2, 35);
    let reordered =
        mutate_package(&rig.pkg, &Mutation::ReorderList { list: "contacts_list".into(), permutation }).unwrap();
    let target = Rig::new(reordered);
    let (report, device) = run(&target, &script, &ParameterAssignment::new(), ExecConfig::default());
    assert!(report.success);
    assert_eq!(device.current_screen(), "contact_35");
    assert_eq!(last(&report).synthetic_swipes, 0);
}
