//! The bundled sample package: a launcher with four apps covering the task
//! archetypes used by the scenario tests (messaging, pizza ordering, an
//! icon grid and a long scrollable contact list).

use crate::vision::Rect;

use super::builder::PackageBuilder;
use super::package::{Action, DevicePackage};
use super::sim::InputEvent;

pub const SAMPLE_WIDTH: u32 = 240;
pub const SAMPLE_HEIGHT: u32 = 400;
pub const CONTACT_ITEM_H: u32 = 40;
pub const PIZZA_TYPES: [&str; 4] = ["Pepperoni", "Veggie", "Margherita", "Hawaiian"];
pub const PIZZA_SIZES: [&str; 3] = ["Small", "Medium", "Large"];

const NAMES: [&str; 44] = [
    "Aaron", "Bella", "Carlos", "Dana", "Elias", "Fiona", "Gavin", "Hana", "Ivan", "Julia", "Kenji", "Lena", "Marco",
    "Nadia", "Oscar", "Priya", "Quinn", "Rosa", "Samir", "Tara", "Umar", "Vera", "Wes", "Xena", "Yusuf", "Zoe", "Amir",
    "Beth", "Cole", "Dina", "Eric", "Faye", "Gus", "Hugo", "Iris", "Jack", "Kira", "Liam", "Mona", "Noah", "Olga",
    "Paul", "Rhea", "Sven",
];

pub fn contact_names() -> &'static [&'static str] {
    &NAMES
}

fn nav(screen: &str) -> Action {
    Action::Navigate { screen: screen.to_string() }
}

pub fn contacts_viewport() -> Rect {
    Rect::new(0, 48, SAMPLE_WIDTH, 320)
}

pub fn app_icon_rect(i: u32) -> Rect {
    Rect::new(12 + (i % 3) * 76, 64 + (i / 3) * 90, 64, 78)
}

pub fn school_icon_rect(i: u32) -> Rect {
    Rect::new(16 + (i % 2) * 84, 64 + (i / 2) * 90, 64, 78)
}

pub fn menu_button_rect(i: u32) -> Rect {
    Rect::new(16, 64 + i * 44, 208, 36)
}

pub const CHAT_DISPLAY: Rect = Rect::new(8, 56, 224, 40);
pub const CHAT_FIELD: Rect = Rect::new(8, 210, 160, 28);
pub const CHAT_SEND: Rect = Rect::new(176, 210, 56, 28);
pub const CHECKOUT: Rect = Rect::new(60, 300, 120, 36);

/// Builds the sample package. Deterministic.
pub fn sample_package() -> DevicePackage {
    let mut b = PackageBuilder::new("sample", SAMPLE_WIDTH, SAMPLE_HEIGHT);
    b.launcher("launcher")
        .app("messages", "msg_home")
        .app("pizza", "pizza_size")
        .app("school", "school_home")
        .app("contacts", "contacts");

    let mut launcher = b.screen("launcher", "Home", [235, 238, 242]);
    for (i, (app, label)) in
        [("messages", "Messages"), ("pizza", "Pizza"), ("school", "School"), ("contacts", "Contacts")]
            .into_iter()
            .enumerate()
    {
        launcher =
            launcher.icon_button(app_icon_rect(i as u32), label, 100 + i as u32, Action::Launch { app: app.into() });
    }
    launcher.finish();

    b.screen("msg_home", "Messages", [250, 250, 252])
        .button(menu_button_rect(0), "Alice", nav("chat_alice"))
        .button(menu_button_rect(1), "Team", nav("chat_team"))
        .finish();
    for (who, title) in [("alice", "Alice"), ("team", "Team")] {
        let field = format!("{who}_msg");
        b.screen(&format!("chat_{who}"), title, [250, 250, 252])
            .display(&field, CHAT_DISPLAY)
            .text_field(&field, CHAT_FIELD, "Message")
            .button(CHAT_SEND, "Send", Action::Submit { field: field.clone(), screen: None })
            .finish();
    }

    let mut size = b.screen("pizza_size", "Pizza size", [255, 248, 240]);
    for (i, s) in PIZZA_SIZES.iter().enumerate() {
        size = size.button(menu_button_rect(i as u32), s, nav("pizza_type"));
    }
    size.finish();
    let mut kind = b.screen("pizza_type", "Pizza type", [255, 248, 240]);
    for (i, t) in PIZZA_TYPES.iter().enumerate() {
        kind = kind.button(menu_button_rect(i as u32), t, nav(&format!("confirm_{}", t.to_lowercase())));
    }
    kind.finish();
    for t in PIZZA_TYPES {
        let id = t.to_lowercase();
        b.screen(&format!("confirm_{id}"), "Confirm", [255, 248, 240])
            .label(Rect::new(8, 64, 224, 20), &format!("Your order: {t} pizza"))
            .button(CHECKOUT, "Checkout", nav(&format!("placed_{id}")))
            .finish();
        b.screen(&format!("placed_{id}"), "Thank you", [240, 255, 240])
            .label(Rect::new(8, 64, 224, 20), &format!("Order placed: {t}"))
            .finish();
    }

    let mut school = b.screen("school_home", "School", [245, 245, 255]);
    for (i, label) in ["Grades", "Courses", "Profile"].into_iter().enumerate() {
        school = school.icon_button(school_icon_rect(i as u32), label, 200 + i as u32, nav(&label.to_lowercase()));
    }
    school.finish();
    for label in ["Grades", "Courses", "Profile"] {
        b.screen(&label.to_lowercase(), label, [245, 245, 255])
            .label(Rect::new(8, 64, 224, 20), &format!("{label} overview"))
            .finish();
    }

    let items = NAMES.iter().enumerate().map(|(i, n)| (n.to_string(), nav(&format!("contact_{i}")))).collect();
    b.screen("contacts", "Contacts", [255, 255, 255])
        .list("contacts_list", contacts_viewport(), CONTACT_ITEM_H, items)
        .finish();
    for (i, n) in NAMES.iter().enumerate() {
        b.screen(&format!("contact_{i}"), n, [250, 250, 250])
            .label(Rect::new(8, 64, 224, 20), &format!("Contact: {n}"))
            .finish();
    }

    b.build().expect("sample package is valid")
}

/// A scripted demonstration of one sample task.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDemo {
    pub utterance: &'static str,
    pub events: Vec<InputEvent>,
}

fn tap_rect(r: Rect) -> InputEvent {
    let (x, y) = r.center();
    InputEvent::tap(x, y)
}

fn launch(i: u32) -> InputEvent {
    tap_rect(app_icon_rect(i))
}

fn typed(text: &str) -> impl Iterator<Item = InputEvent> + '_ {
    text.chars().map(InputEvent::ch)
}

/// Swipe moving the contact list by 300 pixels.
pub const CONTACT_SWIPE: (u32, u32, u32, u32) = (120, 360, 120, 60);

/// Screen position of a contact row after the list scrolled by `offset`.
pub fn contact_row_center(index: usize, offset: u32) -> (u32, u32) {
    let vp = contacts_viewport();
    (vp.x + vp.w / 2, vp.y + index as u32 * CONTACT_ITEM_H + CONTACT_ITEM_H / 2 - offset)
}

pub fn message_demo(utterance: &'static str, chat: u32, text: &str) -> SampleDemo {
    let mut events = vec![launch(0), tap_rect(menu_button_rect(chat)), tap_rect(CHAT_FIELD)];
    events.extend(typed(text));
    events.push(tap_rect(CHAT_SEND));
    SampleDemo { utterance, events }
}

pub fn pizza_demo(utterance: &'static str, size: usize, kind: usize) -> SampleDemo {
    SampleDemo {
        utterance,
        events: vec![
            launch(1),
            tap_rect(menu_button_rect(size as u32)),
            tap_rect(menu_button_rect(kind as u32)),
            tap_rect(CHECKOUT),
        ],
    }
}

pub fn school_demo(utterance: &'static str, icon: u32) -> SampleDemo {
    SampleDemo { utterance, events: vec![launch(2), tap_rect(school_icon_rect(icon))] }
}

/// Opens a contact by swiping the list `swipes` times and tapping the row.
pub fn contact_demo(utterance: &'static str, swipes: u32, index: usize) -> SampleDemo {
    let (x1, y1, x2, y2) = CONTACT_SWIPE;
    let mut events = vec![launch(3)];
    events.extend((0..swipes).map(|_| InputEvent::swipe(x1, y1, x2, y2)));
    let offset = (swipes * (y1 - y2)).min(NAMES.len() as u32 * CONTACT_ITEM_H - contacts_viewport().h);
    let (x, y) = contact_row_center(index, offset);
    events.push(InputEvent::tap(x, y));
    SampleDemo { utterance, events }
}

/// One demonstration per task archetype.
pub fn sample_demos() -> Vec<SampleDemo> {
    vec![
        message_demo("tell the team hello", 1, "hello"),
        pizza_demo("order a large pepperoni pizza", 2, 0),
        school_demo("show my grades", 0),
        contact_demo("open the contact jack", 4, 35),
    ]
}
