#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use rmdp::{parse_model_str, parse_policy_str, Model};

const MODEL: &str = r#"{
  "kind": "imdp",
  "states": ["s0", "s1", "s2"],
  "initial": "s0",
  "actions": ["a", "b"],
  "transitions": [
    {"from": "s0", "action": "a", "to": "s0", "lower": 0.1, "upper": 0.9},
    {"from": "s0", "action": "a", "to": "s1", "lower": 0.1, "upper": 0.9},
    {"from": "s0", "action": "b", "to": "s1", "lower": 0.1, "upper": 0.9},
    {"from": "s0", "action": "b", "to": "s2", "lower": 0.1, "upper": 0.9},
    {"from": "s1", "action": "a", "to": "s2", "lower": 1.0, "upper": 1.0},
    {"from": "s2", "action": "a", "to": "s0", "lower": 0.1, "upper": 0.9},
    {"from": "s2", "action": "a", "to": "s2", "lower": 0.1, "upper": 0.9}
  ],
  "rewards": [
    {"state": "s0", "action": "a", "value": 1.0},
    {"state": "s0", "action": "b", "value": 1.0},
    {"state": "s1", "action": "a", "value": 1.0},
    {"state": "s2", "action": "a", "value": 1.0}
  ]
}"#;

fn model() -> &'static Model {
    static MODEL_CELL: OnceLock<Model> = OnceLock::new();
    MODEL_CELL.get_or_init(|| parse_model_str(MODEL).expect("fixed model parses"))
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(policy) = parse_policy_str(model(), text) {
        assert!(policy.check(model()).is_ok());
    }
});
