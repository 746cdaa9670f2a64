#![no_main]

use libfuzzer_sys::fuzz_target;
use rmdp::{parse_model_str, ModelDocument};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = parse_model_str(text) else { return };
    // Anything accepted must serialize to a canonical document that parses
    // back to the same model.
    let canonical = ModelDocument::from_model(&model).to_json();
    let again = parse_model_str(&canonical).expect("canonical document parses");
    assert_eq!(model, again);
});
