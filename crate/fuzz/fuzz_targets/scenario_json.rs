#![no_main]

use libfuzzer_sys::fuzz_target;
use traffic_core::scenario_file::{parse_scenario, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Anything that validates must survive a round trip unchanged.
    if let Ok(s) = parse_scenario(text) {
        let again = parse_scenario(&to_json(&s)).expect("serialized scenario reparses");
        assert_eq!(again, s);
    }
});
