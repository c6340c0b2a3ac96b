#![no_main]

use harvest_core::io::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Only the parse and validation stage: building runs the solvers.
    let _ = ScenarioConfig::from_toml_str(text);
});
