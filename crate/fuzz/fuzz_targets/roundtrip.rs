#![no_main]

use harvest_core::io::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = ScenarioConfig::from_toml_str(text) else {
        return;
    };
    let written = config.to_toml_string().expect("a valid config serializes");
    let again = ScenarioConfig::from_toml_str(&written).expect("serialized config parses");
    assert_eq!(config, again);
    assert_eq!(written, again.to_toml_string().expect("a valid config serializes"));
});
