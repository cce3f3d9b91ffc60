#![no_main]

use afc_memory::scenario::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Any text either parses into a checked scenario or returns an error.
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = Scenario::from_toml_str(text) {
            let _ = s.canonical_text();
        }
    }
});
