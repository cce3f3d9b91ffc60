#![no_main]
use afc_memory::timebin_qubit::QubitLabel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(label) = text.parse::<QubitLabel>() {
            // Labels print back to something that parses to the same state.
            assert_eq!(label.to_string().parse::<QubitLabel>().ok(), Some(label));
        }
    }
});
