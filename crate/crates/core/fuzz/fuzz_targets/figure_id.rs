#![no_main]
use afc_memory::figures::{Analysis, FigureId};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(id) = text.parse::<FigureId>() {
            assert_eq!(id.to_string().parse::<FigureId>().ok(), Some(id));
        }
        let _ = text.parse::<Analysis>();
    }
});
