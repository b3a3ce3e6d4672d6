#![no_main]
use libfuzzer_sys::fuzz_target;
use scanqubit::io::{parse_trace, write_trace};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(trace) = parse_trace(text) {
        // anything accepted survives a write/parse round trip unchanged
        let again = parse_trace(&write_trace(&trace)).expect("re-parse of written trace");
        assert_eq!(trace, again);
    }
});
