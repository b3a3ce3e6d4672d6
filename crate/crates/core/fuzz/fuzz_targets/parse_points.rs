#![no_main]
use libfuzzer_sys::fuzz_target;
use scanqubit::io::parse_points;
use scanqubit::units::Dimension;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_points(
            text,
            ("dx", Dimension::Length),
            ("g", Dimension::Frequency),
        );
    }
});
