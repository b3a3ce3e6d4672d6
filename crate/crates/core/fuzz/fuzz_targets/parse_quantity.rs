#![no_main]
use libfuzzer_sys::fuzz_target;
use scanqubit::units::{parse_quantity, Dimension};

const DIMS: [Dimension; 6] = [
    Dimension::Frequency,
    Dimension::Time,
    Dimension::Length,
    Dimension::Capacitance,
    Dimension::Resistance,
    Dimension::FrequencyPerLength,
];

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else {
        return;
    };
    if let Ok(s) = std::str::from_utf8(rest) {
        let _ = parse_quantity(s, DIMS[first as usize % DIMS.len()]);
    }
});
