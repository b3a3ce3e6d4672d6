#![no_main]
use libfuzzer_sys::fuzz_target;
use scanqubit::coupling::CapacitanceGrid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = CapacitanceGrid::parse(text) {
        let written = grid.to_text().expect("accepted grid serializes");
        let again = CapacitanceGrid::parse(&written).expect("re-parse of written grid");
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0))
        };
        assert!(close(grid.y_axis(), again.y_axis()));
        assert!(close(grid.z_axis(), again.z_axis()));
    }
});
