//! Replays the checked-in fuzz seeds through the parsers on stable.

use std::path::{Path, PathBuf};

use scanqubit::cli::RunConfig;
use scanqubit::coupling::CapacitanceGrid;
use scanqubit::io::{parse_fit_report, parse_points, parse_trace, write_trace, Table};
use scanqubit::units::{parse_quantity, Dimension};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    assert!(!paths.is_empty(), "no seeds in {}", dir.display());
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect()
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn trace_seeds() {
    for (name, data) in seeds("parse_trace") {
        let r = parse_trace(text(&data));
        assert_eq!(r.is_ok(), !name.starts_with("bad"), "{name}: {r:?}");
        if let Ok(t) = r {
            assert_eq!(parse_trace(&write_trace(&t)).unwrap(), t);
        }
    }
}

#[test]
fn table_and_points_seeds() {
    for (name, data) in seeds("parse_table") {
        let r = Table::parse(text(&data));
        assert_eq!(r.is_ok(), name != "duplicate.csv", "{name}");
    }
    for (name, data) in seeds("parse_points") {
        let pts = parse_points(
            text(&data),
            ("dx", Dimension::Length),
            ("g", Dimension::Frequency),
        )
        .unwrap();
        assert!((pts[1].0 - 600.0).abs() < 1e-9, "{name}");
        assert!((pts[0].1 - 0.1401).abs() < 1e-12, "{name}");
    }
}

#[test]
fn grid_seeds() {
    for (name, data) in seeds("parse_grid") {
        let r = CapacitanceGrid::parse(text(&data));
        assert_eq!(r.is_ok(), name != "short.grid", "{name}");
        if let Ok(g) = r {
            let again = CapacitanceGrid::parse(&g.to_text().unwrap()).unwrap();
            assert_eq!(g.y_axis(), again.y_axis());
        }
    }
}

#[test]
fn quantity_seeds() {
    let dims = [
        Dimension::Frequency,
        Dimension::Time,
        Dimension::Length,
        Dimension::Capacitance,
        Dimension::Resistance,
        Dimension::FrequencyPerLength,
    ];
    for (name, data) in seeds("parse_quantity") {
        let (first, rest) = data.split_first().unwrap();
        let r = parse_quantity(text(rest), dims[*first as usize % dims.len()]);
        assert!(r.is_ok(), "{name}: {r:?}");
    }
}

#[test]
fn config_and_report_seeds() {
    for (name, data) in seeds("parse_config") {
        let mut parts = data.splitn(2, |&b| b == 0);
        let body = text(parts.next().unwrap());
        let overrides: Vec<String> = parts.next().map(|o| vec![text(o).to_string()]).unwrap_or_default();
        let r = RunConfig::from_toml(body, &overrides);
        assert_eq!(r.is_ok(), name != "unknown_key.toml", "{name}");
    }
    for (name, data) in seeds("parse_fit_report") {
        assert!(parse_fit_report(text(&data)).is_ok(), "{name}");
    }
}
