#![no_main]
use libfuzzer_sys::fuzz_target;
use scanqubit::io::Table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = Table::parse(text) {
        assert!(t.rows.iter().all(|r| r.len() == t.columns.len()));
        let again = Table::parse(&t.to_text()).expect("re-parse of written table");
        assert_eq!(t.columns, again.columns);
        assert_eq!(t.rows.len(), again.rows.len());
    }
});
