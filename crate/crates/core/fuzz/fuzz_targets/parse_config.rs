#![no_main]
use libfuzzer_sys::fuzz_target;
use scanqubit::cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    // config text, then an optional `--set` override after a NUL byte
    let mut parts = data.splitn(2, |&b| b == 0);
    let Ok(text) = std::str::from_utf8(parts.next().unwrap_or_default()) else {
        return;
    };
    let overrides: Vec<String> = parts
        .next()
        .and_then(|o| std::str::from_utf8(o).ok())
        .map(|o| vec![o.to_string()])
        .unwrap_or_default();
    if let Ok(cfg) = RunConfig::from_toml(text, &overrides) {
        let _ = cfg.to_toml();
    }
});
