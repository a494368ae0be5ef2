#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(k) = dmkrm_cli::parse_grid(text) {
        assert!(!k.is_empty());
        assert!(k.iter().all(|v| v.is_finite()));
    }
});
