#![no_main]

use dmkrm_cli::{Command, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_toml(text) {
        let _ = cfg.resolve(Command::Otoc, None);
        let _ = cfg.resolve(Command::GrowthSweep, None);
    }
});
