#![no_main]

use dmkrm::io::{read_csv, SeriesRecord, SpectrumRecord};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_csv::<_, SeriesRecord>(data, None);
    let _ = read_csv::<_, SpectrumRecord>(data, Some("spectrum"));
});
