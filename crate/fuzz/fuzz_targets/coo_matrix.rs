#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(m) = dmkrm::io::read_coo(data) else {
        return;
    };
    // Summed duplicates may overflow; those cannot round-trip.
    if m.triplets().any(|(_, _, v)| !v.is_finite()) {
        return;
    }
    let mut buf = Vec::new();
    dmkrm::io::write_coo(&mut buf, &m).expect("write to Vec");
    let again = dmkrm::io::read_coo(&buf[..]).expect("round trip");
    assert_eq!(m, again);
});
