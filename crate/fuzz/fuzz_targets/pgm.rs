#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::eventio::decode_pgm;

fuzz_target!(|data: &[u8]| {
    if let Ok(frame) = decode_pgm(data) {
        assert!(frame.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
});
