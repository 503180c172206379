#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::lfgeom::Homography;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(h) = text.parse::<Homography>() {
            let _ = h.inverse();
        }
    }
});
