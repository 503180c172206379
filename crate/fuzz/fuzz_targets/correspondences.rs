#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::lfgeom::{estimate_homography, read_correspondences};

fuzz_target!(|data: &[u8]| {
    if let Ok(pairs) = read_correspondences(data) {
        let _ = estimate_homography(&pairs);
    }
});
