#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::turbsim::TurbulenceParams;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = TurbulenceParams::from_toml_str(text) {
            assert!(p.validate().is_ok());
        }
    }
});
