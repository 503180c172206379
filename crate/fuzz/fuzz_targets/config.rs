#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb_cli::config::Config;
use lfturb_cli::simulate::ClipManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = Config::from_toml_str(text) {
            let _ = cfg.to_toml_string();
        }
        let _ = ClipManifest::from_toml_str(text);
    }
});
