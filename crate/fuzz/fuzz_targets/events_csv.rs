#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::eventio::read_events_csv;

fuzz_target!(|data: &[u8]| {
    let Some((&dims, body)) = data.split_first() else { return };
    let (w, h) = (u32::from(dims & 0x0f) + 1, u32::from(dims >> 4) + 1);
    let _ = read_events_csv(body, w, h, None);
});
