#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::eventio::{read_events, write_events};

fuzz_target!(|data: &[u8]| {
    if let Ok(stream) = read_events(data) {
        let mut buf = Vec::new();
        write_events(&stream, &mut buf).unwrap();
        assert_eq!(read_events(buf.as_slice()).unwrap(), stream);
    }
});
