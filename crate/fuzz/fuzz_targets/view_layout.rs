#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::lfgeom::ViewLayout;

fuzz_target!(|data: &[u8]| {
    if let Ok(layout) = ViewLayout::read_csv(data) {
        let mut buf = Vec::new();
        layout.write_csv(&mut buf).unwrap();
        assert_eq!(ViewLayout::read_csv(buf.as_slice()).unwrap(), layout);
    }
});
