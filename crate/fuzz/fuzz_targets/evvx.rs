#![no_main]

use libfuzzer_sys::fuzz_target;
use lfturb::eventio::{read_voxels, write_voxels};

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = read_voxels(data) {
        let mut once = Vec::new();
        write_voxels(&grid, &mut once).unwrap();
        let mut twice = Vec::new();
        write_voxels(&read_voxels(once.as_slice()).unwrap(), &mut twice).unwrap();
        assert_eq!(once, twice);
    }
});
