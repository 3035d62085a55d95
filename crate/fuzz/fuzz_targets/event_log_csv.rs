#![no_main]

use codesight_core::eventlog::{read_csv, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = read_csv(data) {
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).expect("writing to memory");
        assert_eq!(
            read_csv(buf.as_slice()).expect("re-encoded log parses"),
            log
        );
    }
});
