#![no_main]

use codesight_core::eventlog::EventLog;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = EventLog::from_json(data) {
        assert_eq!(
            EventLog::from_json(&log.to_json()).expect("re-encoded log parses"),
            log
        );
    }
});
