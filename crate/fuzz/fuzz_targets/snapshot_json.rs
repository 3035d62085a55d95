#![no_main]

use codesight_core::ingestion::{snapshot_from_json, snapshot_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(snapshot) = snapshot_from_json(data) {
        let again =
            snapshot_from_json(&snapshot_to_json(&snapshot)).expect("re-encoded snapshot parses");
        assert_eq!(again, snapshot);
    }
});
