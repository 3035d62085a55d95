#![no_main]

use codesight_core::ingestion::decode::decode_pull_page;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = decode_pull_page(data);
});
