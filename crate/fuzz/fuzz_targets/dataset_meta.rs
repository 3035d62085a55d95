#![no_main]

use codesight_core::features::meta_from_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = meta_from_json(data);
});
