#![no_main]

use codesight_core::eventlog::{event_log_from_table, ActivityTranslator, FlatTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = FlatTable::from_csv_reader(data) {
        if let Ok((log, _)) = event_log_from_table(&table, &ActivityTranslator::default()) {
            assert!(log
                .events()
                .windows(2)
                .all(|w| (w[0].pr_id, w[0].date) <= (w[1].pr_id, w[1].date)));
        }
    }
});
