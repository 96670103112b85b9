#![no_main]

use lapmax::optimize::ScanSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = ScanSpec::from_json(text) {
            spec.validate(spec.base.len()).expect("parsed specs validate");
        }
    }
});
