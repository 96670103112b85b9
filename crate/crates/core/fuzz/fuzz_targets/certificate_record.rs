#![no_main]

use lapmax::certificate::CertificateRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(record) = CertificateRecord::from_json(text) {
            let cert = record.to_certificate();
            assert_eq!(cert.dimension(), record.dimension);
        }
    }
});
