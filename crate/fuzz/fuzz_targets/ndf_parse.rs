#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Err(diags) = nim_ndf::parse_bytes(data) {
        assert!(!diags.is_empty());
        assert!(diags.iter().all(|d| d.line >= 1 && d.column >= 1));
    }
});
