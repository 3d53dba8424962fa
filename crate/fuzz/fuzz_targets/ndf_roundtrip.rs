#![no_main]

use libfuzzer_sys::fuzz_target;
use nim_ndf::{parse, parse_bytes, pretty_print};

fuzz_target!(|data: &[u8]| {
    let Ok(model) = parse_bytes(data) else {
        return;
    };
    let text = pretty_print(&model);
    let again = parse(&text).expect("pretty-printed model parses");
    assert!(again.structurally_eq(&model));
    assert_eq!(pretty_print(&again), text);
});
