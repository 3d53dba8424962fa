#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use nim_core::transform::{decode_document, encode_document};
use nim_ndf::{parse, TypeDef};

fn def() -> &'static TypeDef {
    static DEF: OnceLock<TypeDef> = OnceLock::new();
    DEF.get_or_init(|| {
        let src = "Site { String name; Number area; Boolean open; Timestamp since;\n\
                   Meter { String id; Number kwh; Reading { Timestamp at; Number v; } } }";
        parse(src).unwrap().types.remove(0)
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(doc) = serde_json::from_slice::<serde_json::Value>(data) else {
        return;
    };
    let Ok(instance) = decode_document(def(), &doc) else {
        return;
    };
    let encoded = encode_document(&instance, true);
    let back = decode_document(def(), &encoded).expect("encoded documents decode");
    assert_eq!(back, instance);
});
