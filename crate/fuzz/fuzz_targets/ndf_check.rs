#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use nim_ndf::{analyze, parse, parse_bytes, SymbolTable};

/// Symbols of a small registered model that fuzzed mappings can refer to.
fn registry() -> &'static SymbolTable {
    static TABLE: OnceLock<SymbolTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = SymbolTable::new();
        let src = "Room { String roomName; }\nAnotherRoom { String roomID; Number surface; }\n";
        let checked = analyze(&parse(src).unwrap(), &table).unwrap();
        table.insert_model(&checked, "seed");
        table
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(model) = parse_bytes(data) else {
        return;
    };
    if let Err(diags) = analyze(&model, registry()) {
        assert!(!diags.is_empty());
    }
});
