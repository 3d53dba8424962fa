#![no_main]

use libfuzzer_sys::fuzz_target;
use nim_core::store::replay_reader;

fuzz_target!(|data: &[u8]| {
    if let Ok((state, _, valid)) = replay_reader(data) {
        assert!(valid as usize <= data.len());
        // The accepted prefix replays to the same state.
        let (again, _, _) = replay_reader(&data[..valid as usize]).expect("valid prefix replays");
        assert_eq!(again.canonical_json(), state.canonical_json());
    }
});
