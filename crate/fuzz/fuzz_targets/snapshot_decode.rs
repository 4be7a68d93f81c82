#![no_main]

use libfuzzer_sys::fuzz_target;
use wkgs_core::solver::snapshot::Snapshot;

fuzz_target!(|data: &[u8]| {
    if let Ok(snap) = Snapshot::decode(data) {
        // anything accepted must re-encode to a stable byte stream
        let bytes = snap.encode().expect("decoded snapshot encodes");
        let again = Snapshot::decode(&bytes).expect("re-encoded snapshot decodes");
        assert_eq!(again.encode().expect("encodes"), bytes);
    }
});
