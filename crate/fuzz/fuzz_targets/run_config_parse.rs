#![no_main]

use libfuzzer_sys::fuzz_target;
use wkgs_core::config::{ConvergenceConfig, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_json(text) {
        let _ = cfg.validate();
        let back = RunConfig::from_json(&cfg.canonical_json()).expect("canonical form parses");
        assert_eq!(back.sha256(), cfg.sha256());
    }
    let _ = ConvergenceConfig::from_json(text).map(|c| c.validate());
});
