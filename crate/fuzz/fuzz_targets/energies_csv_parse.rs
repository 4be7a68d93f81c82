#![no_main]

use libfuzzer_sys::fuzz_target;
use wkgs_core::energies::read_csv;
use wkgs_core::pipeline::{read_pointwise, series_from_csv, SeriesSelector};

fuzz_target!(|data: &[u8]| {
    let _ = read_csv(data);
    let _ = read_pointwise(data);
    if let Ok(text) = std::str::from_utf8(data) {
        let sel = SeriesSelector::parse("EW").expect("literal spec");
        let _ = series_from_csv(text, &sel, 0.0, f64::INFINITY);
    }
});
