//! Fuzz the result-CSV parser feeding the plot renderer: arbitrary input
//! must produce Ok or a clean error, never a panic. Parsed tables are also
//! pushed through the SVG renderer, which must not panic either.

#![no_main]

use libfuzzer_sys::fuzz_target;

use detcs::plot::{parse_csv, render_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = parse_csv(text, "fuzz") {
        let _ = render_csv(&table, "fuzz");
    }
});
