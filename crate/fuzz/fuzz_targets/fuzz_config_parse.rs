//! Fuzz the INI config parser: arbitrary input must produce Ok or a clean
//! error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

use detcs::config::parse_config_str;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_config_str(text, "fuzz");
});
