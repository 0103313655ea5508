//! Fuzz the matrix-file parser. The parser must never panic; on success the
//! result must re-serialize and re-parse to the same matrix.

#![no_main]

use libfuzzer_sys::fuzz_target;

use detcs::matio::{format_block, format_dense, parse_matrix, MatrixFile};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(parsed) = parse_matrix(text, "fuzz") else {
        return;
    };
    // round trip: formatting a parsed matrix must yield parseable text
    let formatted = match &parsed {
        MatrixFile::Dense(d) => format_dense(d),
        MatrixFile::Block(b) => format_block(b),
    };
    let reparsed = parse_matrix(&formatted, "fuzz-rt").expect("round trip parses");
    let reformatted = match &reparsed {
        MatrixFile::Dense(d) => format_dense(d),
        MatrixFile::Block(b) => format_block(b),
    };
    assert_eq!(formatted, reformatted, "round trip is a fixed point");
});
