#![no_main]

use libfuzzer_sys::fuzz_target;
use supermech::problem::parse_problem;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Err(e) = parse_problem(text) {
            // positions are 1-based
            let (line, col) = e.position();
            assert!(line >= 1 && col >= 1);
        }
    }
});
