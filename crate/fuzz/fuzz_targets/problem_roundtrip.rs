#![no_main]

use libfuzzer_sys::fuzz_target;
use supermech::problem::parse_problem;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = parse_problem(text) else { return };
    let printed = p.to_string();
    let again = parse_problem(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert_eq!(again, p);
    assert_eq!(again.to_string(), printed);
});
