#![no_main]

use libfuzzer_sys::fuzz_target;
use supermech::jet::Chart;
use supermech::problem::parse_expression;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let chart = Chart::new(vec!["q".into(), "r".into()], vec!["theta".into(), "phi".into()], 3);
    if let Ok(e) = parse_expression(text, &chart) {
        let printed = chart.display(&e).to_string();
        assert_eq!(parse_expression(&printed, &chart).as_ref(), Ok(&e), "{printed}");
    }
});
