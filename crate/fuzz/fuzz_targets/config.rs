#![no_main]

use frontlab::params::{make_params, parse_config, to_config_text};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(raw) = parse_config(text) else { return };
    if let Ok(p) = make_params(&raw) {
        // anything accepted must survive a round trip
        let again = make_params(&parse_config(&to_config_text(&p)).expect("reparse")).expect("revalidate");
        assert_eq!(again, p);
    }
});
