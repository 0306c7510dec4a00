#![no_main]

use frontlab::io::{parse_trace, trace_table, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(trace) = parse_trace(text, 0.1) else { return };
    let mut buf = Vec::new();
    write_csv(&mut buf, &trace_table(&trace)).expect("finite trace");
    let back = parse_trace(std::str::from_utf8(&buf).unwrap(), 0.1).expect("reparse");
    assert_eq!(back.times, trace.times);
    assert_eq!(back.valid, trace.valid);
});
