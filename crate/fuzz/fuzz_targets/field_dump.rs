#![no_main]

use frontlab::io::dump::{decode_field, encode_field, FieldHeader};
use libfuzzer_sys::fuzz_target;

// Input: sidecar JSON, a NUL byte, then the raw payload.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else { return };
    let Ok(json) = std::str::from_utf8(&data[..split]) else { return };
    let Ok(header) = FieldHeader::from_json(json) else { return };
    let payload = &data[split + 1..];
    if let Ok(values) = decode_field(&header, payload) {
        assert_eq!(values.len(), header.nx * header.ny);
        assert_eq!(encode_field(&values), payload);
    }
});
