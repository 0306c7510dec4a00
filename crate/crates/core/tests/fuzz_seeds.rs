//! Replays the checked-in fuzz corpus through the same checks the fuzz
//! targets make, so the decoders get exercised on a stable toolchain too.
//! Every prefix of every seed is tried as well.

use std::fs;
use std::path::PathBuf;

use frontlab::io::dump::{decode_field, encode_field, FieldHeader};
use frontlab::io::{parse_trace, trace_table, write_csv, RunManifest};
use frontlab::params::{make_params, parse_config, to_config_text};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    assert!(!paths.is_empty(), "no seeds in {}", dir.display());
    paths.iter().map(|p| fs::read(p).unwrap()).collect()
}

/// Runs `check` on every prefix; returns how many full seeds were accepted.
fn replay(target: &str, check: impl Fn(&[u8]) -> bool) -> (usize, usize) {
    let all = seeds(target);
    let mut accepted = 0;
    for seed in &all {
        for end in 0..seed.len() {
            check(&seed[..end]);
        }
        accepted += check(seed) as usize;
    }
    (accepted, all.len())
}

#[test]
fn config_seeds() {
    let (ok, n) = replay("config", |data| {
        let Ok(text) = std::str::from_utf8(data) else { return false };
        let Ok(raw) = parse_config(text) else { return false };
        let Ok(p) = make_params(&raw) else { return false };
        let again = make_params(&parse_config(&to_config_text(&p)).unwrap()).unwrap();
        assert_eq!(again, p);
        true
    });
    assert!(ok > 0 && ok < n, "{ok} of {n} accepted");
}

#[test]
fn field_dump_seeds() {
    let (ok, n) = replay("field_dump", |data| {
        let Some(split) = data.iter().position(|&b| b == 0) else { return false };
        let Ok(json) = std::str::from_utf8(&data[..split]) else { return false };
        let Ok(header) = FieldHeader::from_json(json) else { return false };
        let payload = &data[split + 1..];
        let Ok(values) = decode_field(&header, payload) else { return false };
        assert_eq!(values.len(), header.nx * header.ny);
        assert_eq!(encode_field(&values), payload);
        true
    });
    assert!(ok > 0 && ok < n, "{ok} of {n} accepted");
}

#[test]
fn manifest_seeds() {
    let (ok, n) = replay("manifest", |data| {
        let Ok(text) = std::str::from_utf8(data) else { return false };
        let Ok(m) = RunManifest::from_json(text) else { return false };
        let back = RunManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.outputs, m.outputs);
        true
    });
    assert!(ok > 0, "{ok} of {n} accepted");
}

#[test]
fn trace_csv_seeds() {
    let (ok, n) = replay("trace_csv", |data| {
        let Ok(text) = std::str::from_utf8(data) else { return false };
        let Ok(trace) = parse_trace(text, 0.1) else { return false };
        let mut buf = Vec::new();
        write_csv(&mut buf, &trace_table(&trace)).unwrap();
        let back = parse_trace(std::str::from_utf8(&buf).unwrap(), 0.1).unwrap();
        assert_eq!(back.times, trace.times);
        assert_eq!(back.valid, trace.valid);
        true
    });
    assert!(ok > 0 && ok < n, "{ok} of {n} accepted");
}
