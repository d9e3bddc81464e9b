use std::path::Path;

use ratlogit::dataio::{load_catches, SHIPPED_CATCHES_CSV};
use ratlogit::prelude::*;
use sha2::{Digest, Sha256};

const CSV_SHA256: &str = "2c6c23642492e5060d55e06dc2a6697a0209d009bf10a5114847bf41d4cd90aa";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn shipped_csv_checksum() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/catches.csv");
    let on_disk = std::fs::read(path).unwrap();
    assert_eq!(hex(&Sha256::digest(&on_disk)), CSV_SHA256);
    assert_eq!(on_disk, SHIPPED_CATCHES_CSV.as_bytes());
}

#[test]
fn shipped_statistics() {
    let data = CatchDataset::shipped();
    assert_eq!(data.len(), 69);
    let maxima: Vec<(&str, u64)> = data.records.iter().map(|y| (y.year.as_str(), y.max())).collect();
    assert_eq!(maxima, [("2016", 43), ("2017", 42), ("2018", 53), ("2019", 41), ("2023", 82)]);
    let sample = normalize(&data);
    assert!(sample.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    let (mean, std) = empirical_stats(&sample).unwrap();
    assert!((mean - 0.32471).abs() < 5e-6, "{mean}");
    assert!((std - 0.30352).abs() < 5e-6, "{std}");
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catches.csv");
    std::fs::write(&path, CatchDataset::shipped().to_csv()).unwrap();
    assert_eq!(load_catches(&path).unwrap(), CatchDataset::shipped());
}

#[test]
fn negative_catch_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "year,catch\n2016,5\n2016,-1\n").unwrap();
    match load_catches(&path).unwrap_err() {
        Error::MalformedData { path: p, row, .. } => {
            assert_eq!(row, 3);
            assert!(p.ends_with("bad.csv"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_file_is_io_error() {
    let err = load_catches("/nonexistent/catches.csv").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 3);
}
