use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::calibration::EmpiricalSample;
use crate::error::{Error, Result};

/// The Hii River Toami competition catches, one row per pair, in long
/// `year,catch` format.
pub const SHIPPED_CATCHES_CSV: &str = include_str!("../../data/catches.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearCatches {
    pub year: String,
    pub catches: Vec<u64>,
}

impl YearCatches {
    pub fn max(&self) -> u64 {
        self.catches.iter().copied().max().unwrap_or(0)
    }
}

/// Catch counts grouped by year, years in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchDataset {
    pub records: Vec<YearCatches>,
}

impl CatchDataset {
    /// The dataset bundled with the crate.
    pub fn shipped() -> Self {
        parse_catches(SHIPPED_CATCHES_CSV.as_bytes(), "catches.csv").expect("bundled dataset is well formed")
    }

    pub fn len(&self) -> usize {
        self.records.iter().map(|y| y.catches.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn year(&self, year: &str) -> Option<&YearCatches> {
        self.records.iter().find(|y| y.year == year)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,catch\n");
        for y in &self.records {
            for c in &y.catches {
                out.push_str(&format!("{},{}\n", y.year, c));
            }
        }
        out
    }
}

/// Parses `year,catch` CSV; `source` names the input in error messages.
pub fn parse_catches(reader: impl Read, source: &str) -> Result<CatchDataset> {
    let bad = |row: usize, message: String| Error::MalformedData { path: source.to_string(), row, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["year", "catch"] {
        return Err(bad(1, format!("expected header `year,catch`, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut records: Vec<YearCatches> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // Header is line 1.
        let row = i + 2;
        let rec = rec.map_err(|e| bad(row, e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(row, format!("expected 2 fields, found {}", rec.len())));
        }
        let year = rec[0].to_string();
        if year.is_empty() {
            return Err(bad(row, "empty year".into()));
        }
        let catch: u64 = rec[1]
            .parse()
            .map_err(|_| bad(row, format!("catch `{}` is not a nonnegative integer", &rec[1])))?;
        match records.iter_mut().find(|y| y.year == year) {
            Some(y) => y.catches.push(catch),
            None => records.push(YearCatches { year, catches: vec![catch] }),
        }
    }
    if records.is_empty() {
        return Err(bad(1, "no data rows".into()));
    }
    if let Some(y) = records.iter().find(|y| y.max() == 0) {
        return Err(bad(0, format!("year {} has maximum catch 0", y.year)));
    }
    Ok(CatchDataset { records })
}

pub fn load_catches(path: impl AsRef<Path>) -> Result<CatchDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_catches(file, &path.display().to_string())
}

/// Divides each catch by its year's maximum and pools the results.
pub fn normalize(dataset: &CatchDataset) -> EmpiricalSample {
    let mut values = Vec::with_capacity(dataset.len());
    let mut per_year_max = BTreeMap::new();
    for y in &dataset.records {
        let max = y.max();
        per_year_max.insert(y.year.clone(), max);
        values.extend(y.catches.iter().map(|&c| c as f64 / max as f64));
    }
    EmpiricalSample::new(values, per_year_max).expect("ratios to the maximum lie in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_shape() {
        let d = CatchDataset::shipped();
        assert_eq!(d.len(), 69);
        let counts: Vec<(&str, usize)> = d.records.iter().map(|y| (y.year.as_str(), y.catches.len())).collect();
        assert_eq!(counts, [("2016", 16), ("2017", 13), ("2018", 10), ("2019", 15), ("2023", 15)]);
        assert_eq!(d.year("2016").unwrap().max(), 43);
        assert_eq!(d.year("2023").unwrap().max(), 82);
    }

    #[test]
    fn normalization_examples() {
        let d = CatchDataset::shipped();
        let s = normalize(&d);
        assert_eq!(s.per_year_max()["2023"], 82);
        // 2016 comes first and its first entry is 1.
        assert!((s.values()[0] - 1.0 / 43.0).abs() < 1e-15);
        assert!((s.values()[0] - 0.023256).abs() < 1e-6);
        assert_eq!(s.values().iter().filter(|&&v| v == 1.0).count(), 5);

        let single = parse_catches("year,catch\n1999,5\n".as_bytes(), "t").unwrap();
        assert_eq!(normalize(&single).values(), &[1.0]);
    }

    #[test]
    fn normalizing_twice_is_idempotent() {
        let s = normalize(&CatchDataset::shipped());
        for (year, &max) in s.per_year_max() {
            let y = CatchDataset::shipped().year(year).unwrap().clone();
            let again: Vec<f64> = y.catches.iter().map(|&c| c as f64 / max as f64).collect();
            let top = again.iter().cloned().fold(0.0, f64::max);
            assert_eq!(top, 1.0);
            assert_eq!(again.iter().map(|v| v / top).collect::<Vec<_>>(), again);
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let err = parse_catches("year,catch\n2016,3\n2016,-1\n".as_bytes(), "x.csv").unwrap_err();
        assert!(matches!(err, Error::MalformedData { row: 3, .. }), "{err}");
        let err = parse_catches("year,catch\n2016,2.5\n".as_bytes(), "x.csv").unwrap_err();
        assert!(matches!(err, Error::MalformedData { row: 2, .. }));
        assert!(parse_catches("year,count\n2016,1\n".as_bytes(), "x").is_err());
        assert!(parse_catches("year,catch\n2016,0\n2017,4\n".as_bytes(), "x").is_err());
        assert!(parse_catches("year,catch\n".as_bytes(), "x").is_err());
        assert!(parse_catches("year,catch\n2016,1,2\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = CatchDataset::shipped();
        assert_eq!(d.to_csv(), SHIPPED_CATCHES_CSV);
        assert_eq!(parse_catches(d.to_csv().as_bytes(), "rt").unwrap(), d);
    }
}
