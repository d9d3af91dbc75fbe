use std::io::{Read, Write};

use serde::Serialize;

use super::SearchError;
use crate::arch::{decode, encode, ArchSpec, EncodingVector, EDGES_PER_BLOCK, ENCODING_LEN, MAX_STAGES};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetaRecord {
    pub encoding: EncodingVector,
    /// Accuracy-like response, higher is better.
    pub response: f64,
    pub latency_ms: f64,
}

impl MetaRecord {
    pub fn spec(&self) -> ArchSpec {
        decode(&self.encoding).expect("records hold decodable encodings")
    }
}

/// Append-only search history.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetaDataset {
    records: Vec<MetaRecord>,
}

/// Column names of the encoding part of the CSV.
pub fn encoding_header() -> Vec<String> {
    let mut cols = vec!["ns".to_string()];
    for s in 1..=MAX_STAGES {
        for f in ["la", "nb", "ef", "sk", "ci"] {
            cols.push(format!("s{s}_{f}"));
        }
        for e in 0..EDGES_PER_BLOCK {
            cols.push(format!("s{s}_e{e}"));
        }
    }
    debug_assert_eq!(cols.len(), ENCODING_LEN);
    cols
}

impl MetaDataset {
    pub fn new() -> Self {
        MetaDataset::default()
    }

    /// Rejects encodings that do not decode to an in-space architecture.
    pub fn push(&mut self, encoding: EncodingVector, response: f64, latency_ms: f64) -> Result<(), SearchError> {
        decode(&encoding)?;
        self.records.push(MetaRecord { encoding, response, latency_ms });
        Ok(())
    }

    pub fn push_spec(&mut self, spec: &ArchSpec, response: f64, latency_ms: f64) -> Result<(), SearchError> {
        let encoding = encode(spec)?;
        self.records.push(MetaRecord { encoding, response, latency_ms });
        Ok(())
    }

    pub fn records(&self) -> &[MetaRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, encoding: &EncodingVector) -> bool {
        self.records.iter().any(|r| &r.encoding == encoding)
    }

    /// Highest response among records within `budget_ms`; ties go to the
    /// lexicographically smaller encoding.
    pub fn best_within(&self, budget_ms: f64) -> Option<&MetaRecord> {
        self.records
            .iter()
            .filter(|r| r.latency_ms <= budget_ms)
            .min_by(|a, b| b.response.total_cmp(&a.response).then_with(|| a.encoding.cmp(&b.encoding)))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SearchError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = encoding_header();
        header.push("accuracy".into());
        header.push("latency_ms".into());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.encoding.values().iter().map(|v| v.to_string()).collect();
            row.push(format!("{:.9}", r.response));
            row.push(format!("{:.6}", r.latency_ms));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<MetaDataset, SearchError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let width = ENCODING_LEN + 2;
        let mut out = MetaDataset::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| SearchError::Row { line, message };
            if rec.len() != width {
                return Err(bad(format!("expected {width} columns, found {}", rec.len())));
            }
            let mut values = Vec::with_capacity(ENCODING_LEN);
            for (i, tok) in rec.iter().take(ENCODING_LEN).enumerate() {
                values.push(tok.parse::<i64>().map_err(|_| bad(format!("column {i}: '{tok}' is not an integer")))?);
            }
            let num = |i: usize| -> Result<f64, SearchError> {
                rec[i].parse::<f64>().map_err(|_| bad(format!("column {i}: '{}' is not a number", &rec[i])))
            };
            let encoding = EncodingVector::from_slice(&values).map_err(|e| bad(e.to_string()))?;
            let (response, latency) = (num(ENCODING_LEN)?, num(ENCODING_LEN + 1)?);
            out.push(encoding, response, latency).map_err(|e| bad(e.to_string()))?;
        }
        Ok(out)
    }
}
