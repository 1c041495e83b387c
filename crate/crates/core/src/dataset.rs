//! Dataset records and CSV ingestion.
//!
//! The dataset format is one molecule per row with header
//! `SMILES,Category,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50(obs)`
//! (column order insensitive). Empty property cells are treated as
//! missing. Rows whose SMILES fails to parse are reported with their line
//! numbers and excluded from the record list only when asked.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::smiles::is_valid;

/// The nine regression targets, in canonical column order.
pub const TARGET_NAMES: [&str; 9] = [
    "OB(CO2)",
    "r0",
    "HGAS",
    "HSUB",
    "Q",
    "D",
    "P",
    "EG",
    "h50(obs)",
];

pub const N_TARGETS: usize = 9;

/// Index of a target by name.
pub fn target_index(name: &str) -> Option<usize> {
    TARGET_NAMES.iter().position(|&t| t == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeRecord {
    pub smiles: String,
    pub category: String,
    /// Values for the nine targets in `TARGET_NAMES` order; None = missing.
    pub properties: [Option<f64>; N_TARGETS],
}

impl MoleculeRecord {
    /// All nine properties, if none are missing.
    pub fn property_vector(&self) -> Option<[f64; N_TARGETS]> {
        let mut out = [0.0; N_TARGETS];
        for (i, p) in self.properties.iter().enumerate() {
            out[i] = (*p)?;
        }
        Some(out)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column '{0}' in header")]
    MissingColumn(String),
    #[error("unparseable value '{value}' in column '{column}' at line {line}")]
    UnparseableRow {
        line: usize,
        column: String,
        value: String,
    },
}

/// Result of ingesting a CSV file: parsed records plus the line numbers of
/// rows whose SMILES failed validation.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub records: Vec<MoleculeRecord>,
    /// (line number, smiles) of rows that did not pass `is_valid`.
    pub invalid_rows: Vec<(usize, String)>,
}

/// Read a dataset CSV. Invalid-SMILES rows are always listed in the report;
/// they are removed from `records` only when `drop_invalid` is set.
pub fn ingest(path: &Path, drop_invalid: bool) -> Result<IngestReport, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(DatasetError::Csv)?;

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let smiles_col = col("SMILES")?;
    let category_col = col("Category")?;
    let mut target_cols = [0usize; N_TARGETS];
    for (i, name) in TARGET_NAMES.iter().enumerate() {
        target_cols[i] = col(name)?;
    }

    let mut records = Vec::new();
    let mut invalid_rows = Vec::new();
    for (row_idx, result) in reader.records().enumerate() {
        let record = result?;
        let line = row_idx + 2; // header is line 1
        let smiles = record.get(smiles_col).unwrap_or("").to_string();
        let category = record.get(category_col).unwrap_or("").to_string();
        let mut properties = [None; N_TARGETS];
        for (i, &c) in target_cols.iter().enumerate() {
            let cell = record.get(c).unwrap_or("");
            if cell.is_empty() || cell == "NA" {
                continue;
            }
            let value: f64 = cell
                .parse()
                .map_err(|_| DatasetError::UnparseableRow {
                    line,
                    column: TARGET_NAMES[i].to_string(),
                    value: cell.to_string(),
                })?;
            if !value.is_finite() {
                return Err(DatasetError::UnparseableRow {
                    line,
                    column: TARGET_NAMES[i].to_string(),
                    value: cell.to_string(),
                });
            }
            properties[i] = Some(value);
        }
        let ok = is_valid(&smiles);
        if !ok {
            invalid_rows.push((line, smiles.clone()));
            if drop_invalid {
                continue;
            }
        }
        records.push(MoleculeRecord {
            smiles,
            category,
            properties,
        });
    }
    Ok(IngestReport {
        records,
        invalid_rows,
    })
}

/// Write records back out in the canonical column order.
pub fn write_csv(path: &Path, records: &[MoleculeRecord]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path).map_err(DatasetError::Csv)?;
    let mut header = vec!["SMILES".to_string(), "Category".to_string()];
    header.extend(TARGET_NAMES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.smiles.clone(), r.category.clone()];
        for p in &r.properties {
            row.push(match p {
                Some(v) => format!("{v}"),
                None => String::new(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const FIXTURE: &str = "\
SMILES,Category,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50(obs)
CCO,solvent,-208.6,0.79,42.3,50.1,1200,5.1,90,1200,320
c1ccccc1,aromatic,-246.1,0.88,33.8,44.9,1100,4.8,85,1100,300
C[N+](=O)[O-],nitro,-39.3,1.14,50.2,60.0,4500,6.3,180,1450,120
O=C(N)N,amide,-45.7,1.32,60.7,88.2,2500,5.5,140,1300,250
OCC(O)CO,polyol,-121.7,1.26,70.1,92.4,1900,5.2,120,1250,280
";

    #[test]
    fn five_row_fixture_parses() {
        let f = write_tmp(FIXTURE);
        let report = ingest(f.path(), false).unwrap();
        assert_eq!(report.records.len(), 5);
        assert!(report.invalid_rows.is_empty());
        assert_eq!(report.records[0].smiles, "CCO");
        assert_eq!(report.records[2].properties[5], Some(6.3)); // D
    }

    #[test]
    fn missing_column_detected() {
        let f = write_tmp("SMILES,Category,OB(CO2),r0,HGAS,HSUB,Q,P,EG,h50(obs)\nCCO,x,1,1,1,1,1,1,1,1\n");
        match ingest(f.path(), false) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "D"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn header_order_insensitive() {
        let f = write_tmp(
            "Category,D,SMILES,OB(CO2),r0,HGAS,HSUB,Q,P,EG,h50(obs)\nx,9.1,CCO,1,1,1,1,1,1,1,1\n",
        );
        let report = ingest(f.path(), false).unwrap();
        assert_eq!(report.records[0].smiles, "CCO");
        assert_eq!(report.records[0].properties[5], Some(9.1));
    }

    #[test]
    fn invalid_smiles_reported_with_line_and_flag_drops() {
        let csv = "\
SMILES,Category,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50(obs)
CCO,a,1,1,1,1,1,1,1,1,1
C(,b,1,1,1,1,1,1,1,1,1
CCC,c,1,1,1,1,1,1,1,1,1
";
        let f = write_tmp(csv);
        let keep = ingest(f.path(), false).unwrap();
        assert_eq!(keep.records.len(), 3);
        assert_eq!(keep.invalid_rows, vec![(3, "C(".to_string())]);
        let drop = ingest(f.path(), true).unwrap();
        assert_eq!(drop.records.len(), 2);
    }

    #[test]
    fn unparseable_number_is_an_error() {
        let f = write_tmp(
            "SMILES,Category,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50(obs)\nCCO,a,xx,1,1,1,1,1,1,1,1\n",
        );
        assert!(matches!(
            ingest(f.path(), false),
            Err(DatasetError::UnparseableRow { line: 2, .. })
        ));
    }

    #[test]
    fn missing_cells_are_none() {
        let f = write_tmp(
            "SMILES,Category,OB(CO2),r0,HGAS,HSUB,Q,D,P,EG,h50(obs)\nCCO,a,,1,1,1,1,1,1,1,\n",
        );
        let report = ingest(f.path(), false).unwrap();
        let r = &report.records[0];
        assert_eq!(r.properties[0], None);
        assert_eq!(r.properties[8], None);
        assert!(r.property_vector().is_none());
    }

    #[test]
    fn file_not_found() {
        assert!(matches!(
            ingest(Path::new("/nonexistent/x.csv"), false),
            Err(DatasetError::FileNotFound(_))
        ));
    }

    #[test]
    fn round_trip_write_read() {
        let f = write_tmp(FIXTURE);
        let report = ingest(f.path(), false).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(out.path(), &report.records).unwrap();
        let again = ingest(out.path(), false).unwrap();
        assert_eq!(report.records, again.records);
    }
}
