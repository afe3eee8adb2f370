//! CSV round trip for the supervised feature matrix.
//!
//! Layout: `hive_id,date,<feature...>,target`, one row per observation.
//! Floats are printed in Rust's shortest round-trip form, so reading the file
//! back reproduces every value bit for bit.

use std::path::Path;

use chrono::NaiveDate;
use hivecast::{HiveId, Matrix, RowMeta};

use crate::errors::CliError;

pub fn matrix_to_csv(matrix: &Matrix) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = Vec::with_capacity(matrix.n_features() + 3);
    header.push("hive_id".into());
    header.push("date".into());
    header.extend(matrix.feature_names().iter().cloned());
    header.push("target".into());
    writer.write_record(&header).expect("csv write to memory");

    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..matrix.n_rows() {
        record.clear();
        let meta = &matrix.meta()[i];
        record.push(meta.hive_id.as_str().to_owned());
        record.push(meta.date.to_string());
        record.extend(matrix.row(i).iter().map(|v| v.to_string()));
        record.push(matrix.targets()[i].to_string());
        writer.write_record(&record).expect("csv write to memory");
    }
    writer.into_inner().expect("csv write to memory")
}

pub fn matrix_from_csv(bytes: &[u8], path: &Path) -> Result<Matrix, CliError> {
    let malformed = |message: String| CliError::MalformedCsv { path: path.to_owned(), message };
    let mut reader = csv::Reader::from_reader(bytes);
    let header = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let n_cols = header.len();
    if n_cols < 3 || &header[0] != "hive_id" || &header[1] != "date" || &header[n_cols - 1] != "target"
    {
        return Err(malformed(format!(
            "expected header `hive_id,date,<features...>,target`, got {} columns",
            n_cols
        )));
    }
    let feature_names: Vec<String> = header.iter().skip(2).take(n_cols - 3).map(String::from).collect();

    let mut data = Vec::new();
    let mut targets = Vec::new();
    let mut meta = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.len() != n_cols {
            return Err(malformed(format!(
                "row {} has {} columns, expected {n_cols}",
                line + 2,
                record.len()
            )));
        }
        let date: NaiveDate = record[1]
            .parse()
            .map_err(|e| malformed(format!("row {}: bad date: {e}", line + 2)))?;
        meta.push(RowMeta { hive_id: HiveId::new(&record[0]), date });
        for field in record.iter().skip(2).take(n_cols - 3) {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|e| malformed(format!("row {}: bad value: {e}", line + 2)))?,
            );
        }
        targets.push(
            record[n_cols - 1]
                .parse::<f64>()
                .map_err(|e| malformed(format!("row {}: bad target: {e}", line + 2)))?,
        );
    }
    Matrix::new(feature_names, data, targets, meta).map_err(CliError::Panel)
}
