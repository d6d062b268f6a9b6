//! Number formatting and file output.

use std::fs;
use std::path::Path;

use ohpm_core::reproduce::ComparisonRow;

use crate::error::CliError;

/// `%.{digits}g`-style formatting: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..digits as i32).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, exp) = s.split_once('e').expect("scientific notation");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

/// CSV cell with 12 significant digits.
pub fn csv_num(x: f64) -> String {
    fmt_sig(x, 12)
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(csv_num).unwrap_or_default()
}

/// Deviations are always scientific.
pub fn csv_dev(x: f64) -> String {
    format!("{x:.3e}")
}

/// Serializes records under `header` with the `csv` crate's quoting.
pub fn csv_table<I, R>(header: &[&str], records: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
}

pub fn comparison_cells(r: &ComparisonRow) -> Vec<String> {
    vec![
        csv_num(r.eta),
        csv_num(r.numeric),
        csv_num(r.ohpm),
        csv_dev(r.abs_error),
        csv_opt(r.paper_numeric),
        csv_opt(r.paper_ohpm),
        csv_opt(r.paper_hpm),
    ]
}

pub fn comparison_header() -> Vec<&'static str> {
    ComparisonRow::CSV_HEADER.split(',').collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    csv_table(&comparison_header(), rows.iter().map(comparison_cells))
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, contents).map_err(CliError::io(path))
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(csv_num(0.0768721058), "0.0768721058");
        assert_eq!(csv_num(1.0), "1");
        assert_eq!(csv_num(0.1), "0.1");
        assert_eq!(csv_num(-9.134405103300e-12), "-9.1344051033e-12");
        assert_eq!(csv_num(0.123456789012345), "0.123456789012");
        assert_eq!(csv_num(123456.0), "123456");
        assert_eq!(fmt_sig(1e15, 12), "1e15");
    }

    #[test]
    fn csv_has_fixed_header_and_blank_optionals() {
        let csv = comparison_csv(&[ComparisonRow::new(0.5, 1.0, 0.5)]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("eta,numeric,ohpm,abs_error,paper_numeric,paper_ohpm,paper_hpm")
        );
        assert_eq!(lines.next(), Some("0.5,1,0.5,5.000e-1,,,"));
    }
}
