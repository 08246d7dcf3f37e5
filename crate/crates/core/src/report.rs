//! Text output: fixed-notation numbers, CSV matrices and the versioned
//! metric report.

use std::fmt::Write as _;

use ndarray::Array2;

pub const REPORT_HEADER: &str = "sope-kernel report v1";

pub const SCOPE_NOTE: &str = "# scope: metrics are computed over seeded or user-supplied features and \
characterize the positional encoding geometry, not a trained model";

const SIG_DIGITS: usize = 12;

/// Fixed notation with 12 significant digits. Zero (either sign) prints as
/// `0.00000000000`; infinities as `inf` / `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", SIG_DIGITS - 1, 0.0);
    }
    // Rounding to 12 significant digits can carry into the next decade, so the
    // exponent is taken from the rounded scientific form.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn matrix_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Accumulates `key = value` lines under the versioned header.
pub struct ReportBuilder {
    text: String,
}

impl ReportBuilder {
    pub fn new() -> Self {
        let mut text = String::new();
        text.push_str(REPORT_HEADER);
        text.push('\n');
        text.push_str(SCOPE_NOTE);
        text.push('\n');
        Self { text }
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.field(key, fmt_num(value))
    }

    pub fn blank(&mut self) -> &mut Self {
        self.text.push('\n');
        self
    }

    pub fn line(&mut self, line: &str) -> &mut Self {
        self.text.push_str(line);
        self.text.push('\n');
        self
    }

    pub fn finish(&self) -> String {
        self.text.clone()
    }
}

impl Default for ReportBuilder {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0), "1.00000000000");
        assert_eq!(fmt_num(0.0), "0.00000000000");
        assert_eq!(fmt_num(-0.0), "0.00000000000");
        assert_eq!(fmt_num(2f64.ln()), "0.693147180560");
        assert_eq!(fmt_num(-123.456), "-123.456000000");
        assert_eq!(fmt_num(9.9999999999999), "10.0000000000");
        assert_eq!(fmt_num(1e-5), "0.0000100000000000");
        assert_eq!(fmt_num(123_456_789_012_345.0), "123456789012345");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_rows() {
        let m = array![[1.0, 0.5], [0.25, f64::NEG_INFINITY]];
        assert_eq!(
            matrix_csv(&m),
            "1.00000000000,0.500000000000\n0.250000000000,-inf\n"
        );
    }

    #[test]
    fn header_first() {
        let text = ReportBuilder::new().field("scheme", "sope").num("x", 0.5).finish();
        assert!(text.starts_with("sope-kernel report v1\n# scope:"));
        assert!(text.ends_with("scheme = sope\nx = 0.500000000000\n"));
    }
}
