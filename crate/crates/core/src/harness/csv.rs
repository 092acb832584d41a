//! CSV output of sweep results.

use std::io::Write;
use std::path::Path;

use super::sweep::{BerPoint, MseStats};
use crate::error::{Error, Result};

pub const HEADER: [&str; 6] = ["ebn0_db", "ber", "bit_errors", "bits", "frame_errors", "frames"];

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(points: &[BerPoint], w: W) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidParams("no points to write".into()));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for p in points {
        out.write_record([
            format_sig(p.ebn0_db, 6),
            format_sig(p.ber, 6),
            p.bit_errors.to_string(),
            p.bits.to_string(),
            p.frame_errors.to_string(),
            p.frames.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(points: &[BerPoint], path: &Path) -> Result<()> {
    write_csv(points, std::fs::File::create(path)?)
}

/// Two-column CSV (`x_name,y_name`), e.g. a state-evolution trace or a bound.
pub fn write_series<W: Write>(x_name: &str, y_name: &str, rows: &[(f64, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([x_name, y_name])?;
    for &(x, y) in rows {
        out.write_record([format_sig(x, 6), format_sig(y, 6)])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-iteration MSE statistics of every point, with 95% half widths.
pub fn write_mse_trace<W: Write>(ebn0_db: &[f64], stats: &[MseStats], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["ebn0_db", "iteration", "le_mse", "le_ci", "nle_mse", "nle_ci"])?;
    for (&x, s) in ebn0_db.iter().zip(stats) {
        for t in 0..s.iterations() {
            let (le, le_ci) = s.le(t);
            let (nle, nle_ci) = s.nle(t);
            out.write_record([
                format_sig(x, 6),
                (t + 1).to_string(),
                format_sig(le, 6),
                format_sig(le_ci, 6),
                format_sig(nle, 6),
                format_sig(nle_ci, 6),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(1.0, 6), "1");
        assert_eq!(format_sig(-2.5, 6), "-2.5");
        assert_eq!(format_sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(format_sig(123456789.0, 6), "1.23457e+08");
        assert_eq!(format_sig(1.5e-5, 6), "1.5e-05");
        assert_eq!(format_sig(0.000123456789, 6), "0.000123457");
        assert_eq!(format_sig(999999.5, 6), "1e+06");
    }
}
