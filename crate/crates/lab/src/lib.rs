//! Experiment harness, file formats and command-line support for
//! [`bai_core`].
//!
//! - [`harness`]: replicated runs to stopping, aggregation, lower bounds.
//! - [`sweep`]: characteristic-time ratios over instance families.
//! - [`config`]: TOML experiment files.
//! - [`io`]: NDJSON run records and CSV tables.
//! - [`validate`]: the self-check suite.

pub mod config;
mod error;
pub mod harness;
pub mod io;
pub mod stats;
pub mod sweep;
pub mod validate;

pub use error::{LabError, Result};

/// Formats `x` with four significant digits for terminal output.
pub fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 3 - magnitude;
    if decimals >= 0 {
        format!("{x:.*}", decimals as usize)
    } else {
        let unit = 10f64.powi(-decimals);
        format!("{:.0}", (x / unit).round() * unit)
    }
}

#[cfg(test)]
mod tests {
    use super::sig4;

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(326.642112), "326.6");
        assert_eq!(sig4(0.33588511), "0.3359");
        assert_eq!(sig4(1442.0), "1442");
        assert_eq!(sig4(123456.0), "123500");
        assert_eq!(sig4(-0.0012345), "-0.001234");
        assert_eq!(sig4(0.0), "0");
    }
}
