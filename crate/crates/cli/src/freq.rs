//! Frequency and complex-number literals used in configs and on the command line.
//!
//! A frequency literal is `[2pi*]<number>[<unit>]`, with `unit` one of `Hz`,
//! `kHz`, `MHz`, `GHz` or `rad/s`. Values are returned in rad/s:
//!
//! - a `2pi*` prefix multiplies by 2π and marks the value as explicitly
//!   ordinary-to-angular, so it ignores the `angular` switch;
//! - `rad/s` and bare numbers are already angular;
//! - a plain `Hz`-family value is converted with 2π unless `angular` is set,
//!   in which case the number is read as rad/s.

use std::f64::consts::PI;

use bimodal_core::C64;

use crate::error::CliError;

const UNITS: [(&str, f64); 5] = [("rad/s", 1.0), ("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)];

/// Parses a frequency literal into rad/s.
pub fn parse_frequency(text: &str, angular: bool) -> Result<f64, CliError> {
    let bad = || CliError::Validation(format!("bad frequency literal {text:?}"));
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (two_pi, rest) = match ["2pi*", "2π*", "2*pi*"].iter().find_map(|p| compact.strip_prefix(p)) {
        Some(rest) => (true, rest),
        None => (false, compact.as_str()),
    };
    let (number, scale, hz) = match UNITS.iter().find(|(u, _)| rest.ends_with(u)) {
        Some((u, s)) => (&rest[..rest.len() - u.len()], *s, *u != "rad/s"),
        None => (rest, 1.0, false),
    };
    let value: f64 = number.parse().map_err(|_| bad())?;
    if !value.is_finite() {
        return Err(bad());
    }
    let factor = if two_pi || (hz && !angular) { 2.0 * PI } else { 1.0 };
    Ok(value * scale * factor)
}

/// Parses `3`, `-1.5`, `2i`, `i`, `1+2i`, `0.5-0.3i`.
pub fn parse_complex(text: &str) -> Result<C64, CliError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    // `i` alone, or with a bare sign, has no coefficient for the stdlib parser.
    let patched = match compact.as_str() {
        "i" | "+i" => "1i".to_string(),
        "-i" => "-1i".to_string(),
        s => s.replace("+i", "+1i").replace("-i", "-1i"),
    };
    patched.parse::<C64>().map_err(|_| CliError::Validation(format!("bad complex literal {text:?}")))
}
