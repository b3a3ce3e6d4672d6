//! Unit-suffixed scalar parsing.
//!
//! Every dimensional input is written with an explicit unit (`"20MHz"`,
//! `"8.342GHz"`, `"2.6us"`) and converted to the canonical internal unit of
//! its dimension: GHz for frequencies, µs for times, µm for lengths, fF for
//! capacitances, Ω for impedances. Bare numbers are rejected.

use std::fmt;

use crate::error::{Error, Result};

/// Physical dimension of a quantity, with its canonical unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// canonical: GHz
    Frequency,
    /// canonical: µs
    Time,
    /// canonical: µm
    Length,
    /// canonical: fF
    Capacitance,
    /// canonical: Ω
    Resistance,
    /// canonical: GHz/µm
    FrequencyPerLength,
}

impl Dimension {
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Frequency => "GHz",
            Dimension::Time => "us",
            Dimension::Length => "um",
            Dimension::Capacitance => "fF",
            Dimension::Resistance => "ohm",
            Dimension::FrequencyPerLength => "GHz/um",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
            Dimension::Length => "length",
            Dimension::Capacitance => "capacitance",
            Dimension::Resistance => "resistance",
            Dimension::FrequencyPerLength => "frequency per length",
        };
        f.write_str(name)
    }
}

fn unit_factor(dim: Dimension, unit: &str) -> Option<f64> {
    let f = match dim {
        Dimension::Frequency => match unit {
            "Hz" => 1e-9,
            "kHz" => 1e-6,
            "MHz" => 1e-3,
            "GHz" => 1.0,
            _ => return None,
        },
        Dimension::Time => match unit {
            "s" => 1e6,
            "ms" => 1e3,
            "us" | "µs" | "μs" => 1.0,
            "ns" => 1e-3,
            _ => return None,
        },
        Dimension::Length => match unit {
            "m" => 1e6,
            "mm" => 1e3,
            "um" | "µm" | "μm" => 1.0,
            "nm" => 1e-3,
            _ => return None,
        },
        Dimension::Capacitance => match unit {
            "F" => 1e15,
            "pF" => 1e3,
            "fF" => 1.0,
            "aF" => 1e-3,
            _ => return None,
        },
        Dimension::Resistance => match unit {
            "ohm" | "Ohm" | "Ω" => 1.0,
            "kohm" | "kOhm" | "kΩ" => 1e3,
            _ => return None,
        },
        Dimension::FrequencyPerLength => {
            let (num, den) = unit.split_once('/')?;
            unit_factor(Dimension::Frequency, num.trim())?
                / unit_factor(Dimension::Length, den.trim())?
        }
    };
    Some(f)
}

/// Parse `input` as a quantity of dimension `dim`, returning the value in the
/// canonical unit.
pub fn parse_quantity(input: &str, dim: Dimension) -> Result<f64> {
    let err = |reason: String| Error::Quantity {
        input: input.to_string(),
        reason,
    };
    let s = input.trim();
    let split = s
        .char_indices()
        .find(|&(i, c)| {
            c.is_alphabetic() && !((c == 'e' || c == 'E') && is_exponent(s, i))
                || c == 'µ'
                || c == 'μ'
                || c == 'Ω'
        })
        .map(|(i, _)| i)
        .ok_or_else(|| {
            err(format!(
                "missing unit (expected {dim}, e.g. 1{})",
                dim.canonical_unit()
            ))
        })?;
    let (num, unit) = s.split_at(split);
    let num = num.trim();
    if num.is_empty() {
        return Err(err("missing numeric value".into()));
    }
    let value: f64 = num
        .parse()
        .map_err(|_| err(format!("`{num}` is not a number")))?;
    if !value.is_finite() {
        return Err(err("value is not finite".into()));
    }
    convert(value, dim, unit.trim())
        .ok_or_else(|| err(format!("unknown {dim} unit `{}`", unit.trim())))
}

/// `value` in `unit` expressed in the canonical unit of `dim`. Factors are
/// powers of ten; sub-unit factors divide by the exact reciprocal so that
/// `13MHz` becomes exactly `0.013`.
pub(crate) fn convert(value: f64, dim: Dimension, unit: &str) -> Option<f64> {
    let f = unit_factor(dim, unit)?;
    Some(if f < 1.0 {
        value / (1.0 / f).round()
    } else {
        value * f
    })
}

// `e`/`E` at `i` is an exponent marker when it follows a digit or '.' and is
// followed by a digit or sign.
fn is_exponent(s: &str, i: usize) -> bool {
    let before = s[..i].chars().next_back();
    let after = s[i + 1..].chars().next();
    matches!(before, Some(c) if c.is_ascii_digit() || c == '.')
        && matches!(after, Some(c) if c.is_ascii_digit() || c == '-' || c == '+')
}

/// Format a canonical value with its canonical unit, in a form `parse_quantity`
/// reads back exactly.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value}{}", dim.canonical_unit())
}
