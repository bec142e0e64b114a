//! Values with a one-sigma standard uncertainty and their rendering in the
//! compact parenthesized notation, e.g. `0.48(3)%` or `1.3(1)×10³`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A measured or derived value with its one-sigma standard uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub sigma: f64,
}

impl Quantity {
    pub fn new(value: f64, sigma: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::domain(format!("quantity value {value} is not finite")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::domain(format!(
                "quantity sigma {sigma} must be finite and non-negative"
            )));
        }
        Ok(Self { value, sigma })
    }

    /// A value with no uncertainty.
    pub const fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }

    pub fn relative_sigma(&self) -> f64 {
        if self.value == 0.0 {
            if self.sigma == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.sigma / self.value).abs()
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            sigma: self.sigma * factor.abs(),
        }
    }

    /// Difference `self - other` with independent errors added in quadrature.
    pub fn minus(&self, other: &Quantity) -> Self {
        Self {
            value: self.value - other.value,
            sigma: self.sigma.hypot(other.sigma),
        }
    }

    /// Significance of the value in units of its sigma. `None` when sigma is
    /// zero and the value is not.
    pub fn significance(&self) -> Option<f64> {
        if self.sigma > 0.0 {
            Some(self.value / self.sigma)
        } else if self.value == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// How many digits a rendered quantity keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Fixed number of significant digits in the value; the uncertainty is
    /// expressed in units of the last kept digit (at least 1).
    Significant(u32),
    /// Precision set by the uncertainty: its leading digit becomes the last
    /// digit of the value.
    FromSigma,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Significant(2)
    }
}

/// Renders `q` as `value(sigma)`, switching to `m(s)×10ⁿ` when the last kept
/// digit lies above the units place. Rounding is half-to-even on the last
/// kept digit.
pub fn render(q: &Quantity, precision: Precision) -> String {
    render_with_suffix(q, precision, "")
}

/// Like [`render`] for a fraction, printed in percent: `0.004833 ± 0.00037`
/// becomes `0.48(4)%` at two significant digits.
pub fn render_percent(q: &Quantity, precision: Precision) -> String {
    render_with_suffix(&q.scale(100.0), precision, "%")
}

fn render_with_suffix(q: &Quantity, precision: Precision, suffix: &str) -> String {
    if !q.value.is_finite() {
        return format!("{}{suffix}", q.value);
    }
    let magnitude = if q.value != 0.0 { q.value.abs() } else { q.sigma };
    if magnitude == 0.0 {
        return format!("0{suffix}");
    }

    let mut last_digit = match precision {
        Precision::Significant(n) => decade(magnitude) - (n.max(1) as i32 - 1),
        Precision::FromSigma if q.sigma > 0.0 => decade(q.sigma),
        Precision::FromSigma => decade(magnitude) - 1,
    };
    // Rounding can carry into a new decade (9.96 -> 10.0); keep the digit count.
    let mut mantissa = round_at(q.value, last_digit);
    if let Precision::Significant(n) = precision {
        if mantissa != 0.0 && decade(mantissa.abs()) >= n.max(1) as i32 {
            last_digit += 1;
            mantissa = round_at(q.value, last_digit);
        }
    } else if q.sigma > 0.0 && round_at(q.sigma, last_digit) >= 10.0 {
        last_digit += 1;
        mantissa = round_at(q.value, last_digit);
    }

    let sigma_digits = if q.sigma > 0.0 {
        Some(round_at(q.sigma, last_digit).max(1.0) as u64)
    } else {
        None
    };

    if last_digit > 0 {
        // Scientific form: one digit before the point.
        let exponent = decade(mantissa.abs().max(1.0)) + last_digit;
        let decimals = (exponent - last_digit).max(0) as usize;
        let scaled = mantissa / 10f64.powi(exponent - last_digit);
        let body = format!("{scaled:.decimals$}");
        match sigma_digits {
            Some(s) => format!("{body}({s})×10{}{suffix}", superscript(exponent)),
            None => format!("{body}×10{}{suffix}", superscript(exponent)),
        }
    } else {
        let decimals = (-last_digit) as usize;
        let body = format!("{:.decimals$}", mantissa * 10f64.powi(last_digit));
        match sigma_digits {
            Some(s) => format!("{body}({s}){suffix}"),
            None => format!("{body}{suffix}"),
        }
    }
}

/// Position of the leading decimal digit: 1234 -> 3, 0.048 -> -2.
fn decade(x: f64) -> i32 {
    let d = x.log10().floor() as i32;
    // log10 can land just below an exact power of ten.
    if 10f64.powi(d + 1) <= x {
        d + 1
    } else {
        d
    }
}

/// `x / 10^position`, rounded half-to-even to an integer (returned as f64).
fn round_at(x: f64, position: i32) -> f64 {
    let scaled = x / 10f64.powi(position);
    // Strip representation noise (0.125/0.01 = 12.499999...) before the tie test.
    let cleaned = (scaled * 1e9).round() / 1e9;
    cleaned.round_ties_even()
}

fn superscript(n: i32) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    let mut out = String::new();
    if n < 0 {
        out.push('⁻');
    }
    for c in n.unsigned_abs().to_string().chars() {
        out.push(DIGITS[c.to_digit(10).unwrap() as usize]);
    }
    out
}
