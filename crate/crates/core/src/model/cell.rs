use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single typed value from a table cell or a document scalar.
///
/// `Null` is distinct from empty text. `Real` values are always finite;
/// the parsers reject NaN and infinities before a value is built.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Null,
    Integer(i64),
    Real(f64),
    Boolean(bool),
    Text(String),
}

/// Column / scalar value types, ordered from narrowest numeric to text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Integer,
    Real,
    Boolean,
    Text,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Integer => "integer",
            ValueType::Real => "real",
            ValueType::Boolean => "boolean",
            ValueType::Text => "text",
        })
    }
}

/// A token that parsed as a number but is not finite (`NaN`, `inf`, `1e999`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonFiniteToken(pub String);

impl CellValue {
    /// Types a raw field using the precedence integer, real, boolean, text.
    /// Blank fields become `Null`.
    pub fn infer(token: &str) -> Result<CellValue, NonFiniteToken> {
        let t = token.trim();
        if t.is_empty() {
            return Ok(CellValue::Null);
        }
        if let Ok(i) = t.parse::<i64>() {
            return Ok(CellValue::Integer(i));
        }
        if looks_numeric(t) {
            if let Ok(r) = t.parse::<f64>() {
                if !r.is_finite() {
                    return Err(NonFiniteToken(t.to_string()));
                }
                return Ok(CellValue::Real(r));
            }
        }
        if is_non_finite_literal(t) {
            return Err(NonFiniteToken(t.to_string()));
        }
        match t {
            "true" | "True" | "TRUE" => Ok(CellValue::Boolean(true)),
            "false" | "False" | "FALSE" => Ok(CellValue::Boolean(false)),
            _ => Ok(CellValue::Text(t.to_string())),
        }
    }

    /// Re-parses a text value into `target`. Used by `coerce`.
    pub fn coerce_to(&self, target: ValueType) -> Option<CellValue> {
        match (self, target) {
            (CellValue::Null, _) => Some(CellValue::Null),
            (CellValue::Text(s), ValueType::Text) => Some(CellValue::Text(s.clone())),
            (CellValue::Text(s), _) => match CellValue::infer(s).ok()? {
                CellValue::Text(_) => None,
                v => v.coerce_to(target),
            },
            (CellValue::Integer(i), ValueType::Real) => Some(CellValue::Real(*i as f64)),
            (CellValue::Real(r), ValueType::Integer) if r.fract() == 0.0 && r.abs() < 9.2e18 => {
                Some(CellValue::Integer(*r as i64))
            }
            (v, ValueType::Text) => Some(CellValue::Text(v.render())),
            (v, t) if v.value_type() == Some(t) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, CellValue::Null)
    }

    pub fn value_type(&self) -> Option<ValueType> {
        match self {
            CellValue::Null => None,
            CellValue::Integer(_) => Some(ValueType::Integer),
            CellValue::Real(_) => Some(ValueType::Real),
            CellValue::Boolean(_) => Some(ValueType::Boolean),
            CellValue::Text(_) => Some(ValueType::Text),
        }
    }

    /// Whether the value is acceptable where `expected` is declared.
    /// Real admits integers; text admits any non-null value.
    pub fn conforms_to(&self, expected: ValueType) -> bool {
        match (self.value_type(), expected) {
            (None, _) => false,
            (Some(_), ValueType::Text) => true,
            (Some(ValueType::Integer), ValueType::Real) => true,
            (Some(t), e) => t == e,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            CellValue::Integer(i) => Some(*i as f64),
            CellValue::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, CellValue::Integer(_) | CellValue::Real(_))
    }

    /// Canonical text form. Reals always carry a fraction or exponent so a
    /// rendered real reloads as a real. `Null` renders as the empty string.
    pub fn render(&self) -> String {
        match self {
            CellValue::Null => String::new(),
            CellValue::Integer(i) => i.to_string(),
            CellValue::Real(r) => format!("{r:?}"),
            CellValue::Boolean(b) => b.to_string(),
            CellValue::Text(s) => s.clone(),
        }
    }

    /// Compares two values: numerically when both are numbers (exact for
    /// integer pairs), by text when both are text, booleans with booleans.
    /// Returns `None` for incomparable pairs, including anything with `Null`.
    pub fn compare(&self, other: &CellValue) -> Option<Ordering> {
        match (self, other) {
            (CellValue::Integer(a), CellValue::Integer(b)) => Some(a.cmp(b)),
            (CellValue::Integer(a), CellValue::Real(b)) => Some(cmp_int_real(*a, *b)),
            (CellValue::Real(a), CellValue::Integer(b)) => Some(cmp_int_real(*b, *a).reverse()),
            (CellValue::Real(a), CellValue::Real(b)) => a.partial_cmp(b),
            (CellValue::Boolean(a), CellValue::Boolean(b)) => Some(a.cmp(b)),
            (CellValue::Text(a), CellValue::Text(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Value equality used by predicates and enumerations: numeric when both
    /// sides are numbers, otherwise equality of the rendered text.
    pub fn loosely_equals(&self, other: &CellValue) -> bool {
        if self.is_null() || other.is_null() {
            return false;
        }
        match (self.as_f64(), other.as_f64()) {
            (Some(_), Some(_)) => self.compare(other) == Some(Ordering::Equal),
            _ => self.render() == other.render(),
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Null => f.write_str("null"),
            v => f.write_str(&v.render()),
        }
    }
}

/// Exact comparison of an integer with a finite real.
pub fn cmp_int_real(a: i64, b: f64) -> Ordering {
    // i64 range is [-2^63, 2^63); anything outside is decided by sign.
    if b >= 9_223_372_036_854_775_808.0 {
        return Ordering::Less;
    }
    if b < -9_223_372_036_854_775_808.0 {
        return Ordering::Greater;
    }
    let fl = b.floor();
    let fi = fl as i64;
    match a.cmp(&fi) {
        Ordering::Equal if b > fl => Ordering::Less,
        o => o,
    }
}

fn looks_numeric(t: &str) -> bool {
    let body = t.strip_prefix(['+', '-']).unwrap_or(t);
    let mut digits = false;
    for c in body.chars() {
        match c {
            '0'..='9' => digits = true,
            '.' | 'e' | 'E' | '+' | '-' => {}
            _ => return false,
        }
    }
    digits
}

fn is_non_finite_literal(t: &str) -> bool {
    let body = t.strip_prefix(['+', '-']).unwrap_or(t).to_ascii_lowercase();
    matches!(body.as_str(), "nan" | "inf" | "infinity")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typing_precedence() {
        assert_eq!(CellValue::infer("1").unwrap(), CellValue::Integer(1));
        assert_eq!(CellValue::infer(" -2.5 ").unwrap(), CellValue::Real(-2.5));
        assert_eq!(CellValue::infer("1e3").unwrap(), CellValue::Real(1000.0));
        assert_eq!(CellValue::infer("true").unwrap(), CellValue::Boolean(true));
        assert_eq!(CellValue::infer("Mali").unwrap(), CellValue::Text("Mali".into()));
        assert_eq!(CellValue::infer("").unwrap(), CellValue::Null);
        assert_eq!(CellValue::infer("2023-01-01").unwrap(), CellValue::Text("2023-01-01".into()));
    }

    #[test]
    fn non_finite_tokens_are_rejected() {
        for t in ["NaN", "nan", "inf", "-Infinity", "1e999"] {
            assert!(CellValue::infer(t).is_err(), "{t}");
        }
    }

    #[test]
    fn real_render_reloads_as_real() {
        for r in [2.0, 0.1, -1e300, 12.345] {
            let v = CellValue::Real(r);
            assert_eq!(CellValue::infer(&v.render()).unwrap(), v);
        }
    }

    #[test]
    fn int_real_comparison_is_exact() {
        assert_eq!(cmp_int_real(3, 3.0), Ordering::Equal);
        assert_eq!(cmp_int_real(3, 3.5), Ordering::Less);
        assert_eq!(cmp_int_real(-3, -3.5), Ordering::Greater);
        assert_eq!(cmp_int_real(i64::MAX, 9.3e18), Ordering::Less);
        assert_eq!(cmp_int_real(9_007_199_254_740_993, 9_007_199_254_740_992.0), Ordering::Greater);
    }

    #[test]
    fn coercion() {
        let t = CellValue::Text("12".into());
        assert_eq!(t.coerce_to(ValueType::Real), Some(CellValue::Real(12.0)));
        assert_eq!(CellValue::Text("x".into()).coerce_to(ValueType::Integer), None);
        assert_eq!(CellValue::Real(4.0).coerce_to(ValueType::Integer), Some(CellValue::Integer(4)));
    }
}
