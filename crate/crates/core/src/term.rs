//! Terms: the atoms facts and patterns are built from.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A namespace-qualified name such as `care:tumor_size`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    /// Builds a symbol from `prefix:local`. Both halves must be non-empty
    /// identifiers; the colon is mandatory.
    pub fn new(qname: impl Into<String>) -> Result<Self, Error> {
        let qname = qname.into();
        match qname.split_once(':') {
            Some((prefix, local))
                if is_name(prefix) && !local.is_empty() && local.chars().all(is_local_char) =>
            {
                Ok(Symbol(qname))
            }
            _ => Err(Error::InvalidTerm(format!("not a qualified name: {qname:?}"))),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn prefix(&self) -> &str {
        self.0.split_once(':').map(|(p, _)| p).unwrap_or("")
    }

    pub fn local(&self) -> &str {
        self.0.split_once(':').map(|(_, l)| l).unwrap_or("")
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Symbol::new(raw).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub(crate) fn is_local_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// A decimal quantity carried as a finite `f64`.
///
/// Equality and ordering are exact (bitwise after folding `-0.0` into `0.0`),
/// so numbers can live in sets. Tolerant comparison is the job of the
/// `equalTo` builtin, not of fact identity.
#[derive(Clone, Copy, Debug)]
pub struct Number(f64);

/// Tolerance used by `equalTo`/`notEqualTo` and by path limit checks.
pub const NUMERIC_TOLERANCE: f64 = 1e-9;

impl Number {
    pub fn new(value: f64) -> Result<Self, Error> {
        if value.is_finite() {
            Ok(Number(if value == 0.0 { 0.0 } else { value }))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Number {}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Number {
    // Rust's float Display is the shortest text that parses back to the
    // same value and never uses exponent notation.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = f64::deserialize(d)?;
        Number::new(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<f64> for Number {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self, Error> {
        Number::new(value)
    }
}

const MINUTE: u64 = 60;
const HOUR: u64 = 60 * MINUTE;
const DAY: u64 = 24 * HOUR;

/// A non-negative ISO-8601 `dayTimeDuration`, normalised to whole seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DayTimeDuration(u64);

impl DayTimeDuration {
    pub const ZERO: DayTimeDuration = DayTimeDuration(0);

    pub fn from_secs(secs: u64) -> Self {
        DayTimeDuration(secs)
    }

    pub fn from_days(days: u64) -> Self {
        DayTimeDuration(days * DAY)
    }

    pub fn as_secs(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        self.0.checked_add(other.0).map(DayTimeDuration)
    }

    /// Parses the `P[nD][T[nH][nM][nS]]` subset. Fractional components and
    /// signs are rejected.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = || Error::BadDuration(text.to_string());
        let rest = text.strip_prefix('P').ok_or_else(bad)?;
        let (date, time) = match rest.split_once('T') {
            Some((d, t)) => {
                if t.is_empty() {
                    return Err(bad());
                }
                (d, Some(t))
            }
            None => (rest, None),
        };
        if date.is_empty() && time.is_none() {
            return Err(bad());
        }

        let mut total: u64 = 0;
        let mut add = |digits: &str, unit: u64| -> Result<(), Error> {
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let n: u64 = digits.parse().map_err(|_| bad())?;
            total = n
                .checked_mul(unit)
                .and_then(|v| total.checked_add(v))
                .ok_or_else(bad)?;
            Ok(())
        };

        if !date.is_empty() {
            let digits = date.strip_suffix('D').ok_or_else(bad)?;
            add(digits, DAY)?;
        }
        if let Some(mut t) = time {
            for (designator, unit) in [('H', HOUR), ('M', MINUTE), ('S', 1)] {
                if let Some(idx) = t.find(designator) {
                    add(&t[..idx], unit)?;
                    t = &t[idx + 1..];
                }
            }
            if !t.is_empty() {
                return Err(bad());
            }
        }
        Ok(DayTimeDuration(total))
    }
}

impl fmt::Display for DayTimeDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let days = self.0 / DAY;
        let rem = self.0 % DAY;
        if rem == 0 {
            return write!(f, "P{days}D");
        }
        f.write_str("P")?;
        if days > 0 {
            write!(f, "{days}D")?;
        }
        f.write_str("T")?;
        let (h, m, s) = (rem / HOUR, rem % HOUR / MINUTE, rem % MINUTE);
        if h > 0 {
            write!(f, "{h}H")?;
        }
        if m > 0 {
            write!(f, "{m}M")?;
        }
        if s > 0 {
            write!(f, "{s}S")?;
        }
        Ok(())
    }
}

impl Serialize for DayTimeDuration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DayTimeDuration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        DayTimeDuration::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// A point on a pathway timeline, in seconds from the timeline origin.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn after(self, d: DayTimeDuration) -> Timestamp {
        Timestamp(self.0.saturating_add(d.as_secs()))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", DayTimeDuration::from_secs(self.0))
    }
}

/// Name of a pattern variable, stored without the leading `?`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Result<Self, Error> {
        let name = name.into();
        if is_name(&name) {
            Ok(Var(name))
        } else {
            Err(Error::InvalidTerm(format!("not a variable name: {name:?}")))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Var {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Var::new(raw).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Term {
    Symbol(Symbol),
    Variable(Var),
    Number(Number),
    Duration(DayTimeDuration),
    Text(String),
}

impl Term {
    pub fn symbol(qname: &str) -> Result<Term, Error> {
        Symbol::new(qname).map(Term::Symbol)
    }

    pub fn var(name: &str) -> Result<Term, Error> {
        Var::new(name).map(Term::Variable)
    }

    pub fn number(value: f64) -> Result<Term, Error> {
        Number::new(value).map(Term::Number)
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Variable(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Variable(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Term::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub(crate) fn kind(&self) -> &'static str {
        match self {
            Term::Symbol(_) => "symbol",
            Term::Variable(_) => "variable",
            Term::Number(_) => "number",
            Term::Duration(_) => "duration",
            Term::Text(_) => "text",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Symbol(s) => s.fmt(f),
            Term::Variable(v) => v.fmt(f),
            Term::Number(n) => n.fmt(f),
            Term::Duration(d) => d.fmt(f),
            Term::Text(t) => {
                f.write_str("\"")?;
                for c in t.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        '\r' => f.write_str("\\r")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_parse_and_print() {
        assert_eq!(DayTimeDuration::parse("P50D").unwrap(), DayTimeDuration::from_days(50));
        assert_eq!(DayTimeDuration::parse("PT90M").unwrap().as_secs(), 5400);
        assert_eq!(DayTimeDuration::parse("P1DT2H3M4S").unwrap().as_secs(), 93_784);
        assert_eq!(DayTimeDuration::parse("P0D").unwrap(), DayTimeDuration::ZERO);
        assert_eq!(DayTimeDuration::from_secs(93_784).to_string(), "P1DT2H3M4S");
        assert_eq!(DayTimeDuration::from_secs(5400).to_string(), "PT1H30M");
        assert_eq!(DayTimeDuration::ZERO.to_string(), "P0D");
    }

    #[test]
    fn duration_rejects_fractions_and_garbage() {
        for bad in ["P", "PT", "P1.5D", "PT0.5S", "-P1D", "P1Y", "P1M", "50D", "PT1S2", "P1DT"] {
            assert!(DayTimeDuration::parse(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn numbers_reject_non_finite_and_fold_negative_zero() {
        assert!(Number::new(f64::NAN).is_err());
        assert!(Number::new(f64::INFINITY).is_err());
        assert_eq!(Number::new(-0.0).unwrap(), Number::new(0.0).unwrap());
    }

    #[test]
    fn symbol_requires_prefix() {
        assert!(Symbol::new("care:tumor_size").is_ok());
        assert!(Symbol::new("tumor_size").is_err());
        assert!(Symbol::new(":x").is_err());
        assert!(Symbol::new("care:").is_err());
        assert_eq!(Symbol::new("sct:363406005").unwrap().local(), "363406005");
    }

    #[test]
    fn text_escapes() {
        let t = Term::Text("a \"b\"\n".into());
        assert_eq!(t.to_string(), r#""a \"b\"\n""#);
    }
}
