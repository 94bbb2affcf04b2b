//! Scalar attribute values and the comparison predicates evaluated against them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// An attribute value carried by a vertex or an edge.
///
/// Integers and decimals compare numerically with each other; strings only
/// compare with strings.
#[derive(Debug, Clone)]
pub enum Scalar {
    Int(i64),
    Decimal(f64),
    Str(String),
}

pub type Attributes = BTreeMap<String, Scalar>;

impl Scalar {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Scalar::Int(_) | Scalar::Decimal(_))
    }

    fn as_f64(&self) -> Option<f64> {
        match *self {
            Scalar::Int(i) => Some(i as f64),
            Scalar::Decimal(d) => Some(d),
            Scalar::Str(_) => None,
        }
    }

    /// Compare two values of compatible kinds. `None` when the kinds differ.
    pub fn compare(&self, other: &Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => Some(a.cmp(b)),
            (Scalar::Str(a), Scalar::Str(b)) => Some(a.cmp(b)),
            (Scalar::Str(_), _) | (_, Scalar::Str(_)) => None,
            (a, b) => a.as_f64()?.partial_cmp(&b.as_f64()?),
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Scalar::Int(_) => 0,
            Scalar::Decimal(_) => 1,
            Scalar::Str(_) => 2,
        }
    }
}

// Structural equality and a total order, used for canonical predicate
// signatures. Numeric comparison for matching goes through `compare`.
impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
            (Scalar::Decimal(a), Scalar::Decimal(b)) => a.total_cmp(b),
            (Scalar::Str(a), Scalar::Str(b)) => a.cmp(b),
            (a, b) => a.kind_rank().cmp(&b.kind_rank()),
        }
    }
}

impl std::hash::Hash for Scalar {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind_rank().hash(state);
        match self {
            Scalar::Int(i) => i.hash(state),
            Scalar::Decimal(d) => d.to_bits().hash(state),
            Scalar::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Decimal(d) => {
                if d.fract() == 0.0 && d.is_finite() {
                    write!(f, "{d:.1}")
                } else {
                    write!(f, "{d}")
                }
            }
            Scalar::Str(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Decimal(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Str(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `attr cmp value`, tested against a vertex's or an edge's attributes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributePredicate {
    pub attr: String,
    pub cmp: CmpOp,
    pub value: Scalar,
}

impl AttributePredicate {
    pub fn new(attr: impl Into<String>, cmp: CmpOp, value: impl Into<Scalar>) -> Self {
        AttributePredicate {
            attr: attr.into(),
            cmp,
            value: value.into(),
        }
    }

    /// A missing attribute, or one of an incomparable kind, fails every
    /// comparison except `!=` against an incomparable kind.
    pub fn holds(&self, attrs: &Attributes) -> bool {
        let Some(actual) = attrs.get(&self.attr) else {
            return false;
        };
        match actual.compare(&self.value) {
            Some(ord) => match self.cmp {
                CmpOp::Eq => ord == Ordering::Equal,
                CmpOp::Ne => ord != Ordering::Equal,
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                CmpOp::Ge => ord != Ordering::Less,
            },
            None => self.cmp == CmpOp::Ne,
        }
    }
}

impl fmt::Display for AttributePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.attr, self.cmp)?;
        match &self.value {
            Scalar::Str(s) => write_quoted(f, s),
            other => write!(f, "{other}"),
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

pub fn all_hold(preds: &[AttributePredicate], attrs: &Attributes) -> bool {
    preds.iter().all(|p| p.holds(attrs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attrs(pairs: &[(&str, Scalar)]) -> Attributes {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn numeric_kinds_compare_across_int_and_decimal() {
        let a = attrs(&[("year", Scalar::Int(2008))]);
        assert!(AttributePredicate::new("year", CmpOp::Ge, 2008.0).holds(&a));
        assert!(AttributePredicate::new("year", CmpOp::Gt, 2007).holds(&a));
        assert!(!AttributePredicate::new("year", CmpOp::Lt, 2008).holds(&a));
        assert!(AttributePredicate::new("year", CmpOp::Eq, 2008.0).holds(&a));
    }

    #[test]
    fn missing_attribute_fails() {
        let a = Attributes::new();
        for op in [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Ge] {
            assert!(!AttributePredicate::new("x", op, 1).holds(&a));
        }
    }

    #[test]
    fn string_vs_number() {
        let a = attrs(&[("venue", Scalar::from("ICDM"))]);
        assert!(AttributePredicate::new("venue", CmpOp::Eq, "ICDM").holds(&a));
        assert!(!AttributePredicate::new("venue", CmpOp::Eq, 3).holds(&a));
        assert!(AttributePredicate::new("venue", CmpOp::Ne, 3).holds(&a));
        assert!(!AttributePredicate::new("venue", CmpOp::Lt, 3).holds(&a));
    }

    #[test]
    fn display_quotes_strings() {
        let p = AttributePredicate::new("venue", CmpOp::Ne, "a\"b");
        assert_eq!(p.to_string(), "venue!=\"a\\\"b\"");
        assert_eq!(AttributePredicate::new("w", CmpOp::Le, -3).to_string(), "w<=-3");
    }
}
