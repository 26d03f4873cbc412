//! Runtime values and their operators.

use std::cmp::Ordering;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

use super::ast::{ArithOp, CastKind, CmpOp};
use crate::rdf::lexical::{self, DurationParts, Instant};
use crate::rdf::Term;
use crate::vocab::xsd;

pub type Decimal = Ratio<i128>;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Iri(String),
    Blank(String),
    String(String),
    Integer(i64),
    /// Exact decimal.
    Decimal(Decimal),
    Double(f64),
    Boolean(bool),
    DateTime(Instant),
    Duration {
        lexical: String,
        parts: DurationParts,
    },
    /// Literal of a datatype without operator support.
    Other {
        lexical: String,
        datatype: String,
    },
    /// Result of a failed operation; filtered rows never keep it.
    Error,
}

const NANOS_PER_SEC: i128 = 1_000_000_000;

pub fn parse_decimal(lex: &str) -> Option<Decimal> {
    if !lexical::is_decimal(lex) {
        return None;
    }
    let (negative, body) = match lex.as_bytes().first() {
        Some(b'-') => (true, &lex[1..]),
        Some(b'+') => (false, &lex[1..]),
        _ => (false, lex),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let mut numer: i128 = 0;
    for b in int.bytes().chain(frac.bytes()) {
        numer = numer.checked_mul(10)?.checked_add((b - b'0') as i128)?;
    }
    let denom = 10i128.checked_pow(frac.len() as u32)?;
    let r = Ratio::new(numer, denom);
    Some(if negative { -r } else { r })
}

/// Decimal lexical form: exact when the expansion terminates, otherwise
/// rounded to 18 fractional digits. Always has a digit after the point.
pub fn format_decimal(d: &Decimal) -> String {
    let negative = d.is_negative();
    let abs = d.abs();
    let int = abs.to_integer();
    let mut rem = abs.numer() - int * abs.denom();
    let denom = *abs.denom();
    let mut frac = String::new();
    while !rem.is_zero() && frac.len() < 18 {
        rem *= 10;
        frac.push(char::from(b'0' + (rem / denom) as u8));
        rem %= denom;
    }
    let mut int = int;
    if !rem.is_zero() && rem * 2 >= denom {
        // Round half up on the last kept digit.
        let mut digits: Vec<u8> = frac.bytes().collect();
        let mut i = digits.len();
        loop {
            if i == 0 {
                int += 1;
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
        frac = String::from_utf8(digits).unwrap();
    }
    let frac = frac.trim_end_matches('0');
    let sign = if negative && (int != 0 || !frac.is_empty()) {
        "-"
    } else {
        ""
    };
    format!("{sign}{int}.{}", if frac.is_empty() { "0" } else { frac })
}

fn decimal_to_f64(d: &Decimal) -> f64 {
    d.to_f64().unwrap_or(f64::NAN)
}

impl Value {
    pub fn from_term(term: &Term) -> Value {
        match term {
            Term::Iri(i) => Value::Iri(i.clone()),
            Term::BlankNode(b) => Value::Blank(b.clone()),
            Term::Literal {
                lexical: lex,
                datatype,
            } => {
                let parsed = match datatype.as_str() {
                    xsd::STRING => Some(Value::String(lex.clone())),
                    xsd::INTEGER => lex
                        .parse()
                        .ok()
                        .map(Value::Integer)
                        .or_else(|| parse_decimal(lex).map(Value::Decimal)),
                    xsd::DECIMAL => parse_decimal(lex).map(Value::Decimal),
                    xsd::DOUBLE | xsd::FLOAT => lexical::parse_double(lex).map(Value::Double),
                    xsd::BOOLEAN => lexical::parse_boolean(lex).map(Value::Boolean),
                    xsd::DATE_TIME => lexical::parse_date_time(lex).map(Value::DateTime),
                    xsd::DURATION => lexical::parse_duration(lex).map(|parts| Value::Duration {
                        lexical: lex.clone(),
                        parts,
                    }),
                    _ => None,
                };
                parsed.unwrap_or_else(|| Value::Other {
                    lexical: lex.clone(),
                    datatype: datatype.clone(),
                })
            }
        }
    }

    /// RDF term for output; `None` for the error value.
    pub fn to_term(&self) -> Option<Term> {
        let lit = |lex: String, dt: &str| Term::Literal {
            lexical: lex,
            datatype: dt.to_owned(),
        };
        Some(match self {
            Value::Iri(i) => Term::Iri(i.clone()),
            Value::Blank(b) => Term::BlankNode(b.clone()),
            Value::String(s) => lit(s.clone(), xsd::STRING),
            Value::Integer(i) => lit(i.to_string(), xsd::INTEGER),
            Value::Decimal(d) => lit(format_decimal(d), xsd::DECIMAL),
            Value::Double(f) => lit(lexical::format_double(*f), xsd::DOUBLE),
            Value::Boolean(b) => lit(b.to_string(), xsd::BOOLEAN),
            Value::DateTime(i) => lit(format_instant(*i), xsd::DATE_TIME),
            Value::Duration { lexical: lex, .. } => lit(lex.clone(), xsd::DURATION),
            Value::Other {
                lexical: lex,
                datatype,
            } => lit(lex.clone(), datatype),
            Value::Error => return None,
        })
    }

    /// Plain lexical form (IRIs without brackets), as used in CSV output.
    pub fn lexical(&self) -> String {
        match self.to_term() {
            Some(Term::Iri(i)) => i,
            Some(Term::BlankNode(b)) => format!("_:{b}"),
            Some(Term::Literal { lexical: lex, .. }) => lex,
            None => String::new(),
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Value::Error)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Value::Integer(_) | Value::Decimal(_) | Value::Double(_)
        )
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Decimal(d) => Some(decimal_to_f64(d)),
            Value::Double(f) => Some(*f),
            _ => None,
        }
    }

    /// Effective boolean value.
    pub fn ebv(&self) -> Option<bool> {
        match self {
            Value::Boolean(b) => Some(*b),
            Value::Integer(i) => Some(*i != 0),
            Value::Decimal(d) => Some(!d.is_zero()),
            Value::Double(f) => Some(*f != 0.0 && !f.is_nan()),
            Value::String(s) => Some(!s.is_empty()),
            _ => None,
        }
    }
}

fn format_instant(i: Instant) -> String {
    match chrono::DateTime::<chrono::Utc>::from_timestamp(i.secs, i.nanos) {
        Some(dt) if i.nanos == 0 => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S%.fZ").to_string(),
        None => i.secs.to_string(),
    }
}

#[derive(Debug, Clone, Copy)]
enum Num {
    I(i64),
    D(Decimal),
    F(f64),
}

fn num(v: &Value) -> Option<Num> {
    match v {
        Value::Integer(i) => Some(Num::I(*i)),
        Value::Decimal(d) => Some(Num::D(*d)),
        Value::Double(f) => Some(Num::F(*f)),
        _ => None,
    }
}

fn to_dec(n: Num) -> Option<Decimal> {
    match n {
        Num::I(i) => Some(Decimal::from_integer(i as i128)),
        Num::D(d) => Some(d),
        Num::F(_) => None,
    }
}

fn to_f64(n: Num) -> f64 {
    match n {
        Num::I(i) => i as f64,
        Num::D(d) => decimal_to_f64(&d),
        Num::F(f) => f,
    }
}

fn dec_value(d: Option<Decimal>) -> Value {
    d.map(Value::Decimal).unwrap_or(Value::Error)
}

fn instant_as_decimal(i: Instant) -> Decimal {
    Ratio::new(
        i.secs as i128 * NANOS_PER_SEC + i.nanos as i128,
        NANOS_PER_SEC,
    )
}

pub fn arith(op: ArithOp, a: &Value, b: &Value) -> Value {
    if let (Value::DateTime(x), Value::DateTime(y), ArithOp::Sub) = (a, b, op) {
        // Difference in days, exact.
        let secs = instant_as_decimal(*x) - instant_as_decimal(*y);
        return dec_value(secs.checked_div(&Decimal::from_integer(86_400)));
    }
    let (Some(x), Some(y)) = (num(a), num(b)) else {
        return Value::Error;
    };
    match (x, y) {
        (Num::I(i), Num::I(j)) => match op {
            ArithOp::Add => i.checked_add(j).map(Value::Integer).unwrap_or(Value::Error),
            ArithOp::Sub => i.checked_sub(j).map(Value::Integer).unwrap_or(Value::Error),
            ArithOp::Mul => i.checked_mul(j).map(Value::Integer).unwrap_or(Value::Error),
            ArithOp::Div if j == 0 => Value::Error,
            ArithOp::Div => Value::Decimal(Ratio::new(i as i128, j as i128)),
        },
        (Num::F(_), _) | (_, Num::F(_)) => {
            let (p, q) = (to_f64(x), to_f64(y));
            Value::Double(match op {
                ArithOp::Add => p + q,
                ArithOp::Sub => p - q,
                ArithOp::Mul => p * q,
                ArithOp::Div => p / q,
            })
        }
        _ => {
            let (p, q) = (to_dec(x).unwrap(), to_dec(y).unwrap());
            dec_value(match op {
                ArithOp::Add => p.checked_add(&q),
                ArithOp::Sub => p.checked_sub(&q),
                ArithOp::Mul => p.checked_mul(&q),
                ArithOp::Div if q.is_zero() => None,
                ArithOp::Div => p.checked_div(&q),
            })
        }
    }
}

pub fn negate(a: &Value) -> Value {
    match a {
        Value::Integer(i) => i.checked_neg().map(Value::Integer).unwrap_or(Value::Error),
        Value::Decimal(d) => Value::Decimal(-d),
        Value::Double(f) => Value::Double(-f),
        _ => Value::Error,
    }
}

fn numeric_cmp(x: Num, y: Num) -> Option<Ordering> {
    match (x, y) {
        (Num::I(i), Num::I(j)) => Some(i.cmp(&j)),
        (Num::F(_), _) | (_, Num::F(_)) => to_f64(x).partial_cmp(&to_f64(y)),
        _ => Some(to_dec(x)?.cmp(&to_dec(y)?)),
    }
}

/// Ordering under the comparison operators; `None` when the operands are not
/// comparable.
fn value_cmp(a: &Value, b: &Value) -> Option<Ordering> {
    if let (Some(x), Some(y)) = (num(a), num(b)) {
        return numeric_cmp(x, y);
    }
    match (a, b) {
        (Value::String(x), Value::String(y)) => Some(x.cmp(y)),
        (Value::Boolean(x), Value::Boolean(y)) => Some(x.cmp(y)),
        (Value::DateTime(x), Value::DateTime(y)) => Some(x.cmp(y)),
        (Value::Duration { parts: x, .. }, Value::Duration { parts: y, .. }) => {
            if x.months == y.months {
                x.seconds.partial_cmp(&y.seconds)
            } else if x.seconds == y.seconds {
                Some(x.months.cmp(&y.months))
            } else {
                None
            }
        }
        _ => None,
    }
}

pub fn compare(op: CmpOp, a: &Value, b: &Value) -> Value {
    if a.is_error() || b.is_error() {
        return Value::Error;
    }
    let ord = value_cmp(a, b);
    let result = match op {
        CmpOp::Eq | CmpOp::Ne => {
            let eq = match ord {
                Some(o) => o == Ordering::Equal,
                None => match (a, b) {
                    (Value::Iri(_) | Value::Blank(_), _) | (_, Value::Iri(_) | Value::Blank(_)) => {
                        a == b
                    }
                    (Value::Other { .. }, _) | (_, Value::Other { .. }) if a == b => true,
                    _ if std::mem::discriminant(a) == std::mem::discriminant(b) => a == b,
                    _ => return Value::Error,
                },
            };
            if op == CmpOp::Eq {
                eq
            } else {
                !eq
            }
        }
        _ => {
            let Some(o) = ord else { return Value::Error };
            match op {
                CmpOp::Lt => o == Ordering::Less,
                CmpOp::Le => o != Ordering::Greater,
                CmpOp::Gt => o == Ordering::Greater,
                CmpOp::Ge => o != Ordering::Less,
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            }
        }
    };
    Value::Boolean(result)
}

fn rank(v: Option<&Value>) -> u8 {
    match v {
        None | Some(Value::Error) => 0,
        Some(Value::Blank(_)) => 1,
        Some(Value::Iri(_)) => 2,
        Some(Value::Integer(_) | Value::Decimal(_) | Value::Double(_)) => 3,
        Some(Value::String(_)) => 4,
        Some(Value::Boolean(_)) => 5,
        Some(Value::DateTime(_)) => 6,
        Some(Value::Duration { .. }) => 7,
        Some(Value::Other { .. }) => 8,
    }
}

/// Total order used by ORDER BY, MIN and MAX: unbound first, then blank
/// nodes, IRIs, and literals grouped by kind; numbers compare by value.
pub fn order_cmp(a: Option<&Value>, b: Option<&Value>) -> Ordering {
    let (ra, rb) = (rank(a), rank(b));
    if ra != rb {
        return ra.cmp(&rb);
    }
    let (Some(a), Some(b)) = (a, b) else {
        return Ordering::Equal;
    };
    match (a, b) {
        (Value::Iri(x), Value::Iri(y)) | (Value::Blank(x), Value::Blank(y)) => x.cmp(y),
        (
            Value::Other {
                lexical: x,
                datatype: dx,
            },
            Value::Other {
                lexical: y,
                datatype: dy,
            },
        ) => dx.cmp(dy).then_with(|| x.cmp(y)),
        _ => match value_cmp(a, b) {
            Some(o) => o,
            // NaN and incomparable durations: fall back to the lexical form.
            None => a.lexical().cmp(&b.lexical()),
        },
    }
}

pub fn cast(kind: CastKind, v: &Value) -> Value {
    let text = match v {
        Value::String(s) => Some(s.as_str()),
        Value::Other { lexical: lex, .. } => Some(lex.as_str()),
        _ => None,
    };
    match kind {
        CastKind::DateTime => match v {
            Value::DateTime(i) => Value::DateTime(*i),
            Value::Integer(secs) => Value::DateTime(Instant::from_unix(*secs)),
            _ => text
                .and_then(|t| {
                    lexical::parse_date_time(t.trim())
                        .or_else(|| t.trim().parse::<i64>().ok().map(Instant::from_unix))
                })
                .map(Value::DateTime)
                .unwrap_or(Value::Error),
        },
        CastKind::Integer => match v {
            Value::Integer(i) => Value::Integer(*i),
            Value::Decimal(d) => d
                .to_integer()
                .to_i64()
                .map(Value::Integer)
                .unwrap_or(Value::Error),
            Value::Double(f) if f.is_finite() && f.abs() < 9.2e18 => {
                Value::Integer(f.trunc() as i64)
            }
            Value::Boolean(b) => Value::Integer(*b as i64),
            Value::DateTime(i) => Value::Integer(i.secs),
            _ => text
                .and_then(|t| t.trim().parse().ok())
                .map(Value::Integer)
                .unwrap_or(Value::Error),
        },
        CastKind::Decimal => match v {
            Value::Integer(i) => Value::Decimal(Decimal::from_integer(*i as i128)),
            Value::Decimal(d) => Value::Decimal(*d),
            Value::Double(f) if f.is_finite() => dec_value(parse_decimal(&format!("{f:.17}"))),
            Value::Boolean(b) => Value::Decimal(Decimal::from_integer(*b as i128)),
            _ => dec_value(text.and_then(|t| parse_decimal(t.trim()))),
        },
        CastKind::Double => match v {
            Value::Boolean(b) => Value::Double(*b as u8 as f64),
            _ => match v.as_f64() {
                Some(f) => Value::Double(f),
                None => text
                    .and_then(|t| lexical::parse_double(t.trim()))
                    .map(Value::Double)
                    .unwrap_or(Value::Error),
            },
        },
        CastKind::String => match v {
            Value::Error => Value::Error,
            other => Value::String(other.lexical()),
        },
        CastKind::Boolean => match v {
            Value::Boolean(b) => Value::Boolean(*b),
            Value::Integer(_) | Value::Decimal(_) | Value::Double(_) => {
                v.ebv().map(Value::Boolean).unwrap_or(Value::Error)
            }
            _ => text
                .and_then(lexical::parse_boolean)
                .map(Value::Boolean)
                .unwrap_or(Value::Error),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dt(s: &str) -> Value {
        Value::DateTime(lexical::parse_date_time(s).unwrap())
    }

    #[test]
    fn day_difference_is_exact() {
        let a = cast(CastKind::DateTime, &Value::Integer(1_643_673_600));
        let b = cast(CastKind::DateTime, &Value::Integer(1_643_673_600 + 86_400));
        assert_eq!(
            arith(ArithOp::Sub, &b, &a),
            Value::Decimal(Decimal::from_integer(1))
        );
        let half = arith(
            ArithOp::Sub,
            &dt("2022-02-01T12:00:00Z"),
            &dt("2022-02-01T00:00:00Z"),
        );
        assert_eq!(half, Value::Decimal(Ratio::new(1, 2)));
        let secs = arith(ArithOp::Mul, &half, &Value::Integer(86_400));
        assert_eq!(
            compare(CmpOp::Eq, &secs, &Value::Integer(43_200)),
            Value::Boolean(true)
        );
        // 100 s as days times 86400 is exactly 100.
        let d = arith(
            ArithOp::Sub,
            &dt("2022-02-01T00:01:40Z"),
            &dt("2022-02-01T00:00:00Z"),
        );
        assert_eq!(
            arith(ArithOp::Mul, &d, &Value::Integer(86_400)),
            Value::Decimal(Decimal::from_integer(100))
        );
    }

    #[test]
    fn mixed_arithmetic() {
        assert_eq!(
            arith(ArithOp::Add, &Value::Integer(1), &Value::Integer(2)),
            Value::Integer(3)
        );
        assert_eq!(
            arith(ArithOp::Div, &Value::Integer(1), &Value::Integer(4)),
            Value::Decimal(Ratio::new(1, 4))
        );
        assert_eq!(
            arith(ArithOp::Div, &Value::Integer(1), &Value::Integer(0)),
            Value::Error
        );
        assert_eq!(
            arith(ArithOp::Mul, &Value::Double(1.5), &Value::Integer(2)),
            Value::Double(3.0)
        );
        assert_eq!(
            arith(ArithOp::Add, &Value::String("a".into()), &Value::Integer(1)),
            Value::Error
        );
        assert_eq!(
            arith(ArithOp::Add, &Value::Integer(i64::MAX), &Value::Integer(1)),
            Value::Error
        );
    }

    #[test]
    fn comparisons() {
        assert_eq!(
            compare(CmpOp::Lt, &Value::Integer(1), &Value::Double(1.5)),
            Value::Boolean(true)
        );
        assert_eq!(
            compare(
                CmpOp::Eq,
                &Value::Decimal(Ratio::new(1, 2)),
                &Value::Double(0.5)
            ),
            Value::Boolean(true)
        );
        assert_eq!(
            compare(CmpOp::Lt, &Value::Iri("a".into()), &Value::Iri("b".into())),
            Value::Error
        );
        assert_eq!(
            compare(CmpOp::Ne, &Value::Iri("a".into()), &Value::Iri("b".into())),
            Value::Boolean(true)
        );
        assert_eq!(
            compare(CmpOp::Eq, &Value::String("a".into()), &Value::Integer(1)),
            Value::Error
        );
    }

    #[test]
    fn casts() {
        assert_eq!(
            cast(
                CastKind::DateTime,
                &Value::String("2022-02-01T00:00:00+00:00".into())
            ),
            Value::DateTime(Instant::from_unix(1_643_673_600))
        );
        assert_eq!(
            cast(CastKind::Integer, &Value::Double(2.9)),
            Value::Integer(2)
        );
        assert_eq!(
            cast(CastKind::Double, &Value::String("x".into())),
            Value::Error
        );
        assert_eq!(
            cast(CastKind::Decimal, &Value::String("1.25".into())),
            Value::Decimal(Ratio::new(5, 4))
        );
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(format_decimal(&Decimal::from_integer(86_400)), "86400.0");
        assert_eq!(format_decimal(&Ratio::new(-5, 4)), "-1.25");
        assert_eq!(format_decimal(&Ratio::new(1, 3)), "0.333333333333333333");
        assert_eq!(format_decimal(&Ratio::new(2, 3)), "0.666666666666666667");
        assert_eq!(parse_decimal("-0.50"), Some(Ratio::new(-1, 2)));
    }

    #[test]
    fn term_round_trip() {
        for t in [
            Term::integer(5),
            Term::double(1.5),
            Term::string("x"),
            Term::literal("PT10S", xsd::DURATION).unwrap(),
            Term::literal("true", xsd::BOOLEAN).unwrap(),
        ] {
            assert_eq!(Value::from_term(&t).to_term().unwrap(), t);
        }
    }

    #[test]
    fn ordering() {
        let mut v = vec![
            Some(Value::String("b".into())),
            Some(Value::Integer(3)),
            None,
            Some(Value::Double(1.5)),
            Some(Value::Iri("x".into())),
        ];
        v.sort_by(|a, b| order_cmp(a.as_ref(), b.as_ref()));
        assert_eq!(
            v,
            vec![
                None,
                Some(Value::Iri("x".into())),
                Some(Value::Double(1.5)),
                Some(Value::Integer(3)),
                Some(Value::String("b".into())),
            ]
        );
    }
}
