//! Arithmetic evaluation for `is/2` and the numeric comparisons.

use std::cmp::Ordering;

use super::{EResult, Exception};
use crate::term::{atoms, Store, Term};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn to_term(self) -> Term {
        match self {
            Num::Int(i) => Term::Int(i),
            Num::Float(f) => Term::Float(f),
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }
}

pub fn compare(a: Num, b: Num) -> Ordering {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => x.cmp(&y),
        _ => a.as_f64().partial_cmp(&b.as_f64()).unwrap_or(Ordering::Equal),
    }
}

fn overflow() -> Exception {
    Exception::evaluation("int_overflow")
}

fn int_of(store: &Store, n: Num, culprit: &Term) -> EResult<i64> {
    match n {
        Num::Int(i) => Ok(i),
        Num::Float(_) => Err(Exception::type_error(store, "integer", culprit)),
    }
}

fn check_float(f: f64) -> EResult<Num> {
    if f.is_nan() {
        Err(Exception::evaluation("undefined"))
    } else if f.is_infinite() {
        Err(Exception::evaluation("float_overflow"))
    } else {
        Ok(Num::Float(f))
    }
}

pub fn eval(store: &Store, term: &Term) -> EResult<Num> {
    let t = store.deref(term);
    match &t {
        Term::Int(i) => Ok(Num::Int(*i)),
        Term::Float(f) => Ok(Num::Float(*f)),
        Term::Var(_) => Err(Exception::instantiation()),
        Term::Atom(a) => match a.name() {
            "pi" => Ok(Num::Float(std::f64::consts::PI)),
            "e" => Ok(Num::Float(std::f64::consts::E)),
            "max_tagged_integer" => Ok(Num::Int(i64::MAX)),
            _ => Err(Exception::type_error(store, "evaluable", &eval_pi(&t))),
        },
        Term::Compound(c) if c.args.len() == 1 => {
            let x = eval(store, &c.args[0])?;
            unary(store, c.functor.name(), x, &t)
        }
        Term::Compound(c) if c.args.len() == 2 => {
            let x = eval(store, &c.args[0])?;
            let y = eval(store, &c.args[1])?;
            binary(store, c.functor.name(), x, y, &t)
        }
        _ => Err(Exception::type_error(store, "evaluable", &eval_pi(&t))),
    }
}

fn eval_pi(t: &Term) -> Term {
    match t.functor() {
        Some((name, arity)) => Term::compound(atoms::SLASH, vec![Term::Atom(name), Term::Int(arity as i64)]),
        None => t.clone(),
    }
}

fn unary(store: &Store, op: &str, x: Num, t: &Term) -> EResult<Num> {
    Ok(match (op, x) {
        ("-", Num::Int(i)) => Num::Int(i.checked_neg().ok_or_else(overflow)?),
        ("-", Num::Float(f)) => Num::Float(-f),
        ("+", x) => x,
        ("abs", Num::Int(i)) => Num::Int(i.checked_abs().ok_or_else(overflow)?),
        ("abs", Num::Float(f)) => Num::Float(f.abs()),
        ("sign", Num::Int(i)) => Num::Int(i.signum()),
        ("sign", Num::Float(f)) => Num::Float(if f == 0.0 { 0.0 } else { f.signum() }),
        ("float", x) => Num::Float(x.as_f64()),
        ("integer", Num::Float(f)) => Num::Int(float_to_int(f.round())?),
        ("integer", x) => x,
        ("float_integer_part", x) => Num::Float(x.as_f64().trunc()),
        ("float_fractional_part", x) => Num::Float(x.as_f64().fract()),
        ("truncate", x) => Num::Int(float_to_int(x.as_f64().trunc())?),
        ("round", Num::Int(i)) => Num::Int(i),
        ("round", x) => Num::Int(float_to_int(x.as_f64().round())?),
        ("ceiling", Num::Int(i)) => Num::Int(i),
        ("ceiling", x) => Num::Int(float_to_int(x.as_f64().ceil())?),
        ("floor", Num::Int(i)) => Num::Int(i),
        ("floor", x) => Num::Int(float_to_int(x.as_f64().floor())?),
        ("sqrt", x) => {
            if x.as_f64() < 0.0 {
                return Err(Exception::evaluation("undefined"));
            }
            Num::Float(x.as_f64().sqrt())
        }
        ("sin", x) => Num::Float(x.as_f64().sin()),
        ("cos", x) => Num::Float(x.as_f64().cos()),
        ("tan", x) => Num::Float(x.as_f64().tan()),
        ("atan", x) => Num::Float(x.as_f64().atan()),
        ("exp", x) => check_float(x.as_f64().exp())?,
        ("log", x) => {
            if x.as_f64() <= 0.0 {
                return Err(Exception::evaluation("undefined"));
            }
            Num::Float(x.as_f64().ln())
        }
        ("\\", x) => Num::Int(!int_of(store, x, t)?),
        ("msb", x) => {
            let i = int_of(store, x, t)?;
            Num::Int(63 - i.leading_zeros() as i64)
        }
        _ => return Err(Exception::type_error(store, "evaluable", &eval_pi(t))),
    })
}

fn float_to_int(f: f64) -> EResult<i64> {
    if f.is_finite() && f >= i64::MIN as f64 && f < i64::MAX as f64 {
        Ok(f as i64)
    } else {
        Err(overflow())
    }
}

fn binary(store: &Store, op: &str, x: Num, y: Num, t: &Term) -> EResult<Num> {
    use Num::{Float as F, Int as I};
    let zero_div = || Exception::evaluation("zero_divisor");
    Ok(match op {
        "+" => match (x, y) {
            (I(a), I(b)) => I(a.checked_add(b).ok_or_else(overflow)?),
            _ => check_float(x.as_f64() + y.as_f64())?,
        },
        "-" => match (x, y) {
            (I(a), I(b)) => I(a.checked_sub(b).ok_or_else(overflow)?),
            _ => check_float(x.as_f64() - y.as_f64())?,
        },
        "*" => match (x, y) {
            (I(a), I(b)) => I(a.checked_mul(b).ok_or_else(overflow)?),
            _ => check_float(x.as_f64() * y.as_f64())?,
        },
        "/" => match (x, y) {
            (I(_), I(0)) => return Err(zero_div()),
            (I(a), I(b)) if a.checked_rem(b).ok_or_else(overflow)? == 0 => I(a.checked_div(b).ok_or_else(overflow)?),
            _ => {
                if y.as_f64() == 0.0 {
                    return Err(zero_div());
                }
                check_float(x.as_f64() / y.as_f64())?
            }
        },
        "//" | "mod" | "rem" | "div" => {
            let a = int_of(store, x, t)?;
            let b = int_of(store, y, t)?;
            if b == 0 {
                return Err(zero_div());
            }
            I(match op {
                "//" => a.checked_div(b).ok_or_else(overflow)?,
                "rem" => a.checked_rem(b).ok_or_else(overflow)?,
                "mod" => {
                    let m = a.checked_rem(b).ok_or_else(overflow)?;
                    if m != 0 && (m < 0) != (b < 0) {
                        m + b
                    } else {
                        m
                    }
                }
                _ => {
                    let q = a.checked_div(b).ok_or_else(overflow)?;
                    if a % b != 0 && (a < 0) != (b < 0) {
                        q - 1
                    } else {
                        q
                    }
                }
            })
        }
        "min" => {
            if compare(x, y) == std::cmp::Ordering::Greater {
                y
            } else {
                x
            }
        }
        "max" => {
            if compare(x, y) == std::cmp::Ordering::Less {
                y
            } else {
                x
            }
        }
        "**" => check_float(x.as_f64().powf(y.as_f64()))?,
        "^" => match (x, y) {
            (I(a), I(b)) => {
                if b < 0 {
                    if a == 1 {
                        I(1)
                    } else if a == -1 {
                        I(if b % 2 == 0 { 1 } else { -1 })
                    } else {
                        return Err(Exception::type_error(store, "float", &Term::Int(a)));
                    }
                } else {
                    let e = u32::try_from(b).map_err(|_| overflow())?;
                    I(a.checked_pow(e).ok_or_else(overflow)?)
                }
            }
            _ => check_float(x.as_f64().powf(y.as_f64()))?,
        },
        "atan2" | "atan" => F(x.as_f64().atan2(y.as_f64())),
        ">>" => I(int_of(store, x, t)? >> int_of(store, y, t)?.clamp(0, 63)),
        "<<" => I(int_of(store, x, t)?
            .checked_shl(int_of(store, y, t)?.clamp(0, 63) as u32)
            .ok_or_else(overflow)?),
        "/\\" => I(int_of(store, x, t)? & int_of(store, y, t)?),
        "\\/" => I(int_of(store, x, t)? | int_of(store, y, t)?),
        "xor" => I(int_of(store, x, t)? ^ int_of(store, y, t)?),
        _ => return Err(Exception::type_error(store, "evaluable", &eval_pi(t))),
    })
}
