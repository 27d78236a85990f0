//! Constraint language and its prefix text form.
//!
//! The text form is an s-expression: `(= pitch 52)`, `(< x 59)`,
//! `(= out sigma[3])` (variable on both sides), `(in x 48 52 55)`,
//! `(member 1 from[0])`, `(assigned S[2])`, `(and c1 c2)`, `(reify c b)`
//! and the bare atom `true`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::domain::Value;

/// Name of a store variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Var(Arc::from(name.as_ref()))
    }

    /// `base[i0,i1,...]`
    pub fn indexed(base: &str, indices: &[Value]) -> Self {
        let idx: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
        Var::new(format!("{base}[{}]", idx.join(",")))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

impl Serialize for Var {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Var {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Var::new(s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    True,
    IntEq(Var, Value),
    IntNe(Var, Value),
    IntLt(Var, Value),
    IntLe(Var, Value),
    IntGt(Var, Value),
    IntGe(Var, Value),
    VarEq(Var, Var),
    VarNe(Var, Var),
    InLiteralSet(Var, BTreeSet<Value>),
    NotInLiteralSet(Var, BTreeSet<Value>),
    /// `k ∈ sv` for a set variable `sv`.
    MemberOfSetVar(Value, Var),
    /// `k ∉ sv`.
    NotMemberOfSetVar(Value, Var),
    /// Ask-only: the variable holds a single value. Cannot be told.
    Assigned(Var),
    And(Vec<Constraint>),
    /// `c ↔ (b = 1)` for a 0/1 variable `b`.
    Reify(Box<Constraint>, Var),
}

impl Constraint {
    pub fn eq(v: impl Into<Var>, k: Value) -> Self {
        Constraint::IntEq(v.into(), k)
    }

    pub fn ne(v: impl Into<Var>, k: Value) -> Self {
        Constraint::IntNe(v.into(), k)
    }

    pub fn lt(v: impl Into<Var>, k: Value) -> Self {
        Constraint::IntLt(v.into(), k)
    }

    pub fn le(v: impl Into<Var>, k: Value) -> Self {
        Constraint::IntLe(v.into(), k)
    }

    pub fn gt(v: impl Into<Var>, k: Value) -> Self {
        Constraint::IntGt(v.into(), k)
    }

    pub fn ge(v: impl Into<Var>, k: Value) -> Self {
        Constraint::IntGe(v.into(), k)
    }

    pub fn member(k: Value, sv: impl Into<Var>) -> Self {
        Constraint::MemberOfSetVar(k, sv.into())
    }

    pub fn assigned(v: impl Into<Var>) -> Self {
        Constraint::Assigned(v.into())
    }

    pub fn in_set<I: IntoIterator<Item = Value>>(v: impl Into<Var>, values: I) -> Self {
        Constraint::InLiteralSet(v.into(), values.into_iter().collect())
    }

    pub fn and<I: IntoIterator<Item = Constraint>>(cs: I) -> Self {
        Constraint::And(cs.into_iter().collect())
    }

    pub fn reify(c: Constraint, b: impl Into<Var>) -> Self {
        Constraint::Reify(Box::new(c), b.into())
    }

    /// The complementary constraint, for the forms that have one.
    pub fn negate(&self) -> Option<Constraint> {
        use Constraint::*;
        Some(match self {
            IntEq(v, k) => IntNe(v.clone(), *k),
            IntNe(v, k) => IntEq(v.clone(), *k),
            IntLt(v, k) => IntGe(v.clone(), *k),
            IntGe(v, k) => IntLt(v.clone(), *k),
            IntLe(v, k) => IntGt(v.clone(), *k),
            IntGt(v, k) => IntLe(v.clone(), *k),
            VarEq(a, b) => VarNe(a.clone(), b.clone()),
            VarNe(a, b) => VarEq(a.clone(), b.clone()),
            InLiteralSet(v, s) => NotInLiteralSet(v.clone(), s.clone()),
            NotInLiteralSet(v, s) => InLiteralSet(v.clone(), s.clone()),
            MemberOfSetVar(k, sv) => NotMemberOfSetVar(*k, sv.clone()),
            NotMemberOfSetVar(k, sv) => MemberOfSetVar(*k, sv.clone()),
            True | Assigned(_) | And(_) | Reify(..) => return None,
        })
    }

    /// Visits every variable reference, with the kind the position requires.
    pub fn for_each_var<F: FnMut(&Var, super::VarKind)>(&self, f: &mut F) {
        use super::VarKind::{Int, Set};
        use Constraint::*;
        match self {
            True => {}
            IntEq(v, _) | IntNe(v, _) | IntLt(v, _) | IntLe(v, _) | IntGt(v, _) | IntGe(v, _) => {
                f(v, Int)
            }
            VarEq(a, b) | VarNe(a, b) => {
                f(a, Int);
                f(b, Int);
            }
            InLiteralSet(v, _) | NotInLiteralSet(v, _) => f(v, Int),
            MemberOfSetVar(_, sv) | NotMemberOfSetVar(_, sv) => f(sv, Set),
            // `assigned` applies to either kind; callers resolve by declaration.
            Assigned(v) => f(v, Int),
            And(cs) => cs.iter().for_each(|c| c.for_each_var(f)),
            Reify(c, b) => {
                c.for_each_var(f);
                f(b, Int);
            }
        }
    }

    /// Renames every occurrence of `from` to `to`.
    pub fn rename(&self, from: &Var, to: &Var) -> Constraint {
        use Constraint::*;
        let r = |v: &Var| if v == from { to.clone() } else { v.clone() };
        match self {
            True => True,
            IntEq(v, k) => IntEq(r(v), *k),
            IntNe(v, k) => IntNe(r(v), *k),
            IntLt(v, k) => IntLt(r(v), *k),
            IntLe(v, k) => IntLe(r(v), *k),
            IntGt(v, k) => IntGt(r(v), *k),
            IntGe(v, k) => IntGe(r(v), *k),
            VarEq(a, b) => VarEq(r(a), r(b)),
            VarNe(a, b) => VarNe(r(a), r(b)),
            InLiteralSet(v, s) => InLiteralSet(r(v), s.clone()),
            NotInLiteralSet(v, s) => NotInLiteralSet(r(v), s.clone()),
            MemberOfSetVar(k, sv) => MemberOfSetVar(*k, r(sv)),
            NotMemberOfSetVar(k, sv) => NotMemberOfSetVar(*k, r(sv)),
            Assigned(v) => Assigned(r(v)),
            And(cs) => And(cs.iter().map(|c| c.rename(from, to)).collect()),
            Reify(c, b) => Reify(Box::new(c.rename(from, to)), r(b)),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Constraint::*;
        let list = |s: &BTreeSet<Value>| {
            s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        };
        match self {
            True => f.write_str("true"),
            IntEq(v, k) => write!(f, "(= {v} {k})"),
            IntNe(v, k) => write!(f, "(!= {v} {k})"),
            IntLt(v, k) => write!(f, "(< {v} {k})"),
            IntLe(v, k) => write!(f, "(<= {v} {k})"),
            IntGt(v, k) => write!(f, "(> {v} {k})"),
            IntGe(v, k) => write!(f, "(>= {v} {k})"),
            VarEq(a, b) => write!(f, "(= {a} {b})"),
            VarNe(a, b) => write!(f, "(!= {a} {b})"),
            InLiteralSet(v, s) => write!(f, "(in {v} {})", list(s)),
            NotInLiteralSet(v, s) => write!(f, "(notin {v} {})", list(s)),
            MemberOfSetVar(k, sv) => write!(f, "(member {k} {sv})"),
            NotMemberOfSetVar(k, sv) => write!(f, "(notmember {k} {sv})"),
            Assigned(v) => write!(f, "(assigned {v})"),
            And(cs) => {
                f.write_str("(and")?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            Reify(c, b) => write!(f, "(reify {c} {b})"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected end of constraint text")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    Unexpected(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("expected an integer, found `{0}`")]
    ExpectedInt(String),
    #[error("trailing input after constraint")]
    Trailing,
}

fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

struct Parser {
    tokens: Vec<String>,
    pos: usize,
}

impl Parser {
    fn next(&mut self) -> Result<String, ParseError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ParseError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.next()?.as_str() {
            ")" => Ok(()),
            t => Err(ParseError::Unexpected(t.to_string())),
        }
    }

    fn int(&mut self) -> Result<Value, ParseError> {
        let t = self.next()?;
        t.parse().map_err(|_| ParseError::ExpectedInt(t))
    }

    fn atom(&mut self) -> Result<String, ParseError> {
        let t = self.next()?;
        if t == "(" || t == ")" {
            return Err(ParseError::Unexpected(t));
        }
        Ok(t)
    }

    fn ints_until_close(&mut self) -> Result<BTreeSet<Value>, ParseError> {
        let mut out = BTreeSet::new();
        while self.peek() != Some(")") {
            out.insert(self.int()?);
        }
        self.expect_close()?;
        Ok(out)
    }

    fn constraint(&mut self) -> Result<Constraint, ParseError> {
        let t = self.next()?;
        if t == "true" {
            return Ok(Constraint::True);
        }
        if t != "(" {
            return Err(ParseError::Unexpected(t));
        }
        let op = self.atom()?;
        let c = match op.as_str() {
            "=" | "!=" | "<" | "<=" | ">" | ">=" => {
                let v = Var::new(self.atom()?);
                let rhs = self.atom()?;
                match (rhs.parse::<Value>(), op.as_str()) {
                    (Ok(k), "=") => Constraint::IntEq(v, k),
                    (Ok(k), "!=") => Constraint::IntNe(v, k),
                    (Ok(k), "<") => Constraint::IntLt(v, k),
                    (Ok(k), "<=") => Constraint::IntLe(v, k),
                    (Ok(k), ">") => Constraint::IntGt(v, k),
                    (Ok(k), _) => Constraint::IntGe(v, k),
                    (Err(_), "=") => Constraint::VarEq(v, Var::new(rhs)),
                    (Err(_), "!=") => Constraint::VarNe(v, Var::new(rhs)),
                    (Err(_), _) => return Err(ParseError::ExpectedInt(rhs)),
                }
            }
            "in" | "notin" => {
                let v = Var::new(self.atom()?);
                let set = self.ints_until_close()?;
                return Ok(if op == "in" {
                    Constraint::InLiteralSet(v, set)
                } else {
                    Constraint::NotInLiteralSet(v, set)
                });
            }
            "member" | "notmember" => {
                let k = self.int()?;
                let sv = Var::new(self.atom()?);
                if op == "member" {
                    Constraint::MemberOfSetVar(k, sv)
                } else {
                    Constraint::NotMemberOfSetVar(k, sv)
                }
            }
            "assigned" => Constraint::Assigned(Var::new(self.atom()?)),
            "and" => {
                let mut cs = Vec::new();
                while self.peek() != Some(")") {
                    cs.push(self.constraint()?);
                }
                self.expect_close()?;
                return Ok(Constraint::And(cs));
            }
            "reify" => {
                let c = self.constraint()?;
                let b = Var::new(self.atom()?);
                Constraint::Reify(Box::new(c), b)
            }
            other => return Err(ParseError::UnknownOperator(other.to_string())),
        };
        self.expect_close()?;
        Ok(c)
    }
}

impl FromStr for Constraint {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { tokens: tokenize(s), pos: 0 };
        let c = p.constraint()?;
        if p.pos != p.tokens.len() {
            return Err(ParseError::Trailing);
        }
        Ok(c)
    }
}

impl Serialize for Constraint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Constraint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
