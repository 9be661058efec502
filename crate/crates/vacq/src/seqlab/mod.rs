//! Witness sequences for asymptotic regularity and directional pseudo-/quasi-normality,
//! checked exactly per k, plus a grid explorer for the quadratic penalty scheme.

mod penalty;
mod witness;

pub use penalty::{penalization_explore, GridSpec, PenaltyProblem, PenaltyStep, PenalizedRun, RunClass, EVIDENCE_TAG};
pub use witness::{
    verify_quasi_normality_witness, verify_witness, GraphPiece, GraphSpec, KCheck, Notion, QuasiCheck, QuasiReport,
    QuasiWitness, RegularityFlag, WitnessReport, WitnessSequence,
};

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::constraint2::C2Error;
use crate::exactnum::*;
use crate::polyset::SetError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqError {
    #[error("cannot parse sequence expression {0:?}: {1}")]
    Parse(String, String),
    #[error("sampler undefined at k = {0}: {1}")]
    SamplerDomain(u64, String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("evaluation budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    C2(#[from] C2Error),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Laurent polynomial in k with rational coefficients (exponent → coefficient).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KExpr(pub BTreeMap<i32, Rat>);

impl KExpr {
    pub fn constant(c: Rat) -> Self {
        KExpr::term(c, 0)
    }

    pub fn term(c: Rat, p: i32) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(p, c);
        }
        KExpr(m)
    }

    fn add(&self, o: &KExpr) -> KExpr {
        let mut m = self.0.clone();
        for (p, c) in &o.0 {
            *m.entry(*p).or_insert_with(Rat::zero) += c;
        }
        m.retain(|_, c| !c.is_zero());
        KExpr(m)
    }

    fn mul(&self, o: &KExpr) -> KExpr {
        let mut acc = KExpr::default();
        for (p, c) in &self.0 {
            for (q, d) in &o.0 {
                acc = acc.add(&KExpr::term(c * d, p + q));
            }
        }
        acc
    }

    fn neg(&self) -> KExpr {
        KExpr(self.0.iter().map(|(p, c)| (*p, -c.clone())).collect())
    }

    /// Inverse of a single nonzero term.
    fn inv(&self) -> Option<KExpr> {
        if self.0.len() != 1 {
            return None;
        }
        let (p, c) = self.0.iter().next()?;
        Some(KExpr::term(c.recip(), -p))
    }

    pub fn eval(&self, k: u64) -> Option<Rat> {
        let kr = Rat::from_integer(k.into());
        let mut acc = Rat::zero();
        for (p, c) in &self.0 {
            if *p < 0 && k == 0 {
                return None;
            }
            let base = if *p < 0 { kr.recip() } else { kr.clone() };
            let mut t = c.clone();
            for _ in 0..p.unsigned_abs() {
                t *= &base;
            }
            acc += t;
        }
        Some(acc)
    }

    /// Accepts sums of products of rationals and powers of k, e.g. `k/2`, `1/k^2`, `3*(1/k - 2)`.
    /// Division is only by single terms.
    pub fn parse(s: &str) -> Result<KExpr, SeqError> {
        let toks: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = Parser { t: &toks, i: 0, src: s };
        let e = p.expr()?;
        if p.i != toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for KExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (i, (p, c)) in self.0.iter().rev().enumerate() {
            let a = c.abs();
            match (i, c.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let kp = match p {
                0 => String::new(),
                1 => "k".into(),
                q => format!("k^{q}"),
            };
            match (kp.is_empty(), a.is_one()) {
                (true, _) => write!(f, "{}", fmt_rat(&a))?,
                (false, true) => write!(f, "{kp}")?,
                (false, false) => write!(f, "{}*{kp}", fmt_rat(&a))?,
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    t: &'a [char],
    i: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> SeqError {
        SeqError::Parse(self.src.to_string(), format!("{msg} at position {}", self.i))
    }

    fn peek(&self) -> Option<char> {
        self.t.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<KExpr, SeqError> {
        let mut acc = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.i += 1;
            let t = self.term()?;
            acc = if c == '+' { acc.add(&t) } else { acc.add(&t.neg()) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<KExpr, SeqError> {
        let mut acc = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek() {
            self.i += 1;
            let f = self.unary()?;
            acc = if c == '*' {
                acc.mul(&f)
            } else {
                acc.mul(&f.inv().ok_or_else(|| self.err("division by a non-monomial"))?)
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<KExpr, SeqError> {
        if self.peek() == Some('-') {
            self.i += 1;
            return Ok(self.unary()?.neg());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<KExpr, SeqError> {
        match self.peek() {
            Some('(') => {
                self.i += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.i += 1;
                Ok(e)
            }
            Some('k') => {
                self.i += 1;
                let mut p = 1i32;
                if self.peek() == Some('^') {
                    self.i += 1;
                    let neg = self.peek() == Some('-');
                    if neg {
                        self.i += 1;
                    }
                    p = self.integer()?.try_into().map_err(|_| self.err("exponent too large"))?;
                    if neg {
                        p = -p;
                    }
                }
                Ok(KExpr::term(Rat::one(), p))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(KExpr::constant(Rat::from_integer(n.into())))
            }
            _ => Err(self.err("expected a number, k or '('")),
        }
    }

    fn integer(&mut self) -> Result<i64, SeqError> {
        let start = self.i;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
        }
        let s: String = self.t[start..self.i].iter().collect();
        s.parse().map_err(|_| self.err("expected an integer"))
    }
}

/// One vector-valued sequence: closed forms per coordinate, or an explicit table.
#[derive(Debug, Clone, PartialEq)]
pub enum Seq {
    Closed(Vec<KExpr>),
    Table(BTreeMap<u64, RatVec>),
}

impl Seq {
    pub fn parse(items: &[&str]) -> Result<Seq, SeqError> {
        Ok(Seq::Closed(items.iter().map(|s| KExpr::parse(s)).collect::<Result<_, _>>()?))
    }

    pub fn constant(v: &[Rat]) -> Seq {
        Seq::Closed(v.iter().map(|c| KExpr::constant(c.clone())).collect())
    }

    pub fn at(&self, k: u64) -> Result<RatVec, SeqError> {
        match self {
            Seq::Closed(cs) => cs
                .iter()
                .map(|c| c.eval(k).ok_or_else(|| SeqError::SamplerDomain(k, format!("{c} has a pole at k = 0"))))
                .collect(),
            Seq::Table(t) => t.get(&k).cloned().ok_or_else(|| SeqError::SamplerDomain(k, "no table row".into())),
        }
    }

    /// Table keys, when the sequence is tabulated.
    pub fn keys(&self) -> Option<Vec<u64>> {
        match self {
            Seq::Table(t) => Some(t.keys().copied().collect()),
            Seq::Closed(_) => None,
        }
    }
}

/// Monotone tail plus a final error ratio. The ratio is taken against the norm of a
/// nonzero limit, otherwise against the first error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendConfig {
    pub tail_fraction: f64,
    pub ratio: f64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig { tail_fraction: 1.0 / 3.0, ratio: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendItem {
    pub name: String,
    pub satisfied: bool,
    pub monotone_tail: bool,
    pub final_ratio: f64,
}

pub fn trend(name: &str, errs: &[f64], limit_norm: f64, cfg: &TrendConfig) -> TrendItem {
    if errs.is_empty() || errs.iter().any(|e| !e.is_finite()) {
        return TrendItem { name: name.into(), satisfied: false, monotone_tail: false, final_ratio: f64::NAN };
    }
    let n = errs.len();
    let tail = ((n as f64 * cfg.tail_fraction).ceil() as usize).clamp(2.min(n), n);
    let scale = errs.iter().fold(limit_norm, |a, &b| a.max(b));
    let slack = 1e-12 * scale;
    let monotone_tail = errs[n - tail..].windows(2).all(|w| w[1] <= w[0] + slack);
    let last = errs[n - 1];
    let final_ratio = if last <= slack {
        0.0
    } else if limit_norm > 0.0 {
        last / limit_norm
    } else if errs[0] > 0.0 {
        last / errs[0]
    } else {
        f64::INFINITY
    };
    TrendItem { name: name.into(), satisfied: monotone_tail && final_ratio < cfg.ratio, monotone_tail, final_ratio }
}

pub(crate) fn fnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn fvec(v: &[Rat]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

pub(crate) fn fdiff(a: &[f64], b: &[f64]) -> f64 {
    fnorm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

pub(crate) fn fscale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

#[cfg(test)]
mod tests;
