use num::bigint::BigInt;
use num::{BigRational, Integer, One, Signed, Zero};
use std::str::FromStr;

use super::ExactError;

pub type Rat = BigRational;
pub type RatVec = Vec<Rat>;
pub type RatMat = Vec<RatVec>;

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn ri(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rvec(xs: &[i64]) -> RatVec {
    xs.iter().map(|&x| ri(x)).collect()
}

pub fn rmat(rows: &[&[i64]]) -> RatMat {
    rows.iter().map(|r| rvec(r)).collect()
}

pub fn zeros(n: usize) -> RatVec {
    vec![Rat::zero(); n]
}

pub fn unit(n: usize, i: usize) -> RatVec {
    let mut v = zeros(n);
    v[i] = Rat::one();
    v
}

/// Parses "p/q", "p" (optionally signed). Decimal points are refused.
pub fn parse_rat(s: &str) -> Result<Rat, ExactError> {
    let t = s.trim();
    if t.contains('.') || t.contains('e') || t.contains('E') || t.is_empty() {
        return Err(ExactError::Parse(s.to_string()));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| ExactError::Parse(s.to_string()))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| ExactError::Parse(s.to_string()))?;
        if q.is_zero() {
            return Err(ExactError::Parse(s.to_string()));
        }
        Ok(BigRational::new(p, q))
    } else {
        let p = BigInt::from_str(t).map_err(|_| ExactError::Parse(s.to_string()))?;
        Ok(BigRational::from_integer(p))
    }
}

pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn fmt_vec(v: &[Rat]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_rat).collect();
    format!("({})", parts.join(","))
}

pub fn to_f64(r: &Rat) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    let mut s = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

pub fn mat_vec(m: &[RatVec], v: &[Rat]) -> RatVec {
    m.iter().map(|row| dot(row, v)).collect()
}

/// mᵀ v for an r×c matrix m (v has length r).
pub fn mat_t_vec(m: &[RatVec], v: &[Rat], cols: usize) -> RatVec {
    let mut out = zeros(cols);
    for (row, vi) in m.iter().zip(v) {
        if vi.is_zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            if !a.is_zero() {
                *o += a * vi;
            }
        }
    }
    out
}

pub fn transpose(m: &[RatVec], cols: usize) -> RatMat {
    (0..cols).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn vec_add(a: &[Rat], b: &[Rat]) -> RatVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Rat], b: &[Rat]) -> RatVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(a: &[Rat], s: &Rat) -> RatVec {
    a.iter().map(|x| x * s).collect()
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(|x| x.is_zero())
}

/// Positive rescaling to coprime integer entries.
pub fn primitive(v: &[Rat]) -> RatVec {
    if is_zero_vec(v) {
        return v.to_vec();
    }
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    ints.into_iter().map(|x| BigRational::from_integer(x / &g)).collect()
}

/// Primitive form with the first nonzero entry positive (for lines / equality rows).
pub fn primitive_signed(v: &[Rat]) -> RatVec {
    let p = primitive(v);
    match p.iter().find(|x| !x.is_zero()) {
        Some(f) if f.is_negative() => p.iter().map(|x| -x).collect(),
        _ => p,
    }
}

pub fn sign(r: &Rat) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

/// Rank of a rational matrix (Gaussian elimination).
pub fn rank(m: &[RatVec]) -> usize {
    let mut rows: Vec<RatVec> = m.to_vec();
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let piv = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &piv;
                for j in c..cols {
                    let t = &rows[r][j] * &f;
                    rows[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Reduced row echelon basis of the row space (nonzero rows only).
pub fn row_basis(m: &[RatVec], cols: usize) -> RatMat {
    let mut rows: Vec<RatVec> = m.to_vec();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let piv = rows[r][c].clone();
        for j in 0..cols {
            rows[r][j] = &rows[r][j] / &piv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..cols {
                    let t = &rows[r][j] * &f;
                    rows[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    rows
}
