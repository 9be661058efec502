//! Polynomial maps with rational coefficients, differentiated exactly.

use std::collections::BTreeMap;

use num::{One, Zero};

use super::{C2Error, SmoothMapData};
use crate::exactnum::*;

/// Exponent vector → coefficient.
pub type Poly = BTreeMap<Vec<u32>, Rat>;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyModel {
    pub n: usize,
    pub components: Vec<Poly>,
    pub xbar: RatVec,
}

fn pow(x: &Rat, k: u32) -> Rat {
    let mut r = Rat::one();
    for _ in 0..k {
        r *= x;
    }
    r
}

pub fn eval(p: &Poly, x: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (e, c) in p {
        let mut t = c.clone();
        for (xi, &k) in x.iter().zip(e) {
            t *= pow(xi, k);
        }
        acc += t;
    }
    acc
}

/// ∂p/∂x_i.
pub fn diff(p: &Poly, i: usize) -> Poly {
    let mut out = Poly::new();
    for (e, c) in p {
        if e[i] == 0 {
            continue;
        }
        let mut f = e.clone();
        f[i] -= 1;
        let v = c * Rat::from_integer(e[i].into());
        let slot = out.entry(f).or_insert_with(Rat::zero);
        *slot += v;
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Parses `{"2,0": "1", "1,1": "-3/2"}`.
pub fn parse_poly(n: usize, obj: &serde_json::Map<String, serde_json::Value>) -> Result<Poly, C2Error> {
    let mut p = Poly::new();
    for (k, v) in obj {
        let e: Vec<u32> = k
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| C2Error::Parse(format!("bad monomial key {k:?}")))?;
        if e.len() != n {
            return Err(C2Error::Parse(format!("monomial {k:?} has {} exponents, expected {n}", e.len())));
        }
        let c = match v {
            serde_json::Value::String(s) => parse_rat(s).map_err(|e| C2Error::Parse(e.to_string()))?,
            _ => return Err(C2Error::Parse(format!("coefficient of {k:?} must be a \"p/q\" string"))),
        };
        *p.entry(e).or_insert_with(Rat::zero) += c;
    }
    p.retain(|_, c| !c.is_zero());
    Ok(p)
}

impl PolyModel {
    pub fn new(n: usize, components: Vec<Poly>, xbar: RatVec) -> Result<Self, C2Error> {
        if xbar.len() != n || components.iter().flat_map(|p| p.keys()).any(|e| e.len() != n) {
            return Err(C2Error::DimensionMismatch("polynomial arity vs base point".into()));
        }
        Ok(PolyModel { n, components, xbar })
    }

    /// Builds from `[[coef, exps…], …]` rows with integer coefficients; handy in tests.
    pub fn from_terms(n: usize, comps: &[&[(i64, &[u32])]], xbar: RatVec) -> Self {
        let components = comps
            .iter()
            .map(|terms| {
                let mut p = Poly::new();
                for (c, e) in terms.iter() {
                    *p.entry(e.to_vec()).or_insert_with(Rat::zero) += ri(*c);
                }
                p
            })
            .collect();
        PolyModel::new(n, components, xbar).expect("consistent terms")
    }

    pub fn value_at(&self, x: &[Rat]) -> RatVec {
        self.components.iter().map(|p| eval(p, x)).collect()
    }

    pub fn jacobian_at(&self, x: &[Rat]) -> RatMat {
        self.components.iter().map(|p| (0..self.n).map(|j| eval(&diff(p, j), x)).collect()).collect()
    }

    pub fn hessians_at(&self, x: &[Rat]) -> Vec<RatMat> {
        self.components
            .iter()
            .map(|p| {
                (0..self.n)
                    .map(|i| {
                        let di = diff(p, i);
                        (0..self.n).map(|j| eval(&diff(&di, j), x)).collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn smooth_data(&self) -> SmoothMapData {
        SmoothMapData {
            xbar: self.xbar.clone(),
            gval: self.value_at(&self.xbar),
            jac: self.jacobian_at(&self.xbar),
            hess: self.hessians_at(&self.xbar),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_paper_maps() {
        let sq = PolyModel::from_terms(1, &[&[(1, &[2])]], rvec(&[0]));
        let d = sq.smooth_data();
        assert_eq!(d.gval, rvec(&[0]));
        assert_eq!(d.jac, rmat(&[&[0]]));
        assert_eq!(d.hess, vec![rmat(&[&[2]])]);

        let g = PolyModel::from_terms(1, &[&[(1, &[1])], &[(-1, &[2])]], rvec(&[0]));
        let d = g.smooth_data();
        assert_eq!(d.jac, rmat(&[&[1], &[0]]));
        assert_eq!(d.hess, vec![rmat(&[&[0]]), rmat(&[&[-2]])]);

        let g = PolyModel::from_terms(2, &[&[(1, &[2, 0])], &[(1, &[0, 2])], &[(1, &[1, 1])]], rvec(&[0, 0]));
        let d = g.smooth_data();
        assert_eq!(d.jac, rmat(&[&[0, 0], &[0, 0], &[0, 0]]));
        assert_eq!(
            d.hess,
            vec![rmat(&[&[2, 0], &[0, 0]]), rmat(&[&[0, 0], &[0, 2]]), rmat(&[&[0, 1], &[1, 0]])]
        );
    }

    #[test]
    fn off_origin_point() {
        // x₁³ − x₁x₂ at (1, 2)
        let g = PolyModel::from_terms(2, &[&[(1, &[3, 0]), (-1, &[1, 1])]], rvec(&[1, 2]));
        let d = g.smooth_data();
        assert_eq!(d.gval, rvec(&[-1]));
        assert_eq!(d.jac, rmat(&[&[1, -1]]));
        assert_eq!(d.hess, vec![rmat(&[&[6, -1], &[-1, 0]])]);
    }

    #[test]
    fn parse_keys() {
        let v: serde_json::Value = serde_json::from_str(r#"{"2,0": "1", "1,1": "-3/2", "0,0": "0"}"#).unwrap();
        let p = parse_poly(2, v.as_object().unwrap()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[&vec![1, 1]], rat(-3, 2));
        let bad: serde_json::Value = serde_json::from_str(r#"{"2": 1.5}"#).unwrap();
        assert!(parse_poly(2, bad.as_object().unwrap()).is_err());
    }
}
