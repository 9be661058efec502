//! Reading problem JSON with pointer-addressed errors, and rendering results.

use serde_json::{json, Map, Value};

use super::CliError;
use crate::constraint2::{poly::parse_poly, ConstraintSystem, PolyModel, SmoothMapData};
use crate::exactnum::*;
use crate::polygeo::{ConvexPolyhedron, PolyCone};
use crate::polyset::{PolyhedralSet, UnionCone};

/// A JSON value together with its pointer path.
#[derive(Clone)]
pub struct At<'a> {
    pub v: &'a Value,
    path: String,
}

pub struct Owned {
    v: Value,
}

impl Owned {
    pub fn new(v: Value) -> Self {
        Owned { v }
    }

    pub fn root(&self) -> At<'_> {
        At { v: &self.v, path: String::new() }
    }
}

impl<'a> At<'a> {
    pub fn err(&self, msg: &str) -> CliError {
        let p = if self.path.is_empty() { "/" } else { &self.path };
        CliError::Input(format!("{p}: {msg}"))
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn opt(&self, key: &str) -> Option<At<'a>> {
        let v = self.v.as_object()?.get(key)?;
        if v.is_null() {
            return None;
        }
        Some(At { v, path: format!("{}/{}", self.path, key.replace('~', "~0").replace('/', "~1")) })
    }

    pub fn get(&self, key: &str) -> Result<At<'a>, CliError> {
        if !self.v.is_object() {
            return Err(self.err("expected an object"));
        }
        self.opt(key).ok_or_else(|| self.err(&format!("missing field {key:?}")))
    }

    pub fn arr(&self) -> Result<Vec<At<'a>>, CliError> {
        let a = self.v.as_array().ok_or_else(|| self.err("expected an array"))?;
        Ok(a.iter().enumerate().map(|(i, v)| At { v, path: format!("{}/{}", self.path, i) }).collect())
    }

    pub fn obj(&self) -> Result<&'a Map<String, Value>, CliError> {
        self.v.as_object().ok_or_else(|| self.err("expected an object"))
    }

    pub fn str(&self) -> Result<&'a str, CliError> {
        self.v.as_str().ok_or_else(|| self.err("expected a string"))
    }

    pub fn usize(&self) -> Result<usize, CliError> {
        self.v.as_u64().map(|x| x as usize).ok_or_else(|| self.err("expected a nonnegative integer"))
    }

    pub fn u64(&self) -> Result<u64, CliError> {
        self.v.as_u64().ok_or_else(|| self.err("expected a nonnegative integer"))
    }

    pub fn f64(&self) -> Result<f64, CliError> {
        self.v.as_f64().ok_or_else(|| self.err("expected a number"))
    }

    /// `"p/q"` string or integer literal.
    pub fn rat(&self) -> Result<Rat, CliError> {
        match self.v {
            Value::String(s) => parse_rat(s).map_err(|e| self.err(&e.to_string())),
            Value::Number(n) if n.is_i64() => Ok(ri(n.as_i64().expect("checked"))),
            Value::Number(_) => Err(self.err("floating-point value where a rational \"p/q\" is required")),
            _ => Err(self.err("expected a rational \"p/q\" string")),
        }
    }

    pub fn rvec(&self) -> Result<RatVec, CliError> {
        self.arr()?.iter().map(|a| a.rat()).collect()
    }

    pub fn rmat(&self) -> Result<RatMat, CliError> {
        self.arr()?.iter().map(|a| a.rvec()).collect()
    }

    pub fn fvec(&self) -> Result<Vec<f64>, CliError> {
        self.arr()?.iter().map(|a| a.f64()).collect()
    }

    pub fn u64s(&self) -> Result<Vec<u64>, CliError> {
        self.arr()?.iter().map(|a| a.u64()).collect()
    }
}

/// First floating-point literal under `v`, as a pointer.
pub fn find_float(v: &Value, path: &str) -> Option<String> {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => Some(if path.is_empty() { "/".into() } else { path.into() }),
        Value::Array(a) => a.iter().enumerate().find_map(|(i, x)| find_float(x, &format!("{path}/{i}"))),
        Value::Object(m) => m.iter().find_map(|(k, x)| find_float(x, &format!("{path}/{k}"))),
        _ => None,
    }
}

fn check_len(at: &At, v: &[Rat], n: usize) -> Result<(), CliError> {
    if v.len() != n {
        return Err(at.err(&format!("expected {n} entries, got {}", v.len())));
    }
    Ok(())
}

pub fn vec_of_len(at: &At, n: usize) -> Result<RatVec, CliError> {
    let v = at.rvec()?;
    check_len(at, &v, n)?;
    Ok(v)
}

fn rows_of(at: &At, cols: usize) -> Result<RatMat, CliError> {
    let mut out = vec![];
    for r in at.arr()? {
        out.push(vec_of_len(&r, cols)?);
    }
    Ok(out)
}

/// `{"A": [[…]], "b": […], "E": [[…]], "d": […]}`; missing parts are empty.
pub fn polyhedron(at: &At, dim: usize) -> Result<ConvexPolyhedron, CliError> {
    let a = at.opt("A").map(|x| rows_of(&x, dim)).transpose()?.unwrap_or_default();
    let b = at.opt("b").map(|x| vec_of_len(&x, a.len())).transpose()?.unwrap_or_else(|| zeros(a.len()));
    let e = at.opt("E").map(|x| rows_of(&x, dim)).transpose()?.unwrap_or_default();
    let d = at.opt("d").map(|x| vec_of_len(&x, e.len())).transpose()?.unwrap_or_else(|| zeros(e.len()));
    if at.opt("b").is_none() && at.opt("A").is_some() && !a.is_empty() {
        return Err(at.err("\"A\" given without \"b\""));
    }
    let sys = LinearSystem::from_parts(dim, a, b, e, d).map_err(|e| at.err(&e.to_string()))?;
    let mut p = ConvexPolyhedron::new(sys);
    if let Some(l) = at.opt("label") {
        p.label = Some(l.str()?.to_string());
    }
    Ok(p)
}

pub fn polyhedral_set(at: &At) -> Result<PolyhedralSet, CliError> {
    let dim = at.get("dim")?.usize()?;
    let pieces = at.get("pieces")?.arr()?.iter().map(|p| polyhedron(p, dim)).collect::<Result<Vec<_>, _>>()?;
    PolyhedralSet::new(dim, pieces).map_err(|e| at.err(&e.to_string()))
}

pub fn poly_model(at: &At) -> Result<PolyModel, CliError> {
    let n = at.get("n")?.usize()?;
    let xbar = vec_of_len(&at.get("xbar")?, n)?;
    let mut comps = vec![];
    for c in at.get("components")?.arr()? {
        comps.push(parse_poly(n, c.obj()?).map_err(|e| c.err(&e.to_string()))?);
    }
    PolyModel::new(n, comps, xbar).map_err(|e| at.err(&e.to_string()))
}

pub fn smooth_map(at: &At) -> Result<SmoothMapData, CliError> {
    let xbar = at.get("xbar")?.rvec()?;
    let gval = at.get("gval")?.rvec()?;
    let jac = at.get("jac")?.rmat()?;
    let hess = at.get("hess")?.arr()?.iter().map(|h| h.rmat()).collect::<Result<Vec<_>, _>>()?;
    let map = SmoothMapData { xbar, gval, jac, hess };
    map.validate().map_err(|e| at.err(&e.to_string()))?;
    Ok(map)
}

/// `"g"` (polynomial model) or `"map"` (value, Jacobian, Hessians).
pub fn map_data(at: &At) -> Result<SmoothMapData, CliError> {
    match (at.opt("g"), at.opt("map")) {
        (Some(g), None) => Ok(poly_model(&g)?.smooth_data()),
        (None, Some(m)) => smooth_map(&m),
        _ => Err(at.err("exactly one of \"g\" and \"map\" is required")),
    }
}

pub fn system(at: &At) -> Result<ConstraintSystem, CliError> {
    let map = map_data(at)?;
    match (at.opt("D"), at.opt("factors")) {
        (Some(d), None) => ConstraintSystem::new(map, polyhedral_set(&d)?).map_err(|e| at.err(&e.to_string())),
        (None, Some(f)) => {
            let factors = f.arr()?.iter().map(polyhedral_set).collect::<Result<Vec<_>, _>>()?;
            ConstraintSystem::with_factors(map, factors).map_err(|e| at.err(&e.to_string()))
        }
        _ => Err(at.err("exactly one of \"D\" and \"factors\" is required")),
    }
}

pub fn rat_strs(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(fmt_rat(x))).collect())
}

fn mat_strs(m: &[RatVec]) -> Value {
    Value::Array(m.iter().map(|r| rat_strs(r)).collect())
}

pub fn system_json(s: &LinearSystem) -> Value {
    let mut o = Map::new();
    if !s.a.is_empty() {
        o.insert("A".into(), mat_strs(&s.a));
        o.insert("b".into(), rat_strs(&s.b));
    }
    if !s.e.is_empty() {
        o.insert("E".into(), mat_strs(&s.e));
        o.insert("d".into(), rat_strs(&s.d));
    }
    Value::Object(o)
}

pub fn cone_json(c: &PolyCone) -> Value {
    let s = crate::exactnum::fm::remove_redundant(&c.sys);
    let mut o = Map::new();
    if !s.a.is_empty() {
        o.insert("A".into(), mat_strs(&s.a));
    }
    if !s.e.is_empty() {
        o.insert("E".into(), mat_strs(&s.e));
    }
    Value::Object(o)
}

pub fn union_json(u: &UnionCone) -> Value {
    json!({"dim": u.dim, "pieces": u.pieces.iter().map(cone_json).collect::<Vec<_>>()})
}

pub fn set_json(s: &PolyhedralSet) -> Value {
    json!({"dim": s.dim, "pieces": s.pieces.iter().map(|p| system_json(&crate::exactnum::fm::remove_redundant(&p.sys))).collect::<Vec<_>>()})
}

/// Comma-separated rationals, as given to `--direction`.
pub fn parse_direction(s: &str) -> Result<RatVec, CliError> {
    s.split(',')
        .map(|t| parse_rat(t.trim()).map_err(|e| CliError::Input(format!("--direction: {e}"))))
        .collect()
}
