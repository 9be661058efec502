//! Batch front-end. Reads a problem file, dispatches to the computation modules and
//! prints sorted, pretty JSON.
//!
//! Exit codes: 0 computed, 1 selftest mismatch, 2 input error, 3 only inconclusive
//! verdicts, 4 a certificate failed re-verification.

mod json;
mod selftest;

pub use selftest::{run_all as selftest_report, GOLDEN};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::constraint2::{self as c2, mcs::x_map, ConstraintSystem, ZVariant};
use crate::cqcheck::{self as cq, AsympMode, CQVerdict, CqError, MpccData, Status};
use crate::exactnum::*;
use crate::ncmap;
use crate::polyset;
use crate::sdpcone::{self as sdp, SdpSystem, SymMat};
use crate::seqlab::{self as sl, Seq, TrendConfig};
use json::{At, Owned};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("certificate re-verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Verify(_) => 4,
        }
    }
}

macro_rules! input_err {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}
input_err!(c2::C2Error, CqError, polyset::SetError, ncmap::NcError, sdp::SdpError, sl::SeqError, ExactError);

#[derive(Parser, Debug)]
#[command(name = "vacq", about = "Exact polyhedral variational analysis and constraint-qualification checks")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Cmd {
    /// Tangent, regular, limiting and directional limiting normal cones of a union of polyhedra
    Cones(Common),
    /// Graph of the normal-cone map and its graphical derivative
    Ncmap(Common),
    /// Second-order tangent set of a constraint map and the pseudo-coderivative multipliers
    D2(Common),
    /// Directional constraint qualifications with certificates
    Cq(Common),
    /// Qualifications for complementarity constraints
    Mpcc(Common),
    /// Semidefinite-cone qualifications (floating point)
    Sdp(Common),
    /// Check a witness sequence against a regularity notion
    Witness(Common),
    /// Explore a penalized problem along a schedule of k
    Penalize(Common),
    /// Run the embedded example suite
    Selftest,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated rationals, e.g. "-1,1/2"
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-k trace as CSV (witness, penalize)
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Result of one dispatched command.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub code: i32,
    pub csv: Option<String>,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Cones(_) => "cones",
            Cmd::Ncmap(_) => "ncmap",
            Cmd::D2(_) => "d2",
            Cmd::Cq(_) => "cq",
            Cmd::Mpcc(_) => "mpcc",
            Cmd::Sdp(_) => "sdp",
            Cmd::Witness(_) => "witness",
            Cmd::Penalize(_) => "penalize",
            Cmd::Selftest => "selftest",
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Cmd::D2(_) => "constraint",
            c => c.name(),
        }
    }
}

/// Entry point for the binary: parses `argv`, prints, returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (res, common) = match &cli.cmd {
        Cmd::Selftest => (selftest::run_all(), None),
        cmd => {
            let common = common_of(cmd).clone();
            let text = match &common.input {
                Some(p) => std::fs::read_to_string(p),
                None => std::io::read_to_string(std::io::stdin()),
            };
            let res = text
                .map_err(|e| CliError::Input(format!("cannot read input: {e}")))
                .and_then(|s| serde_json::from_str::<Value>(&s).map_err(|e| CliError::Input(format!("/: invalid JSON: {e}"))))
                .and_then(|v| execute(cmd, v));
            (res, Some(common))
        }
    };
    match res {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.json).expect("serializable") + "\n";
            let written = match common.as_ref().and_then(|c| c.out.as_ref()) {
                Some(p) => std::fs::write(p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("cannot write output: {e}");
                return 2;
            }
            if let (Some(csv), Some(p)) = (&out.csv, common.as_ref().and_then(|c| c.csv.as_ref())) {
                if let Err(e) = std::fs::write(p, csv) {
                    eprintln!("cannot write csv: {e}");
                    return 2;
                }
            }
            out.code
        }
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}

fn common_of(cmd: &Cmd) -> &Common {
    match cmd {
        Cmd::Cones(c) | Cmd::Ncmap(c) | Cmd::D2(c) | Cmd::Cq(c) | Cmd::Mpcc(c) | Cmd::Sdp(c) | Cmd::Witness(c) | Cmd::Penalize(c) => c,
        Cmd::Selftest => unreachable!("selftest takes no input"),
    }
}

/// Validates the problem file envelope and dispatches.
pub fn execute(cmd: &Cmd, problem: Value) -> Result<Output, CliError> {
    let owned = Owned::new(problem);
    let root = owned.root();
    let kind = root.get("kind")?.str()?;
    if kind != cmd.kind() {
        return Err(root.get("kind")?.err(&format!("kind {kind:?} does not match subcommand {} (expects {:?})", cmd.name(), cmd.kind())));
    }
    let payload = root.get("payload")?;
    if kind != "sdp" {
        if let Some(p) = json::find_float(payload.v, payload.path()) {
            return Err(CliError::Input(format!("{p}: floating-point value outside an sdp payload")));
        }
    }
    let meta = root.opt("meta");
    let c = common_of(cmd);
    let seed = match c.seed {
        Some(s) => s,
        None => meta.as_ref().and_then(|m| m.opt("seed")).map(|s| s.u64()).transpose()?.unwrap_or(0),
    };
    let tol = meta.as_ref().and_then(|m| m.opt("tolerances"));
    match cmd {
        Cmd::Cones(c) => cones(&payload, c),
        Cmd::Ncmap(c) => ncmap_cmd(&payload, c),
        Cmd::D2(c) => d2(&payload, c),
        Cmd::Cq(c) => cq_cmd(&payload, c),
        Cmd::Mpcc(c) => mpcc(&payload, c),
        Cmd::Sdp(c) => sdp_cmd(&payload, c, seed),
        Cmd::Witness(c) => witness(&payload, c, tol.as_ref()),
        Cmd::Penalize(_) => penalize(&payload),
        Cmd::Selftest => unreachable!(),
    }
}

fn done(json: Value) -> Output {
    Output { json, code: 0, csv: None }
}

/// `--direction` wins over the payload's `"u"`.
fn direction(p: &At, c: &Common, dim: usize) -> Result<Option<RatVec>, CliError> {
    let u = match (&c.direction, p.opt("u")) {
        (Some(s), _) => json::parse_direction(s)?,
        (None, Some(u)) => u.rvec()?,
        (None, None) => return Ok(None),
    };
    if u.len() != dim {
        return Err(CliError::Input(format!("direction has length {}, expected {dim}", u.len())));
    }
    Ok(Some(u))
}

fn cones(p: &At, c: &Common) -> Result<Output, CliError> {
    let set = json::polyhedral_set(&p.get("set")?)?;
    let x = json::vec_of_len(&p.get("x")?, set.dim)?;
    if !set.contains_point(&x) {
        return Err(p.get("x")?.err("point is not in the set"));
    }
    let mut out = Map::new();
    out.insert("tangent".into(), json::union_json(&polyset::tangent_cone(&set, &x)?));
    let reg = polyset::regular_normal_cone(&set, &x)?;
    out.insert("regular_normal".into(), json!({"dim": set.dim, "pieces": [json::cone_json(&reg)]}));
    out.insert("limiting_normal".into(), json::union_json(&polyset::limiting_normal_cone(&set, &x)?));
    if let Some(u) = direction(p, c, set.dim)? {
        let d = polyset::directional_limiting_normal_cone(&set, &x, &u)?;
        out.insert("directional_limiting_normal".into(), json::union_json(&d));
        out.insert("direction".into(), json::rat_strs(&u));
    }
    Ok(done(Value::Object(out)))
}

fn ncmap_cmd(p: &At, c: &Common) -> Result<Output, CliError> {
    let d = json::polyhedral_set(&p.get("D")?)?;
    let g = ncmap::build_graph(&d);
    let mut out = Map::new();
    out.insert("graph".into(), json::set_json(&g.graph()));
    out.insert("cells".into(), json!(g.cells.len()));
    if let (Some(y), Some(ys)) = (p.opt("y"), p.opt("ystar")) {
        let (y, ys) = (json::vec_of_len(&y, d.dim)?, json::vec_of_len(&ys, d.dim)?);
        if !g.contains(&y, &ys) {
            return Err(p.err("(y, y*) is not in the graph of the normal-cone map"));
        }
        if let Some(u) = direction(p, c, d.dim)? {
            let dn = ncmap::graphical_derivative_on(&g, &y, &ys, &u)?;
            out.insert("derivative".into(), json!({"direction": json::rat_strs(&u), "cone": json::union_json(&dn)}));
        }
    }
    Ok(done(Value::Object(out)))
}

fn variant(c: &Common) -> Result<ZVariant, CliError> {
    match c.mode.as_deref() {
        None | Some("normal") => Ok(ZVariant::Normal),
        Some("tangent_of_normal") => Ok(ZVariant::TangentOfNormal),
        Some(m) => Err(CliError::Input(format!("--mode: unknown variant {m:?} (normal | tangent_of_normal)"))),
    }
}

fn d2(p: &At, c: &Common) -> Result<Output, CliError> {
    let sys = json::system(p)?;
    let u = direction(p, c, sys.n())?.ok_or_else(|| p.err("a direction is required (\"u\" or --direction)"))?;
    let zv = variant(c)?;
    let mut out = Map::new();
    out.insert("direction".into(), json::rat_strs(&u));
    out.insert("T".into(), json::union_json(&c2::big_t(&sys, &u)?));
    let mut tests = vec![];
    let vs = match p.opt("v") {
        Some(v) => v.arr()?.iter().map(|x| json::vec_of_len(x, sys.m())).collect::<Result<Vec<_>, _>>()?,
        None => vec![],
    };
    for v in &vs {
        let w = c2::d2_witness(&sys, &u, v)?;
        let mut t = Map::new();
        t.insert("v".into(), json::rat_strs(v));
        t.insert("member".into(), json!(w.is_some()));
        t.insert("s".into(), w.map(|s| json::rat_strs(&s)).unwrap_or(Value::Null));
        if w_nonempty_pc2(&sys, &u, v, zv, &mut t)? {
            t.insert("variant".into(), json!(format!("{zv:?}")));
        }
        tests.push(Value::Object(t));
    }
    out.insert("v".into(), Value::Array(tests));
    Ok(done(Value::Object(out)))
}

/// Adds the x*-image and the (x*, y*) graph of the pseudo-coderivative set.
fn w_nonempty_pc2(sys: &ConstraintSystem, u: &[Rat], v: &[Rat], zv: ZVariant, t: &mut Map<String, Value>) -> Result<bool, CliError> {
    let set = c2::pseudo_coderivative2_set(sys, u, v, zv)?;
    if set.is_empty() {
        t.insert("pseudo_coderivative2".into(), Value::Null);
        return Ok(false);
    }
    let img = set.x_image(&sys.map, u)?;
    let mut rows = x_map(&set.layout, &sys.map, u);
    rows.extend(set.layout.range("y").map(|i| unit(set.dim(), i)));
    let graph = set.image(&rows)?;
    t.insert("pseudo_coderivative2".into(), json!({"x_image": json::set_json(&img), "x_ystar_graph": json::set_json(&graph)}));
    Ok(true)
}

pub const CQ_NAMES: [&str; 10] = [
    "foscms",
    "soscms",
    "two_regularity_dual",
    "pseudo_reg_explicit",
    "gfrerer_or_polyII",
    "pseudo_subreg_ii",
    "i_new",
    "asymp_nonpoly_theorem",
    "asymp_polyII_relaxed",
    "asymp_polyII_exact",
];

fn run_cq(name: &str, sys: &ConstraintSystem, u: &[Rat]) -> Result<CQVerdict, CqError> {
    match name {
        "foscms" => cq::foscms_u(sys, u),
        "soscms" => cq::soscms_u(sys, u),
        "two_regularity_dual" => cq::two_regularity_dual(sys, u),
        "pseudo_reg_explicit" => cq::pseudo_reg_explicit(sys, u),
        "gfrerer_or_polyII" => cq::gfrerer_or_polyii(sys, u),
        "pseudo_subreg_ii" => cq::pseudo_subreg_ii(sys, u),
        "i_new" => cq::i_new(sys, u),
        "asymp_nonpoly_theorem" => cq::asymp_reg_sufficient(sys, u, AsympMode::NonpolyTheorem),
        "asymp_polyII_relaxed" => cq::asymp_reg_sufficient(sys, u, AsympMode::PolyIIRelaxed),
        "asymp_polyII_exact" => cq::asymp_reg_sufficient(sys, u, AsympMode::PolyIIExact),
        _ => unreachable!("names are checked before dispatch"),
    }
}

/// Verdict JSON with the re-verification result attached; a failed re-check is fatal.
fn checked_json(sys: &ConstraintSystem, v: &CQVerdict) -> Result<Value, CliError> {
    let ok = cq::verify_certificate(sys, v)?;
    if !ok {
        return Err(CliError::Verify(format!("{} at {:?}", v.cq, v.direction.iter().map(fmt_rat).collect::<Vec<_>>())));
    }
    let mut j = v.to_json();
    j["certificate"]["verified"] = json!(true);
    Ok(j)
}

fn status_code(statuses: &[Status]) -> i32 {
    if !statuses.is_empty() && statuses.iter().all(|s| *s == Status::Inconclusive) {
        3
    } else {
        0
    }
}

fn cq_cmd(p: &At, c: &Common) -> Result<Output, CliError> {
    let sys = json::system(p)?;
    let names: Vec<&str> = match c.mode.as_deref() {
        None | Some("all") => CQ_NAMES.to_vec(),
        Some(m) => {
            let chosen: Vec<&str> = m.split(',').map(str::trim).collect();
            if let Some(bad) = chosen.iter().find(|n| !CQ_NAMES.contains(n)) {
                return Err(CliError::Input(format!("--mode: unknown condition {bad:?}; known: {}", CQ_NAMES.join(", "))));
            }
            chosen
        }
    };
    let single = names.len() == 1;
    let (dirs, subspace) = match direction(p, c, sys.n())? {
        Some(u) => (vec![u], None),
        None => {
            let cover = cq::direction_enumeration(&sys, cq::DEFAULT_DIM_BOUND)?;
            (cover.reps, Some(cover.subspace_cell))
        }
    };
    let mut verdicts = vec![];
    let mut statuses = vec![];
    for u in &dirs {
        for name in &names {
            match run_cq(name, &sys, u) {
                Ok(v) => {
                    statuses.push(v.status);
                    verdicts.push(checked_json(&sys, &v)?);
                }
                // a condition whose hypotheses the data does not meet
                Err(e @ (CqError::NonConvexD | CqError::DimensionTooLarge(..))) if !single => {
                    verdicts.push(json!({"cq": name, "direction": json::rat_strs(u), "status": "not_applicable", "reason": e.to_string()}));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    let mut out = Map::new();
    out.insert("verdicts".into(), Value::Array(verdicts));
    if let Some(s) = subspace {
        out.insert("directions".into(), json!({"enumerated": dirs.iter().map(|u| json::rat_strs(u)).collect::<Vec<_>>(), "subspace_cell": s}));
    }
    Ok(Output { json: Value::Object(out), code: status_code(&statuses), csv: None })
}

fn map_or_poly(at: &At) -> Result<c2::SmoothMapData, CliError> {
    if at.opt("components").is_some() {
        Ok(json::poly_model(at)?.smooth_data())
    } else {
        json::smooth_map(at)
    }
}

fn mpcc(p: &At, c: &Common) -> Result<Output, CliError> {
    let data = MpccData { g: map_or_poly(&p.get("G")?)?, h: map_or_poly(&p.get("H")?)? };
    let sys = data.system()?;
    let u = direction(p, c, data.n())?.ok_or_else(|| p.err("a direction is required (\"u\" or --direction)"))?;
    let v = cq::mpcc_cq(&data, &u)?;
    let code = status_code(&[v.cq34.status, v.cq35.status]);
    Ok(Output { json: json!({"cq34": checked_json(&sys, &v.cq34)?, "cq35": checked_json(&sys, &v.cq35)?}), code, csv: None })
}

fn sym(at: &At, m: usize) -> Result<SymMat, CliError> {
    SymMat::from_upper(m, &at.fvec()?).map_err(|e| at.err(&e.to_string()))
}

fn sdp_cmd(p: &At, c: &Common, seed: u64) -> Result<Output, CliError> {
    let m = p.get("m")?.usize()?;
    let g0 = sym(&p.get("g0")?, m)?;
    let jac = p.get("jac")?.arr()?.iter().map(|a| sym(a, m)).collect::<Result<Vec<_>, _>>()?;
    let mut hess = vec![];
    for row in p.get("hess")?.arr()? {
        hess.push(row.arr()?.iter().map(|a| sym(a, m)).collect::<Result<Vec<_>, _>>()?);
    }
    let sys = SdpSystem::new(g0, jac, hess)?;
    let u = match &c.direction {
        Some(s) => json::parse_direction(s)?.iter().map(rat_to_f64).collect(),
        None => p.get("u")?.fvec()?,
    };
    let tau = p.opt("tau").map(|t| t.f64()).transpose()?.unwrap_or(sdp::DEFAULT_TAU);
    let mut cands = vec![];
    if let Some(cs) = p.opt("candidates") {
        for cand in cs.arr()? {
            cands.push((sym(&cand.get("omega")?, m)?, sym(&cand.get("omega_tilde")?, m)?));
        }
    }
    let lines = |ls: &[(String, bool)]| Value::Object(ls.iter().map(|(k, b)| (k.clone(), json!(b))).collect());
    let reports: Vec<Value> = sdp::nlsd_cq_verify(&sys, &u, &cands, tau)?
        .iter()
        .map(|r| {
            json!({
                "premise_ii": lines(&r.premise_ii),
                "premise_i": lines(&r.premise_i),
                "derived": lines(&r.derived),
                "omega_zero": r.omega_zero,
                "omega_tilde_zero": r.omega_tilde_zero,
                "sensitive": r.sensitive,
                "violates_ii": r.violates(sdp::NlsdCq::II),
                "violates_i": r.violates(sdp::NlsdCq::I),
            })
        })
        .collect();
    let budget = p.opt("budget").map(|b| b.usize()).transpose()?.unwrap_or(0);
    let falsified = if budget > 0 {
        match sdp::nlsd_falsify(&sys, &u, budget, seed, tau)? {
            Some(f) => json!({
                "cq": format!("{:?}", f.cq),
                "omega": f.omega.to_upper(),
                "omega_tilde": f.omega_tilde.to_upper(),
                "iteration": f.iteration,
            }),
            None => json!({"found": false, "budget": budget}),
        }
    } else {
        Value::Null
    };
    Ok(done(json!({"candidates": reports, "falsifier": falsified, "seed": seed, "tau": tau, "evidence": "numeric"})))
}

fn rat_to_f64(r: &Rat) -> f64 {
    num::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

fn seq(at: &At) -> Result<Seq, CliError> {
    if let Some(t) = at.opt("table") {
        let mut rows = std::collections::BTreeMap::new();
        for (k, _) in t.obj()? {
            let kk: u64 = k.parse().map_err(|_| t.err(&format!("table key {k:?} is not an index")))?;
            rows.insert(kk, t.get(k)?.rvec()?);
        }
        return Ok(Seq::Table(rows));
    }
    let items: Vec<&str> = at.arr()?.iter().map(|s| s.str()).collect::<Result<_, _>>()?;
    Seq::parse(&items).map_err(|e| at.err(&e.to_string()))
}

fn ks(at: &At) -> Result<Vec<u64>, CliError> {
    if at.v.is_array() {
        return at.u64s();
    }
    let (a, b) = (at.get("from")?.u64()?, at.get("to")?.u64()?);
    if a > b {
        return Err(at.err("empty range"));
    }
    Ok((a..=b).collect())
}

fn trend_cfg(tol: Option<&At>) -> Result<TrendConfig, CliError> {
    let mut cfg = TrendConfig::default();
    if let Some(t) = tol {
        if let Some(f) = t.opt("tail_fraction") {
            cfg.tail_fraction = f.f64()?;
        }
        if let Some(r) = t.opt("ratio") {
            cfg.ratio = r.f64()?;
        }
    }
    Ok(cfg)
}

fn trends_json(ts: &[sl::TrendItem]) -> Value {
    Value::Array(
        ts.iter()
            .map(|t| json!({"name": t.name, "satisfied": t.satisfied, "monotone_tail": t.monotone_tail, "final_ratio": if t.final_ratio.is_finite() { json!(t.final_ratio) } else { Value::Null }}))
            .collect(),
    )
}

fn graph_spec(at: &At) -> Result<sl::GraphSpec, CliError> {
    if let Some(c) = at.opt("constraint") {
        let g = json::poly_model(&c.get("g")?)?;
        let d = json::polyhedral_set(&c.get("D")?)?;
        return Ok(sl::GraphSpec::constraint(&g, &d)?);
    }
    let g = at.get("graph")?;
    let (n, m) = (g.get("n")?.usize()?, g.get("m")?.usize()?);
    let mut pieces = vec![];
    for piece in g.get("pieces")?.arr()? {
        let mut h = vec![];
        for comp in piece.get("h")?.arr()? {
            h.push(c2::poly::parse_poly(n + m, comp.obj()?).map_err(|e| comp.err(&e.to_string()))?);
        }
        pieces.push(sl::GraphPiece { h, d: json::polyhedral_set(&piece.get("D")?)? });
    }
    Ok(sl::GraphSpec::new(n, m, pieces)?)
}

fn witness(p: &At, c: &Common, tol: Option<&At>) -> Result<Output, CliError> {
    let cfg = trend_cfg(tol)?;
    if let Some(q) = p.opt("quasi") {
        return quasi(p, &q, c, &cfg);
    }
    let spec = graph_spec(p)?;
    let notion = match c.mode.as_deref().or(p.opt("notion").map(|n| n.str()).transpose()?) {
        Some("plain") => sl::Notion::Plain,
        None | Some("directional") => sl::Notion::Directional,
        Some("strong") => sl::Notion::Strong,
        Some(o) => return Err(CliError::Input(format!("unknown notion {o:?} (plain | directional | strong)"))),
    };
    let s = p.get("sequence")?;
    let w = sl::WitnessSequence {
        x: seq(&s.get("x")?)?,
        y: seq(&s.get("y")?)?,
        x_star: seq(&s.get("x_star")?)?,
        lambda: seq(&s.get("lambda")?)?,
        ks: ks(&s.get("ks")?)?,
        xbar: json::vec_of_len(&s.get("xbar")?, spec.n)?,
        ybar: json::vec_of_len(&s.get("ybar")?, spec.m)?,
        x_star_limit: json::vec_of_len(&s.get("x_star_limit")?, spec.n)?,
        y_star_limit: s.opt("y_star_limit").map(|y| json::vec_of_len(&y, spec.m)).transpose()?,
    };
    let u = match notion {
        sl::Notion::Plain => direction(p, c, spec.n)?.unwrap_or_else(|| zeros(spec.n)),
        _ => direction(p, c, spec.n)?.ok_or_else(|| p.err("a direction is required (\"u\" or --direction)"))?,
    };
    let r = sl::verify_witness(&w, &spec, &u, notion, &cfg)?;
    let flag = match &r.flag {
        sl::RegularityFlag::Violated => json!({"status": "violated"}),
        sl::RegularityFlag::NotRefuted => json!({"status": "not_refuted"}),
        sl::RegularityFlag::Undetermined(why) => json!({"status": "undetermined", "reason": why}),
    };
    let per_k: Vec<Value> = r
        .per_k
        .iter()
        .map(|k| {
            json!({
                "k": k.k,
                "in_graph": k.in_graph,
                "moved": k.moved,
                "outside_fiber": k.outside_fiber,
                "multipliers": k.multipliers.as_ref().map(|ms| ms.iter().map(|m| json::rat_strs(m)).collect::<Vec<_>>()),
                "error": k.error,
            })
        })
        .collect();
    let json = json!({
        "notion": format!("{:?}", r.notion).to_lowercase(),
        "memberships_exact": r.memberships_exact,
        "fiber_condition": r.fiber_condition,
        "trends": trends_json(&r.trends),
        "trend_config": {"tail_fraction": cfg.tail_fraction, "ratio": cfg.ratio},
        "flag": flag,
        "per_k": per_k,
    });
    Ok(Output { json, code: 0, csv: Some(r.to_csv()) })
}

fn quasi(p: &At, q: &At, c: &Common, cfg: &TrendConfig) -> Result<Output, CliError> {
    let g = json::poly_model(&q.get("g")?)?;
    let d = json::polyhedral_set(&q.get("D")?)?;
    let n = g.n;
    let basis = q.get("basis")?.arr()?.iter().map(|b| json::vec_of_len(b, d.dim)).collect::<Result<Vec<_>, _>>()?;
    let w = sl::QuasiWitness {
        x: seq(&q.get("x")?)?,
        z: seq(&q.get("z")?)?,
        lambda: seq(&q.get("lambda")?)?,
        eta: seq(&q.get("eta")?)?,
        ks: ks(&q.get("ks")?)?,
        lambda_limit: json::vec_of_len(&q.get("lambda_limit")?, d.dim)?,
        basis,
    };
    let u = direction(p, c, n)?.ok_or_else(|| p.err("a direction is required (\"u\" or --direction)"))?;
    let r = sl::verify_quasi_normality_witness(&w, &g, &d, &u, cfg)?;
    let per_k: Vec<Value> = r
        .per_k
        .iter()
        .map(|k| {
            json!({
                "k": k.k,
                "x_moved": k.x_moved,
                "z_in_d": k.z_in_d,
                "lambda_regular_normal": k.lambda_regular_normal,
                "eta_identity": k.eta_identity,
                "pseudo_sign": k.pseudo_sign,
                "quasi_signs": k.quasi_signs,
                "error": k.error,
            })
        })
        .collect();
    Ok(done(json!({
        "lambda_in_kernel": r.lambda_in_kernel,
        "basis_orthonormal": r.basis_orthonormal,
        "vacuous": r.vacuous,
        "trends": trends_json(&r.trends),
        "refutes_pseudo_normality": r.refutes_pseudo_normality,
        "refutes_quasi_normality": r.refutes_quasi_normality,
        "per_k": per_k,
    })))
}

fn penalize(p: &At) -> Result<Output, CliError> {
    let g = json::poly_model(&p.get("g")?)?;
    let phi_at = p.get("phi")?;
    let phi = c2::poly::parse_poly(g.n, phi_at.obj()?).map_err(|e| phi_at.err(&e.to_string()))?;
    let d = json::polyhedral_set(&p.get("D")?)?;
    let gr = p.get("grid")?;
    let grid = sl::GridSpec {
        lo: json::vec_of_len(&gr.get("lo")?, g.n)?,
        hi: json::vec_of_len(&gr.get("hi")?, g.n)?,
        resolution: gr.get("resolution")?.usize()?,
        depth: gr.get("depth")?.usize()?,
        max_evals: gr.get("max_evals")?.usize()?,
    };
    let ks = ks(&p.get("ks")?)?;
    let run = sl::penalization_explore(&sl::PenaltyProblem { phi, g, d }, &ks, &grid)?;
    let class = match &run.class {
        sl::RunClass::BoundedMultipliers => json!({"class": "bounded_multipliers"}),
        sl::RunClass::DivergingMultipliers { u } => json!({"class": "diverging_multipliers", "u": u}),
        sl::RunClass::Inconclusive(why) => json!({"class": "inconclusive", "reason": why}),
    };
    let steps: Vec<Value> = run
        .steps
        .iter()
        .map(|s| {
            json!({
                "k": s.k,
                "x": json::rat_strs(&s.x),
                "y": json::rat_strs(&s.y),
                "lambda": json::rat_strs(&s.lambda),
                "lambda_norm": s.lambda_norm,
                "objective": fmt_rat(&s.objective),
            })
        })
        .collect();
    let code = if matches!(run.class, sl::RunClass::Inconclusive(_)) { 3 } else { 0 };
    let json = json!({
        "classification": class,
        "tag": run.tag,
        "resolution": json::rat_strs(&run.resolution),
        "evaluations": run.evals,
        "steps": steps,
    });
    Ok(Output { json, code, csv: Some(run.to_csv()) })
}
