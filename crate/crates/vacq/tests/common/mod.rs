//! Random instances and independent oracles shared by the integration targets.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use vacq::constraint2::{ConstraintSystem, SmoothMapData};
use vacq::exactnum::*;
use vacq::polygeo::*;
use vacq::polyset::*;
use vacq::sdpcone::SymMat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn small(r: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rat {
    ri(r.gen_range(lo..=hi))
}

pub fn small_vec(r: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> RatVec {
    (0..n).map(|_| small(r, lo, hi)).collect()
}

fn nonzero_row(r: &mut ChaCha8Rng, n: usize) -> RatVec {
    loop {
        let v = small_vec(r, n, -2, 2);
        if !is_zero_vec(&v) {
            return v;
        }
    }
}

/// Union of 1–3 polyhedra in dim ≤ 3 with integer data, most rows tight at `x`.
pub fn random_set_at(r: &mut ChaCha8Rng, dim: usize, x: &[Rat]) -> PolyhedralSet {
    let k = r.gen_range(1..=3);
    let mut pieces = vec![];
    for _ in 0..k {
        let mut s = LinearSystem::new(dim);
        for _ in 0..r.gen_range(1..=3) {
            let row = nonzero_row(r, dim);
            let slack = if r.gen_bool(0.75) { 0 } else { 1 };
            let rhs = dot(&row, x) + ri(slack);
            s.push_ineq(row, rhs);
        }
        if dim > 1 && r.gen_bool(0.15) {
            let row = nonzero_row(r, dim);
            let rhs = dot(&row, x);
            s.push_eq(row, rhs);
        }
        pieces.push(ConvexPolyhedron::new(s));
    }
    PolyhedralSet::new(dim, pieces).unwrap()
}

/// All integer vectors in `[-g, g]^dim`.
pub fn grid(dim: usize, g: i64) -> Vec<RatVec> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|p: RatVec| (-g..=g).map(move |c| [p.clone(), vec![ri(c)]].concat())).collect();
    }
    out
}

/// Rays where `dim − 1` of the given hyperplanes meet (dim ≤ 3), both signs.
pub fn meeting_rays(rows: &[RatVec], dim: usize) -> Vec<RatVec> {
    let mut out = vec![];
    match dim {
        2 => {
            for a in rows {
                out.push(vec![-a[1].clone(), a[0].clone()]);
            }
        }
        3 => {
            for (i, a) in rows.iter().enumerate() {
                for b in &rows[i + 1..] {
                    out.push(vec![
                        &a[1] * &b[2] - &a[2] * &b[1],
                        &a[2] * &b[0] - &a[0] * &b[2],
                        &a[0] * &b[1] - &a[1] * &b[0],
                    ]);
                }
            }
        }
        _ => {}
    }
    let neg: Vec<RatVec> = out.iter().map(|v| vec_scale(v, &ri(-1))).collect();
    out.extend(neg);
    out.retain(|v| !is_zero_vec(v));
    out
}

/// Regular normal cone of the union at a point, straight from the definition:
/// intersection of the convex normal cones of the pieces that contain it.
pub fn regular_normal_by_pieces(s: &PolyhedralSet, p: &[Rat]) -> Option<PolyCone> {
    let mut acc: Option<PolyCone> = None;
    for piece in s.pieces.iter().filter(|q| q.contains_point(p)) {
        let n = normal_cone_convex(piece, p).unwrap();
        acc = Some(match acc {
            None => n,
            Some(a) => a.intersect(&n),
        });
    }
    acc
}

/// Sample directions: a grid plus the rays cut out by every pair of rows.
pub fn sample_dirs(s: &PolyhedralSet, g: i64) -> Vec<RatVec> {
    let rows: Vec<RatVec> = s.pieces.iter().flat_map(|p| p.sys.a.iter().chain(&p.sys.e).cloned()).collect();
    let mut dirs = grid(s.dim, g);
    let rays = meeting_rays(&rows, s.dim);
    // sums of two rays reach into thin sectors of a plane that the grid can miss
    for (i, a) in rays.iter().enumerate() {
        for b in &rays[i + 1..] {
            dirs.push(vec_add(a, b));
        }
    }
    dirs.extend(rays);
    dirs
}

/// Which pieces hold `p`, and their active rows there.
fn signature(s: &PolyhedralSet, p: &[Rat]) -> Vec<Option<Vec<bool>>> {
    s.pieces
        .iter()
        .map(|q| q.contains_point(p).then(|| q.sys.a.iter().zip(&q.sys.b).map(|(r, b)| dot(r, p) == *b).collect()))
        .collect()
}

/// Union of the regular normal cones at `base + eps·w`, w over the samples.
pub fn sampled_normals(s: &PolyhedralSet, base: &[Rat], dirs: &[RatVec], eps: &Rat) -> UnionCone {
    let mut pieces = vec![];
    let mut seen = std::collections::BTreeSet::new();
    for w in dirs {
        let p = vec_add(base, &vec_scale(w, eps));
        if !seen.insert(signature(s, &p)) {
            continue;
        }
        if let Some(n) = regular_normal_by_pieces(s, &p) {
            pieces.push(n);
        }
    }
    UnionCone { dim: s.dim, pieces }.dedup()
}

/// A random constraint system at x̄ = 0 with g(0) = 0 and D a union of cones.
pub struct Instance {
    pub sys: ConstraintSystem,
    pub convex: bool,
}

fn random_cone_piece(r: &mut ChaCha8Rng, m: usize) -> ConvexPolyhedron {
    if r.gen_bool(0.5) {
        let pat: Vec<i8> = (0..m).map(|_| *[-1i8, 0, 1, 2, 2].choose(r).unwrap()).collect();
        let s = sign_set(&[&pat]);
        s.pieces[0].clone()
    } else {
        let mut s = LinearSystem::new(m);
        for _ in 0..r.gen_range(1..=m.min(3)) {
            let row = nonzero_row(r, m);
            s.push_ineq(row, ri(0));
        }
        ConvexPolyhedron::new(s)
    }
}

pub fn random_map(r: &mut ChaCha8Rng, n: usize, m: usize) -> SmoothMapData {
    let jac: RatMat = (0..m)
        .map(|_| if r.gen_bool(0.35) { zeros(n) } else { small_vec(r, n, -1, 1) })
        .collect();
    let hess: Vec<RatMat> = (0..m)
        .map(|_| {
            let mut h = vec![zeros(n); n];
            for i in 0..n {
                for j in i..n {
                    let v = small(r, -1, 1) * ri(if i == j { 2 } else { 1 });
                    h[i][j] = v.clone();
                    h[j][i] = v;
                }
            }
            h
        })
        .collect();
    SmoothMapData { xbar: zeros(n), gval: zeros(m), jac, hess }
}

pub fn random_instance(r: &mut ChaCha8Rng, convex: bool) -> Instance {
    let n = r.gen_range(1..=4);
    let m = r.gen_range(1..=4);
    let map = random_map(r, n, m);
    let pieces = if convex { 1 } else { 2 };
    let d = PolyhedralSet::new(m, (0..pieces).map(|_| random_cone_piece(r, m)).collect()).unwrap();
    Instance { sys: ConstraintSystem::new(map, d).unwrap(), convex }
}

/// Symmetric matrix `Q diag(λ) Qᵀ` with a random orthogonal Q and the given spectrum.
pub fn sym_with_spectrum(r: &mut ChaCha8Rng, lams: &[f64]) -> SymMat {
    let m = lams.len();
    let g = DMatrix::from_fn(m, m, |_, _| r.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lams)) * q.transpose();
    SymMat((&a + a.transpose()) * 0.5)
}

pub fn random_sym(r: &mut ChaCha8Rng, m: usize) -> SymMat {
    let a = DMatrix::from_fn(m, m, |_, _| r.gen_range(-1.0..1.0));
    SymMat((&a + a.transpose()) * 0.5)
}
