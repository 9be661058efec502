//! Double description: H-cone to generators.

use num::{Signed, Zero};

use crate::exactnum::*;

use super::GeneratorForm;

fn sorted_unique(mut v: Vec<RatVec>) -> Vec<RatVec> {
    v.sort();
    v.dedup();
    v
}

/// Generators of {x : a·x ≤ 0 for a in `ineqs`, e·x = 0 for e in `eqs`}.
pub fn double_description(dim: usize, ineqs: &[RatVec], eqs: &[RatVec]) -> GeneratorForm {
    let mut cons: Vec<RatVec> = Vec::new();
    for e in eqs {
        cons.push(e.clone());
        cons.push(e.iter().map(|x| -x).collect());
    }
    cons.extend(ineqs.iter().cloned());
    cons.retain(|c| !is_zero_vec(c));

    let mut lines: Vec<RatVec> = (0..dim).map(|i| unit(dim, i)).collect();
    let mut rays: Vec<RatVec> = Vec::new();

    for (k, a) in cons.iter().enumerate() {
        if let Some(li) = lines.iter().position(|l| !dot(a, l).is_zero()) {
            let l = lines.remove(li);
            let s = dot(a, &l);
            for m in lines.iter_mut().chain(rays.iter_mut()) {
                let f = dot(a, m) / &s;
                if !f.is_zero() {
                    *m = vec_sub(m, &vec_scale(&l, &f));
                }
            }
            let dir = if s.is_positive() { ri(-1) } else { ri(1) };
            rays.push(primitive(&vec_scale(&l, &dir)));
            lines = lines.iter().map(|l| primitive_signed(l)).collect();
            rays = rays.iter().map(|r| primitive(r)).collect();
            continue;
        }
        let vals: Vec<Rat> = rays.iter().map(|r| dot(a, r)).collect();
        let prior = &cons[..k];
        let zero_set = |r: &RatVec| -> Vec<bool> { prior.iter().map(|c| dot(c, r).is_zero()).collect() };
        let zs: Vec<Vec<bool>> = rays.iter().map(zero_set).collect();
        let mut next: Vec<RatVec> = Vec::new();
        for (r, v) in rays.iter().zip(&vals) {
            if !v.is_positive() {
                next.push(r.clone());
            }
        }
        for (pi, p) in rays.iter().enumerate() {
            if !vals[pi].is_positive() {
                continue;
            }
            for (ni, n) in rays.iter().enumerate() {
                if !vals[ni].is_negative() {
                    continue;
                }
                let common: Vec<bool> = zs[pi].iter().zip(&zs[ni]).map(|(x, y)| *x && *y).collect();
                let blocked = (0..rays.len()).any(|o| {
                    o != pi && o != ni && common.iter().zip(&zs[o]).all(|(c, z)| !*c || *z)
                });
                if blocked {
                    continue;
                }
                let new = vec_sub(&vec_scale(n, &vals[pi]), &vec_scale(p, &vals[ni]));
                if !is_zero_vec(&new) {
                    next.push(primitive(&new));
                }
            }
        }
        rays = sorted_unique(next);
    }
    let lines = row_basis(&lines, dim).iter().map(|l| primitive_signed(l)).collect();
    GeneratorForm { dim, rays: sorted_unique(rays), lines }
}
