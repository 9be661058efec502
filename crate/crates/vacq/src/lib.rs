//! Exact polyhedral variational analysis: tangent and normal cones of unions
//! of polyhedra, graphical derivatives of normal-cone maps, second-order
//! multiplier sets for constraint maps `g(x) − D`, and decision procedures for
//! directional constraint qualifications with re-checkable certificates.

pub mod exactnum;
pub mod polygeo;
pub mod ncmap;
pub mod polyset;
pub mod constraint2;
pub mod cqcheck;
pub mod sdpcone;
pub mod seqlab;
pub mod cli;
