//! Galois-module structure of eigenspace unit filtrations in the cyclotomic
//! Z_p-tower: index combinatorics, the field of norms, finite levels, and
//! the generators κ_{m,i}.

pub mod cli;
pub mod finlevel;
pub mod fq;
pub mod groupring;
pub mod indexfn;
pub mod inflevel;
pub mod modlinalg;
pub mod normfield;
pub mod padic;
