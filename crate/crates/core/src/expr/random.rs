//! Seeded random expression trees for property checks.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Expr, Func};

/// Vocabulary for generated trees.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    pub unknowns: Vec<Arc<str>>,
    pub params: Vec<Arc<str>>,
    pub dim: usize,
    /// Allow `log` and reciprocals (only safe for symbolic use).
    pub singular: bool,
    /// Allow unknowns and derivatives (off for closed-form trees).
    pub with_unknowns: bool,
}

impl Vocabulary {
    pub fn symbolic(unknowns: &[&str], params: &[&str], dim: usize) -> Self {
        Vocabulary {
            unknowns: unknowns.iter().map(|s| Arc::from(*s)).collect(),
            params: params.iter().map(|s| Arc::from(*s)).collect(),
            dim,
            singular: true,
            with_unknowns: true,
        }
    }

    /// Closed-form trees in the spatial variables, smooth everywhere.
    pub fn closed_form(dim: usize) -> Self {
        Vocabulary { unknowns: Vec::new(), params: Vec::new(), dim, singular: false, with_unknowns: false }
    }
}

fn leaf<R: Rng>(rng: &mut R, voc: &Vocabulary) -> Expr {
    loop {
        match rng.gen_range(0..6) {
            0 => return Expr::rational(rng.gen_range(-4..=4), rng.gen_range(1..=3)),
            1 if !voc.params.is_empty() => return Expr::Param(voc.params.choose(rng).unwrap().clone()),
            2 | 3 if voc.dim > 0 => return Expr::Var(rng.gen_range(0..voc.dim)),
            4 if voc.with_unknowns && !voc.unknowns.is_empty() => {
                return Expr::Unknown(voc.unknowns.choose(rng).unwrap().clone())
            }
            5 if voc.with_unknowns && !voc.unknowns.is_empty() && voc.dim > 0 => {
                let u = Expr::Unknown(voc.unknowns.choose(rng).unwrap().clone());
                let order = rng.gen_range(1..=2);
                let dims: Vec<usize> = (0..order).map(|_| rng.gen_range(0..voc.dim)).collect();
                return Expr::deriv(u, &dims);
            }
            _ => continue,
        }
    }
}

/// Random tree of depth at most `depth`.
pub fn random_expr<R: Rng>(rng: &mut R, depth: usize, voc: &Vocabulary) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, voc);
    }
    match rng.gen_range(0..8) {
        0 | 1 => {
            let n = rng.gen_range(2..=3);
            Expr::Add((0..n).map(|_| random_expr(rng, depth - 1, voc)).collect())
        }
        2 | 3 => {
            let n = rng.gen_range(2..=3);
            Expr::Mul((0..n).map(|_| random_expr(rng, depth - 1, voc)).collect())
        }
        4 => Expr::powi(random_expr(rng, depth - 1, voc), rng.gen_range(2..=3)),
        5 => {
            let f = [Func::Sin, Func::Cos, Func::Exp].choose(rng).copied().unwrap();
            Expr::func(f, random_expr(rng, depth - 1, voc))
        }
        6 if voc.singular => {
            if rng.gen_bool(0.5) {
                Expr::log(random_expr(rng, depth - 1, voc))
            } else {
                Expr::powi(random_expr(rng, depth - 1, voc), -1)
            }
        }
        _ if voc.dim > 0 => {
            let j = rng.gen_range(0..voc.dim);
            Expr::deriv(random_expr(rng, depth - 1, voc), &[j])
        }
        _ => random_expr(rng, depth - 1, voc),
    }
}

/// Randomly permutes the children of every sum and product.
pub fn shuffle_commutative<R: Rng>(e: &Expr, rng: &mut R) -> Expr {
    match e {
        Expr::Add(v) | Expr::Mul(v) => {
            let mut kids: Vec<Expr> = v.iter().map(|c| shuffle_commutative(c, rng)).collect();
            kids.shuffle(rng);
            if matches!(e, Expr::Add(_)) {
                Expr::Add(kids)
            } else {
                Expr::Mul(kids)
            }
        }
        Expr::Deriv(inner, a) => Expr::Deriv(Box::new(shuffle_commutative(inner, rng)), a.clone()),
        Expr::Pow(b, k) => Expr::Pow(Box::new(shuffle_commutative(b, rng)), k.clone()),
        Expr::Func(f, a) => Expr::Func(*f, Box::new(shuffle_commutative(a, rng))),
        Expr::Pressure(v) => Expr::Pressure(v.iter().map(|c| shuffle_commutative(c, rng)).collect()),
        other => other.clone(),
    }
}
