//! Nonlinear terms and commutator identities of the flattened system.
//!
//! Conventions used throughout:
//! - `∂^α` is a horizontal multi-index unless stated otherwise.
//! - `[∂^α, a] b = ∂^α(ab) - a ∂^α b`, a Leibniz sum over `0 < β ≤ α`.
//! - `[∂^α, g, h] = ∂^α(gh) - ∂^α g h - g ∂^α h`, a sum over `0 < β < α`.

pub mod alinhac;
pub mod identities;
pub mod nonlinear;
pub mod temporal;
pub mod transport;

use std::ops::AddAssign;

use crate::discretization::{BulkField, SurfaceFunction};

pub use alinhac::{alinhac_commutator, good_unknowns, GoodUnknowns};
pub use nonlinear::{assemble_g, g2_flux_divergence, g3_vertical_residual, NonlinearTerms};
pub use temporal::{assemble_f, divergence_forcing, TemporalForcing};

/// Horizontal multi-index, second entry unused in 2D.
pub type HIndex = [usize; 2];

/// Space-time multi-index with parabolic weight `2 α₀ + |α_h|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiIndex {
    pub t: usize,
    pub h: HIndex,
}

impl MultiIndex {
    pub fn spatial(h: HIndex) -> Self {
        Self { t: 0, h }
    }

    pub fn temporal(t: usize) -> Self {
        Self { t, h: [0, 0] }
    }

    pub fn weight(&self) -> usize {
        2 * self.t + self.h[0] + self.h[1]
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `β ≤ α`, including `0` and `α`.
pub fn sub_indices(alpha: HIndex) -> Vec<HIndex> {
    let mut out = Vec::new();
    for b0 in 0..=alpha[0] {
        for b1 in 0..=alpha[1] {
            out.push([b0, b1]);
        }
    }
    out
}

pub fn multi_binomial(alpha: HIndex, beta: HIndex) -> f64 {
    binomial(alpha[0], beta[0]) * binomial(alpha[1], beta[1])
}

pub fn order(alpha: HIndex) -> usize {
    alpha[0] + alpha[1]
}

pub fn minus(alpha: HIndex, beta: HIndex) -> HIndex {
    [alpha[0] - beta[0], alpha[1] - beta[1]]
}

/// First nonzero unit direction `α' ≤ α`.
pub fn first_unit(alpha: HIndex) -> HIndex {
    if alpha[0] > 0 {
        [1, 0]
    } else {
        [0, 1]
    }
}

/// Fields that can be differentiated horizontally and multiplied pointwise.
pub trait HorizontalField: Clone + AddAssign {
    fn hderiv(&self, beta: HIndex) -> Self;
    fn zeros_like(&self) -> Self;
    fn product(&self, other: &Self) -> Self;
    fn scaled(&self, c: f64) -> Self;
}

impl HorizontalField for BulkField {
    fn hderiv(&self, beta: HIndex) -> Self {
        self.deriv_h(beta)
    }
    fn zeros_like(&self) -> Self {
        BulkField::zeros(self.grid())
    }
    fn product(&self, other: &Self) -> Self {
        self * other
    }
    fn scaled(&self, c: f64) -> Self {
        self.scale(c)
    }
}

impl HorizontalField for SurfaceFunction {
    fn hderiv(&self, beta: HIndex) -> Self {
        self.deriv(beta)
    }
    fn zeros_like(&self) -> Self {
        SurfaceFunction::zeros(self.grid())
    }
    fn product(&self, other: &Self) -> Self {
        self * other
    }
    fn scaled(&self, c: f64) -> Self {
        self.scale(c)
    }
}

fn leibniz_sum<F: HorizontalField>(alpha: HIndex, a: &F, b: &F, include_top: bool) -> F {
    let mut out = a.zeros_like();
    for beta in sub_indices(alpha) {
        if beta == [0, 0] || (!include_top && beta == alpha) {
            continue;
        }
        let term = a.hderiv(beta).product(&b.hderiv(minus(alpha, beta)));
        let c = multi_binomial(alpha, beta);
        out += if c == 1.0 { term } else { term.scaled(c) };
    }
    out
}

/// `[∂^α, a] b`.
pub fn commutator<F: HorizontalField>(alpha: HIndex, a: &F, b: &F) -> F {
    leibniz_sum(alpha, a, b, true)
}

/// `[∂^α, g, h]`.
pub fn sym_commutator<F: HorizontalField>(alpha: HIndex, g: &F, h: &F) -> F {
    leibniz_sum(alpha, g, h, false)
}
