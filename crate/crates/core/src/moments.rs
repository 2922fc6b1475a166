//! Exact ensemble moments of the synthesized field.
//!
//! Write a sample as `sum_g Re(A_g exp(i k_g.x))` where each group `g` collects
//! the waves sharing a phase signature (the multiset of phase variables) and a
//! wavevector modulo `M`. Averaged over phases and over grid points:
//!
//! * `E[A^2] = sum_g |A_g|^2 / 2`;
//! * `E[A^3]` only receives triads of two pure groups with variables `u`, `v`
//!   and an interaction group with signature `{u, v}` whose wavevectors satisfy
//!   `k_a + k_b = k_c (mod M)`. Each contributes `6/4 Re(A_a A_b conj A_c)`
//!   for `u != v` and `3/4` of that per ordered pair `(a, b)` for `u = v`.
//!
//! Groups never span coefficients, so the sums are evaluated coefficient by
//! coefficient.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::decomposition::Decomposition;
use crate::grid::{GridSpec, SIdx};
use crate::simulator::waves::{coefficient_waves, for_each_coefficient, pure_waves_of, Var};
use crate::simulator::Order;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetMoments {
    pub mean: f64,
    pub variance: f64,
    pub third_moment: f64,
    pub skewness: f64,
}

type Bin = [u32; 4];

fn bin_of(grid: &GridSpec, k: &SIdx) -> Bin {
    let w = grid.wrap(k);
    [w[0] as u32, w[1] as u32, w[2] as u32, w[3] as u32]
}

fn bin_sum_eq(grid: &GridSpec, a: &Bin, b: &Bin, c: &Bin) -> bool {
    (0..grid.d()).all(|k| (a[k] as usize + b[k] as usize) % grid.m()[k] == c[k] as usize)
}

fn push_grouped<K: PartialEq>(groups: &mut Vec<(K, f64)>, key: K, amp: f64) {
    match groups.iter_mut().find(|(k, _)| *k == key) {
        Some((_, a)) => *a += amp,
        None => groups.push((key, amp)),
    }
}

fn pure_groups(dec: &Decomposition, order: Order, var: Var, out: &mut Vec<(Bin, f64)>) {
    out.clear();
    let grid = dec.grid();
    pure_waves_of(dec, order, var.tensor as usize, var.flat as usize, |w| {
        push_grouped(out, bin_of(grid, &w.k), w.amp)
    });
}

type InterKey = (Var, Var, Bin);

/// Interaction groups of one coefficient, keyed by sorted signature and bin.
fn interaction_groups(
    dec: &Decomposition,
    sp: usize,
    n: usize,
    c: &crate::decomposition::Coefficient,
    out: &mut Vec<(InterKey, f64)>,
) {
    out.clear();
    let grid = dec.grid();
    coefficient_waves(dec, sp, n, c, |w| {
        let (mut u, mut v) = (w.vars[0], w.vars[1]);
        if v < u {
            std::mem::swap(&mut u, &mut v);
        }
        push_grouped(out, (u, v, bin_of(grid, &w.k)), w.amp);
    });
}

/// Visit each contributing triad as `(weight, pure a, pure b, interaction c)`
/// where the weight already includes `6/4` or `3/4`.
fn for_each_triad(
    dec: &Decomposition,
    order: Order,
    mut f: impl FnMut(f64, (Bin, f64), (Bin, f64), (Bin, Complex64)),
) {
    if order == Order::Second {
        return;
    }
    let grid = dec.grid();
    let mut inter = Vec::new();
    let mut gu = Vec::new();
    let mut gv = Vec::new();
    for_each_coefficient(dec, |sp, n, c| {
        interaction_groups(dec, sp, n, &c, &mut inter);
        for &((u, v, bin_c), amp_c) in &inter {
            let a_c = Complex64::from_polar(amp_c, c.beta);
            pure_groups(dec, order, u, &mut gu);
            pure_groups(dec, order, v, &mut gv);
            let w = if u == v { 0.75 } else { 1.5 };
            for &(ba, aa) in &gu {
                for &(bb, ab) in &gv {
                    if bin_sum_eq(grid, &ba, &bb, &bin_c) {
                        f(w, (ba, aa), (bb, ab), (bin_c, a_c));
                    }
                }
            }
        }
    });
}

pub fn exact_variance(dec: &Decomposition, order: Order) -> f64 {
    let grid = dec.grid();
    let len = grid.orthant().len();
    let mut total = 0.0;
    let mut groups = Vec::new();
    for t in 0..grid.n_phase_tensors() {
        for flat in 0..len {
            pure_groups(
                dec,
                order,
                Var {
                    tensor: t as u32,
                    flat: flat as u32,
                },
                &mut groups,
            );
            total += groups.iter().map(|(_, a)| a * a).sum::<f64>() / 2.0;
        }
    }
    if order == Order::Third {
        let mut inter = Vec::new();
        for_each_coefficient(dec, |sp, n, c| {
            interaction_groups(dec, sp, n, &c, &mut inter);
            total += inter.iter().map(|(_, a)| a * a).sum::<f64>() / 2.0;
        });
    }
    total
}

pub fn exact_third_moment(dec: &Decomposition, order: Order) -> f64 {
    let mut total = 0.0;
    for_each_triad(dec, order, |w, (_, aa), (_, ab), (_, ac)| {
        total += w * aa * ab * ac.re;
    });
    total
}

pub fn exact_moments(dec: &Decomposition, order: Order) -> TargetMoments {
    let variance = exact_variance(dec, order);
    let third_moment = exact_third_moment(dec, order);
    let skewness = if variance > 0.0 && third_moment != 0.0 {
        third_moment / variance.powf(1.5)
    } else {
        0.0
    };
    TargetMoments {
        mean: 0.0,
        variance,
        third_moment,
        skewness,
    }
}

/// `E[A(x) A(x + l1) A(x + l2)]` pooled over grid points, lags in grid steps.
pub fn third_order_correlation(dec: &Decomposition, order: Order, l1: &[i64], l2: &[i64]) -> f64 {
    let grid = dec.grid().clone();
    let d = grid.d();
    let zero = vec![0i64; d];
    let lags = [zero.as_slice(), l1, l2];
    let phase = |bin: &Bin, lag: &[i64]| -> f64 {
        (0..d)
            .map(|k| TAU * bin[k] as f64 * lag[k] as f64 / grid.m()[k] as f64)
            .sum()
    };
    // Position assignments (a, b, c); for u = v only the slot of c matters.
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    const SAME: [[usize; 3]; 3] = [[1, 2, 0], [0, 2, 1], [0, 1, 2]];
    let mut total = 0.0;
    for_each_triad(dec, order, |w, (ba, aa), (bb, ab), (bc, ac)| {
        let perms: &[[usize; 3]] = if w == 0.75 { &SAME } else { &PERMS };
        let mut acc = 0.0;
        for pm in perms {
            let ang = phase(&ba, lags[pm[0]]) + phase(&bb, lags[pm[1]]) - phase(&bc, lags[pm[2]]);
            acc += (Complex64::from_polar(aa * ab, ang) * ac.conj()).re;
        }
        total += 0.25 * acc;
    });
    total
}
