//! Enumeration of the cosine waves that make up a sample.
//!
//! * General field: pattern `p` uses its own spectrum, decomposition and phase
//!   tensor; interaction waves sit at `p o n`.
//! * Quadrant field, same-sign coupling: the single decomposition is replayed
//!   under every pattern, interaction waves at `p o n`.
//! * Quadrant field, all-sign coupling: every `(p, p')` pairs `p o i` with
//!   `p' o j`, giving waves at `p o i + p' o j` with phase
//!   `Phi^p_i + Phi^p'_j + beta`.
//!
//! A wave is `amp * cos(k.x + beta + sum of its phase variables)`.

use crate::decomposition::{Coefficient, Decomposition};
use crate::grid::{Coupling, FieldKind, SIdx, MAX_DIM};
use crate::simulator::Order;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub tensor: u32,
    pub flat: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave {
    pub k: SIdx,
    pub amp: f64,
    pub beta: f64,
    pub vars: [Var; 2],
    pub n_vars: u8,
}

impl Wave {
    pub fn vars(&self) -> &[Var] {
        &self.vars[..self.n_vars as usize]
    }
}

/// Pure-wave amplitude of spectral pattern `sp` at orthant index `flat`.
#[inline]
pub fn pure_amp(dec: &Decomposition, order: Order, sp: usize, flat: usize) -> f64 {
    let s = match order {
        Order::Second => dec.s(sp)[flat],
        Order::Third => dec.s_p(sp)[flat],
    };
    2.0 * (s * dec.grid().cell()).sqrt()
}

/// Interaction-wave amplitude for a coefficient at `n`.
#[inline]
pub fn interaction_amp(dec: &Decomposition, sp: usize, n: usize, b: f64) -> f64 {
    2.0 * (dec.s(sp)[n] * dec.grid().cell()).sqrt() * b
}

fn add(a: &SIdx, b: &SIdx) -> SIdx {
    let mut out = [0i64; MAX_DIM];
    for k in 0..MAX_DIM {
        out[k] = a[k] + b[k];
    }
    out
}

/// Pure waves whose phase variable is `(tensor, flat)`.
pub fn pure_waves_of(
    dec: &Decomposition,
    order: Order,
    tensor: usize,
    flat: usize,
    mut f: impl FnMut(Wave),
) {
    let grid = dec.grid();
    let n = grid.orthant().index(flat);
    let var = Var {
        tensor: tensor as u32,
        flat: flat as u32,
    };
    for p in 0..grid.n_patterns() {
        if grid.phase_tensor(p) != tensor {
            continue;
        }
        let sp = if grid.model.kind == FieldKind::General {
            p
        } else {
            0
        };
        let amp = pure_amp(dec, order, sp, flat);
        if amp > 0.0 {
            f(Wave {
                k: grid.signed(p, &n),
                amp,
                beta: 0.0,
                vars: [var, var],
                n_vars: 1,
            });
        }
    }
}

pub fn for_each_pure(dec: &Decomposition, order: Order, mut f: impl FnMut(Wave)) {
    let grid = dec.grid();
    let len = grid.orthant().len();
    for t in 0..grid.n_phase_tensors() {
        for flat in 0..len {
            pure_waves_of(dec, order, t, flat, &mut f);
        }
    }
}

/// Interaction waves of one coefficient of spectral pattern `sp` at `n`.
pub fn coefficient_waves(
    dec: &Decomposition,
    sp: usize,
    n: usize,
    c: &Coefficient,
    mut f: impl FnMut(Wave),
) {
    let grid = dec.grid();
    let shape = grid.orthant();
    let amp = interaction_amp(dec, sp, n, c.b);
    if amp == 0.0 {
        return;
    }
    let (ni, nj, nn) = (shape.index(c.i), shape.index(c.j), shape.index(n));
    let var = |t: usize, flat: usize| Var {
        tensor: t as u32,
        flat: flat as u32,
    };
    let mk = |k: SIdx, a: Var, b: Var| Wave {
        k,
        amp,
        beta: c.beta,
        vars: [a, b],
        n_vars: 2,
    };
    match (grid.model.kind, grid.model.coupling) {
        (FieldKind::General, _) => {
            f(mk(grid.signed(sp, &nn), var(sp, c.i), var(sp, c.j)));
        }
        (FieldKind::Quadrant, Coupling::SameSign) => {
            for p in 0..grid.n_patterns() {
                let t = grid.phase_tensor(p);
                f(mk(grid.signed(p, &nn), var(t, c.i), var(t, c.j)));
            }
        }
        (FieldKind::Quadrant, Coupling::AllSigns) => {
            for p in 0..grid.n_patterns() {
                let ki = grid.signed(p, &ni);
                for q in 0..grid.n_patterns() {
                    let kj = grid.signed(q, &nj);
                    f(mk(
                        add(&ki, &kj),
                        var(grid.phase_tensor(p), c.i),
                        var(grid.phase_tensor(q), c.j),
                    ));
                }
            }
        }
    }
}

/// Visit every coefficient as `(spectral pattern, n, coefficient)`.
pub fn for_each_coefficient(dec: &Decomposition, mut f: impl FnMut(usize, usize, Coefficient)) {
    let len = dec.grid().orthant().len();
    for sp in 0..dec.grid().n_spectral_patterns() {
        let table = dec.coeffs(sp);
        for n in 0..len {
            for c in table.at(n) {
                f(sp, n, c);
            }
        }
    }
}

pub fn for_each_wave(dec: &Decomposition, order: Order, mut f: impl FnMut(Wave)) {
    for_each_pure(dec, order, &mut f);
    if order == Order::Third {
        for_each_coefficient(dec, |sp, n, c| coefficient_waves(dec, sp, n, &c, &mut f));
    }
}

/// Interaction waves produced per coefficient.
pub fn waves_per_coefficient(dec: &Decomposition) -> usize {
    let grid = dec.grid();
    match (grid.model.kind, grid.model.coupling) {
        (FieldKind::General, _) => 1,
        (FieldKind::Quadrant, Coupling::SameSign) => grid.n_patterns(),
        (FieldKind::Quadrant, Coupling::AllSigns) => grid.n_patterns() * grid.n_patterns(),
    }
}

/// Upper bound on the number of waves (zero amplitudes included).
pub fn wave_count(dec: &Decomposition, order: Order) -> usize {
    let grid = dec.grid();
    let pure = grid.orthant().len() * grid.n_patterns();
    match order {
        Order::Second => pure,
        Order::Third => pure + dec.n_coeffs() * waves_per_coefficient(dec),
    }
}
