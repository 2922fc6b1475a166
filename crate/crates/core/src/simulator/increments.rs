//! Spectral increments `du`, `dv` of one pattern at one orthant index.
//!
//! ```text
//! du(n) = 2 sqrt(S_p(n) Delta) cos Phi_n + sum 2 sqrt(S(n) Delta) b cos(Phi_i + Phi_j + beta)
//! dv(n) = the same with sin
//! ```
//!
//! over the same-sign pairs of `n`. With this normalization `E[du^2] = 2 S Delta`
//! and `E[du_n du_i du_j] = 2 Re(B) Delta^2` for a coupled triple with `i != j`.

use crate::decomposition::Decomposition;
use crate::grid::{FieldKind, Idx};
use crate::simulator::PhaseTensors;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalIncrements {
    pub du: f64,
    pub dv: f64,
}

pub fn orthogonal_increments(
    dec: &Decomposition,
    phases: &PhaseTensors,
    pattern: usize,
    n: &Idx,
) -> OrthogonalIncrements {
    let grid = dec.grid();
    let sp = if grid.model.kind == FieldKind::General {
        pattern
    } else {
        0
    };
    let t = grid.phase_tensor(pattern);
    let flat = grid.orthant().flat(n);
    let cell = grid.cell();
    let a_p = 2.0 * (dec.s_p(sp)[flat] * cell).sqrt();
    let phi = phases.get(t, flat);
    let mut du = a_p * phi.cos();
    let mut dv = a_p * phi.sin();
    let a_n = 2.0 * (dec.s(sp)[flat] * cell).sqrt();
    for c in dec.coeffs(sp).at(flat) {
        let theta = phases.get(t, c.i) + phases.get(t, c.j) + c.beta;
        du += a_n * c.b * theta.cos();
        dv += a_n * c.b * theta.sin();
    }
    OrthogonalIncrements { du, dv }
}
