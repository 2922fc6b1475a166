//! Direct evaluation of the cosine sums at every grid point.

use std::f64::consts::TAU;

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::simulator::waves::{for_each_wave, wave_count, Wave};
use crate::simulator::{FieldSample, Method, Order, PhaseTensors, Provenance};

/// Default limit on scalar term evaluations (`points x waves`).
pub const NAIVE_BUDGET: f64 = 1e9;

#[inline]
fn wave_phase(w: &Wave, phases: &PhaseTensors) -> f64 {
    w.vars()
        .iter()
        .map(|v| phases.get(v.tensor as usize, v.flat as usize))
        .sum::<f64>()
        + w.beta
}

pub fn simulate_naive(
    dec: &Decomposition,
    phases: &PhaseTensors,
    order: Order,
) -> Result<FieldSample> {
    simulate_naive_with_budget(dec, phases, order, NAIVE_BUDGET)
}

pub fn simulate_naive_with_budget(
    dec: &Decomposition,
    phases: &PhaseTensors,
    order: Order,
    budget: f64,
) -> Result<FieldSample> {
    let grid = dec.grid();
    let spatial = grid.spatial();
    let terms = spatial.len() as f64 * wave_count(dec, order) as f64;
    if terms > budget {
        return Err(Error::CostGuard { terms, budget });
    }
    let d = grid.d();
    let m = grid.m();
    let mut values = vec![0.0; spatial.len()];
    let mut tables: Vec<Vec<f64>> = m.iter().map(|&mk| vec![0.0; mk]).collect();
    for_each_wave(dec, order, |w| {
        // Integer reduction keeps the angle exact over whole periods.
        for a in 0..d {
            let mk = m[a] as i64;
            for (x, t) in tables[a].iter_mut().enumerate() {
                *t = TAU * ((w.k[a] * x as i64).rem_euclid(mk)) as f64 / mk as f64;
            }
        }
        let theta = wave_phase(&w, phases);
        let mut idx = [0usize; 4];
        for v in values.iter_mut() {
            let mut ang = theta;
            for a in 0..d {
                ang += tables[a][idx[a]];
            }
            *v += w.amp * ang.cos();
            let mut a = d;
            while a > 0 {
                a -= 1;
                idx[a] += 1;
                if idx[a] < m[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    });
    Ok(FieldSample {
        values,
        m: m.to_vec(),
        dx: grid.dx().to_vec(),
        provenance: Provenance {
            seed: phases.seed,
            sample_index: phases.sample_index,
            method: Method::Naive,
            order,
        },
    })
}

/// Field value at an arbitrary position `x` (length units, one per axis).
pub fn evaluate_naive_at(
    dec: &Decomposition,
    phases: &PhaseTensors,
    order: Order,
    x: &[f64],
) -> f64 {
    let grid = dec.grid();
    let dk = grid.dkappa();
    let mut acc = 0.0;
    for_each_wave(dec, order, |w| {
        let kx: f64 = (0..grid.d()).map(|a| w.k[a] as f64 * dk[a] * x[a]).sum();
        acc += w.amp * (kx + wave_phase(&w, phases)).cos();
    });
    acc
}
