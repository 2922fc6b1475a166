//! FFT synthesis.
//!
//! All waves of one sign pattern are collected into a complex tensor `T` over
//! the orthant so that the field is `2 Re sum_p sum_n T_p[n] exp(i (p o n).x)`.
//! A pure entry is `sqrt(S_p Delta) exp(i Phi_n)`, half the cosine amplitude.
//! After zero padding to `M_k`, axes with `I_k = +1` take the unnormalized
//! inverse DFT and axes with `I_k = -1` the forward DFT. The usual `1/M`
//! factor of the inverse is left out, which is the same as the `M^J` scaling
//! that cancels it, so the result equals the direct sum.
//!
//! For shared-phase quadrant fields every pattern uses one tensor. Axis 0 is
//! transformed once and the remaining axes branch into both directions.
//! Under all-sign coupling a coefficient `(i, j)` is deposited at
//! `m_1 = n_1` and, per axis `k >= 2`, at `m_k = i_k + j_k` or `|i_k - j_k|`;
//! transforming under every pattern then produces each `p o i + p' o j` once.

use num_complex::Complex64;

use crate::decomposition::Decomposition;
use crate::fftn::{Direction, NdFft};
use crate::grid::{
    abs_index, pattern_of, Coupling, FieldKind, GridSpec, PhaseMode, SIdx, Shape, MAX_DIM,
};
use crate::simulator::waves::for_each_coefficient;
use crate::simulator::{FieldSample, Method, Order, PhaseTensors, Provenance};

/// Orthant coefficient tensor transformed under each listed sign pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTensor {
    pub patterns: Vec<usize>,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug)]
struct PlanCoef {
    i: u32,
    j: u32,
    w: Complex64,
}

#[derive(Clone, Copy, Debug)]
struct Deposit {
    ti: u8,
    tj: u8,
    slot: u8,
    flat: u32,
}

/// Per-decomposition precomputation shared by all samples.
#[derive(Clone, Debug)]
pub struct FftPlan {
    grid: GridSpec,
    order: Order,
    orthant: Shape,
    slot_tensor: Vec<usize>,
    slot_patterns: Vec<Vec<usize>>,
    pure: Vec<Vec<f64>>,
    coefs: Vec<PlanCoef>,
    combos: usize,
    deposits: Vec<Deposit>,
}

fn signed_of(grid: &GridSpec, p: usize, n: &crate::grid::Idx) -> SIdx {
    grid.signed(p, n)
}

impl FftPlan {
    pub fn new(dec: &Decomposition, order: Order) -> Self {
        let grid = dec.grid().clone();
        let orthant = grid.orthant();
        let np = grid.n_patterns();
        let shared = grid.model.phases == PhaseMode::Shared;
        let slots = if shared { 1 } else { np };
        let slot_tensor: Vec<usize> = (0..slots).map(|s| grid.phase_tensor(s)).collect();
        let slot_patterns: Vec<Vec<usize>> = if shared {
            vec![(0..np).collect()]
        } else {
            (0..np).map(|p| vec![p]).collect()
        };
        let cell = grid.cell();
        let pure = (0..slots)
            .map(|s| {
                let sp = if grid.model.kind == FieldKind::General {
                    s
                } else {
                    0
                };
                let src = match order {
                    Order::Second => dec.s(sp),
                    Order::Third => dec.s_p(sp),
                };
                src.iter().map(|v| (v * cell).sqrt()).collect()
            })
            .collect();

        let kind = grid.model.kind;
        let coupling = grid.model.coupling;
        let d = grid.d();
        let combos = match (kind, coupling, shared) {
            (FieldKind::General, _, _) => 1,
            (FieldKind::Quadrant, Coupling::SameSign, true) => 1,
            (FieldKind::Quadrant, Coupling::SameSign, false) => np,
            (FieldKind::Quadrant, Coupling::AllSigns, true) => np,
            (FieldKind::Quadrant, Coupling::AllSigns, false) => np * np,
        };
        let mut coefs = Vec::new();
        let mut deposits = Vec::new();
        if order == Order::Third {
            for_each_coefficient(dec, |sp, n, c| {
                let w = Complex64::from_polar((dec.s(sp)[n] * cell).sqrt() * c.b, c.beta);
                if w == Complex64::default() {
                    return;
                }
                coefs.push(PlanCoef {
                    i: c.i as u32,
                    j: c.j as u32,
                    w,
                });
                let ni = orthant.index(c.i);
                let nj = orthant.index(c.j);
                let flat = |k: &SIdx| orthant.flat(&abs_index(d, k)) as u32;
                match (kind, coupling, shared) {
                    (FieldKind::General, _, _) => deposits.push(Deposit {
                        ti: sp as u8,
                        tj: sp as u8,
                        slot: sp as u8,
                        flat: n as u32,
                    }),
                    (FieldKind::Quadrant, Coupling::SameSign, true) => deposits.push(Deposit {
                        ti: 0,
                        tj: 0,
                        slot: 0,
                        flat: n as u32,
                    }),
                    (FieldKind::Quadrant, Coupling::SameSign, false) => {
                        for p in 0..np {
                            deposits.push(Deposit {
                                ti: p as u8,
                                tj: p as u8,
                                slot: p as u8,
                                flat: n as u32,
                            });
                        }
                    }
                    (FieldKind::Quadrant, Coupling::AllSigns, true) => {
                        // Relation r: bit (k-1) set means opposite signs on axis k.
                        for r in 0..np {
                            let ki = signed_of(&grid, 0, &ni);
                            let kj = signed_of(&grid, r, &nj);
                            let mut k = [0i64; MAX_DIM];
                            for a in 0..d {
                                k[a] = ki[a] + kj[a];
                            }
                            deposits.push(Deposit {
                                ti: 0,
                                tj: 0,
                                slot: 0,
                                flat: flat(&k),
                            });
                        }
                    }
                    (FieldKind::Quadrant, Coupling::AllSigns, false) => {
                        for p in 0..np {
                            let ki = signed_of(&grid, p, &ni);
                            for q in 0..np {
                                let kj = signed_of(&grid, q, &nj);
                                let mut k = [0i64; MAX_DIM];
                                for a in 0..d {
                                    k[a] = ki[a] + kj[a];
                                }
                                deposits.push(Deposit {
                                    ti: p as u8,
                                    tj: q as u8,
                                    slot: pattern_of(d, &k) as u8,
                                    flat: flat(&k),
                                });
                            }
                        }
                    }
                }
            });
        }
        FftPlan {
            grid,
            order,
            orthant,
            slot_tensor,
            slot_patterns,
            pure,
            coefs,
            combos,
            deposits,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn n_coefficients(&self) -> usize {
        self.coefs.len()
    }

    pub fn workspace(&self) -> FftWorkspace {
        let spatial = self.grid.spatial();
        FftWorkspace {
            fft: NdFft::new(spatial.clone()),
            expo: Vec::new(),
            buf: vec![Complex64::default(); spatial.len()],
            acc: vec![Complex64::default(); spatial.len()],
            branch: Vec::new(),
        }
    }

    fn fill_exponentials(&self, phases: &PhaseTensors, expo: &mut Vec<Vec<Complex64>>) {
        expo.resize(phases.tensors.len(), Vec::new());
        for (e, t) in expo.iter_mut().zip(&phases.tensors) {
            e.clear();
            e.extend(t.iter().map(|&phi| Complex64::new(phi.cos(), phi.sin())));
        }
    }

    fn assemble_into(&self, expo: &[Vec<Complex64>], out: &mut [Vec<Complex64>]) {
        let len = self.orthant.len();
        for (s, t) in out.iter_mut().enumerate() {
            t.clear();
            let e = &expo[self.slot_tensor[s]];
            t.extend((0..len).map(|f| e[f] * self.pure[s][f]));
        }
        for (c, coef) in self.coefs.iter().enumerate() {
            let deps = &self.deposits[c * self.combos..(c + 1) * self.combos];
            for dep in deps {
                let v = coef.w
                    * expo[dep.ti as usize][coef.i as usize]
                    * expo[dep.tj as usize][coef.j as usize];
                out[dep.slot as usize][dep.flat as usize] += v;
            }
        }
    }

    pub fn assemble(&self, phases: &PhaseTensors) -> Vec<SpectralTensor> {
        let mut expo = Vec::new();
        self.fill_exponentials(phases, &mut expo);
        let mut out = vec![Vec::new(); self.slot_tensor.len()];
        self.assemble_into(&expo, &mut out);
        out.into_iter()
            .zip(&self.slot_patterns)
            .map(|(values, patterns)| SpectralTensor {
                patterns: patterns.clone(),
                values,
            })
            .collect()
    }

    pub fn simulate(&self, phases: &PhaseTensors, ws: &mut FftWorkspace) -> FieldSample {
        let grid = &self.grid;
        let d = grid.d();
        let spatial = grid.spatial();
        self.fill_exponentials(phases, &mut ws.expo);
        let mut tensors = std::mem::take(&mut ws.branch);
        tensors.resize(self.slot_tensor.len(), Vec::new());
        self.assemble_into(&ws.expo, &mut tensors);
        ws.acc.iter_mut().for_each(|v| *v = Complex64::default());
        for (s, t) in tensors.iter().enumerate() {
            ws.buf.iter_mut().for_each(|v| *v = Complex64::default());
            for (f, v) in t.iter().enumerate() {
                if *v != Complex64::default() {
                    ws.buf[spatial.flat(&self.orthant.index(f))] = *v;
                }
            }
            if self.slot_patterns[s].len() == 1 {
                let signs = grid.pattern_signs(self.slot_patterns[s][0]);
                for a in 0..d {
                    let dir = if signs[a] > 0 {
                        Direction::Inverse
                    } else {
                        Direction::Forward
                    };
                    ws.fft.axis(&mut ws.buf, a, dir);
                }
                for (acc, v) in ws.acc.iter_mut().zip(&ws.buf) {
                    *acc += v;
                }
            } else {
                ws.fft.axis(&mut ws.buf, 0, Direction::Inverse);
                let buf = std::mem::take(&mut ws.buf);
                let buf = branch(&mut ws.fft, buf, 1, d, &mut ws.acc);
                ws.buf = buf;
            }
        }
        ws.branch = tensors;
        FieldSample {
            values: ws.acc.iter().map(|z| 2.0 * z.re).collect(),
            m: grid.m().to_vec(),
            dx: grid.dx().to_vec(),
            provenance: Provenance {
                seed: phases.seed,
                sample_index: phases.sample_index,
                method: Method::Fft,
                order: self.order,
            },
        }
    }
}

fn branch(
    fft: &mut NdFft,
    mut buf: Vec<Complex64>,
    axis: usize,
    d: usize,
    acc: &mut [Complex64],
) -> Vec<Complex64> {
    if axis == d {
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v;
        }
        return buf;
    }
    let mut other = buf.clone();
    fft.axis(&mut buf, axis, Direction::Inverse);
    buf = branch(fft, buf, axis + 1, d, acc);
    fft.axis(&mut other, axis, Direction::Forward);
    let _ = branch(fft, other, axis + 1, d, acc);
    buf
}

/// Per-worker FFT plans and buffers.
pub struct FftWorkspace {
    fft: NdFft,
    expo: Vec<Vec<Complex64>>,
    buf: Vec<Complex64>,
    acc: Vec<Complex64>,
    branch: Vec<Vec<Complex64>>,
}

pub fn assemble_spectral_tensors(
    dec: &Decomposition,
    phases: &PhaseTensors,
    order: Order,
) -> Vec<SpectralTensor> {
    FftPlan::new(dec, order).assemble(phases)
}

pub fn simulate_fft(dec: &Decomposition, phases: &PhaseTensors, order: Order) -> FieldSample {
    let plan = FftPlan::new(dec, order);
    let mut ws = plan.workspace();
    plan.simulate(phases, &mut ws)
}
