//! Field synthesis by direct summation and by FFT.
//!
//! A sample is a finite sum of cosine waves over the spatial grid. Pure waves
//! sit at `p o n` with amplitude `2 sqrt(S_p(n) Delta)` and phase `Phi_n`.
//! Every decomposition coefficient `(i, j, b, beta)` at `n` adds interaction
//! waves with amplitude `2 sqrt(S(n) Delta) b` and phase `Phi_i + Phi_j + beta`,
//! placed according to the field model (see [`waves`]).

pub mod fft;
pub mod increments;
pub mod naive;
pub mod waves;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Shape};
use crate::rng;

pub use fft::{assemble_spectral_tensors, simulate_fft, FftPlan, FftWorkspace, SpectralTensor};
pub use increments::{orthogonal_increments, OrthogonalIncrements};
pub use naive::{evaluate_naive_at, simulate_naive, simulate_naive_with_budget, NAIVE_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    Second,
    Third,
}

impl Order {
    pub fn from_int(v: u8) -> Result<Self> {
        match v {
            2 => Ok(Order::Second),
            3 => Ok(Order::Third),
            _ => Err(Error::Unsupported(format!("order {v}, expected 2 or 3"))),
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Order::Second => 2,
            Order::Third => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    Fft,
}

impl Method {
    pub fn tag(self) -> u8 {
        match self {
            Method::Naive => 0,
            Method::Fft => 1,
        }
    }

    pub fn from_tag(t: u8) -> Result<Self> {
        match t {
            0 => Ok(Method::Naive),
            1 => Ok(Method::Fft),
            _ => Err(Error::Format(format!("unknown method tag {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Fft => "fft",
        }
    }
}

/// Uniform phases on the orthant, one tensor per phase stream of the field model.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTensors {
    pub seed: u64,
    pub sample_index: u64,
    pub shape: Shape,
    pub tensors: Vec<Vec<f64>>,
}

impl PhaseTensors {
    #[inline]
    pub fn get(&self, tensor: usize, flat: usize) -> f64 {
        self.tensors[tensor][flat]
    }
}

pub fn generate_phase_tensors(seed: u64, sample_index: u64, grid: &GridSpec) -> PhaseTensors {
    let shape = grid.orthant();
    let tensors = (0..grid.n_phase_tensors())
        .map(|t| {
            let mut v = vec![0.0; shape.len()];
            rng::fill_phases(seed, sample_index, t as u64, &mut v);
            v
        })
        .collect();
    PhaseTensors {
        seed,
        sample_index,
        shape,
        tensors,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub sample_index: u64,
    pub method: Method,
    pub order: Order,
}

/// Real field on the `M_1 x ... x M_d` spatial grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub m: Vec<usize>,
    pub dx: Vec<f64>,
    pub provenance: Provenance,
}

impl FieldSample {
    pub fn shape(&self) -> Shape {
        Shape::new(&self.m)
    }

    pub fn same_grid(&self, other: &FieldSample) -> bool {
        self.m == other.m && self.dx == other.dx
    }

    pub fn std(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        (self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}

pub fn difference_field(a: &FieldSample, b: &FieldSample) -> Result<FieldSample> {
    if !a.same_grid(b) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", a.m),
            found: format!("{:?}", b.m),
        });
    }
    Ok(FieldSample {
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
        m: a.m.clone(),
        dx: a.dx.clone(),
        provenance: a.provenance,
    })
}
