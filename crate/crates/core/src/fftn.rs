//! Unnormalized multi-dimensional DFT over row-major buffers.
//!
//! `Forward` computes `sum_n v_n exp(-2 pi i m n / M)`, `Inverse` the same with
//! `+i`. Neither applies a `1/M` factor.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::Shape;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub struct NdFft {
    shape: Shape,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl NdFft {
    pub fn new(shape: Shape) -> Self {
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = shape
            .dims()
            .iter()
            .map(|&m| planner.plan_fft(m, FftDirection::Forward))
            .collect();
        let inverse: Vec<_> = shape
            .dims()
            .iter()
            .map(|&m| planner.plan_fft(m, FftDirection::Inverse))
            .collect();
        let max_m = shape.dims().iter().copied().max().unwrap_or(1);
        let scratch_len = forward
            .iter()
            .chain(inverse.iter())
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        NdFft {
            shape,
            forward,
            inverse,
            line: vec![Complex64::default(); max_m],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn axis(&mut self, data: &mut [Complex64], axis: usize, dir: Direction) {
        assert_eq!(data.len(), self.shape.len());
        let m = self.shape.dims()[axis];
        let stride = self.shape.strides()[axis];
        let plan = match dir {
            Direction::Forward => &self.forward[axis],
            Direction::Inverse => &self.inverse[axis],
        };
        if stride == 1 {
            for row in data.chunks_exact_mut(m) {
                plan.process_with_scratch(row, &mut self.scratch);
            }
            return;
        }
        let block = stride * m;
        let line = &mut self.line[..m];
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (t, v) in line.iter_mut().enumerate() {
                    *v = data[start + t * stride];
                }
                plan.process_with_scratch(line, &mut self.scratch);
                for (t, v) in line.iter().enumerate() {
                    data[start + t * stride] = *v;
                }
            }
        }
    }

    /// Transform every axis in the same direction.
    pub fn all_axes(&mut self, data: &mut [Complex64], dir: Direction) {
        for a in 0..self.shape.ndim() {
            self.axis(data, a, dir);
        }
    }
}
