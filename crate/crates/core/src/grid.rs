//! Joint wavenumber / space discretization.
//!
//! Wavenumbers are sampled on the positive orthant `n_k in [0, N_k]` with
//! `kappa_k = n_k * dkappa_k`. Signed wavevectors are reached through sign
//! patterns `(I_1, ..., I_d)` with `I_1 = +1`, so a field on `d` axes carries
//! `2^(d-1)` patterns. Space is sampled on `M_k` points with
//! `dx_k * dkappa_k = 2 pi / M_k`, covering exactly one period `2 pi / dkappa_k`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

/// Orthant index, unused trailing axes are 0.
pub type Idx = [usize; MAX_DIM];
/// Signed wavevector index, unused trailing axes are 0.
pub type SIdx = [i64; MAX_DIM];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Spectra evaluated at signed wavevectors; one phase tensor per sign pattern.
    General,
    /// Spectra invariant under independent sign flips of every argument.
    Quadrant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseMode {
    /// One phase tensor per sign pattern.
    Independent,
    /// A single tensor shared by all sign patterns (quadrant fields only).
    Shared,
}

/// Which sign combinations of a coupled pair `(i, j)` produce interaction waves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// Only `(I o i) + (I o j)` for each pattern `I`.
    SameSign,
    /// Every `(I o i) + (I' o j)`; quadrant fields only.
    AllSigns,
}

/// Treatment of power spectrum samples on axis planes (any `n_k = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisPower {
    Zero,
    Keep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldModel {
    pub kind: FieldKind,
    pub phases: PhaseMode,
    pub coupling: Coupling,
}

impl FieldModel {
    pub fn general() -> Self {
        FieldModel {
            kind: FieldKind::General,
            phases: PhaseMode::Independent,
            coupling: Coupling::SameSign,
        }
    }

    /// Quadrant field with a shared phase tensor and all sign couplings.
    pub fn quadrant() -> Self {
        FieldModel {
            kind: FieldKind::Quadrant,
            phases: PhaseMode::Shared,
            coupling: Coupling::AllSigns,
        }
    }

    pub fn with_phases(mut self, phases: PhaseMode) -> Self {
        self.phases = phases;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == FieldKind::General {
            if self.phases == PhaseMode::Shared {
                return Err(Error::InvalidGrid(
                    "shared phases require a quadrant field".into(),
                ));
            }
            if self.coupling == Coupling::AllSigns {
                return Err(Error::InvalidGrid(
                    "all-sign coupling requires a quadrant field".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Row-major shape with up to four axes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Shape {
            dims: dims.to_vec(),
            strides,
            len: dims.iter().product(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn flat(&self, idx: &Idx) -> usize {
        (0..self.dims.len()).map(|k| idx[k] * self.strides[k]).sum()
    }

    pub fn index(&self, mut flat: usize) -> Idx {
        let mut idx = [0; MAX_DIM];
        for k in 0..self.dims.len() {
            idx[k] = flat / self.strides[k];
            flat %= self.strides[k];
        }
        idx
    }

    pub fn contains(&self, idx: &Idx) -> bool {
        (0..self.dims.len()).all(|k| idx[k] < self.dims[k])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    n: Vec<usize>,
    dkappa: Vec<f64>,
    m: Vec<usize>,
    dx: Vec<f64>,
    pub model: FieldModel,
    pub axis_power: AxisPower,
    pub epsilon: f64,
}

impl GridSpec {
    /// Grid with `M_k = 2 N_k`, a general field and zeroed axis planes.
    pub fn new(n: &[usize], dkappa: &[f64]) -> Result<Self> {
        let m: Vec<usize> = n.iter().map(|&v| 2 * v).collect();
        Self::with_points(n, dkappa, &m)
    }

    pub fn with_points(n: &[usize], dkappa: &[f64], m: &[usize]) -> Result<Self> {
        let d = n.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension {d} outside 1..={MAX_DIM}"
            )));
        }
        if dkappa.len() != d || m.len() != d {
            return Err(Error::InvalidGrid(format!(
                "per-axis lengths differ: N has {d}, dkappa has {}, M has {}",
                dkappa.len(),
                m.len()
            )));
        }
        for k in 0..d {
            if n[k] == 0 {
                return Err(Error::InvalidGrid(format!("N[{k}] must be positive")));
            }
            if !(dkappa[k].is_finite() && dkappa[k] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "dkappa[{k}] = {} must be positive",
                    dkappa[k]
                )));
            }
            if m[k] < 2 * n[k] {
                return Err(Error::InvalidGrid(format!(
                    "anti-aliasing requires M >= 2N on axis {k}: M = {}, N = {}",
                    m[k], n[k]
                )));
            }
            if m[k] > u32::MAX as usize {
                return Err(Error::InvalidGrid(format!("M[{k}] too large")));
            }
        }
        let dx = (0..d)
            .map(|k| 2.0 * PI / (m[k] as f64 * dkappa[k]))
            .collect();
        Ok(GridSpec {
            n: n.to_vec(),
            dkappa: dkappa.to_vec(),
            m: m.to_vec(),
            dx,
            model: FieldModel::general(),
            axis_power: AxisPower::Zero,
            epsilon: 0.01,
        })
    }

    pub fn with_model(mut self, model: FieldModel) -> Result<Self> {
        model.validate()?;
        self.model = model;
        Ok(self)
    }

    pub fn with_axis_power(mut self, axis_power: AxisPower) -> Self {
        self.axis_power = axis_power;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn d(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn dkappa(&self) -> &[f64] {
        &self.dkappa
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn kappa_u(&self) -> Vec<f64> {
        (0..self.d())
            .map(|k| self.n[k] as f64 * self.dkappa[k])
            .collect()
    }

    pub fn period(&self) -> Vec<f64> {
        self.dkappa.iter().map(|&dk| 2.0 * PI / dk).collect()
    }

    /// Product of the wavenumber increments.
    pub fn cell(&self) -> f64 {
        self.dkappa.iter().product()
    }

    pub fn is_quadrant(&self) -> bool {
        self.model.kind == FieldKind::Quadrant
    }

    pub fn orthant(&self) -> Shape {
        let dims: Vec<usize> = self.n.iter().map(|&v| v + 1).collect();
        Shape::new(&dims)
    }

    pub fn spatial(&self) -> Shape {
        Shape::new(&self.m)
    }

    pub fn n_patterns(&self) -> usize {
        1 << (self.d() - 1)
    }

    /// Signs `I_k` of pattern `p`; axis 0 is always `+1`, bit `k-1` of `p` flips axis `k`.
    pub fn pattern_signs(&self, p: usize) -> SIdx {
        pattern_signs(self.d(), p)
    }

    /// Number of phase tensors the field model needs.
    pub fn n_phase_tensors(&self) -> usize {
        match self.model.phases {
            PhaseMode::Shared => 1,
            PhaseMode::Independent => self.n_patterns(),
        }
    }

    /// Phase tensor used by sign pattern `p`.
    pub fn phase_tensor(&self, p: usize) -> usize {
        match self.model.phases {
            PhaseMode::Shared => 0,
            PhaseMode::Independent => p,
        }
    }

    /// Number of spectral patterns carrying their own `S` values and decomposition.
    pub fn n_spectral_patterns(&self) -> usize {
        match self.model.kind {
            FieldKind::Quadrant => 1,
            FieldKind::General => self.n_patterns(),
        }
    }

    /// Signed wavevector of orthant index `n` under pattern `p`.
    pub fn signed(&self, p: usize, n: &Idx) -> SIdx {
        let s = self.pattern_signs(p);
        let mut out = [0i64; MAX_DIM];
        for k in 0..self.d() {
            out[k] = s[k] * n[k] as i64;
        }
        out
    }

    /// Reduce a signed wavevector modulo `M` per axis.
    pub fn wrap(&self, k: &SIdx) -> Idx {
        let mut out = [0usize; MAX_DIM];
        for a in 0..self.d() {
            out[a] = k[a].rem_euclid(self.m[a] as i64) as usize;
        }
        out
    }

    /// Check that two grids describe the same discretization.
    pub fn same_discretization(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.m == other.m && self.dkappa == other.dkappa
    }
}

pub fn pattern_signs(d: usize, p: usize) -> SIdx {
    let mut s = [0i64; MAX_DIM];
    s[0] = 1;
    for k in 1..d {
        s[k] = if (p >> (k - 1)) & 1 == 1 { -1 } else { 1 };
    }
    s
}

/// Pattern index of a signed wavevector; zero components count as positive.
pub fn pattern_of(d: usize, k: &SIdx) -> usize {
    let mut p = 0;
    for a in 1..d {
        if k[a] < 0 {
            p |= 1 << (a - 1);
        }
    }
    p
}

pub fn abs_index(d: usize, k: &SIdx) -> Idx {
    let mut out = [0usize; MAX_DIM];
    for a in 0..d {
        out[a] = k[a].unsigned_abs() as usize;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_condition_holds() {
        let g = GridSpec::new(&[64, 64], &[0.0628, 0.0628]).unwrap();
        for k in 0..2 {
            assert!((g.dx()[k] * g.dkappa()[k] - 2.0 * PI / 128.0).abs() < 1e-15);
        }
        assert_eq!(g.m(), &[128, 128]);
        assert!((g.dx()[0] - 0.78125).abs() < 1e-3);
    }

    #[test]
    fn rejects_aliasing_grid() {
        let err = GridSpec::with_points(&[8], &[0.1], &[15]).unwrap_err();
        assert!(err.to_string().contains("anti-aliasing"));
    }

    #[test]
    fn shape_roundtrip() {
        let s = Shape::new(&[3, 4, 5]);
        for f in 0..s.len() {
            assert_eq!(s.flat(&s.index(f)), f);
        }
        assert_eq!(s.index(23), [1, 0, 3, 0]);
    }

    #[test]
    fn patterns() {
        assert_eq!(pattern_signs(3, 0), [1, 1, 1, 0]);
        assert_eq!(pattern_signs(3, 1), [1, -1, 1, 0]);
        assert_eq!(pattern_signs(3, 3), [1, -1, -1, 0]);
        assert_eq!(pattern_of(3, &[2, -1, 0, 0]), 1);
        assert_eq!(pattern_of(3, &[2, 0, -4, 0]), 2);
    }

    #[test]
    fn general_rejects_shared_phases() {
        let g = GridSpec::new(&[4, 4], &[0.5, 0.5]).unwrap();
        let m = FieldModel::general().with_phases(PhaseMode::Shared);
        assert!(g.with_model(m).is_err());
    }
}
