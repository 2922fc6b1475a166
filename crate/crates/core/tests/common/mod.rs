#![allow(dead_code)]

use bsrm::decomposition::{decompose, Decomposition, PairMode};
use bsrm::grid::{AxisPower, Coupling, FieldModel, GridSpec, PhaseMode};
use bsrm::spectral_model::{
    build_bispectrum_grid, build_power_grid, BispectrumSource, BispectrumTable, GaussianBispectrum,
    GaussianPower, PowerSource, SpectrumTable,
};
use num_complex::Complex64;

pub fn models() -> Vec<(&'static str, FieldModel)> {
    let q = FieldModel::quadrant();
    vec![
        ("general", FieldModel::general()),
        ("quadrant_shared_all", q),
        ("quadrant_shared_same", q.with_coupling(Coupling::SameSign)),
        ("quadrant_indep_all", q.with_phases(PhaseMode::Independent)),
        (
            "quadrant_indep_same",
            q.with_phases(PhaseMode::Independent)
                .with_coupling(Coupling::SameSign),
        ),
    ]
}

pub fn gaussian_power(d: usize) -> PowerSource {
    PowerSource::Gaussian(GaussianPower {
        amp: 1.0,
        weights: vec![1.0; d],
    })
}

pub fn gaussian_bispectrum(d: usize, amp: f64) -> BispectrumSource {
    BispectrumSource::Gaussian(GaussianBispectrum {
        amp: Complex64::new(amp, 0.6 * amp),
        weights: vec![1.0; d],
    })
}

pub fn grid(n: &[usize], dk: f64, model: FieldModel, axis: AxisPower) -> GridSpec {
    GridSpec::new(n, &vec![dk; n.len()])
        .unwrap()
        .with_model(model)
        .unwrap()
        .with_axis_power(axis)
}

/// Gaussian toy: unit-peak power, bispectrum amplitude `amp`.
pub fn toy(grid: &GridSpec, amp: f64, mode: PairMode) -> Decomposition {
    let d = grid.d();
    let s = build_power_grid(&gaussian_power(d), grid).unwrap();
    let src = if amp == 0.0 {
        BispectrumSource::Zero
    } else {
        gaussian_bispectrum(d, amp)
    };
    let b = build_bispectrum_grid(&src, grid).unwrap();
    decompose(&s, &b, mode).unwrap()
}

/// 1D grid `N = 4`, `dkappa = 1` with one coupled pair `(2, 1) -> 3`.
///
/// `b2` is the squared partial bicoherence of that pair. With `b2 = 1` the
/// pure power at `n = 3` vanishes.
pub fn single_pair(b2: f64) -> Decomposition {
    let g = GridSpec::new(&[4], &[1.0]).unwrap();
    let sv = vec![0.0, 2.0, 3.0, 4.0, 1.0];
    let s = build_power_grid(
        &PowerSource::Table(SpectrumTable {
            n: vec![4],
            dkappa: vec![1.0],
            signed: false,
            values: sv.clone(),
        }),
        &g,
    )
    .unwrap();
    let mut vals = vec![Complex64::default(); 25];
    let mag = (b2 * sv[2] * sv[1] * sv[3]).sqrt();
    let v = Complex64::from_polar(mag, 0.7);
    vals[2 * 5 + 1] = v;
    vals[5 + 2] = v;
    let b = build_bispectrum_grid(
        &BispectrumSource::Table(BispectrumTable {
            n: vec![4],
            dkappa: vec![1.0],
            values: vals,
        }),
        &g,
    )
    .unwrap();
    decompose(&s, &b, PairMode::Lexicographic).unwrap()
}
