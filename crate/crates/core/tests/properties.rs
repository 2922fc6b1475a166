mod common;

use bsrm::decomposition::{decompose, PairMode};
use bsrm::grid::{AxisPower, FieldKind, FieldModel, GridSpec, Idx, PhaseMode};
use bsrm::moments::exact_moments;
use bsrm::simulator::{generate_phase_tensors, orthogonal_increments, simulate_fft, Order};
use bsrm::spectral_model::{
    build_bispectrum_grid, build_power_grid, correlation_from_spectrum, preset_bispectrum,
    spectrum_from_correlation, validate_symmetries, BispectrumSource, BispectrumTable, PowerSource,
    BISPECTRUM_PRESETS,
};
use common::{grid, models, single_pair, toy};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn reconstruction_identity_and_bicoherence_range() {
    for (n, dk) in [(vec![16], 0.3), (vec![8, 6], 0.5), (vec![4, 4, 3], 0.7)] {
        for (_, model) in models() {
            for mode in [PairMode::Lexicographic, PairMode::Literal] {
                let g = grid(&n, dk, model, AxisPower::Keep);
                let dec = toy(&g, 0.4, mode);
                assert!(dec.reconstruction_residual() <= 1e-12);
                for p in 0..g.n_spectral_patterns() {
                    assert!(dec.sum_b2(p).iter().all(|v| (0.0..=1.0).contains(v)));
                    assert!(dec.s_p(p).iter().all(|v| *v >= 0.0));
                }
            }
        }
    }
}

#[test]
fn example_decompositions_are_valid() {
    let cases = [
        (
            vec![64, 64],
            2.0 * std::f64::consts::PI / 100.0,
            "ex1_power",
            "ex1_bispectrum",
        ),
        (
            vec![64, 64],
            2.0 * std::f64::consts::PI / 100.0,
            "ex1_power",
            "ex2_B2",
        ),
        (
            vec![16, 16, 16],
            std::f64::consts::PI / 10.0,
            "ex3_power",
            "ex4_B3",
        ),
    ];
    for (n, dk, s, b) in cases {
        let model = FieldModel::quadrant().with_phases(PhaseMode::Independent);
        let g = grid(&n, dk, model, AxisPower::Keep);
        let sg = build_power_grid(&PowerSource::Preset(s.into()), &g).unwrap();
        let bg = build_bispectrum_grid(&BispectrumSource::Preset(b.into()), &g).unwrap();
        let dec = decompose(&sg, &bg, PairMode::Literal).unwrap();
        assert!(dec.reconstruction_residual() <= 1e-12);
        assert!(dec.sum_b2(0).iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn correlation_roundtrip() {
    for (n, dk) in [(vec![12], 0.4), (vec![6, 5], 0.5), (vec![3, 4, 3], 0.6)] {
        for (_, model) in models() {
            for axis in [AxisPower::Zero, AxisPower::Keep] {
                let g = grid(&n, dk, model, axis);
                let s = build_power_grid(&common::gaussian_power(g.d()), &g).unwrap();
                let r = correlation_from_spectrum(&s);
                let back = spectrum_from_correlation(&r).unwrap();
                for p in 0..g.n_spectral_patterns() {
                    let scale = s.values(p).iter().cloned().fold(0.0, f64::max);
                    for (a, b) in s.values(p).iter().zip(back.values(p)) {
                        assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
                    }
                }
            }
        }
    }
}

/// `R2(0)` from the transform equals the exact second-order variance.
#[test]
fn correlation_at_origin_is_variance() {
    for (_, model) in models() {
        let g = GridSpec::with_points(&[5, 4], &[0.5, 0.5], &[11, 9])
            .unwrap()
            .with_model(model)
            .unwrap();
        let s = build_power_grid(&common::gaussian_power(2), &g).unwrap();
        let b = build_bispectrum_grid(&BispectrumSource::Zero, &g).unwrap();
        let dec = decompose(&s, &b, PairMode::Literal).unwrap();
        let r0 = correlation_from_spectrum(&s).at(&[0; 4]);
        let v = exact_moments(&dec, Order::Second).variance;
        assert!((r0 - v).abs() <= 1e-12 * v);
    }
}

#[test]
fn presets_satisfy_symmetries() {
    for name in BISPECTRUM_PRESETS {
        let d = preset_bispectrum(name).unwrap().weights.len();
        for kind in [FieldKind::General, FieldKind::Quadrant] {
            let model = match kind {
                FieldKind::General => FieldModel::general(),
                FieldKind::Quadrant => FieldModel::quadrant(),
            };
            let g = grid(&vec![4; d], 0.5, model, AxisPower::Zero);
            let b = build_bispectrum_grid(&BispectrumSource::Preset(name.into()), &g).unwrap();
            let rep = validate_symmetries(&b, kind);
            assert!(rep.pass, "{name} {kind:?}: {rep:?}");
        }
    }
}

/// `ex2_B1` on a quadrant `N = 4` grid is small enough for an exhaustive check.
#[test]
fn anisotropic_preset_exhaustive() {
    let g = grid(&[4, 4], 0.5, FieldModel::quadrant(), AxisPower::Zero);
    let b = build_bispectrum_grid(&BispectrumSource::Preset("ex2_B1".into()), &g).unwrap();
    assert!(b.is_dense());
    let rep = validate_symmetries(&b, FieldKind::Quadrant);
    assert!(rep.pass);
    let perm = rep.get("permutation").unwrap();
    assert!(perm.checked >= 16 * 16, "checked {}", perm.checked);
}

#[test]
fn asymmetric_table_is_flagged() {
    let g = GridSpec::new(&[4], &[0.5]).unwrap();
    let mut vals = vec![Complex64::default(); 25];
    vals[2 * 5 + 1] = Complex64::new(1.0, 0.5);
    vals[5 + 2] = Complex64::new(0.3, 0.5);
    let b = build_bispectrum_grid(
        &BispectrumSource::Table(BispectrumTable {
            n: vec![4],
            dkappa: vec![0.5],
            values: vals,
        }),
        &g,
    )
    .unwrap();
    let rep = validate_symmetries(&b, FieldKind::General);
    assert!(!rep.pass);
    // Violations are relative to the largest sampled magnitude.
    let want = 0.7 / Complex64::new(1.0, 0.5).norm();
    let got = rep.get("permutation").unwrap().max_violation;
    assert!((got - want).abs() <= 1e-12, "{rep:?}");
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let m = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

/// Increment moments over `10^5` phase draws against the orthogonality relations.
#[test]
fn increment_orthogonality() {
    let dec = single_pair(0.4);
    let g = dec.grid().clone();
    let cell = g.cell();
    let idx = |v: usize| -> Idx { [v, 0, 0, 0] };
    let bval = {
        let s = [0.0, 2.0, 3.0, 4.0, 1.0];
        Complex64::from_polar((0.4 * s[2] * s[1] * s[3] / cell).sqrt(), 0.7)
    };
    let draws = 100_000u64;
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(draws as usize); 14];
    for k in 0..draws {
        let ph = generate_phase_tensors(2024, k, &g);
        let n = orthogonal_increments(&dec, &ph, 0, &idx(3));
        let i = orthogonal_increments(&dec, &ph, 0, &idx(2));
        let j = orthogonal_increments(&dec, &ph, 0, &idx(1));
        let u = [n.du, i.du, j.du];
        let v = [n.dv, i.dv, j.dv];
        let row = [
            n.du,
            n.dv,
            n.du * n.dv,
            n.du * i.du,
            n.du * n.du,
            u[0] * u[1] * u[2],
            u[0] * u[1] * v[2],
            u[0] * v[1] * u[2],
            u[0] * v[1] * v[2],
            v[0] * u[1] * u[2],
            v[0] * u[1] * v[2],
            v[0] * v[1] * u[2],
            v[0] * v[1] * v[2],
            n.du * i.du * i.du,
        ];
        for (c, x) in cols.iter_mut().zip(row) {
            c.push(x);
        }
    }
    let re = 2.0 * bval.re * cell * cell;
    let im = 2.0 * bval.im * cell * cell;
    let s_n = dec.s(0)[3];
    let want = [
        0.0,
        0.0,
        0.0,
        0.0,
        2.0 * s_n * cell,
        re,
        -im,
        -im,
        -re,
        im,
        re,
        re,
        -im,
        0.0,
    ];
    for (c, (col, w)) in cols.iter().zip(want).enumerate() {
        let (m, se) = mean_se(col);
        assert!(
            (m - w).abs() <= 3.0 * se,
            "column {c}: {m} vs {w} (se {se})"
        );
        if w != 0.0 {
            assert!(w.abs() > 6.0 * se, "column {c} is not resolved");
        }
    }
}

#[test]
fn second_order_third_moment_vanishes() {
    let g = grid(&[16], 0.3, FieldModel::general(), AxisPower::Zero);
    let dec = toy(&g, 0.0, PairMode::Literal);
    let mut vals = Vec::new();
    for k in 0..400 {
        let f = simulate_fft(&dec, &generate_phase_tensors(8, k, &g), Order::Second);
        let m3 = f.values.iter().map(|x| x.powi(3)).sum::<f64>() / f.values.len() as f64;
        vals.push(m3);
    }
    let (m, se) = mean_se(&vals);
    assert!(m.abs() <= 3.0 * se);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_invariants(
        n1 in 2usize..7,
        n2 in 2usize..6,
        dk in 0.3f64..0.9,
        amp in 0.0f64..0.5,
        literal in any::<bool>(),
        quadrant in any::<bool>(),
    ) {
        let model = if quadrant { FieldModel::quadrant() } else { FieldModel::general() };
        let mode = if literal { PairMode::Literal } else { PairMode::Lexicographic };
        let g = grid(&[n1, n2], dk, model, AxisPower::Keep);
        let s = build_power_grid(&common::gaussian_power(2), &g).unwrap();
        let b = build_bispectrum_grid(&common::gaussian_bispectrum(2, amp), &g).unwrap();
        if let Ok(dec) = decompose(&s, &b, mode) {
            prop_assert!(dec.reconstruction_residual() <= 1e-12);
            for p in 0..g.n_spectral_patterns() {
                prop_assert!(dec.sum_b2(p).iter().all(|v| (0.0..=1.0).contains(v)));
            }
            let t = exact_moments(&dec, Order::Third);
            prop_assert!(t.variance >= 0.0);
        }
    }

    #[test]
    fn correlation_roundtrip_any_grid(
        n in proptest::collection::vec(1usize..6, 1..4),
        extra in proptest::collection::vec(0usize..3, 3),
        dk in 0.2f64..1.0,
    ) {
        let m: Vec<usize> = n.iter().zip(&extra).map(|(a, e)| 2 * a + e).collect();
        let g = GridSpec::with_points(&n, &vec![dk; n.len()], &m).unwrap();
        let s = build_power_grid(&common::gaussian_power(n.len()), &g).unwrap();
        let back = spectrum_from_correlation(&correlation_from_spectrum(&s)).unwrap();
        for p in 0..g.n_spectral_patterns() {
            let scale = s.values(p).iter().cloned().fold(0.0, f64::max);
            for (a, b) in s.values(p).iter().zip(back.values(p)) {
                prop_assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }
}
