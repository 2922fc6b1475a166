mod common;

use bsrm::decomposition::PairMode;
use bsrm::estimation::{
    bicoherence, cumulants_from_moments, estimate_bispectrum, BispectrumEstimator,
    MomentAccumulator, SpectrumEstimator,
};
use bsrm::grid::{AxisPower, FieldModel, GridSpec, PhaseMode, SIdx};
use bsrm::simulator::{generate_phase_tensors, FftPlan, FieldSample, Order};
use bsrm::spectral_model::build_bispectrum_grid;
use common::{grid, single_pair, toy};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

fn mean_se(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let m = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

fn ensemble(
    dec: &bsrm::decomposition::Decomposition,
    order: Order,
    seed: u64,
    k: u64,
) -> Vec<FieldSample> {
    let plan = FftPlan::new(dec, order);
    let mut ws = plan.workspace();
    (0..k)
        .map(|s| plan.simulate(&generate_phase_tensors(seed, s, dec.grid()), &mut ws))
        .collect()
}

#[test]
fn spectrum_estimator_calibration() {
    let quadrant = FieldModel::quadrant();
    let cases = [
        (FieldModel::general(), AxisPower::Keep),
        (
            quadrant.with_phases(PhaseMode::Independent),
            AxisPower::Keep,
        ),
        (quadrant, AxisPower::Zero),
    ];
    for (model, axis) in cases {
        let g = GridSpec::with_points(&[6, 5], &[0.5, 0.5], &[13, 11])
            .unwrap()
            .with_model(model)
            .unwrap()
            .with_axis_power(axis);
        let dec = toy(&g, 0.0, PairMode::Literal);
        let samples = ensemble(&dec, Order::Second, 3, 200);
        let singles: Vec<Vec<Vec<f64>>> = samples
            .iter()
            .map(|s| {
                let mut e = SpectrumEstimator::new(&g);
                e.push(s).unwrap();
                e.finish().values
            })
            .collect();
        let mut all = SpectrumEstimator::new(&g);
        for s in &samples {
            all.push(s).unwrap();
        }
        let est = all.finish();
        assert_eq!(est.segments, 200);
        for p in 0..g.n_spectral_patterns() {
            let s = dec.s(p);
            let peak = s.iter().cloned().fold(0.0, f64::max);
            for f in 0..s.len() {
                if s[f] < 0.01 * peak {
                    continue;
                }
                let per: Vec<f64> = singles.iter().map(|v| v[p][f]).collect();
                let (m, se) = mean_se(&per);
                assert!((m - est.values[p][f]).abs() <= 1e-9 * peak);
                assert!(
                    (m - s[f]).abs() <= 3.0 * se + 1e-9 * peak,
                    "{model:?} bin {f}: {m} vs {} (se {se})",
                    s[f]
                );
            }
        }
    }
}

fn toy_pairs(n: i64) -> Vec<(SIdx, SIdx)> {
    let mut out = Vec::new();
    for i in 1..n {
        for j in 1..=i {
            if i + j <= n {
                out.push(([i, 0, 0, 0], [j, 0, 0, 0]));
            }
        }
    }
    out
}

#[test]
fn bispectrum_estimator_recovers_toy() {
    let g = grid(&[8], 0.45, FieldModel::general(), AxisPower::Keep);
    let dec = toy(&g, 0.6, PairMode::Lexicographic);
    let b = build_bispectrum_grid(&common::gaussian_bispectrum(1, 0.6), &g).unwrap();
    let pairs = toy_pairs(8);
    let samples = ensemble(&dec, Order::Third, 11, 5000);
    let est = estimate_bispectrum(&samples, &g, &pairs).unwrap();
    assert_eq!(est.count, 5000);
    for (k, (i, j)) in pairs.iter().enumerate() {
        let want = b.eval(i, j);
        let got = est.values[k];
        let (se_re, se_im) = est.std_err[k];
        assert!(
            (got.re - want.re).abs() <= 3.0 * se_re,
            "{i:?},{j:?}: re {} vs {} (se {se_re})",
            got.re,
            want.re
        );
        assert!(
            (got.im - want.im).abs() <= 3.0 * se_im,
            "{i:?},{j:?}: im {} vs {} (se {se_im})",
            got.im,
            want.im
        );
        let bc = bicoherence(&est, k);
        let raw = bc.raw.unwrap();
        assert!((0.0..=1.0 + 1e-9).contains(&raw), "bicoherence {raw}");
    }
}

#[test]
fn zero_field_bispectrum_is_zero() {
    let g = GridSpec::new(&[8], &[0.45]).unwrap();
    let zero = FieldSample {
        values: vec![0.0; 16],
        m: vec![16],
        dx: g.dx().to_vec(),
        provenance: ensemble(&toy(&g, 0.0, PairMode::Literal), Order::Second, 0, 1)[0].provenance,
    };
    let pairs = toy_pairs(8);
    let est = estimate_bispectrum(&[zero.clone(), zero], &g, &pairs).unwrap();
    assert!(est.values.iter().all(|v| v.norm() == 0.0));
    assert!(bicoherence(&est, 0).value.is_none());
}

#[test]
fn bicoherence_of_coupled_pair() {
    let pairs = [([2i64, 0, 0, 0], [1i64, 0, 0, 0])];
    for b2 in [1.0, 0.4] {
        let dec = single_pair(b2);
        let samples = ensemble(&dec, Order::Third, 21, 3000);
        let mut est = BispectrumEstimator::new(dec.grid(), &pairs).unwrap();
        for s in &samples {
            est.push(s).unwrap();
        }
        let v = bicoherence(&est.finish(), 0).value.unwrap();
        assert!((v - b2).abs() <= 0.03, "b2 {b2}: {v}");
    }
}

#[test]
fn bispectrum_estimation_rejects_three_dimensions() {
    let g = GridSpec::new(&[2, 2, 2], &[0.5; 3]).unwrap();
    assert!(BispectrumEstimator::new(&g, &[]).is_err());
}

/// Cumulants of `Exp(1)` draws: `(1, 1, 2, 6)`, errors from 100 batch means.
#[test]
fn cumulants_of_exponential_draws() {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let batches = 100;
    let per = 10_000;
    let mut pooled = MomentAccumulator::new();
    let mut cols: [Vec<f64>; 4] = Default::default();
    for _ in 0..batches {
        let xs: Vec<f64> = (0..per)
            .map(|_| {
                let u = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
                -u.ln()
            })
            .collect();
        let m = |p: i32| xs.iter().map(|x| x.powi(p)).sum::<f64>() / per as f64;
        let c = cumulants_from_moments(m(1), m(2), m(3), m(4));
        for (col, v) in cols.iter_mut().zip([c.c1, c.c2, c.c3, c.c4]) {
            col.push(v);
        }
        pooled.push_values(&xs);
    }
    for (col, want) in cols.iter().zip([1.0, 1.0, 2.0, 6.0]) {
        let (m, se) = mean_se(col);
        assert!((m - want).abs() <= 3.0 * se, "{m} vs {want} (se {se})");
    }
    let r = pooled.report(None);
    assert_eq!(r.points, (batches * per) as u64);
    let se = r.standard_errors;
    assert!((r.variance - 1.0).abs() <= 3.0 * se.variance);
    assert!((r.skewness - 2.0).abs() <= 3.0 * se.skewness);
    assert!((r.kurtosis - 6.0).abs() <= 0.3);
}

#[test]
fn moment_accumulator_merge_is_exact() {
    let g = grid(&[6, 4], 0.5, FieldModel::general(), AxisPower::Keep);
    let dec = toy(&g, 0.3, PairMode::Literal);
    let samples = ensemble(&dec, Order::Third, 1, 10);
    let mut whole = MomentAccumulator::new();
    let mut a = MomentAccumulator::new();
    let mut b = MomentAccumulator::new();
    for (k, s) in samples.iter().enumerate() {
        whole.push(s).unwrap();
        if k < 4 {
            a.push(s).unwrap()
        } else {
            b.push(s).unwrap()
        }
    }
    a.merge(&b).unwrap();
    let (x, y) = (a.report(None), whole.report(None));
    assert_eq!(x.samples, y.samples);
    assert!((x.variance - y.variance).abs() <= 1e-12 * y.variance);
    assert!((x.skewness - y.skewness).abs() <= 1e-10);
}

#[test]
fn second_order_skewness_vanishes() {
    let g = grid(
        &[8, 8],
        0.5,
        FieldModel::quadrant().with_phases(PhaseMode::Independent),
        AxisPower::Keep,
    );
    let dec = toy(&g, 0.3, PairMode::Literal);
    let mut acc = MomentAccumulator::new();
    for s in ensemble(&dec, Order::Second, 4, 300) {
        acc.push(&s).unwrap();
    }
    let r = acc.report(None);
    assert!(r.skewness.abs() <= 3.0 * r.standard_errors.skewness);
    let single = {
        let mut a = MomentAccumulator::new();
        a.push(&ensemble(&dec, Order::Second, 4, 1)[0]).unwrap();
        a.report(None)
    };
    assert!(!single.standard_errors.available);
}
