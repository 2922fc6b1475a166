//! Print exact target moments of the example configurations.

use std::f64::consts::PI;

use bsrm::decomposition::{decompose, PairMode};
use bsrm::grid::{AxisPower, Coupling, FieldModel, GridSpec, PhaseMode};
use bsrm::moments::exact_moments;
use bsrm::simulator::Order;
use bsrm::spectral_model::{
    build_bispectrum_grid, build_power_grid, BispectrumSource, PowerSource,
};

fn main() {
    let cases = [
        ("ex1", 2, 64, "ex1_power", "ex1_bispectrum"),
        ("ex2_B1", 2, 64, "ex1_power", "ex2_B1"),
        ("ex2_B2", 2, 64, "ex1_power", "ex2_B2"),
        ("ex3", 3, 16, "ex3_power", "ex3_bispectrum"),
        ("ex4_B1", 3, 16, "ex3_power", "ex4_B1"),
        ("ex4_B2", 3, 16, "ex3_power", "ex4_B2"),
        ("ex4_B3", 3, 16, "ex3_power", "ex4_B3"),
    ];
    let args: Vec<String> = std::env::args().collect();
    let coupling = if args.iter().any(|a| a == "same") {
        Coupling::SameSign
    } else {
        Coupling::AllSigns
    };
    let phases = if args.iter().any(|a| a == "shared") {
        PhaseMode::Shared
    } else {
        PhaseMode::Independent
    };
    let mode = if args.iter().any(|a| a == "lex") {
        PairMode::Lexicographic
    } else {
        PairMode::Literal
    };
    let axis = if args.iter().any(|a| a == "zero") {
        AxisPower::Zero
    } else {
        AxisPower::Keep
    };
    for (name, d, n, s, b) in cases {
        let dk = if d == 2 { 2.0 * PI / 100.0 } else { PI / 10.0 };
        let grid = GridSpec::new(&vec![n; d], &vec![dk; d])
            .unwrap()
            .with_model(
                FieldModel::quadrant()
                    .with_phases(phases)
                    .with_coupling(coupling),
            )
            .unwrap()
            .with_axis_power(axis);
        let sg = build_power_grid(&PowerSource::Preset(s.into()), &grid).unwrap();
        let bg = build_bispectrum_grid(&BispectrumSource::Preset(b.into()), &grid).unwrap();
        let dec = decompose(&sg, &bg, mode).unwrap();
        let t2 = exact_moments(&dec, Order::Second);
        let t3 = exact_moments(&dec, Order::Third);
        let maxb = dec.sum_b2(0).iter().cloned().fold(0.0, f64::max);
        println!(
            "{name}: var2={:.4} var3={:.4} skew={:.5} coeffs={} max_sum_b2={:.4}",
            t2.variance,
            t3.variance,
            t3.skewness,
            dec.n_coeffs(),
            maxb
        );
    }
}
