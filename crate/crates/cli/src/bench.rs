//! `bench`: wall-clock timing over a sample-count sweep, written to `bench.csv`.
//!
//! `setup_s` covers spectrum sampling, decomposition and, for the FFT path,
//! the coefficient plan. `total_s` is setup plus generation of `K` samples and
//! `per_sample_s = (total_s - setup_s) / K`.

use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use bsrm::simulator::NAIVE_BUDGET;
use bsrm::simulator::{
    generate_phase_tensors, simulate_naive_with_budget, waves::wave_count, FftPlan, Method,
};

use crate::ensemble::Model;
use crate::{io_err, CliError, Context};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub d: usize,
    pub method: Method,
    pub samples: u64,
    pub setup_s: f64,
    pub total_s: f64,
    pub per_sample_s: f64,
}

pub const HEADER: &str = "d,method,K,setup_s,total_s,per_sample_s";

fn time_samples(model: &Model, method: Method, ctx: &Context, k: u64) -> Result<f64, CliError> {
    let cfg = &ctx.config;
    let order = cfg.order();
    let dec = &model.decomposition;
    let t0 = Instant::now();
    let plan = (method == Method::Fft).then(|| FftPlan::new(dec, order));
    let plan_s = t0.elapsed().as_secs_f64();
    let mut sink = 0.0;
    let t1 = Instant::now();
    match &plan {
        Some(plan) => {
            let mut ws = plan.workspace();
            for s in 0..k {
                let f = plan.simulate(&generate_phase_tensors(cfg.seed, s, &model.grid), &mut ws);
                sink += f.values[0];
            }
        }
        None => {
            for s in 0..k {
                let phases = generate_phase_tensors(cfg.seed, s, &model.grid);
                let f = simulate_naive_with_budget(dec, &phases, order, NAIVE_BUDGET)?;
                sink += f.values[0];
            }
        }
    }
    std::hint::black_box(sink);
    Ok(plan_s + t1.elapsed().as_secs_f64())
}

pub fn run(ctx: &Context) -> Result<Vec<BenchRow>, CliError> {
    let cfg = &ctx.config;
    let bench = cfg
        .bench
        .as_ref()
        .ok_or_else(|| CliError::Config("bench: missing [bench] table".into()))?;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for name in &bench.methods {
        let method = if name == "naive" {
            Method::Naive
        } else {
            Method::Fft
        };
        for &k in &bench.samples {
            // Fresh setup per row so setup cost is measured, not amortized.
            let model = Model::build(cfg)?;
            if method == Method::Naive {
                let terms = model.grid.spatial().len() as f64
                    * wave_count(&model.decomposition, cfg.order()) as f64;
                if terms > NAIVE_BUDGET {
                    notes.push(format!(
                        "naive K={k} skipped: {terms:.3e} term evaluations per sample exceed {NAIVE_BUDGET:.0e}"
                    ));
                    continue;
                }
            }
            let gen_s = time_samples(&model, method, ctx, k)?;
            let total_s = model.setup_s + gen_s;
            rows.push(BenchRow {
                d: model.grid.d(),
                method,
                samples: k,
                setup_s: total_s - gen_s,
                total_s,
                per_sample_s: gen_s / k as f64,
            });
        }
    }
    fs::create_dir_all(&ctx.out).map_err(|e| io_err(&ctx.out, e))?;
    let mut s = format!("{HEADER}\n");
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.6e},{:.6e},{:.6e}",
            r.d,
            r.method.name(),
            r.samples,
            r.setup_s,
            r.total_s,
            r.per_sample_s
        );
    }
    let path = ctx.out.join("bench.csv");
    fs::write(&path, &s).map_err(|e| io_err(&path, e))?;
    print!("{s}");
    for n in &notes {
        eprintln!("note: {n}");
    }
    if !notes.is_empty() {
        let path = ctx.out.join("bench_notes.txt");
        fs::write(&path, notes.join("\n") + "\n").map_err(|e| io_err(&path, e))?;
    }
    Ok(rows)
}
