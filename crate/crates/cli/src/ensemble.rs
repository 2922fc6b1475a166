//! Model construction from a config and parallel sample generation.

use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use bsrm::decomposition::{decompose, Decomposition};
use bsrm::grid::GridSpec;
use bsrm::simulator::{
    generate_phase_tensors, simulate_naive, FftPlan, FieldSample, Method, Order,
};
use bsrm::spectral_model::{
    build_bispectrum_grid, build_power_grid, BispectrumGrid, PowerSpectrumGrid,
};

use crate::{CliError, RunConfig};

pub struct Model {
    pub grid: GridSpec,
    pub power: PowerSpectrumGrid,
    pub bispectrum: BispectrumGrid,
    pub decomposition: Decomposition,
    pub setup_s: f64,
}

impl Model {
    pub fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let t0 = Instant::now();
        let grid = cfg.grid_spec()?;
        let power = build_power_grid(&cfg.power_source(), &grid)?;
        let bispectrum = build_bispectrum_grid(&cfg.bispectrum_source()?, &grid)?;
        let decomposition = decompose(&power, &bispectrum, cfg.pair_mode())?;
        Ok(Model {
            grid,
            power,
            bispectrum,
            decomposition,
            setup_s: t0.elapsed().as_secs_f64(),
        })
    }

    pub fn checksum(&self) -> String {
        let digest = Sha256::digest(self.decomposition.to_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-method synthesis state shared by all workers.
pub enum Synth<'a> {
    Naive(&'a Decomposition),
    Fft(FftPlan),
}

impl<'a> Synth<'a> {
    pub fn new(dec: &'a Decomposition, method: Method, order: Order) -> Self {
        match method {
            Method::Naive => Synth::Naive(dec),
            Method::Fft => Synth::Fft(FftPlan::new(dec, order)),
        }
    }
}

/// Samples generated per parallel batch and worker.
const BATCH_PER_WORKER: usize = 4;

/// Generate samples `0..count` and hand them to `sink` in index order.
///
/// Output is independent of the worker count.
pub fn for_each_sample(
    dec: &Decomposition,
    method: Method,
    order: Order,
    seed: u64,
    count: u64,
    workers: usize,
    mut sink: impl FnMut(u64, FieldSample) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let synth = Synth::new(dec, method, order);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let grid = dec.grid();
    let batch = (workers * BATCH_PER_WORKER) as u64;
    let mut start = 0;
    while start < count {
        let end = (start + batch).min(count);
        let out: Vec<Result<FieldSample, CliError>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map_init(
                    || match &synth {
                        Synth::Fft(plan) => Some(plan.workspace()),
                        Synth::Naive(_) => None,
                    },
                    |ws, k| {
                        let phases = generate_phase_tensors(seed, k, grid);
                        match (&synth, ws) {
                            (Synth::Fft(plan), Some(ws)) => Ok(plan.simulate(&phases, ws)),
                            (Synth::Naive(dec), _) => {
                                simulate_naive(dec, &phases, order).map_err(CliError::from)
                            }
                            (Synth::Fft(_), None) => unreachable!(),
                        }
                    },
                )
                .collect()
        });
        for (k, sample) in (start..end).zip(out) {
            sink(k, sample?)?;
        }
        start = end;
    }
    Ok(())
}
