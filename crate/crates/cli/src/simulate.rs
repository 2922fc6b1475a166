//! `simulate`: field files plus `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bsrm::io::{write_csv, write_field};
use bsrm::simulator::Method;

use crate::config::MethodChoice;
use crate::ensemble::{for_each_sample, Model};
use crate::{io_err, CliError, Context, RunConfig};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridEcho {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub dkappa: Vec<f64>,
    pub dx: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecompositionEcho {
    pub sha256: String,
    pub coefficients: usize,
    pub zero_denominators: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SampleEntry {
    pub seed: u64,
    pub sample_index: u64,
    pub method: String,
    pub file: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub experiment: String,
    pub config: RunConfig,
    pub grid: GridEcho,
    pub decomposition: DecompositionEcho,
    pub order: u8,
    pub samples: Vec<SampleEntry>,
}

pub fn methods(choice: MethodChoice) -> Vec<Method> {
    match choice {
        MethodChoice::Naive => vec![Method::Naive],
        MethodChoice::Fft => vec![Method::Fft],
        MethodChoice::Both => vec![Method::Fft, Method::Naive],
    }
}

pub fn grid_echo(model: &Model) -> GridEcho {
    GridEcho {
        n: model.grid.n().to_vec(),
        m: model.grid.m().to_vec(),
        dkappa: model.grid.dkappa().to_vec(),
        dx: model.grid.dx().to_vec(),
    }
}

pub fn decomposition_echo(model: &Model) -> DecompositionEcho {
    let dec = &model.decomposition;
    DecompositionEcho {
        sha256: model.checksum(),
        coefficients: dec.n_coeffs(),
        zero_denominators: dec.zero_denominators(),
        residual: dec.reconstruction_residual(),
    }
}

pub fn sample_file(index: u64, method: Method) -> String {
    format!("sample_{index:06}_{}.bsrmf", method.name())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn run(ctx: &Context) -> Result<Manifest, CliError> {
    let cfg = &ctx.config;
    let model = Model::build(cfg)?;
    fs::create_dir_all(&ctx.out).map_err(|e| io_err(&ctx.out, e))?;
    let csv = cfg.output.csv && model.grid.d() <= 2;
    if cfg.output.csv && !csv {
        eprintln!("note: CSV export skipped, it supports d <= 2");
    }
    let mut entries = Vec::new();
    for method in methods(cfg.method) {
        for_each_sample(
            &model.decomposition,
            method,
            cfg.order(),
            cfg.seed,
            cfg.samples,
            ctx.workers,
            |k, sample| {
                let name = sample_file(k, method);
                let path = ctx.out.join(&name);
                write_field(&path, &sample).map_err(|e| io_err(&path, e))?;
                if csv {
                    let p: PathBuf = path.with_extension("csv");
                    write_csv(&p, &sample).map_err(|e| io_err(&p, e))?;
                }
                entries.push(SampleEntry {
                    seed: cfg.seed,
                    sample_index: k,
                    method: method.name().into(),
                    file: name,
                });
                Ok(())
            },
        )?;
    }
    let manifest = Manifest {
        experiment: cfg.experiment.clone(),
        config: cfg.clone(),
        grid: grid_echo(&model),
        decomposition: decomposition_echo(&model),
        order: cfg.order,
        samples: entries,
    };
    write_json(&ctx.out.join(MANIFEST), &manifest)?;
    println!(
        "simulate: {} files in {} (decomposition sha256 {})",
        manifest.samples.len(),
        ctx.out.display(),
        manifest.decomposition.sha256
    );
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}
