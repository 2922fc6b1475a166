//! `verify`: ensemble moments against exact targets and configured references.
//!
//! `report.json` schema:
//!
//! * `targets`: exact moments of the discrete synthesis.
//! * `estimates`, `standard_errors`: pooled ensemble moments and their Monte
//!   Carlo errors (`null` errors for a single sample).
//! * `deltas`: estimate minus exact target.
//! * `checks`: one entry per configured tolerance with `value`, `reference`,
//!   `tolerance`, `kind` (`relative` or `absolute`) and `status`
//!   (`pass`, `fail` or `skipped`). A check passes when
//!   `|value - reference| <= tolerance`, scaled by `|reference|` for
//!   relative checks.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;

use serde::{Deserialize, Serialize};

use bsrm::estimation::{bicoherence, BispectrumEstimator, MomentAccumulator, SpectrumEstimator};
use bsrm::grid::{SIdx, MAX_DIM};
use bsrm::io::read_field;
use bsrm::moments::exact_moments;
use bsrm::simulator::{generate_phase_tensors, simulate_naive, FieldSample, Method};

use crate::config::MethodChoice;
use crate::ensemble::{for_each_sample, Model};
use crate::simulate::{decomposition_echo, read_manifest, write_json, DecompositionEcho};
use crate::{io_err, CliError, Context, Outcome};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub third_moment: f64,
    pub skewness: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Estimates {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub c3: f64,
    pub c4: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Errors {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Deltas {
    pub variance: f64,
    pub skewness: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceKind {
    Relative,
    Absolute,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub kind: ToleranceKind,
    pub status: Status,
}

impl Check {
    fn evaluate(
        name: &str,
        value: f64,
        reference: f64,
        tolerance: f64,
        kind: ToleranceKind,
    ) -> Self {
        let dev = match kind {
            ToleranceKind::Relative => (value - reference).abs() / reference.abs(),
            ToleranceKind::Absolute => (value - reference).abs(),
        };
        Check {
            name: name.into(),
            value,
            reference,
            tolerance,
            kind,
            status: if dev <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumSummary {
    /// Largest `|S_hat - S| / S` over bins with `S` above 1% of the peak.
    pub max_rel_error: f64,
    pub bins: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerifyReport {
    pub experiment: String,
    pub order: u8,
    pub method: String,
    pub samples: u64,
    pub points: u64,
    pub decomposition: DecompositionEcho,
    pub targets: Moments,
    pub estimates: Estimates,
    pub deltas: Deltas,
    pub standard_errors: Option<Errors>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Largest `|fft - naive| / std(naive)` over the ensemble, method `both`.
    pub fft_naive_max_rel: Option<f64>,
    pub spectrum: Option<SpectrumSummary>,
}

impl VerifyReport {
    pub fn outcome(&self) -> Outcome {
        if self.checks.iter().any(|c| c.status == Status::Fail) {
            Outcome::ToleranceFailure
        } else {
            Outcome::Pass
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Estimators {
    moments: MomentAccumulator,
    spectrum: Option<SpectrumEstimator>,
    bispectrum: Option<BispectrumEstimator>,
}

impl Estimators {
    fn push(&mut self, s: &FieldSample) -> Result<(), CliError> {
        self.moments.push(s)?;
        if let Some(e) = &mut self.spectrum {
            e.push(s)?;
        }
        if let Some(e) = &mut self.bispectrum {
            e.push(s)?;
        }
        Ok(())
    }
}

fn bispectrum_slice(model: &Model, max_index: usize) -> Vec<(SIdx, SIdx)> {
    let d = model.grid.d();
    let n = model.grid.n();
    let l: Vec<i64> = (0..d).map(|k| max_index.min(n[k]) as i64).collect();
    let mut vecs: Vec<SIdx> = vec![[0; MAX_DIM]];
    for k in 0..d {
        vecs = vecs
            .into_iter()
            .flat_map(|v| {
                (1..=l[k]).map(move |x| {
                    let mut w = v;
                    w[k] = x;
                    w
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for i in &vecs {
        for j in &vecs {
            let fits = (0..d).all(|k| (i[k] + j[k]) as usize <= n[k]);
            if fits && i[..d] >= j[..d] {
                out.push((*i, *j));
            }
        }
    }
    out
}

fn load_fields(
    ctx: &Context,
    model: &Model,
    est: &mut Estimators,
) -> Result<(u64, String), CliError> {
    let dir = ctx.config.verify.fields.as_ref().expect("caller checked");
    let manifest = read_manifest(dir)?;
    if manifest.order != ctx.config.order {
        return Err(CliError::Config(format!(
            "verify.fields: manifest order {} differs from config order {}",
            manifest.order, ctx.config.order
        )));
    }
    let method = if manifest.samples.iter().any(|s| s.method == "fft") {
        "fft"
    } else {
        "naive"
    };
    let mut count = 0;
    for entry in manifest.samples.iter().filter(|s| s.method == method) {
        let path = dir.join(&entry.file);
        let sample = read_field(&path).map_err(|e| io_err(&path, e))?;
        if sample.m != model.grid.m() {
            return Err(CliError::Config(format!(
                "verify.fields: {} has M = {:?}, config has {:?}",
                path.display(),
                sample.m,
                model.grid.m()
            )));
        }
        est.push(&sample)?;
        count += 1;
    }
    if count == 0 {
        return Err(CliError::Runtime(format!(
            "{}: no field files listed",
            dir.display()
        )));
    }
    Ok((count, method.into()))
}

pub fn run(ctx: &Context) -> Result<VerifyReport, CliError> {
    let cfg = &ctx.config;
    let model = Model::build(cfg)?;
    let order = cfg.order();
    let dec = &model.decomposition;
    let exact = exact_moments(dec, order);
    let mut warnings = Vec::new();

    let slice = if cfg.verify.bispectrum_max_index > 0 {
        if model.grid.d() <= 2 {
            Some(bispectrum_slice(&model, cfg.verify.bispectrum_max_index))
        } else {
            warnings.push("bispectrum estimation skipped: supported for d <= 2".into());
            None
        }
    } else {
        None
    };
    let mut est = Estimators {
        moments: MomentAccumulator::new(),
        spectrum: cfg
            .verify
            .spectrum
            .then(|| SpectrumEstimator::new(&model.grid)),
        bispectrum: match &slice {
            Some(s) => Some(BispectrumEstimator::new(&model.grid, s)?),
            None => None,
        },
    };

    let mut fft_naive = None;
    let (samples, method) = if cfg.verify.fields.is_some() {
        load_fields(ctx, &model, &mut est)?
    } else {
        let primary = if cfg.method == MethodChoice::Naive {
            Method::Naive
        } else {
            Method::Fft
        };
        let mut worst = 0.0f64;
        for_each_sample(
            dec,
            primary,
            order,
            cfg.seed,
            cfg.samples,
            ctx.workers,
            |k, s| {
                if cfg.method == MethodChoice::Both {
                    let phases = generate_phase_tensors(cfg.seed, k, &model.grid);
                    let naive = simulate_naive(dec, &phases, order)?;
                    let dev = s
                        .values
                        .iter()
                        .zip(&naive.values)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    worst = worst.max(dev / naive.std());
                }
                est.push(&s)
            },
        )?;
        if cfg.method == MethodChoice::Both {
            fft_naive = Some(worst);
        }
        let name = match cfg.method {
            MethodChoice::Both => "both",
            _ => primary.name(),
        };
        (cfg.samples, name.to_string())
    };

    let rep = est.moments.report(Some(exact));
    let se = rep.standard_errors;
    if !se.available {
        warnings.push("single sample: Monte Carlo errors unavailable, skewness not judged".into());
    }
    let tol = cfg.tolerances();
    let mut checks = Vec::new();
    if let Some(t) = tol.variance_tol {
        let reference = tol.variance.unwrap_or(exact.variance);
        checks.push(Check::evaluate(
            "variance",
            rep.variance,
            reference,
            t,
            ToleranceKind::Relative,
        ));
    }
    if let Some(t) = tol.skewness_tol {
        let reference = tol.skewness.unwrap_or(exact.skewness);
        let mut c = Check::evaluate(
            "skewness",
            rep.skewness,
            reference,
            t,
            ToleranceKind::Absolute,
        );
        if !se.available {
            c.status = Status::Skipped;
        }
        checks.push(c);
    }

    fs::create_dir_all(&ctx.out).map_err(|e| io_err(&ctx.out, e))?;
    let spectrum = match &est.spectrum {
        Some(e) => Some(write_spectrum(ctx, &model, e)?),
        None => None,
    };
    if let Some(e) = &est.bispectrum {
        write_bispectrum(ctx, &model, e)?;
    }

    let report = VerifyReport {
        experiment: cfg.experiment.clone(),
        order: cfg.order,
        method,
        samples,
        points: rep.points,
        decomposition: decomposition_echo(&model),
        targets: Moments {
            mean: exact.mean,
            variance: exact.variance,
            third_moment: exact.third_moment,
            skewness: exact.skewness,
        },
        estimates: Estimates {
            mean: rep.mean,
            variance: rep.variance,
            skewness: rep.skewness,
            kurtosis: rep.kurtosis,
            c3: rep.cumulants.c3,
            c4: rep.cumulants.c4,
        },
        deltas: Deltas {
            variance: rep.variance - exact.variance,
            skewness: rep.skewness - exact.skewness,
        },
        standard_errors: se.available.then_some(Errors {
            mean: se.mean,
            variance: se.variance,
            skewness: se.skewness,
        }),
        checks,
        warnings,
        fft_naive_max_rel: fft_naive,
        spectrum,
    };
    write_json(&ctx.out.join("report.json"), &report)?;
    write_report_csv(ctx, &report)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "verify {}: order {} K={} variance {:.4} (target {:.4}) skewness {:.5} (target {:.5})",
        report.experiment,
        report.order,
        report.samples,
        report.estimates.variance,
        report.targets.variance,
        report.estimates.skewness,
        report.targets.skewness
    );
    for c in &report.checks {
        println!(
            "  {:<9} {:?}: value {:.6} reference {:.6} tolerance {} ({:?})",
            c.name, c.status, c.value, c.reference, c.tolerance, c.kind
        );
    }
    Ok(report)
}

fn write_report_csv(ctx: &Context, r: &VerifyReport) -> Result<(), CliError> {
    let mut s =
        String::from("quantity,target,estimate,delta,std_err,reference,tolerance,kind,status\n");
    let se = r.standard_errors.as_ref();
    let rows = [
        (
            "variance",
            r.targets.variance,
            r.estimates.variance,
            se.map(|e| e.variance),
        ),
        (
            "skewness",
            r.targets.skewness,
            r.estimates.skewness,
            se.map(|e| e.skewness),
        ),
        ("mean", r.targets.mean, r.estimates.mean, se.map(|e| e.mean)),
    ];
    for (name, target, estimate, err) in rows {
        let check = r.check(name);
        let _ = writeln!(
            s,
            "{name},{target:?},{estimate:?},{:?},{},{},{},{},{}",
            estimate - target,
            err.map(|e| format!("{e:?}")).unwrap_or_default(),
            check
                .map(|c| format!("{:?}", c.reference))
                .unwrap_or_default(),
            check
                .map(|c| format!("{:?}", c.tolerance))
                .unwrap_or_default(),
            check
                .map(|c| format!("{:?}", c.kind).to_lowercase())
                .unwrap_or_default(),
            check
                .map(|c| format!("{:?}", c.status).to_lowercase())
                .unwrap_or_default(),
        );
    }
    let path = ctx.out.join("report.csv");
    fs::write(&path, s).map_err(|e| io_err(&path, e))
}

fn index_cols(d: usize, prefix: &str) -> String {
    (1..=d)
        .map(|k| format!("{prefix}{k}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn write_spectrum(
    ctx: &Context,
    model: &Model,
    est: &SpectrumEstimator,
) -> Result<SpectrumSummary, CliError> {
    let grid = &model.grid;
    let d = grid.d();
    let values = est.finish().values;
    let orth = grid.orthant();
    let path = ctx.out.join("spectrum.csv");
    let mut f = std::io::BufWriter::new(fs::File::create(&path).map_err(|e| io_err(&path, e))?);
    let w = |f: &mut std::io::BufWriter<fs::File>, line: String| {
        writeln!(f, "{line}").map_err(|e| io_err(&path, e))
    };
    w(
        &mut f,
        format!("pattern,{},target,estimate", index_cols(d, "n")),
    )?;
    let mut worst = 0.0f64;
    let mut bins = 0;
    for (p, est_p) in values.iter().enumerate() {
        let s = model.decomposition.s(p);
        let peak = s.iter().cloned().fold(0.0, f64::max);
        for (flat, (&target, &e)) in s.iter().zip(est_p).enumerate() {
            let idx = orth.index(flat);
            let cols: Vec<String> = idx[..d].iter().map(|v| v.to_string()).collect();
            w(&mut f, format!("{p},{},{target:?},{e:?}", cols.join(",")))?;
            if target >= 0.01 * peak && target > 0.0 {
                worst = worst.max((e - target).abs() / target);
                bins += 1;
            }
        }
    }
    f.flush().map_err(|e| io_err(&path, e))?;
    Ok(SpectrumSummary {
        max_rel_error: worst,
        bins,
    })
}

fn write_bispectrum(
    ctx: &Context,
    model: &Model,
    est: &BispectrumEstimator,
) -> Result<(), CliError> {
    let d = model.grid.d();
    let e = est.finish();
    let mut s = format!(
        "{},{},target_re,target_im,estimate_re,estimate_im,se_re,se_im,bicoherence\n",
        index_cols(d, "i"),
        index_cols(d, "j")
    );
    for (k, (i, j)) in e.pairs.iter().enumerate() {
        let target = model.bispectrum.eval(i, j);
        let v = e.values[k];
        let (se_re, se_im) = e.std_err[k];
        let bc = bicoherence(&e, k)
            .value
            .map(|b| format!("{b:?}"))
            .unwrap_or_default();
        let ii: Vec<String> = i[..d].iter().map(|v| v.to_string()).collect();
        let jj: Vec<String> = j[..d].iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{:?},{:?},{:?},{:?},{se_re:?},{se_im:?},{bc}",
            ii.join(","),
            jj.join(","),
            target.re,
            target.im,
            v.re,
            v.im
        );
    }
    let path = ctx.out.join("bispectrum.csv");
    fs::write(&path, s).map_err(|e| io_err(&path, e))
}
