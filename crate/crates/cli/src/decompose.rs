//! `decompose`: pure spectra and interaction counts per orthant bin.
//!
//! Writes `decomposition.csv` (`pattern, n1..nd, S, S_p, sum_b2, interactions`)
//! and, with `decompose.coefficients = true`, `coefficients.csv` listing every
//! `(n, i, j, b, beta)`.

use std::fs;
use std::io::{BufWriter, Write};

use crate::ensemble::Model;
use crate::simulate::{decomposition_echo, DecompositionEcho};
use crate::{io_err, CliError, Context, Outcome};

/// Largest acceptable reconstruction residual relative to `max S`.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Row cap for `coefficients.csv`.
pub const COEFFICIENT_ROWS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DecomposeReport {
    pub echo: DecompositionEcho,
    pub bins: usize,
    /// Bins where the bispectrum absorbs all of `S`, leaving `S_p = 0`.
    pub saturated: usize,
}

impl DecomposeReport {
    pub fn outcome(&self) -> Outcome {
        if self.echo.residual <= RESIDUAL_TOL {
            Outcome::Pass
        } else {
            Outcome::ToleranceFailure
        }
    }
}

fn idx_cols(idx: &[usize]) -> String {
    idx.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn header(d: usize, prefix: &str) -> String {
    (1..=d)
        .map(|k| format!("{prefix}{k}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn run(ctx: &Context) -> Result<DecomposeReport, CliError> {
    let model = Model::build(&ctx.config)?;
    let dec = &model.decomposition;
    let grid = &model.grid;
    let d = grid.d();
    let orth = grid.orthant();
    fs::create_dir_all(&ctx.out).map_err(|e| io_err(&ctx.out, e))?;

    let path = ctx.out.join("decomposition.csv");
    let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    let mut saturated = 0;
    let mut bins = 0;
    let out = |w: &mut BufWriter<fs::File>, line: String| {
        writeln!(w, "{line}").map_err(|e| io_err(&path, e))
    };
    out(
        &mut w,
        format!("pattern,{},S,S_p,sum_b2,interactions", header(d, "n")),
    )?;
    for p in 0..grid.n_spectral_patterns() {
        let (s, sp, b2, table) = (dec.s(p), dec.s_p(p), dec.sum_b2(p), dec.coeffs(p));
        for f in 0..orth.len() {
            let idx = orth.index(f);
            if s[f] > 0.0 && sp[f] == 0.0 {
                saturated += 1;
            }
            bins += 1;
            out(
                &mut w,
                format!(
                    "{p},{},{:?},{:?},{:?},{}",
                    idx_cols(&idx[..d]),
                    s[f],
                    sp[f],
                    b2[f],
                    table.count_at(f)
                ),
            )?;
        }
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    if ctx.config.decompose.coefficients {
        let total = dec.n_coeffs();
        if total > COEFFICIENT_ROWS {
            eprintln!("note: coefficients.csv skipped, {total} rows exceed {COEFFICIENT_ROWS}");
        } else {
            write_coefficients(ctx, &model)?;
        }
    }

    let report = DecomposeReport {
        echo: decomposition_echo(&model),
        bins,
        saturated,
    };
    println!(
        "decompose: {} bins, {} coefficients, {} zero denominators, {} saturated, residual {:.3e}",
        report.bins,
        report.echo.coefficients,
        report.echo.zero_denominators,
        report.saturated,
        report.echo.residual
    );
    Ok(report)
}

fn write_coefficients(ctx: &Context, model: &Model) -> Result<(), CliError> {
    let dec = &model.decomposition;
    let grid = &model.grid;
    let d = grid.d();
    let orth = grid.orthant();
    let path = ctx.out.join("coefficients.csv");
    let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    let err = |e| io_err(&path, e);
    writeln!(
        w,
        "pattern,{},{},{},b,beta",
        header(d, "n"),
        header(d, "i"),
        header(d, "j")
    )
    .map_err(err)?;
    for p in 0..grid.n_spectral_patterns() {
        let table = dec.coeffs(p);
        for f in 0..orth.len() {
            let n = orth.index(f);
            for c in table.at(f) {
                let (i, j) = (orth.index(c.i), orth.index(c.j));
                writeln!(
                    w,
                    "{p},{},{},{},{:?},{:?}",
                    idx_cols(&n[..d]),
                    idx_cols(&i[..d]),
                    idx_cols(&j[..d]),
                    c.b,
                    c.beta
                )
                .map_err(err)?;
            }
        }
    }
    w.flush().map_err(err)
}
