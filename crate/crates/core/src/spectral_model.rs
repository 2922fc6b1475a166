//! Power spectrum and bispectrum models sampled on a [`GridSpec`].
//!
//! Spectra are evaluated at `kappa = n * dkappa`. The power grid stores one
//! value array per spectral pattern (a single folded array for quadrant
//! fields). The bispectrum is an accessor `B(i, j)` over signed index pairs,
//! forced to zero whenever any component of `i` or `j` is zero.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::decomposition::{decompose, PairMode};
use crate::error::{Error, Result};
use crate::fftn::{Direction, NdFft};
use crate::grid::{abs_index, AxisPower, FieldKind, GridSpec, Idx, SIdx, Shape, MAX_DIM};
use crate::io;
use crate::moments::{exact_moments, TargetMoments};
use crate::simulator::Order;

/// `amp * exp(-1/2 * sum_k w_k kappa_k^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPower {
    pub amp: f64,
    pub weights: Vec<f64>,
}

impl GaussianPower {
    pub fn eval(&self, kappa: &[f64]) -> f64 {
        let q: f64 = self.weights.iter().zip(kappa).map(|(w, k)| w * k * k).sum();
        self.amp * (-0.5 * q).exp()
    }
}

/// `amp * exp(-sum_k w_k (kappa1_k^2 + kappa2_k^2))`, complex `amp`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBispectrum {
    pub amp: Complex64,
    pub weights: Vec<f64>,
}

impl GaussianBispectrum {
    pub fn eval(&self, k1: &[f64], k2: &[f64]) -> Complex64 {
        let q: f64 = (0..self.weights.len())
            .map(|k| self.weights[k] * (k1[k] * k1[k] + k2[k] * k2[k]))
            .sum();
        self.amp * (-q).exp()
    }

    /// Same spectrum multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        GaussianBispectrum {
            amp: self.amp * factor,
            weights: self.weights.clone(),
        }
    }
}

pub const POWER_PRESETS: [&str; 3] = ["ex1_power", "ex3_power", "line_power"];
pub const BISPECTRUM_PRESETS: [&str; 8] = [
    "ex1_bispectrum",
    "ex2_B1",
    "ex2_B2",
    "ex3_bispectrum",
    "ex4_B1",
    "ex4_B2",
    "ex4_B3",
    "line_bispectrum",
];

pub fn preset_power(name: &str) -> Result<GaussianPower> {
    let (amp, d) = match name {
        "ex1_power" => (20.0 / PI.sqrt(), 2),
        "ex3_power" => (20.0 / (2.0 * PI).sqrt(), 3),
        // One-dimensional cut of `ex1_power`, used for timing runs.
        "line_power" => (20.0 / PI.sqrt(), 1),
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(GaussianPower {
        amp,
        weights: vec![1.0; d],
    })
}

pub fn preset_bispectrum(name: &str) -> Result<GaussianBispectrum> {
    let (amp, weights) = match name {
        "ex1_bispectrum" => (58.0 / PI, vec![1.0, 1.0]),
        "ex2_B1" => (140.0 / PI, vec![1.0, 10.0]),
        "ex2_B2" => (140.0 / PI, vec![10.0, 1.0]),
        "ex3_bispectrum" => (22.0 / (2.0 * PI), vec![1.0, 1.0, 1.0]),
        "ex4_B1" => (300.0 / (2.0 * PI), vec![10.0, 1.0, 1.0]),
        "ex4_B2" => (300.0 / (2.0 * PI), vec![1.0, 10.0, 1.0]),
        "ex4_B3" => (300.0 / (2.0 * PI), vec![1.0, 1.0, 10.0]),
        "line_bispectrum" => (58.0 / PI, vec![1.0]),
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(GaussianBispectrum {
        amp: Complex64::new(amp, amp),
        weights,
    })
}

/// Closed-form preset value. Power presets take a `d`-vector, bispectrum
/// presets the concatenation `kappa1 ++ kappa2` of length `2d`.
pub fn preset_spectrum(name: &str, kappa: &[f64]) -> Result<Complex64> {
    if let Ok(p) = preset_power(name) {
        let d = p.weights.len();
        if kappa.len() != d {
            return Err(Error::PresetDimension {
                name: name.into(),
                expected: d,
                found: kappa.len(),
            });
        }
        return Ok(Complex64::new(p.eval(kappa), 0.0));
    }
    let b = preset_bispectrum(name)?;
    let d = b.weights.len();
    if kappa.len() != 2 * d {
        return Err(Error::PresetDimension {
            name: name.into(),
            expected: 2 * d,
            found: kappa.len(),
        });
    }
    Ok(b.eval(&kappa[..d], &kappa[d..]))
}

/// Tabulated power spectrum as stored in spectrum files.
///
/// Unsigned tables cover the orthant `n_k in [0, N_k]`. Signed tables cover
/// `n_1 in [0, N_1]` and `n_k in [-N_k, N_k]` for `k >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTable {
    pub n: Vec<usize>,
    pub dkappa: Vec<f64>,
    pub signed: bool,
    pub values: Vec<f64>,
}

impl SpectrumTable {
    pub fn shape(&self) -> Shape {
        let dims: Vec<usize> = self
            .n
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if self.signed && k > 0 {
                    2 * v + 1
                } else {
                    v + 1
                }
            })
            .collect();
        Shape::new(&dims)
    }

    fn get(&self, k: &SIdx) -> f64 {
        let shape = self.shape();
        let mut idx = [0usize; MAX_DIM];
        for a in 0..self.n.len() {
            idx[a] = if self.signed && a > 0 {
                (k[a] + self.n[a] as i64) as usize
            } else {
                k[a].unsigned_abs() as usize
            };
        }
        self.values[shape.flat(&idx)]
    }
}

/// Bispectrum table over orthant index pairs, `values[flat(i) * len + flat(j)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BispectrumTable {
    pub n: Vec<usize>,
    pub dkappa: Vec<f64>,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub enum PowerSource {
    Preset(String),
    Gaussian(GaussianPower),
    File(PathBuf),
    Table(SpectrumTable),
}

#[derive(Clone, Debug)]
pub enum BispectrumSource {
    Zero,
    Preset(String),
    Gaussian(GaussianBispectrum),
    File(PathBuf),
    Table(BispectrumTable),
}

#[derive(Clone, Debug)]
pub struct PowerSpectrumGrid {
    grid: GridSpec,
    values: Vec<Vec<f64>>,
    source: String,
    analytic: Option<GaussianPower>,
}

fn check_table_grid(n: &[usize], dkappa: &[f64], grid: &GridSpec) -> Result<()> {
    let same_dk = dkappa.len() == grid.d()
        && dkappa
            .iter()
            .zip(grid.dkappa())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs());
    if n != grid.n() || !same_dk {
        return Err(Error::ShapeMismatch {
            expected: format!("N={:?}, dkappa={:?}", grid.n(), grid.dkappa()),
            found: format!("N={n:?}, dkappa={dkappa:?}"),
        });
    }
    Ok(())
}

pub fn build_power_grid(source: &PowerSource, grid: &GridSpec) -> Result<PowerSpectrumGrid> {
    match source {
        PowerSource::Preset(name) => {
            let g = preset_power(name)?;
            if g.weights.len() != grid.d() {
                return Err(Error::PresetDimension {
                    name: name.clone(),
                    expected: g.weights.len(),
                    found: grid.d(),
                });
            }
            Ok(power_from_analytic(g, grid, name.clone()))
        }
        PowerSource::Gaussian(g) => {
            if g.weights.len() != grid.d() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} weights", grid.d()),
                    found: format!("{} weights", g.weights.len()),
                });
            }
            Ok(power_from_analytic(g.clone(), grid, "gaussian".into()))
        }
        PowerSource::File(path) => {
            let table = io::read_spectrum(path)?;
            power_from_table(&table, grid, path.display().to_string())
        }
        PowerSource::Table(table) => power_from_table(table, grid, "table".into()),
    }
}

fn power_from_analytic(g: GaussianPower, grid: &GridSpec, label: String) -> PowerSpectrumGrid {
    let shape = grid.orthant();
    let d = grid.d();
    let values = (0..grid.n_spectral_patterns())
        .map(|p| {
            (0..shape.len())
                .map(|f| {
                    let k = grid.signed(p, &shape.index(f));
                    let kappa: Vec<f64> = (0..d).map(|a| k[a] as f64 * grid.dkappa()[a]).collect();
                    g.eval(&kappa)
                })
                .collect()
        })
        .collect();
    let mut out = PowerSpectrumGrid {
        grid: grid.clone(),
        values,
        source: label,
        analytic: Some(g),
    };
    out.apply_axis_policy();
    out
}

fn power_from_table(
    table: &SpectrumTable,
    grid: &GridSpec,
    label: String,
) -> Result<PowerSpectrumGrid> {
    check_table_grid(&table.n, &table.dkappa, grid)?;
    let expected = table.shape().len();
    if table.values.len() != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("{expected} values"),
            found: format!("{} values", table.values.len()),
        });
    }
    if let Some((index, &value)) = table
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
    {
        return Err(Error::NegativeSpectrum { index, value });
    }
    if table.signed && grid.model.kind == FieldKind::Quadrant {
        return Err(Error::Unsupported(
            "signed spectrum table on a quadrant grid".into(),
        ));
    }
    let shape = grid.orthant();
    let values = (0..grid.n_spectral_patterns())
        .map(|p| {
            (0..shape.len())
                .map(|f| table.get(&grid.signed(p, &shape.index(f))))
                .collect()
        })
        .collect();
    let mut out = PowerSpectrumGrid {
        grid: grid.clone(),
        values,
        source: label,
        analytic: None,
    };
    out.apply_axis_policy();
    Ok(out)
}

impl PowerSpectrumGrid {
    /// Grid from explicit per-pattern orthant arrays; axis policy applied.
    pub fn from_values(grid: &GridSpec, values: Vec<Vec<f64>>) -> Result<Self> {
        let len = grid.orthant().len();
        if values.len() != grid.n_spectral_patterns() || values.iter().any(|v| v.len() != len) {
            return Err(Error::ShapeMismatch {
                expected: format!("{} x {len}", grid.n_spectral_patterns()),
                found: format!("{} x {:?}", values.len(), values.first().map(|v| v.len())),
            });
        }
        for v in &values {
            if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
                return Err(Error::NegativeSpectrum { index, value });
            }
        }
        let mut out = PowerSpectrumGrid {
            grid: grid.clone(),
            values,
            source: "values".into(),
            analytic: None,
        };
        out.apply_axis_policy();
        Ok(out)
    }

    fn apply_axis_policy(&mut self) {
        if self.grid.axis_power == AxisPower::Keep {
            return;
        }
        let shape = self.grid.orthant();
        let d = self.grid.d();
        for v in &mut self.values {
            for (f, x) in v.iter_mut().enumerate() {
                let n = shape.index(f);
                if n[..d].contains(&0) {
                    *x = 0.0;
                }
            }
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn analytic(&self) -> Option<&GaussianPower> {
        self.analytic.as_ref()
    }

    /// Orthant array of spectral pattern `p`.
    pub fn values(&self, p: usize) -> &[f64] {
        &self.values[p]
    }

    pub fn at(&self, p: usize, n: &Idx) -> f64 {
        self.values[p][self.grid.orthant().flat(n)]
    }

    /// Value at a signed wavevector, folded through `S(k) = S(-k)` and, for
    /// quadrant fields, through every sign flip.
    pub fn signed_value(&self, k: &SIdx) -> f64 {
        let d = self.grid.d();
        match self.grid.model.kind {
            FieldKind::Quadrant => self.at(0, &abs_index(d, k)),
            FieldKind::General => {
                let mut k = *k;
                if k[0] < 0 {
                    for v in k.iter_mut().take(d) {
                        *v = -*v;
                    }
                }
                let p = crate::grid::pattern_of(d, &k);
                self.at(p, &abs_index(d, &k))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|&x| x == 0.0))
    }
}

const DENSE_LIMIT: usize = 1 << 24;

#[derive(Clone, Debug)]
enum BStorage {
    Zero,
    Analytic(GaussianBispectrum),
    Dense(Vec<Complex64>),
}

#[derive(Clone, Debug)]
pub struct BispectrumGrid {
    grid: GridSpec,
    storage: BStorage,
    analytic: Option<GaussianBispectrum>,
    source: String,
}

pub fn build_bispectrum_grid(source: &BispectrumSource, grid: &GridSpec) -> Result<BispectrumGrid> {
    build_bispectrum_grid_with_limit(source, grid, DENSE_LIMIT)
}

/// As [`build_bispectrum_grid`] with a custom dense-cache threshold in entries.
pub fn build_bispectrum_grid_with_limit(
    source: &BispectrumSource,
    grid: &GridSpec,
    dense_limit: usize,
) -> Result<BispectrumGrid> {
    match source {
        BispectrumSource::Zero => Ok(BispectrumGrid {
            grid: grid.clone(),
            storage: BStorage::Zero,
            analytic: None,
            source: "zero".into(),
        }),
        BispectrumSource::Preset(name) => {
            let g = preset_bispectrum(name)?;
            if g.weights.len() != grid.d() {
                return Err(Error::PresetDimension {
                    name: name.clone(),
                    expected: g.weights.len(),
                    found: grid.d(),
                });
            }
            Ok(bispectrum_from_analytic(g, grid, name.clone(), dense_limit))
        }
        BispectrumSource::Gaussian(g) => {
            if g.weights.len() != grid.d() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} weights", grid.d()),
                    found: format!("{} weights", g.weights.len()),
                });
            }
            Ok(bispectrum_from_analytic(
                g.clone(),
                grid,
                "gaussian".into(),
                dense_limit,
            ))
        }
        BispectrumSource::File(path) => {
            let table = io::read_bispectrum(path)?;
            bispectrum_from_table(&table, grid, path.display().to_string())
        }
        BispectrumSource::Table(table) => bispectrum_from_table(table, grid, "table".into()),
    }
}

fn bispectrum_from_analytic(
    g: GaussianBispectrum,
    grid: &GridSpec,
    label: String,
    dense_limit: usize,
) -> BispectrumGrid {
    let len = grid.orthant().len();
    let mut out = BispectrumGrid {
        grid: grid.clone(),
        storage: BStorage::Analytic(g.clone()),
        analytic: Some(g),
        source: label,
    };
    if grid.is_quadrant() && len.saturating_mul(len) <= dense_limit {
        let shape = grid.orthant();
        let mut dense = vec![Complex64::default(); len * len];
        for fi in 0..len {
            let i = to_signed(&shape.index(fi));
            for fj in 0..len {
                dense[fi * len + fj] = out.eval(&i, &to_signed(&shape.index(fj)));
            }
        }
        out.storage = BStorage::Dense(dense);
    }
    out
}

fn bispectrum_from_table(
    table: &BispectrumTable,
    grid: &GridSpec,
    label: String,
) -> Result<BispectrumGrid> {
    check_table_grid(&table.n, &table.dkappa, grid)?;
    if !(grid.d() == 1 || (grid.d() == 2 && grid.is_quadrant())) {
        return Err(Error::Unsupported(
            "bispectrum tables are limited to d=1 and quadrant d=2".into(),
        ));
    }
    let len = grid.orthant().len();
    if table.values.len() != len * len {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values", len * len),
            found: format!("{} values", table.values.len()),
        });
    }
    Ok(BispectrumGrid {
        grid: grid.clone(),
        storage: BStorage::Dense(table.values.clone()),
        analytic: None,
        source: label,
    })
}

fn to_signed(n: &Idx) -> SIdx {
    let mut out = [0i64; MAX_DIM];
    for a in 0..MAX_DIM {
        out[a] = n[a] as i64;
    }
    out
}

impl BispectrumGrid {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn analytic(&self) -> Option<&GaussianBispectrum> {
        self.analytic.as_ref()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, BStorage::Dense(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.storage, BStorage::Zero)
    }

    /// `B(i, j)` at signed index vectors.
    pub fn eval(&self, i: &SIdx, j: &SIdx) -> Complex64 {
        let d = self.grid.d();
        if i[..d].contains(&0) || j[..d].contains(&0) {
            return Complex64::default();
        }
        let fold = self.grid.is_quadrant();
        match &self.storage {
            BStorage::Zero => Complex64::default(),
            BStorage::Analytic(g) => {
                let mut k1 = [0.0; MAX_DIM];
                let mut k2 = [0.0; MAX_DIM];
                for a in 0..d {
                    let (ia, ja) = if fold {
                        (i[a].abs(), j[a].abs())
                    } else {
                        (i[a], j[a])
                    };
                    k1[a] = ia as f64 * self.grid.dkappa()[a];
                    k2[a] = ja as f64 * self.grid.dkappa()[a];
                }
                g.eval(&k1[..d], &k2[..d])
            }
            BStorage::Dense(v) => {
                let shape = self.grid.orthant();
                let ai = abs_index(d, i);
                let aj = abs_index(d, j);
                if !shape.contains(&ai) || !shape.contains(&aj) {
                    return Complex64::default();
                }
                v[shape.flat(&ai) * shape.len() + shape.flat(&aj)]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryCheck {
    pub name: &'static str,
    pub max_violation: f64,
    pub checked: usize,
    /// Whether this relation takes part in the pass decision.
    pub decisive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    pub checks: Vec<SymmetryCheck>,
    pub tolerance: f64,
    pub pass: bool,
}

impl SymmetryReport {
    pub fn get(&self, name: &str) -> Option<&SymmetryCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn sample_vectors(grid: &GridSpec, signed: bool, exhaustive: bool) -> Vec<SIdx> {
    let d = grid.d();
    let per_axis: Vec<Vec<i64>> = (0..d)
        .map(|a| {
            let n = grid.n()[a] as i64;
            let mut vals: Vec<i64> = if exhaustive {
                (1..=n).collect()
            } else if d >= 4 || n <= 2 {
                vec![1, n]
            } else {
                vec![1, (n + 1) / 2, n]
            };
            vals.dedup();
            if signed {
                let neg: Vec<i64> = vals.iter().map(|v| -v).collect();
                vals.extend(neg);
            }
            vals
        })
        .collect();
    let mut out = vec![[0i64; MAX_DIM]];
    for (a, vals) in per_axis.iter().enumerate() {
        out = out
            .into_iter()
            .flat_map(|v| {
                vals.iter().map(move |&x| {
                    let mut w = v;
                    w[a] = x;
                    w
                })
            })
            .collect();
    }
    out
}

/// Check the bispectrum symmetry relations on a deterministic sample of pairs.
///
/// Decisive relations: permutation `B(i,j) = B(j,i)`, reversal
/// `B(-i,-j) = B(i,j)` (real and imaginary parts reported separately) and,
/// for quadrant mode, invariance under sign flips of either argument.
/// Conjugate reversal and the shift relation `B(i,j) = B(-i-j, j)` are reported
/// but do not affect `pass`.
pub fn validate_symmetries(b: &BispectrumGrid, mode: FieldKind) -> SymmetryReport {
    let grid = b.grid();
    let d = grid.d();
    let exhaustive = b.is_dense() && grid.orthant().len() <= 256;
    let vecs = sample_vectors(grid, mode == FieldKind::General, exhaustive);
    let neg = |v: &SIdx| {
        let mut w = *v;
        for x in w.iter_mut().take(d) {
            *x = -*x;
        }
        w
    };
    let mut scale = 0.0f64;
    for i in &vecs {
        for j in &vecs {
            scale = scale.max(b.eval(i, j).norm());
        }
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let mut perm = 0.0f64;
    let mut rev_re = 0.0f64;
    let mut rev_im = 0.0f64;
    let mut rev_conj = 0.0f64;
    let mut shift = 0.0f64;
    let mut shift_n = 0;
    let mut flips = 0.0f64;
    let mut flips_n = 0;
    let flip_count = 1usize << d;
    for i in &vecs {
        for j in &vecs {
            let v = b.eval(i, j);
            perm = perm.max((v - b.eval(j, i)).norm());
            let r = b.eval(&neg(i), &neg(j));
            rev_re = rev_re.max((r.re - v.re).abs());
            rev_im = rev_im.max((r.im - v.im).abs());
            rev_conj = rev_conj.max((r - v.conj()).norm());
            let mut s = [0i64; MAX_DIM];
            let in_range = (0..d).all(|a| {
                s[a] = -(i[a] + j[a]);
                s[a].unsigned_abs() as usize <= grid.n()[a]
            });
            if in_range {
                shift = shift.max((b.eval(&s, j) - v).norm());
                shift_n += 1;
            }
            if mode == FieldKind::Quadrant {
                for fi in 0..flip_count {
                    for fj in 0..flip_count {
                        let mut ii = *i;
                        let mut jj = *j;
                        for a in 0..d {
                            if (fi >> a) & 1 == 1 {
                                ii[a] = -ii[a];
                            }
                            if (fj >> a) & 1 == 1 {
                                jj[a] = -jj[a];
                            }
                        }
                        flips = flips.max((b.eval(&ii, &jj) - v).norm());
                        flips_n += 1;
                    }
                }
            }
        }
    }
    let pairs = vecs.len() * vecs.len();
    let mut checks = vec![
        SymmetryCheck {
            name: "permutation",
            max_violation: perm / scale,
            checked: pairs,
            decisive: true,
        },
        SymmetryCheck {
            name: "reversal_real",
            max_violation: rev_re / scale,
            checked: pairs,
            decisive: true,
        },
        SymmetryCheck {
            name: "reversal_imag",
            max_violation: rev_im / scale,
            checked: pairs,
            decisive: true,
        },
        SymmetryCheck {
            name: "reversal_conjugate",
            max_violation: rev_conj / scale,
            checked: pairs,
            decisive: false,
        },
        SymmetryCheck {
            name: "shift",
            max_violation: shift / scale,
            checked: shift_n,
            decisive: false,
        },
    ];
    if mode == FieldKind::Quadrant {
        checks.push(SymmetryCheck {
            name: "quadrant_flips",
            max_violation: flips / scale,
            checked: flips_n,
            decisive: true,
        });
    }
    let tolerance = 1e-12;
    let pass = checks
        .iter()
        .filter(|c| c.decisive)
        .all(|c| c.max_violation <= tolerance);
    SymmetryReport {
        checks,
        tolerance,
        pass,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffMethod {
    /// Full sums over the grid and its `2N` extension.
    Exact,
    /// Strided sums over both grids, used when the pair count is large.
    Subsampled(usize),
    /// No analytic source; energy share of the outermost shell instead.
    BoundaryDecay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutoffReport {
    pub power_fraction: f64,
    pub bispectrum_fraction: f64,
    pub epsilon: f64,
    pub method: CutoffMethod,
    pub pass: bool,
}

const CUTOFF_PAIR_BUDGET: f64 = 4.0e6;

/// Fraction of power and of `|B|` mass inside the cutoff relative to a grid
/// extended to `2N` per axis.
pub fn check_cutoff(s: &PowerSpectrumGrid, b: &BispectrumGrid) -> CutoffReport {
    let grid = s.grid();
    let eps = grid.epsilon;
    let d = grid.d();
    let n = grid.n();
    let dk = grid.dkappa();

    let (power_fraction, mut method) = match s.analytic() {
        Some(g) => {
            let ext: Vec<usize> = n.iter().map(|&v| 2 * v + 1).collect();
            let shape = Shape::new(&ext);
            let mut inside = 0.0;
            let mut total = 0.0;
            for f in 0..shape.len() {
                let idx = shape.index(f);
                let kappa: Vec<f64> = (0..d).map(|a| idx[a] as f64 * dk[a]).collect();
                let v = g.eval(&kappa);
                total += v;
                if (0..d).all(|a| idx[a] <= n[a]) {
                    inside += v;
                }
            }
            (fraction(inside, total), CutoffMethod::Exact)
        }
        None => (boundary_power_fraction(s), CutoffMethod::BoundaryDecay),
    };

    let bispectrum_fraction = match b.analytic() {
        Some(g) => {
            let ext_count: f64 = n
                .iter()
                .map(|&v| (2 * v + 1) as f64)
                .product::<f64>()
                .powi(2);
            let stride = if ext_count <= CUTOFF_PAIR_BUDGET {
                1
            } else {
                (ext_count / CUTOFF_PAIR_BUDGET)
                    .powf(1.0 / (2 * d) as f64)
                    .ceil() as usize
            };
            if stride > 1 && method == CutoffMethod::Exact {
                method = CutoffMethod::Subsampled(stride);
            }
            let ext: Vec<usize> = n.iter().map(|&v| 2 * v / stride + 1).collect();
            let shape = Shape::new(&ext);
            let kap = |f: usize| -> (Vec<f64>, bool) {
                let idx = shape.index(f);
                let inside = (0..d).all(|a| idx[a] * stride <= n[a]);
                (
                    (0..d).map(|a| (idx[a] * stride) as f64 * dk[a]).collect(),
                    inside,
                )
            };
            let pts: Vec<(Vec<f64>, bool)> = (0..shape.len()).map(kap).collect();
            let mut inside = 0.0;
            let mut total = 0.0;
            for (k1, in1) in &pts {
                for (k2, in2) in &pts {
                    let v = g.eval(k1, k2).norm();
                    total += v;
                    if *in1 && *in2 {
                        inside += v;
                    }
                }
            }
            fraction(inside, total)
        }
        None if b.is_zero() => 1.0,
        None => {
            method = CutoffMethod::BoundaryDecay;
            boundary_bispectrum_fraction(b)
        }
    };
    CutoffReport {
        power_fraction,
        bispectrum_fraction,
        epsilon: eps,
        method,
        pass: power_fraction >= 1.0 - eps && bispectrum_fraction >= 1.0 - eps,
    }
}

fn fraction(inside: f64, total: f64) -> f64 {
    if total > 0.0 {
        inside / total
    } else {
        1.0
    }
}

fn boundary_power_fraction(s: &PowerSpectrumGrid) -> f64 {
    let grid = s.grid();
    let shape = grid.orthant();
    let d = grid.d();
    let mut shell = 0.0;
    let mut total = 0.0;
    for p in 0..grid.n_spectral_patterns() {
        for (f, &v) in s.values(p).iter().enumerate() {
            let idx = shape.index(f);
            total += v;
            if (0..d).any(|a| idx[a] == grid.n()[a]) {
                shell += v;
            }
        }
    }
    if total > 0.0 {
        1.0 - shell / total
    } else {
        1.0
    }
}

fn boundary_bispectrum_fraction(b: &BispectrumGrid) -> f64 {
    let grid = b.grid();
    let shape = grid.orthant();
    let d = grid.d();
    let mut shell = 0.0;
    let mut total = 0.0;
    for fi in 0..shape.len() {
        let i = shape.index(fi);
        for fj in 0..shape.len() {
            let j = shape.index(fj);
            let v = b.eval(&to_signed(&i), &to_signed(&j)).norm();
            total += v;
            if (0..d).any(|a| i[a] == grid.n()[a] || j[a] == grid.n()[a]) {
                shell += v;
            }
        }
    }
    if total > 0.0 {
        1.0 - shell / total
    } else {
        1.0
    }
}

/// Two-point correlation on spatial lags `m_k * dx_k`, `m_k in [0, M_k)`.
#[derive(Clone, Debug)]
pub struct CorrelationGrid {
    grid: GridSpec,
    pub r2: Vec<f64>,
}

impl CorrelationGrid {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn at(&self, lag: &Idx) -> f64 {
        self.r2[self.grid.spatial().flat(lag)]
    }
}

/// Number of `(pattern, sign)` deposits that land on the bin of `p o n`.
pub fn alias_multiplicity(grid: &GridSpec, p: usize, n: &Idx) -> usize {
    let d = grid.d();
    let target = grid.wrap(&grid.signed(p, n));
    let mut count = 0;
    for q in 0..grid.n_patterns() {
        let k = grid.signed(q, n);
        for s in [1i64, -1] {
            let mut ks = k;
            for v in ks.iter_mut().take(d) {
                *v *= s;
            }
            if grid.wrap(&ks) == target {
                count += 1;
            }
        }
    }
    count
}

fn pattern_spectrum(s: &PowerSpectrumGrid, p: usize) -> &[f64] {
    match s.grid().model.kind {
        FieldKind::Quadrant => s.values(0),
        FieldKind::General => s.values(p),
    }
}

/// Discrete transform from `S` to `R2`.
///
/// Each wave `2 sqrt(S Delta) cos(k.x + phi)` at `k = p o n` contributes
/// `S Delta` at the bins of `+k` and `-k`; `R2` is the unnormalized inverse
/// DFT of that coefficient array.
pub fn correlation_from_spectrum(s: &PowerSpectrumGrid) -> CorrelationGrid {
    let grid = s.grid().clone();
    let d = grid.d();
    let cell = grid.cell();
    let spatial = grid.spatial();
    let orth = grid.orthant();
    let mut c = vec![Complex64::default(); spatial.len()];
    for p in 0..grid.n_patterns() {
        let vals = pattern_spectrum(s, p);
        for (f, &v) in vals.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let k = grid.signed(p, &orth.index(f));
            let mut kn = k;
            for x in kn.iter_mut().take(d) {
                *x = -*x;
            }
            c[spatial.flat(&grid.wrap(&k))] += v * cell;
            c[spatial.flat(&grid.wrap(&kn))] += v * cell;
        }
    }
    NdFft::new(spatial).all_axes(&mut c, Direction::Inverse);
    CorrelationGrid {
        grid,
        r2: c.iter().map(|z| z.re).collect(),
    }
}

/// Inverse of [`correlation_from_spectrum`]: `S(p, n) = C_{p o n} / (mu Delta)`.
///
/// Exact whenever every deposit sharing a bin carries the same spectrum value,
/// which holds for spectra with `S(k) = S(-k)`.
pub fn spectrum_from_correlation(r: &CorrelationGrid) -> Result<PowerSpectrumGrid> {
    let grid = r.grid().clone();
    let spatial = grid.spatial();
    if r.r2.len() != spatial.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} lags", spatial.len()),
            found: format!("{} lags", r.r2.len()),
        });
    }
    let mut c: Vec<Complex64> = r.r2.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    NdFft::new(spatial.clone()).all_axes(&mut c, Direction::Forward);
    let norm = spatial.len() as f64;
    let orth = grid.orthant();
    let cell = grid.cell();
    let values = (0..grid.n_spectral_patterns())
        .map(|p| {
            (0..orth.len())
                .map(|f| {
                    let n = orth.index(f);
                    let q = spatial.flat(&grid.wrap(&grid.signed(p, &n)));
                    let mu = alias_multiplicity(&grid, p, &n) as f64;
                    (c[q].re / norm / (mu * cell)).max(0.0)
                })
                .collect()
        })
        .collect();
    Ok(PowerSpectrumGrid {
        grid,
        values,
        source: "correlation".into(),
        analytic: None,
    })
}

/// Exact ensemble moments of the synthesized field for `(S, B)`.
pub fn target_moments(
    s: &PowerSpectrumGrid,
    b: &BispectrumGrid,
    mode: PairMode,
) -> Result<TargetMoments> {
    let dec = decompose(s, b, mode)?;
    Ok(exact_moments(&dec, Order::Third))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1_grid(n: usize) -> GridSpec {
        GridSpec::new(&[n, n], &[0.0628, 0.0628]).unwrap()
    }

    #[test]
    fn preset_values() {
        let v = preset_spectrum("ex1_power", &[0.0, 0.0]).unwrap();
        assert!((v.re - 11.283791670955125).abs() < 1e-12);
        let v = preset_spectrum("ex1_power", &[1.0, 1.0]).unwrap();
        assert!((v.re - 20.0 / PI.sqrt() * (-1.0f64).exp()).abs() < 1e-12);
        assert!((v.re - 4.151075).abs() < 1e-6);
        let b = preset_spectrum("ex1_bispectrum", &[0.0; 4]).unwrap();
        assert!((b.re - 18.46197).abs() < 1e-5 && b.re == b.im);
        assert!(matches!(
            preset_spectrum("ex9", &[0.0]),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn axis_planes_are_zeroed() {
        let g = ex1_grid(64);
        let s = build_power_grid(&PowerSource::Preset("ex1_power".into()), &g).unwrap();
        for k in 0..=64 {
            assert_eq!(s.at(0, &[0, k, 0, 0]), 0.0);
            assert_eq!(s.at(1, &[k, 0, 0, 0]), 0.0);
        }
        let expect = 20.0 / PI.sqrt() * (-(0.0628f64 * 0.0628)).exp();
        assert!((s.at(0, &[1, 1, 0, 0]) - expect).abs() < 1e-12);
    }

    #[test]
    fn negative_table_rejected() {
        let g = GridSpec::new(&[3], &[0.5]).unwrap();
        let t = SpectrumTable {
            n: vec![3],
            dkappa: vec![0.5],
            signed: false,
            values: vec![0.0, 1.0, -2.0, 1.0],
        };
        let err = build_power_grid(&PowerSource::Table(t), &g).unwrap_err();
        assert!(matches!(err, Error::NegativeSpectrum { index: 2, .. }));
    }

    #[test]
    fn bispectrum_boundaries_and_folding() {
        let g = ex1_grid(64);
        let b =
            build_bispectrum_grid(&BispectrumSource::Preset("ex1_bispectrum".into()), &g).unwrap();
        assert_eq!(b.eval(&[1, 0, 0, 0], &[1, 1, 0, 0]), Complex64::default());
        let dk = 0.0628f64;
        let want = 58.0 / PI * (-4.0 * dk * dk).exp();
        let v = b.eval(&[1, 1, 0, 0], &[1, 1, 0, 0]);
        assert!((v.re - want).abs() < 1e-12 && (v.im - want).abs() < 1e-12);

        let q = g.with_model(crate::grid::FieldModel::quadrant()).unwrap();
        let bq =
            build_bispectrum_grid(&BispectrumSource::Preset("ex1_bispectrum".into()), &q).unwrap();
        assert_eq!(
            bq.eval(&[-1, 1, 0, 0], &[1, 1, 0, 0]),
            bq.eval(&[1, 1, 0, 0], &[1, 1, 0, 0])
        );
    }

    #[test]
    fn cutoff_examples() {
        let eval = |n: usize| {
            let g = ex1_grid(n);
            let s = build_power_grid(&PowerSource::Preset("ex1_power".into()), &g).unwrap();
            let b = build_bispectrum_grid(&BispectrumSource::Preset("ex1_bispectrum".into()), &g)
                .unwrap();
            check_cutoff(&s, &b)
        };
        let full = eval(64);
        assert!(full.pass, "{full:?}");
        let short = eval(8);
        assert!(!short.pass, "{short:?}");
    }
}
