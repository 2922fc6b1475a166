//! Split of the power spectrum into a pure part and pair-interaction parts.
//!
//! For every orthant index `n` and every pair `(i, j)` with `i + j = n`:
//!
//! ```text
//! b_p^2(i, j) = |B(i, j)|^2 Delta / (S_p(i) S_p(j) S(n))
//! S_p(n)      = S(n) (1 - sum b_p^2)
//! ```
//!
//! with `Delta` the product of the wavenumber increments. Since `B` vanishes on
//! axis planes, every contributing pair has `1 <= i_k, j_k < n_k`, so row-major
//! order over the orthant visits `i` and `j` before `n`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{FieldKind, GridSpec, Idx, SIdx, MAX_DIM};
use crate::spectral_model::{BispectrumGrid, PowerSpectrumGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PairMode {
    /// Every unordered pair once, represented by `i >= j` lexicographically.
    #[default]
    Lexicographic,
    /// Only pairs with `i_k >= j_k` on every axis.
    Literal,
}

impl PairMode {
    pub fn name(self) -> &'static str {
        match self {
            PairMode::Lexicographic => "lexicographic",
            PairMode::Literal => "literal",
        }
    }
}

fn lex_ge(a: &[usize], b: &[usize]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x > y;
        }
    }
    true
}

/// All pairs `(i, j)` with `i + j = n`, signs following `n` per axis.
pub fn enumerate_pairs(
    n: &[i64],
    nmax: &[usize],
    mode: PairMode,
) -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
    let d = n.len();
    if d == 0 || d > MAX_DIM || nmax.len() != d || n[0] < 0 {
        return Err(Error::IndexOutOfRange(n.to_vec()));
    }
    if (0..d).any(|k| n[k].unsigned_abs() as usize > nmax[k]) {
        return Err(Error::IndexOutOfRange(n.to_vec()));
    }
    let mag: Vec<usize> = n.iter().map(|v| v.unsigned_abs() as usize).collect();
    let sign: Vec<i64> = n.iter().map(|&v| if v < 0 { -1 } else { 1 }).collect();
    let mut out = Vec::new();
    let mut j = vec![0usize; d];
    loop {
        let i: Vec<usize> = (0..d).map(|k| mag[k] - j[k]).collect();
        let keep = match mode {
            PairMode::Lexicographic => lex_ge(&i, &j),
            PairMode::Literal => (0..d).all(|k| i[k] >= j[k]),
        };
        if keep {
            let si = (0..d).map(|k| sign[k] * i[k] as i64).collect();
            let sj = (0..d).map(|k| sign[k] * j[k] as i64).collect();
            out.push((si, sj));
        }
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if j[k] < mag[k] {
                j[k] += 1;
                break;
            }
            j[k] = 0;
        }
    }
}

/// `atan2(Im B, Re B)` in `(-pi, pi]`; 0 for `B = 0`.
pub fn biphase(b: Complex64) -> f64 {
    if b.re == 0.0 && b.im == 0.0 {
        return 0.0;
    }
    let a = b.im.atan2(b.re);
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialBicoherence {
    pub value: f64,
    /// `B != 0` but a denominator spectrum is zero.
    pub zero_denominator: bool,
}

pub fn partial_bicoherence_sq(
    b: Complex64,
    sp_i: f64,
    sp_j: f64,
    s_n: f64,
    cell: f64,
) -> PartialBicoherence {
    let num = b.norm_sqr();
    if num == 0.0 {
        return PartialBicoherence {
            value: 0.0,
            zero_denominator: false,
        };
    }
    let den = sp_i * sp_j * s_n;
    if den == 0.0 {
        return PartialBicoherence {
            value: 0.0,
            zero_denominator: true,
        };
    }
    PartialBicoherence {
        value: num * cell / den,
        zero_denominator: false,
    }
}

/// Coefficients of one spectral pattern in compressed-row form keyed by `n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoeffTable {
    offsets: Vec<usize>,
    i: Vec<u32>,
    j: Vec<u32>,
    b: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient {
    pub i: usize,
    pub j: usize,
    pub b: f64,
    pub beta: f64,
}

impl CoeffTable {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn count_at(&self, n: usize) -> usize {
        self.offsets[n + 1] - self.offsets[n]
    }

    pub fn at(&self, n: usize) -> impl Iterator<Item = Coefficient> + '_ {
        (self.offsets[n]..self.offsets[n + 1]).map(move |c| Coefficient {
            i: self.i[c] as usize,
            j: self.j[c] as usize,
            b: self.b[c],
            beta: self.beta[c],
        })
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    grid: GridSpec,
    mode: PairMode,
    s: Vec<Vec<f64>>,
    s_p: Vec<Vec<f64>>,
    sum_b2: Vec<Vec<f64>>,
    coeffs: Vec<CoeffTable>,
    zero_denominators: usize,
}

impl Decomposition {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mode(&self) -> PairMode {
        self.mode
    }

    /// Input spectrum of spectral pattern `p` over the orthant.
    pub fn s(&self, p: usize) -> &[f64] {
        &self.s[p]
    }

    pub fn s_p(&self, p: usize) -> &[f64] {
        &self.s_p[p]
    }

    pub fn sum_b2(&self, p: usize) -> &[f64] {
        &self.sum_b2[p]
    }

    pub fn coeffs(&self, p: usize) -> &CoeffTable {
        &self.coeffs[p]
    }

    pub fn n_coeffs(&self) -> usize {
        self.coeffs.iter().map(|c| c.len()).sum()
    }

    pub fn zero_denominators(&self) -> usize {
        self.zero_denominators
    }

    pub fn has_interactions(&self) -> bool {
        self.n_coeffs() > 0
    }

    /// Largest `|S_p + S sum b_p^2 - S|` relative to `max S`.
    pub fn reconstruction_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for p in 0..self.s.len() {
            for f in 0..self.s[p].len() {
                let s = self.s[p][f];
                scale = scale.max(s);
                let rebuilt = self.s_p[p][f] + s * self.sum_b2[p][f].min(1.0);
                worst = worst.max((rebuilt - s).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Bytes of a stable serialization, suitable for checksums.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for p in 0..self.s.len() {
            for v in &self.s_p[p] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            let c = &self.coeffs[p];
            for o in &c.offsets {
                out.extend_from_slice(&(*o as u64).to_le_bytes());
            }
            for k in 0..c.len() {
                out.extend_from_slice(&c.i[k].to_le_bytes());
                out.extend_from_slice(&c.j[k].to_le_bytes());
                out.extend_from_slice(&c.b[k].to_le_bytes());
                out.extend_from_slice(&c.beta[k].to_le_bytes());
            }
        }
        out
    }
}

const NEGATIVE_TOLERANCE: f64 = 1e-9;

pub fn decompose(
    s: &PowerSpectrumGrid,
    b: &BispectrumGrid,
    mode: PairMode,
) -> Result<Decomposition> {
    let grid = s.grid().clone();
    if !grid.same_discretization(b.grid()) || grid.model != b.grid().model {
        return Err(Error::MixedGrids);
    }
    let d = grid.d();
    let shape = grid.orthant();
    let cell = grid.cell();
    let mut out = Decomposition {
        grid: grid.clone(),
        mode,
        s: Vec::new(),
        s_p: Vec::new(),
        sum_b2: Vec::new(),
        coeffs: Vec::new(),
        zero_denominators: 0,
    };
    for p in 0..grid.n_spectral_patterns() {
        let sv = s.values(p).to_vec();
        let mut sp = vec![0.0; shape.len()];
        let mut sums = vec![0.0; shape.len()];
        let mut table = CoeffTable {
            offsets: Vec::with_capacity(shape.len() + 1),
            ..Default::default()
        };
        table.offsets.push(0);
        let signs = match grid.model.kind {
            FieldKind::General => grid.pattern_signs(p),
            FieldKind::Quadrant => grid.pattern_signs(0),
        };
        for f in 0..shape.len() {
            let n = shape.index(f);
            let s_n = sv[f];
            let mut total = 0.0;
            if s_n > 0.0 && (0..d).all(|k| n[k] >= 2) {
                let mut j: Idx = [1; MAX_DIM];
                for a in d..MAX_DIM {
                    j[a] = 0;
                }
                loop {
                    let mut i: Idx = [0; MAX_DIM];
                    for k in 0..d {
                        i[k] = n[k] - j[k];
                    }
                    let keep = match mode {
                        PairMode::Lexicographic => lex_ge(&i[..d], &j[..d]),
                        PairMode::Literal => (0..d).all(|k| i[k] >= j[k]),
                    };
                    if keep {
                        let mut si: SIdx = [0; MAX_DIM];
                        let mut sj: SIdx = [0; MAX_DIM];
                        for k in 0..d {
                            si[k] = signs[k] * i[k] as i64;
                            sj[k] = signs[k] * j[k] as i64;
                        }
                        let bv = b.eval(&si, &sj);
                        let fi = shape.flat(&i);
                        let fj = shape.flat(&j);
                        let pb = partial_bicoherence_sq(bv, sp[fi], sp[fj], s_n, cell);
                        if pb.zero_denominator {
                            out.zero_denominators += 1;
                        }
                        if pb.value > 0.0 {
                            total += pb.value;
                            table.i.push(fi as u32);
                            table.j.push(fj as u32);
                            table.b.push(pb.value.sqrt());
                            table.beta.push(biphase(bv));
                        }
                    }
                    let mut k = d;
                    let done = loop {
                        if k == 0 {
                            break true;
                        }
                        k -= 1;
                        if j[k] + 1 < n[k] {
                            j[k] += 1;
                            break false;
                        }
                        j[k] = 1;
                    };
                    if done {
                        break;
                    }
                }
            }
            let rest = 1.0 - total;
            if rest < -NEGATIVE_TOLERANCE {
                let lead: Vec<i64> = (0..d).map(|k| signs[k] * n[k] as i64).collect();
                return Err(Error::NegativePurePower {
                    n: lead,
                    deficit: rest,
                });
            }
            sums[f] = total;
            sp[f] = s_n * rest.max(0.0);
            table.offsets.push(table.b.len());
        }
        out.s.push(sv);
        out.s_p.push(sp);
        out.sum_b2.push(sums);
        out.coeffs.push(table);
    }
    Ok(out)
}
