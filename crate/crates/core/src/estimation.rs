//! Ensemble statistics, cumulants and spectral estimators.
//!
//! Fourier coefficients use `X_q = sum_x A(x) exp(-i q.x)`. A wave
//! `2 sqrt(S Delta) cos(k.x + phi)` contributes `M sqrt(S Delta) exp(+-i phi)`
//! at the bins of `+-k`, where `M = prod M_k`. Hence
//!
//! ```text
//! S_hat(p, n) = E|X_{p o n}|^2 / (M^2 Delta mu)
//! B_hat(i, j) = E[conj X_i conj X_j X_{i+j}] / (M^3 Delta^2)
//! ```
//!
//! with `mu` the number of deposits sharing the bin. The bispectrum estimator
//! matches the synthesis phase `Phi_i + Phi_j + beta`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fftn::{Direction, NdFft};
use crate::grid::{GridSpec, SIdx, MAX_DIM};
use crate::moments::TargetMoments;
use crate::simulator::FieldSample;
use crate::spectral_model::alias_multiplicity;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cumulants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn cumulants_from_moments(m1: f64, m2: f64, m3: f64, m4: f64) -> Cumulants {
    Cumulants {
        c1: m1,
        c2: m2 - m1 * m1,
        c3: m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3),
        c4: m4 - 4.0 * m1 * m3 - 3.0 * m2 * m2 + 12.0 * m1 * m1 * m2 - 6.0 * m1.powi(4),
    }
}

/// Pooled power sums plus per-sample statistics for standard errors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentAccumulator {
    points: u64,
    samples: u64,
    sums: [f64; 4],
    // Per-sample means of x, x^2, x^3 and their cross products.
    s_first: [f64; 3],
    s_second: [[f64; 3]; 3],
    shape: Option<(Vec<usize>, Vec<f64>)>,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: &FieldSample) -> Result<()> {
        match &self.shape {
            Some((m, dx)) if *m != sample.m || *dx != sample.dx => return Err(Error::MixedGrids),
            None => self.shape = Some((sample.m.clone(), sample.dx.clone())),
            _ => {}
        }
        self.push_values(&sample.values);
        Ok(())
    }

    pub fn push_values(&mut self, values: &[f64]) {
        let mut s = [0.0f64; 4];
        for &x in values {
            let x2 = x * x;
            s[0] += x;
            s[1] += x2;
            s[2] += x2 * x;
            s[3] += x2 * x2;
        }
        for k in 0..4 {
            self.sums[k] += s[k];
        }
        let n = values.len() as f64;
        if n > 0.0 {
            let means = [s[0] / n, s[1] / n, s[2] / n];
            for a in 0..3 {
                self.s_first[a] += means[a];
                for b in 0..3 {
                    self.s_second[a][b] += means[a] * means[b];
                }
            }
        }
        self.points += values.len() as u64;
        self.samples += 1;
    }

    /// Combine with another accumulator; addition order is the caller's.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        match (&self.shape, &other.shape) {
            (Some(a), Some(b)) if a != b => return Err(Error::MixedGrids),
            (None, Some(b)) => self.shape = Some(b.clone()),
            _ => {}
        }
        self.points += other.points;
        self.samples += other.samples;
        for k in 0..4 {
            self.sums[k] += other.sums[k];
        }
        for a in 0..3 {
            self.s_first[a] += other.s_first[a];
            for b in 0..3 {
                self.s_second[a][b] += other.s_second[a][b];
            }
        }
        Ok(())
    }

    pub fn report(&self, targets: Option<TargetMoments>) -> MomentReport {
        if self.points == 0 {
            return MomentReport::empty(targets);
        }
        let n = self.points as f64;
        let m: Vec<f64> = self.sums.iter().map(|s| s / n).collect();
        let c = cumulants_from_moments(m[0], m[1], m[2], m[3]);
        let variance = c.c2.max(0.0);
        let degenerate = variance <= 0.0;
        let skewness = if degenerate {
            0.0
        } else {
            c.c3 / variance.powf(1.5)
        };
        let kurtosis = if degenerate {
            0.0
        } else {
            c.c4 / (variance * variance)
        };

        let k = self.samples as f64;
        let mut se = StandardErrors::default();
        if self.samples >= 2 {
            let mean = |a: usize| self.s_first[a] / k;
            let cov =
                |a: usize, b: usize| (self.s_second[a][b] / k - mean(a) * mean(b)) * k / (k - 1.0);
            se.mean = (cov(0, 0).max(0.0) / k).sqrt();
            // Delta method on (m1, m2, m3) for c2 and c3 / c2^1.5.
            let g2 = [-2.0 * m[0], 1.0, 0.0];
            let quad = |g: &[f64; 3]| -> f64 {
                let mut v = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        v += g[a] * g[b] * cov(a, b);
                    }
                }
                v.max(0.0) / k
            };
            se.variance = quad(&g2).sqrt();
            if !degenerate {
                let s15 = variance.powf(1.5);
                let dc3 = [-3.0 * m[1] + 6.0 * m[0] * m[0], -3.0 * m[0], 1.0];
                let g3: [f64; 3] =
                    std::array::from_fn(|a| dc3[a] / s15 - 1.5 * c.c3 / (s15 * variance) * g2[a]);
                se.skewness = quad(&g3).sqrt();
            }
            se.available = true;
        }
        MomentReport {
            samples: self.samples,
            points: self.points,
            mean: m[0],
            variance,
            skewness,
            kurtosis,
            cumulants: c,
            degenerate,
            standard_errors: se,
            targets,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StandardErrors {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// False with fewer than two samples.
    pub available: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub samples: u64,
    pub points: u64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Excess kurtosis `c4 / c2^2`.
    pub kurtosis: f64,
    pub cumulants: Cumulants,
    pub degenerate: bool,
    pub standard_errors: StandardErrors,
    pub targets: Option<TargetMoments>,
}

impl MomentReport {
    fn empty(targets: Option<TargetMoments>) -> Self {
        MomentReport {
            samples: 0,
            points: 0,
            mean: 0.0,
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            cumulants: Cumulants {
                c1: 0.0,
                c2: 0.0,
                c3: 0.0,
                c4: 0.0,
            },
            degenerate: true,
            standard_errors: StandardErrors::default(),
            targets,
        }
    }

    pub fn variance_delta(&self) -> Option<f64> {
        self.targets.map(|t| self.variance - t.variance)
    }

    pub fn skewness_delta(&self) -> Option<f64> {
        self.targets.map(|t| self.skewness - t.skewness)
    }
}

pub fn ensemble_moments(
    samples: &[FieldSample],
    targets: Option<TargetMoments>,
) -> Result<MomentReport> {
    let mut acc = MomentAccumulator::new();
    for s in samples {
        acc.push(s)?;
    }
    Ok(acc.report(targets))
}

fn check_grid(sample: &FieldSample, grid: &GridSpec) -> Result<()> {
    if sample.m != grid.m() {
        return Err(Error::MixedGrids);
    }
    Ok(())
}

fn forward(fft: &mut NdFft, sample: &FieldSample) -> Vec<Complex64> {
    let mut x: Vec<Complex64> = sample
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft.all_axes(&mut x, Direction::Forward);
    x
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumEstimate {
    /// Per spectral pattern, over the orthant.
    pub values: Vec<Vec<f64>>,
    pub segments: usize,
}

/// Streaming periodogram average.
pub struct SpectrumEstimator {
    grid: GridSpec,
    fft: NdFft,
    power: Vec<f64>,
    segments: usize,
}

impl SpectrumEstimator {
    pub fn new(grid: &GridSpec) -> Self {
        SpectrumEstimator {
            grid: grid.clone(),
            fft: NdFft::new(grid.spatial()),
            power: vec![0.0; grid.spatial().len()],
            segments: 0,
        }
    }

    pub fn push(&mut self, sample: &FieldSample) -> Result<()> {
        check_grid(sample, &self.grid)?;
        let x = forward(&mut self.fft, sample);
        for (p, z) in self.power.iter_mut().zip(&x) {
            *p += z.norm_sqr();
        }
        self.segments += 1;
        Ok(())
    }

    pub fn finish(&self) -> SpectrumEstimate {
        let grid = &self.grid;
        let spatial = grid.spatial();
        let orth = grid.orthant();
        let m2 = (spatial.len() as f64).powi(2);
        let k = self.segments.max(1) as f64;
        let values = (0..grid.n_spectral_patterns())
            .map(|sp| {
                (0..orth.len())
                    .map(|f| {
                        let n = orth.index(f);
                        // Quadrant fields average over every sign pattern.
                        let pats: Vec<usize> = if grid.is_quadrant() {
                            (0..grid.n_patterns()).collect()
                        } else {
                            vec![sp]
                        };
                        let mut acc = 0.0;
                        for &p in &pats {
                            let q = spatial.flat(&grid.wrap(&grid.signed(p, &n)));
                            let mu = alias_multiplicity(grid, p, &n) as f64;
                            acc += self.power[q] / (k * m2 * grid.cell() * mu);
                        }
                        acc / pats.len() as f64
                    })
                    .collect()
            })
            .collect();
        SpectrumEstimate {
            values,
            segments: self.segments,
        }
    }
}

pub fn estimate_power_spectrum(
    samples: &[FieldSample],
    grid: &GridSpec,
) -> Result<SpectrumEstimate> {
    let mut est = SpectrumEstimator::new(grid);
    for s in samples {
        est.push(s)?;
    }
    Ok(est.finish())
}

pub const SLICE_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct BispectrumEstimate {
    pub pairs: Vec<(SIdx, SIdx)>,
    pub values: Vec<Complex64>,
    /// Standard errors of the real and imaginary parts.
    pub std_err: Vec<(f64, f64)>,
    /// `E|X_i X_j|^2` and `E|X_{i+j}|^2`, unscaled.
    pub pair_power: Vec<f64>,
    pub sum_power: Vec<f64>,
    /// `E[conj X_i conj X_j X_{i+j}]`, unscaled.
    pub raw: Vec<Complex64>,
    pub count: usize,
}

/// Streaming bispectrum accumulation over a fixed slice of index pairs.
pub struct BispectrumEstimator {
    grid: GridSpec,
    fft: NdFft,
    pairs: Vec<(SIdx, SIdx)>,
    bins: Vec<(usize, usize, usize)>,
    sum: Vec<Complex64>,
    sum_sq: Vec<(f64, f64)>,
    pair_power: Vec<f64>,
    sum_power: Vec<f64>,
    count: usize,
}

impl BispectrumEstimator {
    pub fn new(grid: &GridSpec, slice: &[(SIdx, SIdx)]) -> Result<Self> {
        if grid.d() > 2 {
            return Err(Error::Unsupported(
                "bispectrum estimation is limited to d <= 2".into(),
            ));
        }
        if slice.len() > SLICE_LIMIT {
            return Err(Error::SliceTooLarge {
                len: slice.len(),
                limit: SLICE_LIMIT,
            });
        }
        let spatial = grid.spatial();
        let bins = slice
            .iter()
            .map(|(i, j)| {
                let mut n = [0i64; MAX_DIM];
                for k in 0..MAX_DIM {
                    n[k] = i[k] + j[k];
                }
                (
                    spatial.flat(&grid.wrap(i)),
                    spatial.flat(&grid.wrap(j)),
                    spatial.flat(&grid.wrap(&n)),
                )
            })
            .collect();
        let l = slice.len();
        Ok(BispectrumEstimator {
            grid: grid.clone(),
            fft: NdFft::new(spatial),
            pairs: slice.to_vec(),
            bins,
            sum: vec![Complex64::default(); l],
            sum_sq: vec![(0.0, 0.0); l],
            pair_power: vec![0.0; l],
            sum_power: vec![0.0; l],
            count: 0,
        })
    }

    pub fn push(&mut self, sample: &FieldSample) -> Result<()> {
        check_grid(sample, &self.grid)?;
        let x = forward(&mut self.fft, sample);
        for (k, &(bi, bj, bn)) in self.bins.iter().enumerate() {
            let xij = x[bi] * x[bj];
            let t = xij.conj() * x[bn];
            self.sum[k] += t;
            self.sum_sq[k].0 += t.re * t.re;
            self.sum_sq[k].1 += t.im * t.im;
            self.pair_power[k] += xij.norm_sqr();
            self.sum_power[k] += x[bn].norm_sqr();
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(&self) -> BispectrumEstimate {
        let m = self.grid.spatial().len() as f64;
        let scale = m.powi(3) * self.grid.cell().powi(2);
        let k = self.count.max(1) as f64;
        let raw: Vec<Complex64> = self.sum.iter().map(|s| s / k).collect();
        let std_err = if self.count >= 2 {
            raw.iter()
                .zip(&self.sum_sq)
                .map(|(mean, sq)| {
                    let vr = (sq.0 / k - mean.re * mean.re).max(0.0) * k / (k - 1.0);
                    let vi = (sq.1 / k - mean.im * mean.im).max(0.0) * k / (k - 1.0);
                    ((vr / k).sqrt() / scale, (vi / k).sqrt() / scale)
                })
                .collect()
        } else {
            vec![(f64::INFINITY, f64::INFINITY); raw.len()]
        };
        BispectrumEstimate {
            pairs: self.pairs.clone(),
            values: raw.iter().map(|r| r / scale).collect(),
            std_err,
            pair_power: self.pair_power.iter().map(|v| v / k).collect(),
            sum_power: self.sum_power.iter().map(|v| v / k).collect(),
            raw,
            count: self.count,
        }
    }
}

pub fn estimate_bispectrum(
    samples: &[FieldSample],
    grid: &GridSpec,
    slice: &[(SIdx, SIdx)],
) -> Result<BispectrumEstimate> {
    let mut est = BispectrumEstimator::new(grid, slice)?;
    for s in samples {
        est.push(s)?;
    }
    Ok(est.finish())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bicoherence {
    /// Clipped to `[0, 1]`; `None` when a denominator is zero.
    pub value: Option<f64>,
    /// Unclipped ratio, for recording out-of-range estimates.
    pub raw: Option<f64>,
}

/// `b^2 = |E[conj X_i conj X_j X_n]|^2 / (E|X_i X_j|^2 E|X_n|^2)` for pair `k` of the slice.
pub fn bicoherence(est: &BispectrumEstimate, k: usize) -> Bicoherence {
    let den = est.pair_power[k] * est.sum_power[k];
    if !(den > 0.0) {
        return Bicoherence {
            value: None,
            raw: None,
        };
    }
    let r = est.raw[k].norm_sqr() / den;
    Bicoherence {
        value: Some(r.clamp(0.0, 1.0)),
        raw: Some(r),
    }
}
