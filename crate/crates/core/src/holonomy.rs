//! Monte Carlo estimation of the depth-`N` holonomy operator
//! `H_T^N f(x) = E f(X_T^x)` for loop-driven flows, loop moment matrices,
//! the second-order operator `Delta_N`, small-time slope fits and the
//! step-two closed form.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::exec::ParallelMap;
use crate::freelie::{FreeLieAlgebra, Word};
use crate::loops::{grouped_mean_stderr, map_loops, LoopSample, SamplerConfig, SamplerKind};
use crate::observable::Observable;
use crate::scalar::{q, Q};
use crate::sde::{integrate_flow_with, FlowOptions, VectorFieldSpec};
use crate::stats::MeanStderr;
use crate::tensoralg::log_signature;

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyConfig {
    pub step: usize,
    pub horizon: f64,
    /// Number of flows `M`; with antithetic pairs this is twice the loops drawn.
    pub samples: usize,
    pub sampler: SamplerKind,
    pub loops: SamplerConfig,
    pub substeps: usize,
    /// Pair each loop with its negative, which is again a loop.
    pub antithetic: bool,
}

impl HolonomyConfig {
    pub fn new(step: usize, horizon: f64, samples: usize, loops: SamplerConfig) -> Self {
        let sampler = if step == 1 { SamplerKind::Bridge } else { SamplerKind::Mcmc };
        HolonomyConfig { step, horizon, samples, sampler, loops, substeps: 1, antithetic: true }
    }

    fn loops_needed(&self) -> usize {
        if self.antithetic {
            self.samples.div_ceil(2)
        } else {
            self.samples
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub horizon: f64,
    pub step: usize,
    pub acceptance_rate: f64,
    pub max_residual: f64,
}

/// `(H_T^N f)(x)` for one observable.
pub fn estimate_holonomy<P: ParallelMap + ?Sized>(
    vf: &VectorFieldSpec,
    f: &Observable,
    x: &[f64],
    cfg: &HolonomyConfig,
    exec: &P,
) -> Result<HolonomyEstimate> {
    Ok(estimate_holonomy_many(vf, core::slice::from_ref(f), x, cfg, exec)?.remove(0))
}

/// Several observables evaluated on the same flows.
pub fn estimate_holonomy_many<P: ParallelMap + ?Sized>(
    vf: &VectorFieldSpec,
    fs: &[Observable],
    x: &[f64],
    cfg: &HolonomyConfig,
    exec: &P,
) -> Result<Vec<HolonomyEstimate>> {
    if cfg.samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    if x.len() != vf.state_dim() || fs.iter().any(|f| f.nvars() != vf.state_dim()) {
        return Err(Error::DimensionMismatch(format!("observables and start point must live on R^{}", vf.state_dim())));
    }
    let fields = vf.compile();
    let obs: Vec<_> = fs.iter().map(Observable::compile).collect();
    let opts = FlowOptions::new(cfg.substeps);
    let run = |sample: &LoopSample| -> Result<(Vec<f64>, f64)> {
        let end = integrate_flow_with(&fields, x, &sample.path, &opts)?.terminal;
        let mut vals: Vec<f64> = obs.iter().map(|o| o.eval(&end)).collect();
        if cfg.antithetic {
            let end = integrate_flow_with(&fields, x, &sample.path.scaled(-1.0), &opts)?.terminal;
            for (v, o) in vals.iter_mut().zip(&obs) {
                *v = 0.5 * (*v + o.eval(&end));
            }
        }
        Ok((vals, sample.residual))
    };
    let d = vf.num_fields();
    let out = map_loops(cfg.sampler, d, cfg.step, cfg.horizon, &cfg.loops, cfg.loops_needed(), exec, run)?;
    let max_residual = out.values.iter().fold(0.0f64, |a, v| a.max(v.1));
    let flows = if cfg.antithetic { 2 * out.values.len() } else { out.values.len() };
    Ok((0..fs.len())
        .map(|k| {
            let r = out.mean_stderr(|v| v.0[k]);
            HolonomyEstimate {
                value: r.mean,
                stderr: r.stderr,
                samples: flows,
                horizon: cfg.horizon,
                step: cfg.step,
                acceptance_rate: out.acceptance_rate,
                max_residual,
            }
        })
        .collect())
}

/// Second moments `E[L_I L_J]` of the level-`N+1` Lyndon coordinates of the
/// log-signature of unit-time loops.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub dim: usize,
    pub step: usize,
    pub words: Vec<Word>,
    /// Row-major `k x k`.
    pub entries: Vec<f64>,
    pub stderr: Vec<f64>,
    pub first_moments: Vec<MeanStderr>,
    pub samples: usize,
}

impl MomentMatrix {
    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn entry_stderr(&self, i: usize, j: usize) -> f64 {
        self.stderr[i * self.size() + j]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let k = self.size();
        let m = DMatrix::from_row_slice(k, k, &self.entries);
        SymmetricEigen::new(m).eigenvalues.iter().fold(f64::INFINITY, |a, &e| a.min(e))
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// Smallest eigenvalue at least `-k` times the largest entry error.
    pub fn is_psd_within(&self, k: f64) -> bool {
        self.min_eigenvalue() >= -k * self.max_stderr()
    }
}

pub fn loop_moment_matrix<P: ParallelMap + ?Sized>(
    d: usize,
    step: usize,
    samples: usize,
    sampler: SamplerKind,
    cfg: &SamplerConfig,
    exec: &P,
) -> Result<MomentMatrix> {
    if samples < 100 {
        return Err(Error::InvalidArgument("moment matrix needs at least 100 samples".into()));
    }
    if step == 0 {
        return Err(Error::InvalidArgument("step N must be at least 1".into()));
    }
    let alg = FreeLieAlgebra::new(d, step + 1)?;
    let range = alg.level_range(step + 1);
    let words: Vec<Word> = alg.basis()[range.clone()].iter().map(|e| e.word.clone()).collect();
    let out = map_loops(sampler, d, step, 1.0, cfg, samples, exec, |s| {
        Ok(log_signature(&alg, &s.path)?.coeffs()[range.clone()].to_vec())
    })?;
    let k = words.len();
    let mut entries = vec![0.0; k * k];
    let mut stderr = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let r = out.mean_stderr(|v| v[i] * v[j]);
            for (a, b) in [(i, j), (j, i)] {
                entries[a * k + b] = r.mean;
                stderr[a * k + b] = r.stderr;
            }
        }
    }
    let first_moments = (0..k)
        .map(|i| {
            let xs: Vec<f64> = out.values.iter().map(|v| v[i]).collect();
            grouped_mean_stderr(&xs, &out.group_sizes)
        })
        .collect();
    Ok(MomentMatrix { dim: d, step, words, entries, stderr, first_moments, samples })
}

#[derive(Debug, Clone, Copy)]
pub enum DeltaCoefficients<'a> {
    /// `1/2` identity for `N = 0`; `1/12` identity on the words `ij`, `i < j`, for `N = 1`.
    Exact,
    Moments(&'a MomentMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaValue {
    pub value: f64,
    pub stderr: f64,
}

/// `(Delta_N f)(x) = 1/2 sum_{I,J} c_IJ (V_I V_J f)(x)` over Lyndon words of
/// length `N + 1`, with `V_I` the image of the Lyndon bracketing.
pub fn delta_apply(
    vf: &VectorFieldSpec,
    f: &Observable,
    x: &[f64],
    step: usize,
    coeffs: DeltaCoefficients<'_>,
) -> Result<DeltaValue> {
    if x.len() != vf.state_dim() || f.nvars() != vf.state_dim() {
        return Err(Error::DimensionMismatch(format!("observable and point must live on R^{}", vf.state_dim())));
    }
    let alg = FreeLieAlgebra::new(vf.num_fields(), step + 1)?;
    let range = alg.level_range(step + 1);
    let fields = vf.lyndon_fields(&alg)?[range].to_vec();
    let k = fields.len();
    let vf_f: Vec<Observable> = fields.iter().map(|v| f.apply_field(v)).collect::<Result<_>>()?;
    let second = |i: usize, j: usize| -> Result<f64> { Ok(vf_f[j].apply_field(&fields[i])?.eval(x)) };
    match coeffs {
        DeltaCoefficients::Exact => {
            let c: Q = match step {
                0 => q(1, 1),
                1 => q(1, 12),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "no closed-form coefficients for N = {step}; use a moment matrix"
                    )))
                }
            };
            let mut total = 0.0;
            for i in 0..k {
                total += second(i, i)?;
            }
            Ok(DeltaValue { value: 0.5 * crate::scalar::q_to_f64(&c) * total, stderr: 0.0 })
        }
        DeltaCoefficients::Moments(mm) => {
            if mm.dim != vf.num_fields() || mm.step != step {
                return Err(Error::DimensionMismatch(format!(
                    "moment matrix for d = {}, N = {} used with d = {}, N = {step}",
                    mm.dim,
                    mm.step,
                    vf.num_fields()
                )));
            }
            let (mut value, mut var) = (0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let a = 0.5 * second(i, j)?;
                    value += mm.entry(i, j) * a;
                    var += (mm.entry_stderr(i, j) * a).powi(2);
                }
            }
            Ok(DeltaValue { value, stderr: libm::sqrt(var) })
        }
    }
}

/// Differences below this (relative to `1 + |f(x)|`) are rounding noise.
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// `t_max * ratio^{-k}`, `k = count-1, ..., 0`, in increasing order.
pub fn geometric_grid(t_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).rev().map(|k| t_max / libm::pow(ratio, k as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopePoint {
    pub horizon: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `H_T f(x) - f(x)`.
    pub difference: f64,
    pub samples: usize,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub points: Vec<SlopePoint>,
    pub exponent: f64,
    pub exponent_stderr: f64,
    /// Signed constant `C` in `H_T f - f ~ C T^p`.
    pub constant: f64,
    pub constant_stderr: f64,
    /// Covariance of `(log |C|, p)`.
    pub covariance: [[f64; 2]; 2],
    pub inconclusive: bool,
}

/// Weighted least squares of `log |H_T f - f|` on `log T`. Points whose
/// difference is within two standard errors of zero, or below `floor`, are
/// left out; with fewer than two usable points the fit is flagged
/// inconclusive.
pub fn fit_power_law(points: Vec<SlopePoint>, floor: f64) -> SlopeFit {
    let mut points = points;
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    let mut sign_sum = 0.0;
    for p in points.iter_mut() {
        let d = p.difference;
        p.used = d.abs() > floor && d.abs() > 2.0 * p.stderr;
        if !p.used {
            continue;
        }
        used += 1;
        let rel = (p.stderr / d.abs()).max(1e-12);
        let w = 1.0 / (rel * rel);
        let (x, y) = (libm::log(p.horizon), libm::log(d.abs()));
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
        sign_sum += d.signum();
    }
    let det = sw * sxx - sx * sx;
    if used < 2 || det <= 0.0 {
        return SlopeFit {
            points,
            exponent: f64::NAN,
            exponent_stderr: f64::NAN,
            constant: f64::NAN,
            constant_stderr: f64::NAN,
            covariance: [[f64::NAN; 2]; 2],
            inconclusive: true,
        };
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let covariance = [[sxx / det, -sx / det], [-sx / det, sw / det]];
    let c = libm::exp(intercept) * if sign_sum < 0.0 { -1.0 } else { 1.0 };
    SlopeFit {
        points,
        exponent: slope,
        exponent_stderr: libm::sqrt(covariance[1][1]),
        constant: c,
        constant_stderr: c.abs() * libm::sqrt(covariance[0][0]),
        covariance,
        inconclusive: false,
    }
}

/// Estimates `H_T f(x) - f(x)` along a geometric grid and fits a power law.
/// Grid point `k` samples with seed `cfg.loops.seed + k`.
pub fn slope_fit<P: ParallelMap + ?Sized>(
    vf: &VectorFieldSpec,
    f: &Observable,
    x: &[f64],
    grid: &[f64],
    cfg: &HolonomyConfig,
    exec: &P,
) -> Result<SlopeFit> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument("slope fit needs at least 3 grid points".into()));
    }
    let ratio = grid[1] / grid[0];
    let geometric = ratio > 1.0 && grid.windows(2).all(|w| ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(Error::InvalidArgument("grid must be increasing and geometric".into()));
    }
    let f0 = f.eval(x);
    let mut points = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let mut c = cfg.clone();
        c.horizon = t;
        c.loops.seed = cfg.loops.seed.wrapping_add(k as u64);
        let e = estimate_holonomy(vf, f, x, &c, exec)?;
        points.push(SlopePoint {
            horizon: t,
            estimate: e.value,
            stderr: e.stderr,
            difference: e.value - f0,
            samples: e.samples,
            used: false,
        });
    }
    Ok(fit_power_law(points, ROUNDING_FLOOR * (1.0 + f0.abs())))
}

/// `prod_k (T w_k / 2) / sinh(T w_k / 2)`, one factor per conjugate pair.
pub fn sinh_determinant(omegas: &[f64], horizon: f64) -> f64 {
    omegas
        .iter()
        .map(|&w| {
            let u = 0.5 * horizon * w;
            if (horizon * w).abs() < 1e-4 {
                let u2 = u * u;
                1.0 - u2 / 6.0 + 7.0 * u2 * u2 / 360.0
            } else {
                u / libm::sinh(u)
            }
        })
        .product()
}
