//! Samplers for `N`-step Brownian loops on a uniform grid.
//!
//! Level one of the constraint (return to the origin) is imposed exactly by
//! linear conditioning; levels `2..=N` are imposed through the window
//! `residual <= eps` of the homogeneous norm of the log-signature.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, ParallelMap};
use crate::freelie::{FreeLieAlgebra, LieSeries};
use crate::rng::{standard_normal, substream, DOMAIN_BRIDGE, DOMAIN_MCMC, DOMAIN_REJECTION};
use crate::stats::{mean_stderr, MeanStderr};
use crate::tensoralg::{log_signature, PiecewiseLinearPath, TensorSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Bridge,
    Rejection,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    /// Initial innovation weight `s` of the move `x' = sqrt(1 - s^2) x + s y`.
    pub proposal_scale: f64,
    /// Annealing iterations, soft constraint with `sigma` from `anneal_start` to `eps / 2`.
    pub burn_in: usize,
    /// Hard-window iterations spent tuning the proposal scale.
    pub adapt: usize,
    /// Iterations between emitted samples.
    pub thinning: usize,
    /// Independent chains; errors are computed across chain means.
    pub chains: usize,
    pub target_acceptance: f64,
    pub anneal_start: f64,
    /// Uniform draws on the whole ellipse before each slice move shrinks.
    pub global_draws: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            proposal_scale: 0.5,
            burn_in: 2000,
            adapt: 2000,
            thinning: 8,
            chains: 32,
            target_acceptance: 0.3,
            anneal_start: 1.0,
            global_draws: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub m: usize,
    pub eps: f64,
    pub seed: u64,
    /// Proposal budget per accepted rejection sample.
    pub max_proposals: u64,
    pub mcmc: McmcConfig,
}

impl SamplerConfig {
    pub fn new(m: usize, eps: f64, seed: u64) -> Self {
        SamplerConfig { m, eps, seed, max_proposals: 10_000_000, mcmc: McmcConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.m < 2 {
            return bad("m must be at least 2");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        let s = self.mcmc.proposal_scale;
        if !(s > 0.0 && s < 1.0) {
            return bad("proposal scale must lie in (0, 1)");
        }
        if self.mcmc.thinning == 0 || self.mcmc.chains == 0 {
            return bad("thinning and chains must be positive");
        }
        if !(self.mcmc.anneal_start > 0.0) {
            return bad("anneal start must be positive");
        }
        if self.max_proposals == 0 {
            return bad("max_proposals must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSample {
    pub path: PiecewiseLinearPath,
    pub step: usize,
    pub residual: f64,
    pub weight: f64,
}

/// Knot values of the discrete Brownian bridge on `m` uniform steps of
/// `[0, horizon]`: `W_k - (k / m) W_m`. Both endpoints are exactly zero.
pub fn bridge_values<R: Rng + ?Sized>(d: usize, horizon: f64, m: usize, rng: &mut R, out: &mut [f64]) {
    assert_eq!(out.len(), d * (m + 1));
    let sd = libm::sqrt(horizon / m as f64);
    out[..d].fill(0.0);
    for k in 1..=m {
        for i in 0..d {
            out[k * d + i] = out[(k - 1) * d + i] + sd * standard_normal(rng);
        }
    }
    let (head, last) = out.split_at_mut(m * d);
    for k in 1..m {
        let w = k as f64 / m as f64;
        for i in 0..d {
            head[k * d + i] -= w * last[i];
        }
    }
    last.fill(0.0);
}

pub fn sample_bridge<R: Rng + ?Sized>(d: usize, horizon: f64, m: usize, rng: &mut R) -> Result<LoopSample> {
    if m < 2 {
        return Err(Error::InvalidArgument("m must be at least 2".into()));
    }
    if d == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidArgument("need d >= 1 and T > 0".into()));
    }
    let mut values = vec![0.0; d * (m + 1)];
    bridge_values(d, horizon, m, rng, &mut values);
    Ok(LoopSample { path: PiecewiseLinearPath::uniform(d, horizon, values)?, step: 1, residual: 0.0, weight: 1.0 })
}

/// Homogeneous norm of levels `2..=step` of a log-signature in Lyndon
/// coordinates: `max_j (max |c_j| / T^{j/2})^{1/j}`.
pub fn residual(alg: &FreeLieAlgebra, logsig: &LieSeries, step: usize, horizon: f64) -> f64 {
    let mut r: f64 = 0.0;
    for j in 2..=step.min(alg.depth()) {
        let top = logsig.coeffs()[alg.level_range(j)].iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let scaled = top / libm::pow(horizon, j as f64 / 2.0);
        r = r.max(libm::pow(scaled, 1.0 / j as f64));
    }
    r
}

/// Evaluates the residual of raw knot arrays for one `(d, N, T)`.
#[derive(Debug, Clone)]
struct Gauge {
    alg: FreeLieAlgebra,
    d: usize,
    step: usize,
    horizon: f64,
}

impl Gauge {
    fn new(d: usize, step: usize, horizon: f64) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidArgument("step N must be at least 1".into()));
        }
        if d == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidArgument("need d >= 1 and T > 0".into()));
        }
        Ok(Gauge { alg: FreeLieAlgebra::new(d, step.max(2))?, d, step, horizon })
    }

    fn measure(&self, values: &[f64], scratch: &mut [f64]) -> Result<f64> {
        if self.step < 2 {
            return Ok(0.0);
        }
        let d = self.d;
        let mut sig = TensorSeries::identity(d, self.step);
        for k in 0..values.len() / d - 1 {
            for i in 0..d {
                scratch[i] = values[(k + 1) * d + i] - values[k * d + i];
            }
            sig.mul_segment_in_place(&scratch[..d]);
        }
        crate::tensoralg::path::exact_first_level(&mut sig, &values[..d], &values[values.len() - d..]);
        let logsig = self.alg.project(&sig.log()?)?;
        Ok(residual(&self.alg, &logsig, self.step, self.horizon))
    }

    fn sample(&self, values: Vec<f64>, residual: f64) -> Result<LoopSample> {
        Ok(LoopSample {
            path: PiecewiseLinearPath::uniform(self.d, self.horizon, values)?,
            step: self.step,
            residual,
            weight: 1.0,
        })
    }
}

/// Exact rejection from bridge proposals into the window.
#[derive(Debug, Clone)]
pub struct RejectionSampler {
    gauge: Gauge,
    m: usize,
    eps: f64,
    max_proposals: u64,
}

impl RejectionSampler {
    pub fn new(d: usize, step: usize, horizon: f64, cfg: &SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(RejectionSampler { gauge: Gauge::new(d, step, horizon)?, m: cfg.m, eps: cfg.eps, max_proposals: cfg.max_proposals })
    }

    /// One accepted loop and the number of proposals it took.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(LoopSample, u64)> {
        let g = &self.gauge;
        let mut values = vec![0.0; g.d * (self.m + 1)];
        let mut scratch = vec![0.0; g.d];
        for n in 1..=self.max_proposals {
            bridge_values(g.d, g.horizon, self.m, rng, &mut values);
            let r = g.measure(&values, &mut scratch)?;
            if r <= self.eps {
                return Ok((g.sample(values, r)?, n));
            }
        }
        Err(Error::IterationCap { proposals: self.max_proposals, rate: 0.0 })
    }
}

pub fn sample_loop_rejection<R: Rng + ?Sized>(
    d: usize,
    step: usize,
    horizon: f64,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<LoopSample> {
    Ok(RejectionSampler::new(d, step, horizon, cfg)?.sample(rng)?.0)
}

/// Markov chain on bridge knot values targeting the bridge law restricted to
/// the window `r <= eps`.
///
/// Proposals `sqrt(1 - s^2) x + s y` with `y` a fresh bridge keep the bridge
/// law invariant and the endpoints exactly zero. Warm-up anneals a soft
/// constraint `exp(-r^2 / 2 sigma^2)` from `sigma = anneal_start` to
/// `eps / 2`, then tunes `s` under the hard window. Each later iteration is
/// one such Metropolis step followed by an elliptical slice move on the
/// ellipse `x cos t + y sin t`, which can jump between distant parts of the
/// window; pCN steps alone barely move inside a thin window.
#[derive(Debug, Clone)]
pub struct McmcChain<R> {
    gauge: Gauge,
    cfg: SamplerConfig,
    rng: R,
    state: Vec<f64>,
    state_residual: f64,
    scale: f64,
    proposal: Vec<f64>,
    fresh: Vec<f64>,
    scratch: Vec<f64>,
    accepted: u64,
    proposed: u64,
    warm: bool,
}

impl<R: Rng> McmcChain<R> {
    pub fn new(d: usize, step: usize, horizon: f64, cfg: &SamplerConfig, mut rng: R) -> Result<Self> {
        cfg.validate()?;
        let gauge = Gauge::new(d, step, horizon)?;
        let n = d * (cfg.m + 1);
        let mut state = vec![0.0; n];
        bridge_values(d, horizon, cfg.m, &mut rng, &mut state);
        let mut scratch = vec![0.0; d];
        let state_residual = gauge.measure(&state, &mut scratch)?;
        Ok(McmcChain {
            gauge,
            scale: cfg.mcmc.proposal_scale,
            cfg: cfg.clone(),
            rng,
            state,
            state_residual,
            proposal: vec![0.0; n],
            fresh: vec![0.0; n],
            scratch,
            accepted: 0,
            proposed: 0,
            warm: false,
        })
    }

    /// One Metropolis step; `sigma = None` is the hard window.
    fn step(&mut self, sigma: Option<f64>) -> Result<bool> {
        let g = &self.gauge;
        bridge_values(g.d, g.horizon, self.cfg.m, &mut self.rng, &mut self.fresh);
        let s = self.scale;
        let rho = libm::sqrt(1.0 - s * s);
        for ((p, x), y) in self.proposal.iter_mut().zip(&self.state).zip(&self.fresh) {
            *p = rho * x + s * y;
        }
        let r = g.measure(&self.proposal, &mut self.scratch)?;
        let accept = match sigma {
            None => r <= self.cfg.eps,
            Some(sigma) => {
                let log_ratio = (self.state_residual * self.state_residual - r * r) / (2.0 * sigma * sigma);
                log_ratio >= 0.0 || libm::log(unit(&mut self.rng)) < log_ratio
            }
        };
        if accept {
            core::mem::swap(&mut self.state, &mut self.proposal);
            self.state_residual = r;
        }
        Ok(accept)
    }

    /// Elliptical slice move with an indicator likelihood: a few uniform
    /// draws on the full ellipse, then the usual shrinking bracket around
    /// the current point. Leaves the restricted law invariant.
    fn slice_move(&mut self) -> Result<()> {
        let g = &self.gauge;
        bridge_values(g.d, g.horizon, self.cfg.m, &mut self.rng, &mut self.fresh);
        let tau = core::f64::consts::TAU;
        for _ in 0..self.cfg.mcmc.global_draws {
            let theta = tau * unit(&mut self.rng);
            if self.try_angle(theta)? {
                return Ok(());
            }
        }
        let mut theta = tau * unit(&mut self.rng);
        let (mut lo, mut hi) = (theta - tau, theta);
        for _ in 0..SLICE_SHRINK_CAP {
            if self.try_angle(theta)? {
                return Ok(());
            }
            if theta < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            theta = lo + (hi - lo) * unit(&mut self.rng);
        }
        Ok(())
    }

    fn try_angle(&mut self, theta: f64) -> Result<bool> {
        let (c, s) = (libm::cos(theta), libm::sin(theta));
        for ((p, x), y) in self.proposal.iter_mut().zip(&self.state).zip(&self.fresh) {
            *p = c * x + s * y;
        }
        let r = self.gauge.measure(&self.proposal, &mut self.scratch)?;
        if r <= self.cfg.eps {
            core::mem::swap(&mut self.state, &mut self.proposal);
            self.state_residual = r;
            return Ok(true);
        }
        Ok(false)
    }

    fn adapt(&mut self, accepted: bool, iteration: usize) {
        let gain = 1.0 / libm::sqrt(1.0 + iteration as f64 / 10.0);
        let a = if accepted { 1.0 } else { 0.0 };
        let log_s = libm::log(self.scale) + gain * (a - self.cfg.mcmc.target_acceptance);
        self.scale = libm::exp(log_s).clamp(1e-6, 0.999);
    }

    /// Annealing, window entry and hard-window tuning. Idempotent.
    pub fn warm_up(&mut self) -> Result<()> {
        if self.warm {
            return Ok(());
        }
        let mc = self.cfg.mcmc.clone();
        let sigma_end = self.cfg.eps / 2.0;
        let sigma_start = mc.anneal_start.max(sigma_end);
        for t in 0..mc.burn_in {
            let frac = if mc.burn_in > 1 { t as f64 / (mc.burn_in - 1) as f64 } else { 1.0 };
            let sigma = sigma_start * libm::pow(sigma_end / sigma_start, frac);
            let acc = self.step(Some(sigma))?;
            self.adapt(acc, t);
        }
        let mut tries: u64 = 0;
        while self.state_residual > self.cfg.eps {
            let acc = self.step(Some(sigma_end))?;
            self.adapt(acc, mc.burn_in + tries as usize);
            tries += 1;
            if tries > self.cfg.max_proposals {
                return Err(Error::NonConvergence(0.0));
            }
        }
        for t in 0..mc.adapt {
            let acc = self.step(None)?;
            self.adapt(acc, t);
            self.slice_move()?;
        }
        self.warm = true;
        Ok(())
    }

    /// Next emitted sample, after `thinning` production steps at fixed scale.
    pub fn next_sample(&mut self) -> Result<LoopSample> {
        self.warm_up()?;
        for _ in 0..self.cfg.mcmc.thinning {
            let acc = self.step(None)?;
            self.proposed += 1;
            self.accepted += acc as u64;
            self.slice_move()?;
        }
        self.gauge.sample(self.state.clone(), self.state_residual)
    }

    /// Production acceptance rate (NaN before any production step).
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed as f64
    }

    pub fn proposal_scale(&self) -> f64 {
        self.scale
    }

    pub fn check_convergence(&self) -> Result<()> {
        let rate = self.acceptance_rate();
        if !(0.1..=0.6).contains(&rate) {
            return Err(Error::NonConvergence(rate));
        }
        Ok(())
    }
}

const SLICE_SHRINK_CAP: usize = 200;

fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// `count` samples from one chain, with the convergence check applied.
pub fn sample_loop_mcmc<R: Rng>(
    d: usize,
    step: usize,
    horizon: f64,
    cfg: &SamplerConfig,
    rng: R,
    count: usize,
) -> Result<Vec<LoopSample>> {
    let mut chain = McmcChain::new(d, step, horizon, cfg, rng)?;
    let out = (0..count).map(|_| chain.next_sample()).collect::<Result<Vec<_>>>()?;
    if count > 0 {
        chain.check_convergence()?;
    }
    Ok(out)
}

/// Per-sample outputs in a fixed order plus the grouping used for error
/// bars: each group is one independent unit (a single draw, or one chain).
#[derive(Debug, Clone)]
pub struct LoopMap<T> {
    pub values: Vec<T>,
    pub group_sizes: Vec<usize>,
    /// Total proposals (rejection) or production steps (MCMC); `count` for bridges.
    pub proposals: u64,
    pub acceptance_rate: f64,
}

impl<T> LoopMap<T> {
    /// Mean of a per-sample statistic with a standard error across groups.
    pub fn mean_stderr(&self, stat: impl Fn(&T) -> f64) -> MeanStderr {
        let xs: Vec<f64> = self.values.iter().map(&stat).collect();
        grouped_mean_stderr(&xs, &self.group_sizes)
    }
}

/// Mean with a standard error over group means; singleton groups reduce to
/// the ordinary estimate.
pub fn grouped_mean_stderr(xs: &[f64], group_sizes: &[usize]) -> MeanStderr {
    if group_sizes.iter().all(|&g| g == 1) {
        return mean_stderr(xs);
    }
    let mut means = Vec::with_capacity(group_sizes.len());
    let mut at = 0;
    for &g in group_sizes {
        means.push(mean_stderr(&xs[at..at + g]).mean);
        at += g;
    }
    let mut r = mean_stderr(&means);
    r.mean = mean_stderr(xs).mean;
    r.count = xs.len();
    r
}

pub type LoopBatch = LoopMap<LoopSample>;

impl LoopMap<LoopSample> {
    pub fn samples(&self) -> &[LoopSample] {
        &self.values
    }

    pub fn residual_max(&self) -> f64 {
        self.values.iter().fold(0.0, |a, s| a.max(s.residual))
    }
}

/// `count` loops of step `step` on `[0, horizon]`, kept in memory.
pub fn sample_batch<P: ParallelMap + ?Sized>(
    kind: SamplerKind,
    d: usize,
    step: usize,
    horizon: f64,
    cfg: &SamplerConfig,
    count: usize,
    exec: &P,
) -> Result<LoopBatch> {
    map_loops(kind, d, step, horizon, cfg, count, exec, |s| Ok(s.clone()))
}

/// Applies `f` to `count` loops without keeping them. Every bridge or
/// rejection sample, and every MCMC chain, draws from its own substream of
/// `cfg.seed`, so the output does not depend on the executor.
#[allow(clippy::too_many_arguments)]
pub fn map_loops<P, T, F>(
    kind: SamplerKind,
    d: usize,
    step: usize,
    horizon: f64,
    cfg: &SamplerConfig,
    count: usize,
    exec: &P,
    f: F,
) -> Result<LoopMap<T>>
where
    P: ParallelMap + ?Sized,
    T: Send,
    F: Fn(&LoopSample) -> Result<T> + Sync + Send,
{
    cfg.validate()?;
    match kind {
        SamplerKind::Bridge => {
            if step != 1 {
                return Err(Error::InvalidArgument(format!("bridge sampler is for N = 1, got N = {step}")));
            }
            let values = try_map_indexed(exec, count, |i| {
                f(&sample_bridge(d, horizon, cfg.m, &mut substream(cfg.seed, DOMAIN_BRIDGE, i as u64))?)
            })?;
            Ok(LoopMap { values, group_sizes: vec![1; count], proposals: count as u64, acceptance_rate: 1.0 })
        }
        SamplerKind::Rejection => {
            let sampler = RejectionSampler::new(d, step, horizon, cfg)?;
            let draws = try_map_indexed(exec, count, |i| {
                let (s, n) = sampler.sample(&mut substream(cfg.seed, DOMAIN_REJECTION, i as u64))?;
                Ok((f(&s)?, n))
            })?;
            let proposals: u64 = draws.iter().map(|(_, n)| n).sum();
            let values = draws.into_iter().map(|(v, _)| v).collect();
            Ok(LoopMap {
                values,
                group_sizes: vec![1; count],
                proposals,
                acceptance_rate: count as f64 / proposals.max(1) as f64,
            })
        }
        SamplerKind::Mcmc => {
            let k = cfg.mcmc.chains.min(count.max(1));
            let sizes: Vec<usize> = (0..k).map(|c| count / k + usize::from(c < count % k)).collect();
            let runs = try_map_indexed(exec, k, |c| {
                let rng = substream(cfg.seed, DOMAIN_MCMC, c as u64);
                let mut chain = McmcChain::new(d, step, horizon, cfg, rng)?;
                let out = (0..sizes[c]).map(|_| f(&chain.next_sample()?)).collect::<Result<Vec<_>>>()?;
                if sizes[c] > 0 {
                    chain.check_convergence()?;
                }
                Ok((out, chain.proposed, chain.accepted))
            })?;
            let proposals: u64 = runs.iter().map(|r| r.1).sum();
            let accepted: u64 = runs.iter().map(|r| r.2).sum();
            let values = runs.into_iter().flat_map(|r| r.0).collect();
            Ok(LoopMap {
                values,
                group_sizes: sizes,
                proposals,
                acceptance_rate: accepted as f64 / proposals.max(1) as f64,
            })
        }
    }
}

/// Lyndon coordinates of the sample's log-signature up to level `level`.
pub fn loop_logsig(sample: &LoopSample, level: usize) -> Result<LieSeries> {
    if level < sample.step {
        return Err(Error::InvalidArgument(format!("level {level} below the loop step {}", sample.step)));
    }
    log_signature(&FreeLieAlgebra::new(sample.path.dim(), level)?, &sample.path)
}

#[cfg(test)]
mod tests;
