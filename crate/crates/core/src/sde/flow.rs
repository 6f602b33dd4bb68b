use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::VectorFieldSpec;
use crate::error::{Error, Result};
use crate::poly::CompiledPoly;
use crate::tensoralg::PiecewiseLinearPath;

/// Floating-point form of a [`VectorFieldSpec`] for integration.
#[derive(Debug, Clone)]
pub struct CompiledFields {
    n: usize,
    /// `fields[i][k]` is component `k` of `V_{i+1}`; `None` when identically zero.
    fields: Vec<Vec<Option<CompiledPoly>>>,
}

impl CompiledFields {
    pub fn new(spec: &VectorFieldSpec) -> Self {
        let fields = spec
            .fields()
            .iter()
            .map(|f| f.components().iter().map(|c| if c.is_zero() { None } else { Some(c.compile()) }).collect())
            .collect();
        CompiledFields { n: spec.state_dim(), fields }
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    /// `out = sum_i w_i V_i(x)`.
    #[inline]
    pub fn drift(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (f, &wi) in self.fields.iter().zip(w) {
            if wi == 0.0 {
                continue;
            }
            for (o, c) in out.iter_mut().zip(f) {
                if let Some(c) = c {
                    *o += wi * c.eval(x);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub substeps: usize,
    pub record_trajectory: bool,
    /// Step-doubling estimate of the local error (three times the cost).
    pub estimate_error: bool,
}

impl FlowOptions {
    pub fn new(substeps: usize) -> Self {
        FlowOptions { substeps, record_trajectory: false, estimate_error: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub terminal: Vec<f64>,
    /// State at every knot, including the start.
    pub trajectory: Option<Vec<Vec<f64>>>,
    pub substeps: usize,
    pub max_step_error: Option<f64>,
}

/// Scratch buffers for RK4 on `R^n`.
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Rk4 { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }

    /// One classical step of `x' = sum_i w_i V_i(x)` with step `h`.
    #[inline]
    pub(crate) fn step(&mut self, f: &CompiledFields, w: &[f64], h: f64, x: &mut [f64]) {
        f.drift(x, w, &mut self.k1);
        for ((t, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *t = xi + 0.5 * h * k;
        }
        f.drift(&self.tmp, w, &mut self.k2);
        for ((t, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *t = xi + 0.5 * h * k;
        }
        f.drift(&self.tmp, w, &mut self.k3);
        for ((t, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *t = xi + h * k;
        }
        f.drift(&self.tmp, w, &mut self.k4);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates `dX = sum_i V_i(X) dx^i` along the driver. On each segment
/// the equation is the ODE `X' = sum_i V_i(X) dx_i` over unit parameter
/// time, advanced with `substeps` RK4 steps.
pub fn integrate_flow(vf: &VectorFieldSpec, x0: &[f64], driver: &PiecewiseLinearPath, substeps: usize) -> Result<FlowResult> {
    integrate_flow_with(&vf.compile(), x0, driver, &FlowOptions::new(substeps))
}

pub fn integrate_flow_with(
    f: &CompiledFields,
    x0: &[f64],
    driver: &PiecewiseLinearPath,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    if opts.substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    if x0.len() != f.n {
        return Err(Error::DimensionMismatch(format!("initial point in R^{} for fields on R^{}", x0.len(), f.n)));
    }
    if driver.dim() != f.num_fields() {
        return Err(Error::DimensionMismatch(format!(
            "driver in R^{} for {} vector fields",
            driver.dim(),
            f.num_fields()
        )));
    }
    let n = f.n;
    let h = 1.0 / opts.substeps as f64;
    let mut rk = Rk4::new(n);
    let mut x = x0.to_vec();
    let mut inc = vec![0.0; driver.dim()];
    let mut trajectory = opts.record_trajectory.then(|| vec![x.clone()]);
    let mut max_err: f64 = 0.0;
    let (mut full, mut half) = (vec![0.0; n], vec![0.0; n]);
    for seg in 0..driver.num_segments() {
        driver.increment(seg, &mut inc);
        for _ in 0..opts.substeps {
            if opts.estimate_error {
                full.copy_from_slice(&x);
                rk.step(f, &inc, h, &mut full);
                half.copy_from_slice(&x);
                rk.step(f, &inc, 0.5 * h, &mut half);
                rk.step(f, &inc, 0.5 * h, &mut half);
                let e = full.iter().zip(&half).fold(0.0f64, |a, (p, q)| a.max((p - q).abs())) / 15.0;
                max_err = max_err.max(e);
                x.copy_from_slice(&half);
            } else {
                rk.step(f, &inc, h, &mut x);
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationBlowUp { segment: seg });
        }
        if let Some(t) = trajectory.as_mut() {
            t.push(x.clone());
        }
    }
    Ok(FlowResult {
        terminal: x,
        trajectory,
        substeps: opts.substeps,
        max_step_error: opts.estimate_error.then_some(max_err),
    })
}
