use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensoralg::TensorSeries;

/// Time-stamped knots in `R^d`, linearly interpolated between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    dim: usize,
    times: Vec<f64>,
    /// Row-major `(m + 1) x d` knot values.
    values: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(dim: usize, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if times.len() < 2 {
            return Err(Error::InvalidPath("need at least one segment".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::InvalidPath(format!(
                "{} values for {} knots in R^{dim}",
                values.len(),
                times.len()
            )));
        }
        if times.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPath("non-finite entry".into()));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath(format!("times not strictly increasing at knot {}", k + 1)));
        }
        Ok(PiecewiseLinearPath { dim, times, values })
    }

    /// Knots at the uniform grid `t_k = T k / m` on `[0, T]`.
    pub fn uniform(dim: usize, horizon: f64, values: Vec<f64>) -> Result<Self> {
        let knots = values.len() / dim.max(1);
        if knots < 2 {
            return Err(Error::InvalidPath("need at least one segment".into()));
        }
        let m = knots - 1;
        let times = (0..=m).map(|k| uniform_time(horizon, k, m)).collect();
        Self::new(dim, times, values)
    }

    /// Path through the given points with unit time steps.
    pub fn from_points(points: &[&[f64]]) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        let values = points.iter().flat_map(|p| p.iter().copied()).collect();
        let times = (0..points.len()).map(|k| k as f64).collect();
        Self::new(dim, times, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_segments(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn knot(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn start(&self) -> &[f64] {
        self.knot(0)
    }

    pub fn end(&self) -> &[f64] {
        self.knot(self.times.len() - 1)
    }

    pub fn increment(&self, k: usize, out: &mut [f64]) {
        let d = self.dim;
        let (a, b) = (&self.values[k * d..(k + 1) * d], &self.values[(k + 1) * d..(k + 2) * d]);
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = y - x;
        }
    }

    /// Net displacement `end - start`.
    pub fn displacement(&self) -> Vec<f64> {
        self.end().iter().zip(self.start()).map(|(b, a)| b - a).collect()
    }

    /// This path followed by `other`, translated to start where this one ends.
    pub fn concat(&self, other: &PiecewiseLinearPath) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("R^{} vs R^{}", self.dim, other.dim)));
        }
        let t_end = *self.times.last().expect("nonempty");
        let shift_t = t_end - other.times[0];
        let shift_x: Vec<f64> = self.end().iter().zip(other.start()).map(|(a, b)| a - b).collect();
        let mut times = self.times.clone();
        let mut values = self.values.clone();
        for k in 1..other.times.len() {
            times.push(other.times[k] + shift_t);
            values.extend(other.knot(k).iter().zip(&shift_x).map(|(x, s)| x + s));
        }
        Self::new(self.dim, times, values)
    }

    /// Values multiplied by `lambda`, times unchanged.
    pub fn scaled(&self, lambda: f64) -> Self {
        PiecewiseLinearPath {
            dim: self.dim,
            times: self.times.clone(),
            values: self.values.iter().map(|x| x * lambda).collect(),
        }
    }

    /// Same knots at new (strictly increasing) times.
    pub fn with_times(&self, times: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, times, self.values.clone())
    }

    /// Insert the midpoint of segment `k` as an extra knot.
    pub fn refine_segment(&self, k: usize) -> Self {
        let d = self.dim;
        let mut times = self.times.clone();
        let mut values = self.values.clone();
        let mid_t = 0.5 * (self.times[k] + self.times[k + 1]);
        let mid: Vec<f64> = (0..d)
            .map(|j| 0.5 * (self.values[k * d + j] + self.values[(k + 1) * d + j]))
            .collect();
        times.insert(k + 1, mid_t);
        for (j, x) in mid.into_iter().enumerate() {
            values.insert((k + 1) * d + j, x);
        }
        PiecewiseLinearPath { dim: d, times, values }
    }

    /// Signatures of every prefix `[t_0, t_k]`, `k = 0..=m`.
    pub fn prefix_signatures(&self, depth: usize) -> Vec<TensorSeries> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut sig = TensorSeries::identity(self.dim, depth);
        let mut inc = alloc::vec![0.0; self.dim];
        out.push(sig.clone());
        for k in 0..self.num_segments() {
            self.increment(k, &mut inc);
            sig.mul_segment_in_place(&inc);
            let mut exact = sig.clone();
            exact_first_level(&mut exact, self.start(), self.knot(k + 1));
            out.push(exact);
        }
        out
    }
}

/// `T k / m`, exact at both ends.
#[inline]
pub fn uniform_time(horizon: f64, k: usize, m: usize) -> f64 {
    if k == m {
        horizon
    } else {
        horizon * (k as f64 / m as f64)
    }
}

/// Signature truncated at `depth`: the Chen fold of the segment exponentials.
pub fn path_signature(path: &PiecewiseLinearPath, depth: usize) -> TensorSeries {
    let mut sig = TensorSeries::identity(path.dim, depth);
    let mut inc = alloc::vec![0.0; path.dim];
    for k in 0..path.num_segments() {
        path.increment(k, &mut inc);
        sig.mul_segment_in_place(&inc);
    }
    exact_first_level(&mut sig, path.start(), path.end());
    sig
}

/// Level one is the displacement; writing it directly avoids the rounding of
/// the telescoped sum, so closed paths have an exactly zero first level.
pub(crate) fn exact_first_level(sig: &mut TensorSeries, start: &[f64], end: &[f64]) {
    if sig.depth() >= 1 {
        for ((c, a), b) in sig.level_mut(1).iter_mut().zip(start).zip(end) {
            *c = b - a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freelie::{FreeLieAlgebra, Word};
    use crate::tensoralg::{chen_concat, log_signature, segment_signature};
    use alloc::vec;
    use proptest::prelude::*;

    pub(crate) fn unit_square() -> PiecewiseLinearPath {
        PiecewiseLinearPath::from_points(&[
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[1.0, 1.0],
            &[0.0, 1.0],
            &[0.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(PiecewiseLinearPath::new(2, vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(PiecewiseLinearPath::new(1, vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(PiecewiseLinearPath::new(1, vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(PiecewiseLinearPath::new(1, vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn constant_path_has_trivial_signature() {
        let p = PiecewiseLinearPath::from_points(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]).unwrap();
        assert_eq!(path_signature(&p, 4), TensorSeries::identity(2, 4));
    }

    #[test]
    fn single_segment_is_segment_signature() {
        let p = PiecewiseLinearPath::from_points(&[&[0.5, -1.0, 2.0], &[1.0, 1.0, 0.0]]).unwrap();
        let want = segment_signature(&[0.5, 2.0, -2.0], 3);
        assert!(path_signature(&p, 3).sub(&want).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn l_shaped_path_level_two() {
        let p = PiecewiseLinearPath::from_points(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]).unwrap();
        let s = path_signature(&p, 2);
        assert_eq!(s.coeff(&[1, 2]), 1.0);
        assert_eq!(s.coeff(&[2, 1]), 0.0);
        assert_eq!(s.coeff(&[1, 1]), 0.5);
        assert_eq!(s.coeff(&[2, 2]), 0.5);
    }

    #[test]
    fn segment_then_reversal_is_identity() {
        let a = segment_signature(&[0.3, -0.8], 5);
        let b = segment_signature(&[-0.3, 0.8], 5);
        let c = chen_concat(&a, &b).unwrap();
        assert!(c.sub(&TensorSeries::identity(2, 5)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn unit_square_area() {
        let s = path_signature(&unit_square(), 2);
        assert!(s.level(1).iter().all(|x| x.abs() < 1e-15));
        // counter-clockwise: antisymmetric part (S12 - S21)/2 is the area
        let area = 0.5 * (s.coeff(&[1, 2]) - s.coeff(&[2, 1]));
        assert!((area - 1.0).abs() < 1e-15);
        let alg = FreeLieAlgebra::new(2, 2).unwrap();
        let ls = log_signature(&alg, &unit_square()).unwrap();
        assert!((alg.coefficient(&ls, &Word::new(vec![1, 2])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_and_time_change_do_not_matter() {
        let p = PiecewiseLinearPath::from_points(&[&[0.0, 0.0], &[1.0, 2.0], &[-1.0, 0.5]]).unwrap();
        let s = path_signature(&p, 4);
        let r = path_signature(&p.refine_segment(1), 4);
        assert!(s.sub(&r).unwrap().max_abs() < 1e-14);
        let warped = p.with_times(vec![0.0, 0.1, 7.0]).unwrap();
        assert_eq!(path_signature(&warped, 4), s);
    }

    fn arb_path(dim: usize, max_knots: usize) -> impl Strategy<Value = PiecewiseLinearPath> {
        (2..=max_knots)
            .prop_flat_map(move |k| proptest::collection::vec(-2.0f64..2.0, k * dim))
            .prop_map(move |v| PiecewiseLinearPath::uniform(dim, 1.0, v).unwrap())
    }

    proptest! {
        #[test]
        fn chen_identity(p in arb_path(3, 5), q in arb_path(3, 5)) {
            let joined = path_signature(&p.concat(&q).unwrap(), 4);
            let split = chen_concat(&path_signature(&p, 4), &path_signature(&q, 4)).unwrap();
            prop_assert!(joined.sub(&split).unwrap().max_abs() < 1e-12);
        }

        #[test]
        fn scaling_multiplies_level_k_by_lambda_power(p in arb_path(2, 5), lambda in -2.0f64..2.0) {
            let s = path_signature(&p, 4);
            let t = path_signature(&p.scaled(lambda), 4);
            for k in 0..=4 {
                let c = lambda.powi(k as i32);
                for (a, b) in s.level(k).iter().zip(t.level(k)) {
                    prop_assert!((a * c - b).abs() < 1e-12 * (1.0 + b.abs()));
                }
            }
        }
    }
}
