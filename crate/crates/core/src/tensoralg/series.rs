use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::freelie::words::word_index;
use crate::scalar::Scalar;

/// Element of the tensor algebra over `R^d` truncated above level `depth`.
///
/// Level `k` is stored densely with `d^k` coefficients indexed by
/// [`word_index`]; level 0 is a single scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSeries<S = f64> {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<S>>,
}

pub(crate) fn level_sizes(dim: usize, depth: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(depth + 1);
    let mut n = 1usize;
    for _ in 0..=depth {
        sizes.push(n);
        n = n.saturating_mul(dim);
    }
    sizes
}

impl<S: Scalar> TensorSeries<S> {
    pub fn zero(dim: usize, depth: usize) -> Self {
        let levels = level_sizes(dim, depth)
            .into_iter()
            .map(|n| vec![S::zero(); n])
            .collect();
        TensorSeries { dim, depth, levels }
    }

    pub fn identity(dim: usize, depth: usize) -> Self {
        let mut s = Self::zero(dim, depth);
        s.levels[0][0] = S::one();
        s
    }

    pub fn from_levels(dim: usize, levels: Vec<Vec<S>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::DimensionMismatch("no levels".into()));
        }
        let depth = levels.len() - 1;
        for (k, (lvl, n)) in levels.iter().zip(level_sizes(dim, depth)).enumerate() {
            if lvl.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "level {k} has {} entries, expected {n}",
                    lvl.len()
                )));
            }
        }
        Ok(TensorSeries { dim, depth, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, k: usize) -> &[S] {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [S] {
        &mut self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<S>] {
        &self.levels
    }

    /// Coefficient of a word (letters in `1..=d`); the empty word is level 0.
    pub fn coeff(&self, letters: &[u8]) -> S {
        if letters.len() > self.depth {
            return S::zero();
        }
        self.levels[letters.len()][word_index(letters, self.dim)].clone()
    }

    pub fn scalar_part(&self) -> &S {
        &self.levels[0][0]
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.depth != other.depth {
            return Err(Error::DimensionMismatch(format!(
                "tensor series ({}, {}) vs ({}, {})",
                self.dim, self.depth, other.dim, other.depth
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.levels.iter_mut().zip(&other.levels) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.clone() + y.clone();
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.levels.iter_mut().zip(&other.levels) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.clone() - y.clone();
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = self.clone();
        for lvl in out.levels.iter_mut() {
            for x in lvl.iter_mut() {
                *x = x.clone() * c.clone();
            }
        }
        out
    }

    /// Truncated tensor product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let d = self.dim;
        let mut out = Self::zero(d, self.depth);
        let sizes = level_sizes(d, self.depth);
        for k in 0..=self.depth {
            let target = &mut out.levels[k];
            for i in 0..=k {
                let right_size = sizes[k - i];
                let left = &self.levels[i];
                let right = &other.levels[k - i];
                for (ai, a) in left.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    let base = ai * right_size;
                    for (bj, b) in right.iter().enumerate() {
                        if b.is_zero() {
                            continue;
                        }
                        let slot = &mut target[base + bj];
                        *slot = slot.clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Truncated exponential; the input must have zero scalar part.
    pub fn exp(&self) -> Result<Self> {
        if !self.levels[0][0].is_zero() {
            return Err(Error::InvalidArgument(
                "exponential needs a series without scalar part".into(),
            ));
        }
        let mut result = Self::identity(self.dim, self.depth);
        let mut power = Self::identity(self.dim, self.depth);
        for n in 1..=self.depth {
            power = power.mul(self)?;
            power = power.scale(&S::one().div_int(n as i64));
            result = result.add(&power)?;
        }
        Ok(result)
    }

    /// Truncated logarithm `sum (-1)^(n+1) (S - 1)^n / n`.
    pub fn log(&self) -> Result<Self> {
        let c0 = self.levels[0][0].clone();
        if (c0 - S::one()).magnitude() > 1e-12 {
            return Err(Error::NotGroupLike(self.levels[0][0].magnitude()));
        }
        let mut z = self.clone();
        z.levels[0][0] = S::zero();
        let mut result = Self::zero(self.dim, self.depth);
        let mut power = z.clone();
        for n in 1..=self.depth {
            let c = if n % 2 == 1 { S::one() } else { -S::one() }.div_int(n as i64);
            result = result.add(&power.scale(&c))?;
            if n < self.depth {
                power = power.mul(&z)?;
            }
        }
        Ok(result)
    }

    /// Largest coefficient magnitude over all levels.
    pub fn max_abs(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| l.iter())
            .fold(0.0, |m, x| m.max(x.magnitude()))
    }
}

impl TensorSeries<f64> {
    /// Signature of a straight segment: the tensor exponential of `increment`.
    pub fn segment(increment: &[f64], depth: usize) -> Self {
        let d = increment.len();
        let mut out = Self::identity(d, depth);
        for k in 1..=depth {
            let (lower, upper) = out.levels.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            let inv_k = 1.0 / k as f64;
            for (pi, p) in prev.iter().enumerate() {
                for (j, x) in increment.iter().enumerate() {
                    cur[pi * d + j] = p * x * inv_k;
                }
            }
        }
        out
    }

    /// In-place right multiplication by the segment signature `exp(increment)`.
    ///
    /// Horner scheme per level: `S_k <- S_k + (S_{k-1} + (S_{k-2} + ...) dx / 2) dx`.
    pub fn mul_segment_in_place(&mut self, increment: &[f64]) {
        let d = self.dim;
        debug_assert_eq!(increment.len(), d);
        let mut scratch: Vec<f64> = Vec::new();
        let mut next: Vec<f64> = Vec::new();
        for k in (1..=self.depth).rev() {
            // scratch holds a level-j tensor, growing from j = 0 up to k - 1
            scratch.clear();
            scratch.extend_from_slice(&self.levels[0]);
            for j in 1..k {
                let c = 1.0 / (k - j + 1) as f64;
                next.clear();
                next.extend_from_slice(&self.levels[j]);
                for (si, s) in scratch.iter().enumerate() {
                    let s = s * c;
                    for (l, x) in increment.iter().enumerate() {
                        next[si * d + l] += s * x;
                    }
                }
                core::mem::swap(&mut scratch, &mut next);
            }
            let target = &mut self.levels[k];
            for (si, s) in scratch.iter().enumerate() {
                for (l, x) in increment.iter().enumerate() {
                    target[si * d + l] += s * x;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Q};

    #[test]
    fn segment_scalar_exponential() {
        let s = TensorSeries::segment(&[2.0], 3);
        let got: Vec<f64> = s.levels().iter().map(|l| l[0]).collect();
        let want = [1.0, 2.0, 2.0, 4.0 / 3.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn segment_level_two_entries() {
        let s = TensorSeries::segment(&[1.0, 1.0], 2);
        assert!(s.level(2).iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn zero_segment_is_identity() {
        let s = TensorSeries::segment(&[0.0, 0.0, 0.0], 4);
        assert_eq!(s, TensorSeries::identity(3, 4));
    }

    #[test]
    fn in_place_segment_matches_product() {
        let a = TensorSeries::segment(&[0.3, -1.2], 4);
        let dx = [0.7, 0.25];
        let b = TensorSeries::segment(&dx, 4);
        let want = a.mul(&b).unwrap();
        let mut got = a.clone();
        got.mul_segment_in_place(&dx);
        assert!(got.sub(&want).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn exact_exp_log_roundtrip() {
        let mut x = TensorSeries::<Q>::zero(2, 4);
        x.level_mut(1)[0] = q(1, 1);
        x.level_mut(1)[1] = q(-2, 3);
        x.level_mut(2)[1] = q(1, 5);
        x.level_mut(2)[2] = q(-1, 5);
        let back = x.exp().unwrap().log().unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn log_rejects_non_group_like() {
        let s = TensorSeries::<f64>::zero(2, 2);
        assert!(matches!(s.log(), Err(Error::NotGroupLike(_))));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = TensorSeries::<f64>::identity(2, 2);
        let b = TensorSeries::<f64>::identity(3, 2);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch(_))));
    }
}
