//! Free Lie algebra on `d` generators truncated above step `L`, in the
//! Lyndon basis with standard bracketing.
//!
//! Brackets of basis elements are computed once by expanding both
//! elements into the tensor algebra, taking the commutator, and projecting
//! back with the triangularity of Lyndon polynomials: the expansion of
//! `P_w` is `w` plus lexicographically larger words. All structure
//! constants are integers and are stored exactly.

pub mod words;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::scalar::{q_to_f64, Scalar, Q};
use crate::tensoralg::series::level_sizes;
use crate::tensoralg::TensorSeries;

pub use words::{lyndon_words, witt_dimension, word_from_index, word_index, Word};

/// Default refusal threshold for the total dimension of a truncated algebra.
pub const DEFAULT_DIMENSION_CAP: usize = 1000;

/// Largest dense tensor level the basis construction is willing to allocate.
const MAX_TENSOR_LEVEL_SIZE: usize = 1 << 22;

/// How a basis element is obtained from earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracketing {
    Letter(u8),
    /// `[left, right]` where both refer to basis indices.
    Pair(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LyndonElement {
    pub word: Word,
    pub level: usize,
    pub bracketing: Bracketing,
}

impl LyndonElement {
    /// Fully bracketed form, e.g. `[1,[1,2]]`.
    pub fn bracket_string(&self, basis: &[LyndonElement]) -> alloc::string::String {
        match self.bracketing {
            Bracketing::Letter(c) => format!("{c}"),
            Bracketing::Pair(l, r) => format!(
                "[{},{}]",
                basis[l].bracket_string(basis),
                basis[r].bracket_string(basis)
            ),
        }
    }
}

/// Ordered Lyndon basis of the free Lie algebra: sorted by level, then
/// lexicographically within a level.
pub fn generate_basis(d: usize, depth: usize) -> Result<Vec<LyndonElement>> {
    generate_basis_capped(d, depth, DEFAULT_DIMENSION_CAP)
}

pub fn generate_basis_capped(d: usize, depth: usize, cap: usize) -> Result<Vec<LyndonElement>> {
    if d == 0 || depth == 0 {
        return Err(Error::InvalidArgument("basis needs d >= 1 and L >= 1".into()));
    }
    let dim: u128 = (1..=depth as u64)
        .map(|j| witt_dimension(d as u64, j) as u128)
        .sum();
    if dim > cap as u128 {
        return Err(Error::DimensionCap { dim: dim as usize, cap });
    }
    let mut words = lyndon_words(d, depth);
    // stable sort keeps the lexicographic order inside each level
    words.sort_by_key(|w| w.len());
    let mut out: Vec<LyndonElement> = Vec::with_capacity(words.len());
    for w in words {
        let bracketing = match w.standard_factorization() {
            None => Bracketing::Letter(w.letters()[0]),
            Some((u, v)) => {
                let find = |x: &Word| out.iter().position(|e| &e.word == x).expect("factor in basis");
                Bracketing::Pair(find(&u), find(&v))
            }
        };
        out.push(LyndonElement { level: w.len(), word: w, bracketing });
    }
    Ok(out)
}

type Sparse = Vec<(u32, i64)>;

/// Basis, tensor expansions and structure constants.
#[derive(Debug, Clone)]
struct LieBasis {
    dim: usize,
    depth: usize,
    elements: Vec<LyndonElement>,
    /// `level_start[k]` is the first index of level `k`; `level_start[depth + 1]` is the total.
    level_start: Vec<usize>,
    /// Expansion of each element at its own level, sparse over word indices.
    expansions: Vec<Sparse>,
    /// `structure[i][j]` expands `[e_i, e_j]` for `j < level_start[depth - level_i + 1]`.
    structure: Vec<Vec<Sparse>>,
    structure_f64: Vec<Vec<Vec<(u32, f64)>>>,
}

impl LieBasis {
    fn build(d: usize, depth: usize, cap: usize) -> Result<Self> {
        let elements = generate_basis_capped(d, depth, cap)?;
        let sizes = level_sizes(d, depth);
        if sizes[depth] > MAX_TENSOR_LEVEL_SIZE {
            return Err(Error::DimensionCap { dim: sizes[depth], cap: MAX_TENSOR_LEVEL_SIZE });
        }
        let mut level_start = vec![0usize; depth + 2];
        for k in 1..=depth {
            level_start[k + 1] = level_start[k] + elements.iter().filter(|e| e.level == k).count();
        }

        let mut expansions: Vec<Sparse> = Vec::with_capacity(elements.len());
        for e in &elements {
            let exp = match e.bracketing {
                Bracketing::Letter(c) => vec![(c as u32 - 1, 1i64)],
                Bracketing::Pair(l, r) => commutator_sparse(
                    &expansions[l],
                    elements[l].level,
                    &expansions[r],
                    elements[r].level,
                    d,
                ),
            };
            expansions.push(exp);
        }

        let mut basis = LieBasis {
            dim: d,
            depth,
            elements,
            level_start,
            expansions,
            structure: Vec::new(),
            structure_f64: Vec::new(),
        };
        let n = basis.elements.len();
        let mut structure = Vec::with_capacity(n);
        for i in 0..n {
            let li = basis.elements[i].level;
            let limit = basis.level_start[depth - li + 1];
            let mut row = Vec::with_capacity(limit);
            for j in 0..limit {
                let lj = basis.elements[j].level;
                let comm = commutator_sparse(
                    &basis.expansions[i],
                    li,
                    &basis.expansions[j],
                    lj,
                    d,
                );
                row.push(basis.project_integer_level(li + lj, &comm)?);
            }
            structure.push(row);
        }
        basis.structure_f64 = structure
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| s.iter().map(|&(k, c)| (k, c as f64)).collect())
                    .collect()
            })
            .collect();
        basis.structure = structure;
        Ok(basis)
    }

    fn len(&self) -> usize {
        self.elements.len()
    }

    /// Exact projection of an integer Lie polynomial homogeneous of level `k`.
    fn project_integer_level(&self, k: usize, poly: &Sparse) -> Result<Sparse> {
        let size = self.dim.pow(k as u32);
        let mut dense = vec![0i64; size];
        for &(w, c) in poly {
            dense[w as usize] += c;
        }
        let mut out = Vec::new();
        for idx in self.level_start[k]..self.level_start[k + 1] {
            let lead = self.elements[idx].word.tensor_index(self.dim);
            let c = dense[lead];
            if c != 0 {
                for &(w, e) in &self.expansions[idx] {
                    dense[w as usize] -= c * e;
                }
                out.push((idx as u32, c));
            }
        }
        if dense.iter().any(|&x| x != 0) {
            return Err(Error::NotPrimitive(f64::INFINITY));
        }
        Ok(out)
    }

    /// Projection of a tensor series onto the basis; returns the
    /// coefficients and the largest leftover coefficient.
    fn project<S: Scalar>(&self, t: &TensorSeries<S>) -> (Vec<S>, f64) {
        let mut coeffs = vec![S::zero(); self.len()];
        let mut residual = t.scalar_part().magnitude();
        let top = self.depth.min(t.depth());
        for k in 1..=top {
            let mut dense: Vec<S> = t.level(k).to_vec();
            for idx in self.level_start[k]..self.level_start[k + 1] {
                let lead = self.elements[idx].word.tensor_index(self.dim);
                let c = dense[lead].clone();
                if c.is_zero() {
                    continue;
                }
                for &(w, e) in &self.expansions[idx] {
                    let slot = &mut dense[w as usize];
                    *slot = slot.clone() - c.clone() * S::from_i64(e);
                }
                coeffs[idx] = c;
            }
            for x in &dense {
                residual = residual.max(x.magnitude());
            }
        }
        (coeffs, residual)
    }

    fn expand<S: Scalar>(&self, coeffs: &[S], depth: usize) -> TensorSeries<S> {
        let mut t = TensorSeries::zero(self.dim, depth);
        for (idx, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let level = self.elements[idx].level;
            if level > depth {
                continue;
            }
            let lvl: &mut [S] = t.level_mut(level);
            for &(w, e) in &self.expansions[idx] {
                let slot = &mut lvl[w as usize];
                *slot = slot.clone() + c.clone() * S::from_i64(e);
            }
        }
        t
    }

    fn bracket_f64(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, row) in self.structure_f64[i].iter().enumerate() {
                let bj = b[j];
                if bj == 0.0 {
                    continue;
                }
                let s = ai * bj;
                for &(k, c) in row {
                    out[k as usize] += s * c;
                }
            }
        }
        out
    }
}

fn commutator_sparse(a: &Sparse, la: usize, b: &Sparse, lb: usize, d: usize) -> Sparse {
    let size = d.pow((la + lb) as u32);
    let pa = d.pow(la as u32);
    let pb = d.pow(lb as u32);
    let mut dense = vec![0i64; size];
    for &(wa, ca) in a {
        for &(wb, cb) in b {
            dense[wa as usize * pb + wb as usize] += ca * cb;
            dense[wb as usize * pa + wa as usize] -= ca * cb;
        }
    }
    dense
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c != 0)
        .map(|(w, c)| (w as u32, c))
        .collect()
}

/// Element of the truncated free Lie algebra, as coefficients over the
/// ordered Lyndon basis of its [`FreeLieAlgebra`].
#[derive(Debug, Clone, PartialEq)]
pub struct LieSeries {
    dim: usize,
    depth: usize,
    coeffs: Vec<f64>,
}

impl LieSeries {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn add(&self, other: &LieSeries) -> LieSeries {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &LieSeries) -> LieSeries {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> LieSeries {
        LieSeries {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }

    pub fn neg(&self) -> LieSeries {
        self.scale(-1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &LieSeries) -> f64 {
        self.sub(other).max_abs()
    }

    fn zip_with(&self, other: &LieSeries, f: impl Fn(f64, f64) -> f64) -> LieSeries {
        assert_eq!(
            (self.dim, self.depth),
            (other.dim, other.depth),
            "LieSeries shape mismatch"
        );
        LieSeries {
            dim: self.dim,
            depth: self.depth,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

/// Baker-Campbell-Hausdorff series in two letters `X = 1`, `Y = 2`,
/// expanded exactly over their Lyndon basis.
#[derive(Debug, Clone)]
struct BchFormula {
    letters: LieBasis,
    coeffs: Vec<Q>,
    coeffs_f64: Vec<f64>,
    /// Coefficients of `ad_X^k Y` (the Lyndon words `1^k 2`), k = 0, 1, ...
    linear_in_y: Vec<f64>,
}

impl BchFormula {
    fn build(depth: usize) -> Result<Self> {
        let letters = LieBasis::build(2, depth, usize::MAX)?;
        let mut ex = TensorSeries::<Q>::zero(2, depth);
        let mut ey = TensorSeries::<Q>::zero(2, depth);
        let mut fact = Q::from_integer(1);
        for k in 0..=depth {
            if k > 0 {
                fact *= Q::from_integer(k as i128);
            }
            let inv = Q::from_integer(1) / fact;
            ex.level_mut(k)[0] = inv;
            let last = ey.level(k).len() - 1;
            ey.level_mut(k)[last] = inv;
        }
        let z = ex.mul(&ey)?.log()?;
        let (coeffs, residual) = letters.project(&z);
        if residual != 0.0 {
            return Err(Error::NotPrimitive(residual));
        }
        let coeffs_f64: Vec<f64> = coeffs.iter().map(q_to_f64).collect();
        let mut linear_in_y = Vec::new();
        for k in 0..depth {
            let mut w = vec![1u8; k];
            w.push(2);
            let w = Word::new(w);
            let idx = letters.elements.iter().position(|e| e.word == w).expect("1^k 2 is Lyndon");
            linear_in_y.push(coeffs_f64[idx]);
        }
        Ok(BchFormula { letters, coeffs, coeffs_f64, linear_in_y })
    }
}

/// Truncated free Lie algebra with its Lyndon basis, structure constants and
/// Baker-Campbell-Hausdorff product.
#[derive(Debug, Clone)]
pub struct FreeLieAlgebra {
    basis: LieBasis,
    bch: BchFormula,
}

impl FreeLieAlgebra {
    pub fn new(d: usize, depth: usize) -> Result<Self> {
        Self::with_cap(d, depth, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(d: usize, depth: usize, cap: usize) -> Result<Self> {
        Ok(FreeLieAlgebra {
            basis: LieBasis::build(d, depth, cap)?,
            bch: BchFormula::build(depth)?,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.basis.dim
    }

    pub fn depth(&self) -> usize {
        self.basis.depth
    }

    /// Total dimension (number of Lyndon words of length at most `depth`).
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[LyndonElement] {
        &self.basis.elements
    }

    /// Index range of the basis elements of level `k`.
    pub fn level_range(&self, k: usize) -> core::ops::Range<usize> {
        self.basis.level_start[k]..self.basis.level_start[k + 1]
    }

    pub fn index_of(&self, word: &Word) -> Option<usize> {
        if word.is_empty() || word.len() > self.depth() {
            return None;
        }
        self.level_range(word.len()).find(|&i| &self.basis.elements[i].word == word)
    }

    pub fn zero(&self) -> LieSeries {
        LieSeries { dim: self.basis.dim, depth: self.basis.depth, coeffs: vec![0.0; self.dimension()] }
    }

    /// The generator `e_i`, `i` in `1..=d`.
    pub fn generator(&self, i: usize) -> LieSeries {
        let mut s = self.zero();
        s.coeffs[i - 1] = 1.0;
        s
    }

    pub fn from_coeffs(&self, coeffs: Vec<f64>) -> Result<LieSeries> {
        if coeffs.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                self.dimension()
            )));
        }
        Ok(LieSeries { dim: self.basis.dim, depth: self.basis.depth, coeffs })
    }

    /// Coefficient of `word` (which must be a basis word) in `s`.
    pub fn coefficient(&self, s: &LieSeries, word: &Word) -> Option<f64> {
        self.index_of(word).map(|i| s.coeffs[i])
    }

    fn check(&self, s: &LieSeries) -> Result<()> {
        if s.dim != self.basis.dim || s.depth != self.basis.depth {
            return Err(Error::DimensionMismatch(format!(
                "series over ({}, {}) used with algebra ({}, {})",
                s.dim, s.depth, self.basis.dim, self.basis.depth
            )));
        }
        Ok(())
    }

    /// Exact structure constants of `[e_i, e_j]`, when the level sum fits.
    pub fn structure_constants(&self, i: usize, j: usize) -> Option<&[(u32, i64)]> {
        self.basis.structure.get(i)?.get(j).map(|v| v.as_slice())
    }

    pub fn bracket(&self, a: &LieSeries, b: &LieSeries) -> Result<LieSeries> {
        self.check(a)?;
        self.check(b)?;
        Ok(LieSeries {
            dim: a.dim,
            depth: a.depth,
            coeffs: self.basis.bracket_f64(&a.coeffs, &b.coeffs),
        })
    }

    fn bracket_unchecked(&self, a: &LieSeries, b: &LieSeries) -> LieSeries {
        LieSeries { dim: a.dim, depth: a.depth, coeffs: self.basis.bracket_f64(&a.coeffs, &b.coeffs) }
    }

    /// Right-nested bracket `[e_{i1}, [e_{i2}, ..., e_{ik}]]` of a word.
    pub fn right_nested(&self, word: &Word) -> LieSeries {
        let letters = word.letters();
        let mut acc = self.generator(*letters.last().expect("nonempty word") as usize);
        for &c in letters[..letters.len() - 1].iter().rev() {
            acc = self.bracket_unchecked(&self.generator(c as usize), &acc);
        }
        acc
    }

    /// Truncated Baker-Campbell-Hausdorff product `log(exp(a) exp(b))`,
    /// evaluated with Lie brackets only.
    pub fn bch(&self, a: &LieSeries, b: &LieSeries) -> Result<LieSeries> {
        self.check(a)?;
        self.check(b)?;
        let formula = &self.bch.letters;
        let mut values: Vec<LieSeries> = Vec::with_capacity(formula.len());
        let mut out = self.zero();
        for (t, e) in formula.elements.iter().enumerate() {
            let v = match e.bracketing {
                Bracketing::Letter(1) => a.clone(),
                Bracketing::Letter(_) => b.clone(),
                Bracketing::Pair(l, r) => self.bracket_unchecked(&values[l], &values[r]),
            };
            let c = self.bch.coeffs_f64[t];
            if c != 0.0 {
                for (o, x) in out.coeffs.iter_mut().zip(&v.coeffs) {
                    *o += c * x;
                }
            }
            values.push(v);
        }
        Ok(out)
    }

    /// Exact BCH coefficient of a two-letter Lyndon word (`1 = X`, `2 = Y`).
    pub fn bch_coefficient(&self, word: &Word) -> Option<Q> {
        let idx = self.bch.letters.elements.iter().position(|e| &e.word == word)?;
        Some(self.bch.coeffs[idx])
    }

    /// Derivative at `s = 0` of `bch(g, s y)`: the part of the BCH series that
    /// is linear in the second argument, `sum_k c_k ad_g^k y`.
    pub fn bch_linear_in_second(&self, g: &LieSeries, y: &LieSeries) -> Result<LieSeries> {
        self.check(g)?;
        self.check(y)?;
        let mut term = y.clone();
        let mut out = y.scale(self.bch.linear_in_y[0]);
        for &c in &self.bch.linear_in_y[1..] {
            term = self.bracket_unchecked(g, &term);
            if c != 0.0 {
                out = out.add(&term.scale(c));
            }
        }
        Ok(out)
    }

    /// Expansion of a Lie element into the tensor algebra truncated at `depth`.
    pub fn to_tensor(&self, s: &LieSeries) -> TensorSeries {
        self.basis.expand(&s.coeffs, self.depth())
    }

    /// Coordinates of a Lie element given in the tensor algebra. Fails when
    /// the leftover after projection exceeds `tol` times the input scale.
    pub fn project_with_tolerance(&self, t: &TensorSeries, tol: f64) -> Result<LieSeries> {
        if t.dim() != self.basis.dim {
            return Err(Error::DimensionMismatch(format!(
                "tensor over R^{} projected onto algebra over {} letters",
                t.dim(),
                self.basis.dim
            )));
        }
        let (coeffs, residual) = self.basis.project(t);
        let scale = t.max_abs().max(1.0);
        if residual > tol * scale {
            return Err(Error::NotPrimitive(residual));
        }
        let mut coeffs = coeffs;
        coeffs.resize(self.dimension(), 0.0);
        Ok(LieSeries { dim: self.basis.dim, depth: self.basis.depth, coeffs })
    }

    pub fn project(&self, t: &TensorSeries) -> Result<LieSeries> {
        self.project_with_tolerance(t, 1e-8)
    }

    /// Exact projection of a rational Lie polynomial.
    pub fn project_exact(&self, t: &TensorSeries<Q>) -> Result<Vec<Q>> {
        let (coeffs, residual) = self.basis.project(t);
        if residual != 0.0 {
            return Err(Error::NotPrimitive(residual));
        }
        Ok(coeffs)
    }

    /// Exact bracket of two rational coefficient vectors.
    pub fn bracket_exact(&self, a: &[Q], b: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::from_integer(0); self.dimension()];
        for (i, ai) in a.iter().enumerate() {
            if *ai == Q::from_integer(0) {
                continue;
            }
            for (j, row) in self.basis.structure[i].iter().enumerate() {
                let bj = b[j];
                if bj == Q::from_integer(0) {
                    continue;
                }
                for &(k, c) in row {
                    out[k as usize] += ai * bj * Q::from_integer(c as i128);
                }
            }
        }
        out
    }
}

impl fmt::Display for LieSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests;
