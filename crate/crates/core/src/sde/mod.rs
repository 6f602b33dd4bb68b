//! Polynomial vector fields, their Lie brackets, bracket-span diagnostics and
//! flows driven by piecewise-linear paths.

mod flow;

pub use flow::{integrate_flow, integrate_flow_with, CompiledFields, FlowOptions, FlowResult};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::freelie::{word_from_index, Bracketing, FreeLieAlgebra, Word};
use crate::poly::Poly;
use crate::scalar::Q;

pub const RANK_TOLERANCE: f64 = 1e-10;

/// `V = sum_k V^k d/dx_k` with polynomial components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    comps: Vec<Poly>,
}

impl VectorField {
    pub fn new(comps: Vec<Poly>) -> Result<Self> {
        let n = comps.len();
        if n == 0 {
            return Err(Error::InvalidArgument("vector field needs at least one component".into()));
        }
        if comps.iter().any(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch(format!("components of a field on R^{n} must have {n} variables")));
        }
        Ok(VectorField { comps })
    }

    pub fn zero(n: usize) -> Self {
        VectorField { comps: (0..n).map(|_| Poly::zero(n)).collect() }
    }

    /// The coordinate field `d/dx_{i+1}`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut v = VectorField::zero(n);
        v.comps[i] = Poly::int(n, 1);
        v
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Poly] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    /// Derivation `V f = sum_k V^k df/dx_k`.
    pub fn apply(&self, f: &Poly) -> Poly {
        let mut out = Poly::zero(self.dim());
        for (k, c) in self.comps.iter().enumerate() {
            let d = f.derivative(k);
            if !d.is_zero() && !c.is_zero() {
                out = out.add(&c.mul(&d));
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval(x);
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scale(&self, c: &Q) -> VectorField {
        VectorField { comps: self.comps.iter().map(|a| a.scale(c)).collect() }
    }

    /// Relabels coordinates by `x_i -> x_{perm[i]}`.
    pub fn permute_vars(&self, perm: &[usize]) -> VectorField {
        let mut comps = alloc::vec![Poly::zero(self.dim()); self.dim()];
        for (i, c) in self.comps.iter().enumerate() {
            comps[perm[i]] = c.permute_vars(perm);
        }
        VectorField { comps }
    }
}

/// `[V, W]^j = V(W^j) - W(V^j)`.
pub fn lie_bracket_vf(v: &VectorField, w: &VectorField) -> VectorField {
    assert_eq!(v.dim(), w.dim(), "fields on different spaces");
    let comps = v.comps.iter().zip(&w.comps).map(|(vj, wj)| v.apply(wj).sub(&w.apply(vj))).collect();
    VectorField { comps }
}

/// `d` polynomial fields `V_1, ..., V_d` on `R^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorFieldSpec {
    n: usize,
    fields: Vec<VectorField>,
}

impl VectorFieldSpec {
    pub fn new(fields: Vec<VectorField>) -> Result<Self> {
        let n = fields.first().map(VectorField::dim).ok_or_else(|| Error::InvalidArgument("no vector fields".into()))?;
        if fields.iter().any(|f| f.dim() != n) {
            return Err(Error::DimensionMismatch("vector fields on different spaces".into()));
        }
        Ok(VectorFieldSpec { n, fields })
    }

    /// `V_1 = d/dx`, `V_2 = d/dy + x d/dz` on `R^3`.
    pub fn heisenberg() -> Self {
        let x = Poly::var(3, 0);
        let v2 = VectorField::new(alloc::vec![Poly::zero(3), Poly::int(3, 1), x]).unwrap();
        VectorFieldSpec { n: 3, fields: alloc::vec![VectorField::coordinate(3, 0), v2] }
    }

    /// The coordinate fields of `R^n`.
    pub fn coordinate(n: usize) -> Self {
        VectorFieldSpec { n, fields: (0..n).map(|i| VectorField::coordinate(n, i)).collect() }
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> &VectorField {
        &self.fields[i - 1]
    }

    /// Right-nested `V_I = [V_{i_1}, [V_{i_2}, ..., V_{i_k}]]`.
    pub fn iterated_bracket(&self, word: &Word) -> Result<VectorField> {
        if word.is_empty() || !word.fits_alphabet(self.fields.len()) {
            return Err(Error::InvalidArgument(format!("word {word} is not over 1..={}", self.fields.len())));
        }
        let l = word.letters();
        let mut acc = self.field(l[l.len() - 1] as usize).clone();
        for &i in l[..l.len() - 1].iter().rev() {
            acc = lie_bracket_vf(self.field(i as usize), &acc);
        }
        Ok(acc)
    }

    /// Image of every Lyndon basis element of `alg` under `e_i -> V_i`.
    pub fn lyndon_fields(&self, alg: &FreeLieAlgebra) -> Result<Vec<VectorField>> {
        if alg.alphabet_size() != self.fields.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} fields for an algebra on {} letters",
                self.fields.len(),
                alg.alphabet_size()
            )));
        }
        let mut out: Vec<VectorField> = Vec::with_capacity(alg.dimension());
        for e in alg.basis() {
            let f = match e.bracketing {
                Bracketing::Letter(i) => self.field(i as usize).clone(),
                Bracketing::Pair(a, b) => lie_bracket_vf(&out[a], &out[b]),
            };
            out.push(f);
        }
        Ok(out)
    }

    /// Swaps field labels by `V_i -> V_{perm[i]}` (0-based).
    pub fn permute_fields(&self, perm: &[usize]) -> Self {
        let mut fields = self.fields.clone();
        for (i, f) in self.fields.iter().enumerate() {
            fields[perm[i]] = f.clone();
        }
        VectorFieldSpec { n: self.n, fields }
    }

    /// True when every pair of fields commutes exactly.
    pub fn is_commuting(&self) -> bool {
        let d = self.fields.len();
        (0..d).all(|i| (i + 1..d).all(|j| lie_bracket_vf(&self.fields[i], &self.fields[j]).is_zero()))
    }

    pub fn compile(&self) -> CompiledFields {
        CompiledFields::new(self)
    }

    /// All `V_I` with `|I| = k`, in lexicographic word order.
    fn level_brackets(&self, k: usize, memo: &mut BTreeMap<Vec<u8>, VectorField>) -> Vec<VectorField> {
        let d = self.fields.len();
        (0..d.pow(k as u32))
            .map(|idx| {
                let w = word_from_index(idx, k, d);
                self.memo_bracket(w.letters(), memo)
            })
            .collect()
    }

    fn memo_bracket(&self, letters: &[u8], memo: &mut BTreeMap<Vec<u8>, VectorField>) -> VectorField {
        if let Some(f) = memo.get(letters) {
            return f.clone();
        }
        let f = if letters.len() == 1 {
            self.field(letters[0] as usize).clone()
        } else {
            let tail = self.memo_bracket(&letters[1..], memo);
            lie_bracket_vf(self.field(letters[0] as usize), &tail)
        };
        memo.insert(letters.to_vec(), f.clone());
        f
    }
}

/// Numerical rank of the columns, singular values above `RANK_TOLERANCE`
/// times the largest.
pub fn numerical_rank(n: usize, columns: &[Vec<f64>]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let sv = m.singular_values();
    let top = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

fn eval_columns(fields: &[VectorField], x: &[f64]) -> Vec<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            let mut v = alloc::vec![0.0; f.dim()];
            f.eval(x, &mut v);
            v
        })
        .collect()
}

fn check_point(vf: &VectorFieldSpec, x: &[f64]) -> Result<()> {
    if x.len() != vf.n {
        return Err(Error::DimensionMismatch(format!("point in R^{} for fields on R^{}", x.len(), vf.n)));
    }
    Ok(())
}

/// Rank of `{ V_I(x) : pmin <= |I| <= kmax }`.
pub fn bracket_span_rank(vf: &VectorFieldSpec, x: &[f64], pmin: usize, kmax: usize) -> Result<usize> {
    check_point(vf, x)?;
    if pmin == 0 || kmax < pmin {
        return Err(Error::InvalidArgument(format!("need 1 <= pmin <= K, got pmin = {pmin}, K = {kmax}")));
    }
    let mut memo = BTreeMap::new();
    let mut cols = Vec::new();
    for k in pmin..=kmax {
        cols.extend(eval_columns(&vf.level_brackets(k, &mut memo), x));
    }
    Ok(numerical_rank(vf.n, &cols))
}

/// `sum_{k > N} k (dim U_k - dim U_{k-1})` with `U_k` spanned by the `V_I(x)`,
/// `N < |I| <= k`, summed up to the first level where `U_k = R^n`.
pub fn graded_dimension(vf: &VectorFieldSpec, x: &[f64], step: usize, kmax: usize) -> Result<usize> {
    check_point(vf, x)?;
    let mut memo = BTreeMap::new();
    let mut cols = Vec::new();
    let mut prev = 0;
    let mut total = 0;
    for k in step + 1..=kmax {
        cols.extend(eval_columns(&vf.level_brackets(k, &mut memo), x));
        let dim = numerical_rank(vf.n, &cols);
        total += k * (dim - prev);
        prev = dim;
        if dim == vf.n {
            return Ok(total);
        }
    }
    Err(Error::HypothesisFailure(kmax))
}
