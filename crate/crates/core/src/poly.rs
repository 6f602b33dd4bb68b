//! Multivariate polynomials over the rationals.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{q_to_f64, Q};

/// Sparse polynomial in `n` variables; monomials are exponent vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u16>, Q>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Q) -> Self {
        let mut p = Poly::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    pub fn int(n: usize, c: i64) -> Self {
        Poly::constant(n, Q::from_integer(c as i128))
    }

    /// The coordinate `x_{i+1}` (0-based index `i`).
    pub fn var(n: usize, i: usize) -> Self {
        assert!(i < n, "variable index out of range");
        let mut e = vec![0; n];
        e[i] = 1;
        let mut p = Poly::zero(n);
        p.add_term(e, Q::one());
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u16>, Q)>) -> Result<Self> {
        let mut p = Poly::zero(n);
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::DimensionMismatch(format!("monomial of length {} in {n} variables", e.len())));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u16>, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e);
        match entry {
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u16], &Q)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().map(|&k| k as u32).sum()).max()
    }

    /// The constant if the polynomial is one.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&vec![0u16; self.n]).copied(),
            _ => None,
        }
    }

    fn same_ring(&self, other: &Poly) {
        assert_eq!(self.n, other.n, "polynomials in different numbers of variables");
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.same_ring(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.n);
        }
        Poly { n: self.n, terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.same_ring(other);
        let mut out = Poly::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::int(self.n, 1);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative in the variable with 0-based index `i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(f, c * Q::from_integer(e[i] as i128));
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| q_to_f64(c) * monomial(e, x)).sum()
    }

    pub fn eval_exact(&self, x: &[Q]) -> Q {
        let mut total = Q::zero();
        for (e, c) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t *= xi;
                }
            }
            total += t;
        }
        total
    }

    /// Substitutes the variable permutation `x_i -> x_{perm[i]}`.
    pub fn permute_vars(&self, perm: &[usize]) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            let mut f = vec![0u16; self.n];
            for (i, &k) in e.iter().enumerate() {
                f[perm[i]] = k;
            }
            out.add_term(f, *c);
        }
        out
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let powers = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i as u32, k as u32)).collect();
                    (q_to_f64(c), powers)
                })
                .collect(),
        }
    }
}

fn monomial(e: &[u16], x: &[f64]) -> f64 {
    e.iter().zip(x).fold(1.0, |acc, (&k, &xi)| acc * powi(xi, k as u32))
}

#[inline]
fn powi(x: f64, k: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..k {
        r *= x;
    }
    r
}

/// Floating-point evaluation form of a [`Poly`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(u32, u32)>)>,
}

impl CompiledPoly {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (c, powers) in &self.terms {
            let mut t = *c;
            for &(i, k) in powers {
                t *= powi(x[i as usize], k);
            }
            s += t;
        }
        s
    }
}

pub(crate) fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    /// Terms in decreasing monomial order, e.g. `x1^2*x3 - 1/2*x2 + 3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, p) })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", fmt_q(&a))?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_q(&a), vars.join("*"))?;
            }
        }
        Ok(())
    }
}
