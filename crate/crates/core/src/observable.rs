//! Observables `f(x) = sum_w C_w(x) cos(w.x) + S_w(x) sin(w.x)` with
//! polynomial `C_w`, `S_w` and rational frequency vectors `w`. The class is
//! closed under products and under derivations by polynomial vector fields,
//! so `V_I V_J f` stays exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::{fmt_q, CompiledPoly, Poly};
use crate::scalar::{q, q_to_f64, Q};
use crate::sde::VectorField;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Mode {
    cos: Poly,
    sin: Poly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    n: usize,
    /// Keyed by frequency; the first nonzero entry of a key is positive.
    modes: BTreeMap<Vec<Q>, Mode>,
}

fn is_negative(freq: &[Q]) -> bool {
    freq.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative())
}

impl Observable {
    pub fn zero(n: usize) -> Self {
        Observable { n, modes: BTreeMap::new() }
    }

    pub fn poly(p: Poly) -> Self {
        let n = p.nvars();
        let mut o = Observable::zero(n);
        o.add_mode(vec![Q::zero(); n], p, Poly::zero(n));
        o
    }

    pub fn constant(n: usize, c: Q) -> Self {
        Observable::poly(Poly::constant(n, c))
    }

    /// `cos(w.x)`.
    pub fn cos(freq: Vec<Q>) -> Self {
        let n = freq.len();
        let mut o = Observable::zero(n);
        o.add_mode(freq, Poly::int(n, 1), Poly::zero(n));
        o
    }

    /// `sin(w.x)`.
    pub fn sin(freq: Vec<Q>) -> Self {
        let n = freq.len();
        let mut o = Observable::zero(n);
        o.add_mode(freq, Poly::zero(n), Poly::int(n, 1));
        o
    }

    fn add_mode(&mut self, mut freq: Vec<Q>, cos: Poly, mut sin: Poly) {
        if is_negative(&freq) {
            freq.iter_mut().for_each(|c| *c = -*c);
            sin = sin.neg();
        }
        if freq.iter().all(Zero::is_zero) {
            sin = Poly::zero(self.n);
        }
        if cos.is_zero() && sin.is_zero() {
            return;
        }
        let n = self.n;
        let entry = self.modes.entry(freq).or_insert_with(|| Mode { cos: Poly::zero(n), sin: Poly::zero(n) });
        entry.cos = entry.cos.add(&cos);
        entry.sin = entry.sin.add(&sin);
        if entry.cos.is_zero() && entry.sin.is_zero() {
            self.modes.retain(|_, m| !(m.cos.is_zero() && m.sin.is_zero()));
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Some polynomial when no trigonometric mode is present.
    pub fn as_poly(&self) -> Option<Poly> {
        match self.modes.len() {
            0 => Some(Poly::zero(self.n)),
            1 => {
                let (f, m) = self.modes.iter().next()?;
                f.iter().all(Zero::is_zero).then(|| m.cos.clone())
            }
            _ => None,
        }
    }

    pub fn add(&self, other: &Observable) -> Observable {
        let mut out = self.clone();
        for (f, m) in &other.modes {
            out.add_mode(f.clone(), m.cos.clone(), m.sin.clone());
        }
        out
    }

    pub fn sub(&self, other: &Observable) -> Observable {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Observable {
        self.scale(&-Q::from_integer(1))
    }

    pub fn scale(&self, c: &Q) -> Observable {
        let mut out = Observable::zero(self.n);
        for (f, m) in &self.modes {
            out.add_mode(f.clone(), m.cos.scale(c), m.sin.scale(c));
        }
        out
    }

    pub fn mul(&self, other: &Observable) -> Observable {
        let half = q(1, 2);
        let mut out = Observable::zero(self.n);
        for (a, ma) in &self.modes {
            for (b, mb) in &other.modes {
                let sum: Vec<Q> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let diff: Vec<Q> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let cc = ma.cos.mul(&mb.cos);
                let ss = ma.sin.mul(&mb.sin);
                let cs = ma.cos.mul(&mb.sin);
                let sc = ma.sin.mul(&mb.cos);
                out.add_mode(sum, cc.sub(&ss).scale(&half), cs.add(&sc).scale(&half));
                out.add_mode(diff, cc.add(&ss).scale(&half), sc.sub(&cs).scale(&half));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Observable {
        let mut out = Observable::constant(self.n, Q::from_integer(1));
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative in the 0-based coordinate `i`.
    pub fn derivative(&self, i: usize) -> Observable {
        let mut out = Observable::zero(self.n);
        for (f, m) in &self.modes {
            let w = f[i];
            out.add_mode(
                f.clone(),
                m.cos.derivative(i).add(&m.sin.scale(&w)),
                m.sin.derivative(i).sub(&m.cos.scale(&w)),
            );
        }
        out
    }

    /// `V f = sum_k V^k df/dx_k`.
    pub fn apply_field(&self, v: &VectorField) -> Result<Observable> {
        if v.dim() != self.n {
            return Err(Error::DimensionMismatch(format!("field on R^{} applied to observable on R^{}", v.dim(), self.n)));
        }
        let mut out = Observable::zero(self.n);
        for (k, c) in v.components().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = self.derivative(k);
            out = out.add(&d.mul(&Observable::poly(c.clone())));
        }
        Ok(out)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.compile().eval(x)
    }

    /// Relabels coordinates by `x_i -> x_{perm[i]}`.
    pub fn permute_vars(&self, perm: &[usize]) -> Observable {
        let mut out = Observable::zero(self.n);
        for (f, m) in &self.modes {
            let mut g = vec![Q::zero(); self.n];
            for (i, c) in f.iter().enumerate() {
                g[perm[i]] = *c;
            }
            out.add_mode(g, m.cos.permute_vars(perm), m.sin.permute_vars(perm));
        }
        out
    }

    pub fn compile(&self) -> CompiledObservable {
        CompiledObservable {
            modes: self
                .modes
                .iter()
                .map(|(f, m)| {
                    let trig = !f.iter().all(Zero::is_zero);
                    let freq = f.iter().map(q_to_f64).collect();
                    let sin = (!m.sin.is_zero()).then(|| m.sin.compile());
                    (trig, freq, m.cos.compile(), sin)
                })
                .collect(),
        }
    }
}

/// Floating-point evaluation form of an [`Observable`].
#[derive(Debug, Clone)]
pub struct CompiledObservable {
    modes: Vec<(bool, Vec<f64>, CompiledPoly, Option<CompiledPoly>)>,
}

impl CompiledObservable {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (trig, freq, c, s) in &self.modes {
            if !trig {
                total += c.eval(x);
                continue;
            }
            let theta: f64 = freq.iter().zip(x).map(|(w, xi)| w * xi).sum();
            total += c.eval(x) * libm::cos(theta);
            if let Some(s) = s {
                total += s.eval(x) * libm::sin(theta);
            }
        }
        total
    }
}

fn fmt_freq(f: &[Q]) -> String {
    let parts: Vec<String> = f
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| {
            if *c == Q::from_integer(1) {
                format!("x{}", i + 1)
            } else {
                format!("{}*x{}", fmt_q(c), i + 1)
            }
        })
        .collect();
    parts.join(" + ")
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.modes.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (freq, m) in &self.modes {
            let trig = !freq.iter().all(Zero::is_zero);
            for (poly, name) in [(&m.cos, "cos"), (&m.sin, "sin")] {
                if poly.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                if trig {
                    match poly.as_constant() {
                        Some(c) if c == Q::from_integer(1) => write!(f, "{name}({})", fmt_freq(freq))?,
                        Some(c) if c == Q::from_integer(-1) => write!(f, "-{name}({})", fmt_freq(freq))?,
                        Some(c) => write!(f, "{}*{name}({})", fmt_q(&c), fmt_freq(freq))?,
                        None => write!(f, "({poly})*{name}({})", fmt_freq(freq))?,
                    }
                } else {
                    write!(f, "{poly}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::VectorFieldSpec;

    fn z_freq(l: Q) -> Vec<Q> {
        vec![Q::zero(), Q::zero(), l]
    }

    #[test]
    fn trig_identities() {
        let c = Observable::cos(z_freq(q(1, 1)));
        let s = Observable::sin(z_freq(q(1, 1)));
        let one = c.mul(&c).add(&s.mul(&s));
        assert_eq!(one, Observable::constant(3, q(1, 1)));
        assert_eq!(Observable::cos(z_freq(q(-2, 1))), Observable::cos(z_freq(q(2, 1))));
        assert_eq!(Observable::sin(z_freq(q(-2, 1))), Observable::sin(z_freq(q(2, 1))).neg());
        assert!(Observable::sin(vec![Q::zero(); 3]).is_zero());
        let double = c.mul(&s).scale(&q(2, 1));
        assert_eq!(double, Observable::sin(z_freq(q(2, 1))));
    }

    #[test]
    fn derivative_of_cos() {
        let c = Observable::cos(z_freq(q(3, 1)));
        assert_eq!(c.derivative(2), Observable::sin(z_freq(q(3, 1))).scale(&q(-3, 1)));
        assert!(c.derivative(0).is_zero());
        assert_eq!(c.derivative(2).derivative(2), c.scale(&q(-9, 1)));
    }

    #[test]
    fn field_action() {
        let h = VectorFieldSpec::heisenberg();
        let z2 = Observable::poly(Poly::var(3, 2).pow(2));
        let dz = h.iterated_bracket(&crate::Word::new(vec![1, 2])).unwrap();
        let second = z2.apply_field(&dz).unwrap().apply_field(&dz).unwrap();
        assert_eq!(second, Observable::constant(3, q(2, 1)));
        // V_2 cos(z) = -x sin(z)
        let v2c = Observable::cos(z_freq(q(1, 1))).apply_field(h.field(2)).unwrap();
        let expect = Observable::sin(z_freq(q(1, 1))).mul(&Observable::poly(Poly::var(3, 0))).neg();
        assert_eq!(v2c, expect);
    }

    #[test]
    fn evaluation() {
        let x = Observable::poly(Poly::var(2, 0));
        let f = x.mul(&Observable::cos(vec![q(1, 2), q(1, 1)])).add(&Observable::sin(vec![q(0, 1), q(2, 1)]));
        let pt = [0.4, -1.1];
        let expect = 0.4 * libm::cos(0.2 - 1.1) + libm::sin(-2.2);
        assert!((f.eval(&pt) - expect).abs() < 1e-15);
        assert_eq!(x.as_poly(), Some(Poly::var(2, 0)));
        assert_eq!(f.as_poly(), None);
    }

    #[test]
    fn display() {
        use alloc::string::ToString;
        let f = Observable::cos(z_freq(q(1, 2))).add(&Observable::poly(Poly::var(3, 0)));
        assert_eq!(f.to_string(), "x1 + cos(1/2*x3)");
    }
}
