//! Chen-Strichartz coefficients.
//!
//! For a word `I = (i_1, ..., i_k)`,
//!
//! ```text
//! Lambda_I = sum_{sigma in S_k} (-1)^{e(sigma)} / (k^2 C(k-1, e(sigma)))
//!            * S^{(i_{sigma^-1(1)}, ..., i_{sigma^-1(k)})}
//! ```
//!
//! where `e(sigma)` counts descents and `S^J` is the iterated integral of the
//! path along `J`. Summing `Lambda_I` times the right-nested bracket `U_I`
//! over all words gives the log-signature, so `k * Lambda_I` is the
//! coefficient of the word `I` in the tensor logarithm.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::freelie::{word_from_index, FreeLieAlgebra, LieSeries, Word};
use crate::tensoralg::PiecewiseLinearPath;

pub const DEFAULT_LAMBDA_LEVEL_CAP: usize = 4;

/// Number of descents `#{ j : sigma(j) > sigma(j+1) }` of a permutation.
pub fn descents(perm: &[usize]) -> usize {
    perm.windows(2).filter(|w| w[0] > w[1]).count()
}

/// A permutation of `{0, ..., k-1}` with its descent count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentStatistic {
    permutation: Vec<usize>,
    descents: usize,
}

impl DescentStatistic {
    pub fn new(permutation: Vec<usize>) -> Result<Self> {
        let k = permutation.len();
        let mut seen = vec![false; k];
        for &p in &permutation {
            if p >= k || seen[p] {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
            seen[p] = true;
        }
        let descents = descents(&permutation);
        Ok(DescentStatistic { permutation, descents })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn descents(&self) -> usize {
        self.descents
    }
}

/// Lexicographic successor; returns false after the last permutation.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Iterated integral `int_{t_1 < ... < t_k} dx^{i_1} ... dx^{i_k}` of a
/// piecewise-linear path, by exact polynomial integration on each segment.
pub fn iterated_integral(path: &PiecewiseLinearPath, word: &[u8]) -> f64 {
    let k = word.len();
    if k == 0 {
        return 1.0;
    }
    let d = path.dim();
    let mut totals = vec![0.0f64; k + 1];
    totals[0] = 1.0;
    // polys[j] holds the coefficients of f_j(u) on the current segment, u in [0, 1]
    let mut polys: Vec<Vec<f64>> = (0..=k).map(|j| vec![0.0; j + 1]).collect();
    let mut inc = vec![0.0; d];
    for s in 0..path.num_segments() {
        path.increment(s, &mut inc);
        polys[0][0] = 1.0;
        for j in 1..=k {
            let dx = inc[word[j - 1] as usize - 1];
            let (lower, upper) = polys.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            cur[0] = totals[j];
            for (n, c) in prev.iter().enumerate() {
                cur[n + 1] = dx * c / (n + 1) as f64;
            }
        }
        for j in 1..=k {
            totals[j] = polys[j].iter().sum();
        }
    }
    totals[k]
}

/// Memoized iterated integrals of one path, keyed by word.
struct IntegralCache<'a> {
    path: &'a PiecewiseLinearPath,
    cache: BTreeMap<Vec<u8>, f64>,
}

impl<'a> IntegralCache<'a> {
    fn new(path: &'a PiecewiseLinearPath) -> Self {
        IntegralCache { path, cache: BTreeMap::new() }
    }

    fn get(&mut self, word: &[u8]) -> f64 {
        if let Some(v) = self.cache.get(word) {
            return *v;
        }
        let v = iterated_integral(self.path, word);
        self.cache.insert(word.to_vec(), v);
        v
    }

    fn lambda(&mut self, word: &[u8]) -> f64 {
        let k = word.len();
        let kk = (k * k) as f64;
        let mut sigma: Vec<usize> = (0..k).collect();
        let mut inverse = vec![0usize; k];
        let mut permuted = vec![0u8; k];
        let mut total = 0.0;
        loop {
            let e = descents(&sigma);
            for (j, &s) in sigma.iter().enumerate() {
                inverse[s] = j;
            }
            for (slot, &src) in permuted.iter_mut().zip(&inverse) {
                *slot = word[src];
            }
            let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
            total += sign / (kk * binomial(k - 1, e)) * self.get(&permuted);
            if !next_permutation(&mut sigma) {
                break;
            }
        }
        total
    }
}

/// `Lambda_I` for words up to [`DEFAULT_LAMBDA_LEVEL_CAP`] letters.
pub fn strichartz_lambda(path: &PiecewiseLinearPath, word: &Word) -> Result<f64> {
    strichartz_lambda_capped(path, word, DEFAULT_LAMBDA_LEVEL_CAP)
}

pub fn strichartz_lambda_capped(path: &PiecewiseLinearPath, word: &Word, cap: usize) -> Result<f64> {
    if word.len() > cap {
        return Err(Error::LevelCap { len: word.len(), cap });
    }
    if word.is_empty() || !word.fits_alphabet(path.dim()) {
        return Err(Error::InvalidArgument("word letters must lie in 1..=d".into()));
    }
    Ok(IntegralCache::new(path).lambda(word.letters()))
}

/// The Lie element `sum_{|I| <= L} Lambda_I U_I` written in the Lyndon basis
/// of `alg`, with `U_I` the right-nested bracket of the word.
pub fn strichartz_log_signature(alg: &FreeLieAlgebra, path: &PiecewiseLinearPath) -> Result<LieSeries> {
    let depth = alg.depth();
    if depth > DEFAULT_LAMBDA_LEVEL_CAP {
        return Err(Error::LevelCap { len: depth, cap: DEFAULT_LAMBDA_LEVEL_CAP });
    }
    let d = path.dim();
    if d != alg.alphabet_size() {
        return Err(Error::DimensionMismatch("path and algebra alphabets differ".into()));
    }
    let mut cache = IntegralCache::new(path);
    let mut out = alg.zero();
    for k in 1..=depth {
        for idx in 0..d.pow(k as u32) {
            let w = word_from_index(idx, k, d);
            let lambda = cache.lambda(w.letters());
            if lambda != 0.0 {
                out = out.add(&alg.right_nested(&w).scale(lambda));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensoralg::{log_signature, path_signature};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> PiecewiseLinearPath {
        PiecewiseLinearPath::from_points(&[
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[1.0, 1.0],
            &[0.0, 1.0],
            &[0.0, 0.0],
        ])
        .unwrap()
    }

    fn random_path(rng: &mut ChaCha8Rng, d: usize, knots: usize) -> PiecewiseLinearPath {
        let v = (0..d * knots)
            .map(|_| (rng.next_u64() as f64 / u64::MAX as f64) * 2.0 - 1.0)
            .collect();
        PiecewiseLinearPath::uniform(d, 1.0, v).unwrap()
    }

    #[test]
    fn descent_counts() {
        assert_eq!(descents(&[0, 1, 2]), 0);
        assert_eq!(descents(&[2, 1, 0]), 2);
        assert_eq!(descents(&[1, 0, 2]), 1);
        assert!(DescentStatistic::new(vec![0, 0]).is_err());
        let s = DescentStatistic::new(vec![3, 1, 2, 0]).unwrap();
        assert_eq!(s.descents(), 2);
    }

    #[test]
    fn permutation_enumeration_is_complete() {
        let mut p = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut p) {
            n += 1;
        }
        assert_eq!(n, 24);
    }

    #[test]
    fn single_segment_integral() {
        let p = PiecewiseLinearPath::from_points(&[&[0.0, 0.0], &[3.0, -2.0]]).unwrap();
        assert!((iterated_integral(&p, &[1, 2]) - (-3.0)).abs() < 1e-15);
        assert!((iterated_integral(&p, &[1, 1, 1]) - 4.5).abs() < 1e-14);
    }

    #[test]
    fn closed_path_has_no_increment() {
        assert!(iterated_integral(&square(), &[1]).abs() < 1e-15);
        assert!(iterated_integral(&square(), &[2]).abs() < 1e-15);
    }

    #[test]
    fn integrals_match_signature_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_path(&mut rng, 3, 6);
        let sig = path_signature(&p, 4);
        for k in 1..=4 {
            for idx in 0..3usize.pow(k as u32) {
                let w = word_from_index(idx, k, 3);
                let a = iterated_integral(&p, w.letters());
                assert!((a - sig.level(k)[idx]).abs() < 1e-12, "{w}");
            }
        }
    }

    #[test]
    fn lambda_level_one_is_increment() {
        let p = PiecewiseLinearPath::from_points(&[&[1.0, 2.0], &[0.5, 4.0], &[2.0, 3.0]]).unwrap();
        assert!((strichartz_lambda(&p, &Word::letter(1)).unwrap() - 1.0).abs() < 1e-15);
        assert!((strichartz_lambda(&p, &Word::letter(2)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_on_the_square() {
        // Lambda_12 = (S^12 - S^21) / 4 = area / 2; with Lambda_21 = -Lambda_12 the
        // bracket [1,2] collects 2 * Lambda_12 = 1
        let l = strichartz_lambda(&square(), &Word::new(vec![1, 2])).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
        let l = strichartz_lambda(&square(), &Word::new(vec![1, 1])).unwrap();
        assert!(l.abs() < 1e-15);
        let alg = FreeLieAlgebra::new(2, 2).unwrap();
        let ls = strichartz_log_signature(&alg, &square()).unwrap();
        assert!((alg.coefficient(&ls, &Word::new(vec![1, 2])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn level_cap() {
        let w = Word::new(vec![1, 2, 1, 2, 2]);
        assert!(matches!(
            strichartz_lambda(&square(), &w),
            Err(Error::LevelCap { len: 5, cap: 4 })
        ));
    }

    #[test]
    fn k_lambda_is_the_tensor_log_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_path(&mut rng, 2, 5);
        let log = path_signature(&p, 4).log().unwrap();
        for k in 1..=4 {
            for idx in 0..2usize.pow(k as u32) {
                let w = word_from_index(idx, k, 2);
                let l = strichartz_lambda(&p, &w).unwrap();
                assert!((k as f64 * l - log.level(k)[idx]).abs() < 1e-12, "{w}");
            }
        }
    }

    #[test]
    fn lambda_sum_reproduces_log_signature() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 2..=3 {
            let alg = FreeLieAlgebra::new(d, 4).unwrap();
            let p = random_path(&mut rng, d, 5);
            let a = strichartz_log_signature(&alg, &p).unwrap();
            let b = log_signature(&alg, &p).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }
}
