use alloc::vec::Vec;
use core::fmt;

/// A word over the alphabet `{1, ..., d}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(letters: Vec<u8>) -> Self {
        Word(letters)
    }

    pub fn letter(i: u8) -> Self {
        Word(alloc::vec![i])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every letter lies in `1..=d`.
    pub fn fits_alphabet(&self, d: usize) -> bool {
        self.0.iter().all(|&c| c >= 1 && (c as usize) <= d)
    }

    /// Lyndon test by definition: strictly smaller than every proper rotation.
    pub fn is_lyndon(&self) -> bool {
        let n = self.0.len();
        if n == 0 {
            return false;
        }
        (1..n).all(|r| {
            let rotated = self.0[r..].iter().chain(self.0[..r].iter());
            self.0.iter().cmp(rotated) == core::cmp::Ordering::Less
        })
    }

    /// Standard factorization `w = u v` with `v` the longest proper Lyndon suffix.
    pub fn standard_factorization(&self) -> Option<(Word, Word)> {
        if self.0.len() < 2 {
            return None;
        }
        (1..self.0.len()).find_map(|split| {
            let v = Word(self.0[split..].to_vec());
            v.is_lyndon().then(|| (Word(self.0[..split].to_vec()), v))
        })
    }

    /// Index of the word inside a dense level of the tensor algebra.
    pub fn tensor_index(&self, d: usize) -> usize {
        word_index(&self.0, d)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.0.iter().any(|&c| c > 9);
        for (k, c) in self.0.iter().enumerate() {
            if wide && k > 0 {
                f.write_str(".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl From<&[u8]> for Word {
    fn from(v: &[u8]) -> Self {
        Word(v.to_vec())
    }
}

/// Base-`d` index of a word with letters in `1..=d`, first letter most significant.
#[inline]
pub fn word_index(letters: &[u8], d: usize) -> usize {
    letters
        .iter()
        .fold(0usize, |acc, &c| acc * d + (c as usize - 1))
}

/// Inverse of [`word_index`].
pub fn word_from_index(mut index: usize, len: usize, d: usize) -> Word {
    let mut letters = alloc::vec![0u8; len];
    for slot in letters.iter_mut().rev() {
        *slot = (index % d) as u8 + 1;
        index /= d;
    }
    Word(letters)
}

pub(crate) fn mobius(n: u64) -> i64 {
    let mut n = n;
    let mut result = 1i64;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Dimension of the degree-`j` component of the free Lie algebra on `d`
/// generators: `(1/j) * sum_{i | j} mu(i) d^(j/i)`.
pub fn witt_dimension(d: u64, j: u64) -> u64 {
    assert!(d >= 1 && j >= 1, "witt_dimension needs d >= 1 and j >= 1");
    let total: i128 = (1..=j)
        .filter(|i| j % i == 0)
        .map(|i| mobius(i) as i128 * (d as i128).pow((j / i) as u32))
        .sum();
    (total / j as i128) as u64
}

/// All Lyndon words of length at most `max_len`, in lexicographic order
/// (Duval's generation).
pub fn lyndon_words(d: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if d == 0 || max_len == 0 {
        return out;
    }
    let top = d as u8;
    let mut w: Vec<u8> = alloc::vec![1];
    while !w.is_empty() {
        out.push(Word(w.clone()));
        let m = w.len();
        while w.len() < max_len {
            let c = w[w.len() - m];
            w.push(c);
        }
        while w.last() == Some(&top) {
            w.pop();
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn brute_force_count(d: usize, len: usize) -> usize {
        let total = d.pow(len as u32);
        (0..total)
            .filter(|&i| word_from_index(i, len, d).is_lyndon())
            .count()
    }

    #[test]
    fn witt_small_values() {
        assert_eq!(witt_dimension(1, 2), 0);
        assert_eq!(witt_dimension(2, 4), 3);
        assert_eq!(witt_dimension(3, 3), 8);
        assert_eq!(witt_dimension(1, 1), 1);
    }

    #[test]
    fn witt_matches_enumeration() {
        for d in 1..=3 {
            for j in 1..=6 {
                assert_eq!(
                    witt_dimension(d as u64, j as u64) as usize,
                    brute_force_count(d, j),
                    "d={d} j={j}"
                );
            }
        }
    }

    #[test]
    fn duval_generates_exactly_the_lyndon_words() {
        for d in 1..=3 {
            let words = lyndon_words(d, 5);
            for w in &words {
                assert!(w.is_lyndon(), "{w}");
            }
            for len in 1..=5 {
                let n = words.iter().filter(|w| w.len() == len).count();
                assert_eq!(n, brute_force_count(d, len));
            }
            assert!(words.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn standard_factorization_examples() {
        let w = Word::new(vec![1, 1, 2]);
        assert_eq!(
            w.standard_factorization(),
            Some((Word::new(vec![1]), Word::new(vec![1, 2])))
        );
        let w = Word::new(vec![1, 2, 2]);
        assert_eq!(
            w.standard_factorization(),
            Some((Word::new(vec![1, 2]), Word::new(vec![2])))
        );
        let w = Word::new(vec![1, 3, 2]);
        assert_eq!(
            w.standard_factorization(),
            Some((Word::new(vec![1, 3]), Word::new(vec![2])))
        );
    }

    #[test]
    fn index_roundtrip() {
        for i in 0..27 {
            assert_eq!(word_from_index(i, 3, 3).tensor_index(3), i);
        }
    }

    #[test]
    fn mobius_values() {
        let expected = [1, -1, -1, 0, -1, 1, -1, 0, 0, 1];
        for (n, &m) in (1..=10).zip(expected.iter()) {
            assert_eq!(mobius(n), m, "mu({n})");
        }
    }
}
