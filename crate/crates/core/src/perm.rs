//! Permutations in one-line notation, pattern extraction and exact pattern
//! densities.
//!
//! Everything is 1-indexed: a permutation of order `k` maps `{1,..,k}` onto
//! itself, and positions handed to [`Permutation::induced_pattern`] are drawn
//! from `{1,..,k}` as well.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::Zero;

use crate::comb::binomial;
use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::{rat, Rational};

/// A permutation of `{1,..,k}` in one-line notation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<u8>,
}

impl Permutation {
    /// Builds a permutation from its one-line image (1-indexed values).
    pub fn from_one_line<I>(values: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let values: Vec<usize> = values.into_iter().collect();
        let k = values.len();
        if k == 0 {
            return Err(Error::InvalidPermutation("empty image".into()));
        }
        if k > u8::MAX as usize {
            return Err(Error::InvalidPermutation(format!("order {k} too large")));
        }
        let mut seen = vec![false; k];
        for &v in &values {
            if v < 1 || v > k {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} outside 1..={k}"
                )));
            }
            if seen[v - 1] {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
            seen[v - 1] = true;
        }
        Ok(Self {
            image: values.into_iter().map(|v| v as u8).collect(),
        })
    }

    pub fn identity(k: usize) -> Self {
        Self::from_one_line(1..=k).expect("identity image is a bijection")
    }

    pub fn order(&self) -> usize {
        self.image.len()
    }

    /// Value at 1-indexed position `pos`, itself 1-indexed.
    pub fn value_at(&self, pos: usize) -> usize {
        self.image[pos - 1] as usize
    }

    /// One-line image as 1-indexed values.
    pub fn image(&self) -> impl Iterator<Item = usize> + '_ {
        self.image.iter().map(|&v| v as usize)
    }

    pub fn inverse(&self) -> Self {
        let k = self.order();
        let mut image = vec![0u8; k];
        for (pos, &v) in self.image.iter().enumerate() {
            image[v as usize - 1] = pos as u8 + 1;
        }
        Self { image }
    }

    pub fn reverse(&self) -> Self {
        let image = self.image.iter().rev().copied().collect();
        Self { image }
    }

    pub fn complement(&self) -> Self {
        let k = self.order() as u8;
        let image = self.image.iter().map(|&v| k + 1 - v).collect();
        Self { image }
    }

    pub fn reverse_complement(&self) -> Self {
        self.reverse().complement()
    }

    /// The pattern induced by the 1-indexed positions `positions`, which must
    /// be strictly increasing and within range.
    pub fn induced_pattern(&self, positions: &[usize]) -> Result<Permutation> {
        let n = self.order();
        if positions.is_empty() {
            return Err(Error::IndexError("empty position set".into()));
        }
        for w in positions.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::IndexError(format!(
                    "positions not strictly increasing at {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        if positions[0] < 1 || *positions.last().unwrap() > n {
            return Err(Error::IndexError(format!("positions must lie in 1..={n}")));
        }
        let values: Vec<usize> = positions.iter().map(|&p| self.value_at(p)).collect();
        Ok(pattern_of_values(&values))
    }

    /// The 0/1 matrix with entry `(i,j) = 1` iff the permutation sends `i`
    /// to `j`. Doubly stochastic by construction.
    pub fn permutation_matrix(&self) -> RatMatrix {
        let k = self.order();
        let mut m = RatMatrix::zeros(k, k);
        for pos in 1..=k {
            m.set(pos - 1, self.value_at(pos) - 1, rat(1));
        }
        m
    }
}

/// The order-isomorphism type of a list of distinct values: entry `i` is the
/// rank of `values[i]` among all of them.
pub fn pattern_of_values(values: &[usize]) -> Permutation {
    let ranks = values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| *w < v).count());
    Permutation::from_one_line(ranks).expect("ranks of distinct values form a bijection")
}

/// Exact fraction of `k`-element position subsets of `host` that induce
/// `pattern`; zero when the pattern is longer than the host.
pub fn pattern_density(pattern: &Permutation, host: &Permutation) -> Rational {
    let k = pattern.order();
    let n = host.order();
    if k > n {
        return rat(0);
    }
    let mut hits = BigInt::zero();
    for positions in (1..=n).combinations(k) {
        if host.induced_pattern(&positions).expect("valid subset") == *pattern {
            hits += 1;
        }
    }
    Rational::new(hits, binomial(n, k))
}

/// All `k!` permutations of order `k` in lexicographic one-line order.
pub fn enumerate_permutations(k: usize) -> Vec<Permutation> {
    assert!(k >= 1, "order must be at least one");
    (1..=k)
        .permutations(k)
        .map(|image| Permutation::from_one_line(image).expect("permutation of 1..=k"))
        .collect()
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.order() <= 9 {
            for v in self.image() {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            write!(f, "{}", self.image().map(|v| v.to_string()).join(","))
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses the compact digit form (`"2413"`, orders up to 9) or the
    /// comma-separated form (`"10,1,2,3,4,5,6,7,8,9"`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty permutation".into()));
        }
        let values: Vec<usize> = if s.contains(',') {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad entry {t:?} in {s:?}")))
                })
                .collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .filter(|&d| d >= 1)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Parse(format!("bad digit {c:?} in {s:?}")))
                })
                .collect::<Result<_>>()?
        };
        Permutation::from_one_line(values)
    }
}

impl PartialOrd for Permutation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Permutation {
    /// Orders by permutation order first, then lexicographically on the
    /// one-line form; this is the canonical presentation order for sets.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.order(), &self.image).cmp(&(other.order(), &other.image))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn construction_validates_bijection() {
        assert!(Permutation::from_one_line([2, 3, 1]).is_ok());
        assert!(Permutation::from_one_line([1, 1, 2]).is_err());
        assert!(Permutation::from_one_line([0, 1]).is_err());
        assert!(Permutation::from_one_line([3, 1]).is_err());
        assert!(Permutation::from_one_line([]).is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(p("2413").to_string(), "2413");
        let long: Permutation = "10,1,2,3,4,5,6,7,8,9".parse().unwrap();
        assert_eq!(long.order(), 10);
        assert_eq!(long.to_string(), "10,1,2,3,4,5,6,7,8,9");
        assert!("120".parse::<Permutation>().is_err());
        assert!("".parse::<Permutation>().is_err());
    }

    #[test]
    fn induced_patterns_match_definition() {
        assert_eq!(p("231").induced_pattern(&[1, 3]).unwrap(), p("21"));
        assert_eq!(p("2413").induced_pattern(&[1, 2, 3, 4]).unwrap(), p("2413"));
        assert_eq!(p("2413").induced_pattern(&[2, 3]).unwrap(), p("21"));
    }

    #[test]
    fn induced_pattern_input_errors() {
        assert!(p("231").induced_pattern(&[3, 1]).is_err());
        assert!(p("231").induced_pattern(&[1, 4]).is_err());
        assert!(p("231").induced_pattern(&[0, 1]).is_err());
        assert!(p("231").induced_pattern(&[]).is_err());
    }

    #[test]
    fn densities_match_hand_counts() {
        assert_eq!(pattern_density(&p("12"), &p("231")), frac(1, 3));
        assert_eq!(pattern_density(&p("12"), &p("12")), rat(1));
        assert_eq!(pattern_density(&p("1234"), &p("123")), rat(0));
    }

    #[test]
    fn densities_sum_to_one() {
        let host = p("35142");
        for k in 1..=host.order() {
            let total: Rational = enumerate_permutations(k)
                .iter()
                .map(|q| pattern_density(q, &host))
                .sum();
            assert_eq!(total, rat(1));
        }
    }

    #[test]
    fn density_matches_subset_sampling_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..4 {
            let n = 10;
            let mut image: Vec<usize> = (1..=n).collect();
            image.shuffle(&mut rng);
            let host = Permutation::from_one_line(image).unwrap();
            let pattern = p("132");
            let exact = crate::rational::to_f64(&pattern_density(&pattern, &host));

            let trials = 20_000u32;
            let mut hits = 0u32;
            let mut positions: Vec<usize> = (1..=n).collect();
            for _ in 0..trials {
                positions.shuffle(&mut rng);
                let mut subset: Vec<usize> = positions[..3].to_vec();
                subset.sort_unstable();
                if host.induced_pattern(&subset).unwrap() == pattern {
                    hits += 1;
                }
            }
            let est = f64::from(hits) / f64::from(trials);
            let se = (est * (1.0 - est) / f64::from(trials)).sqrt();
            assert!(
                (est - exact).abs() <= 3.0 * se.max(1e-9),
                "estimate {est} too far from exact {exact}"
            );
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        assert_eq!(enumerate_permutations(1), vec![p("1")]);
        assert_eq!(enumerate_permutations(2), vec![p("12"), p("21")]);
        let threes = enumerate_permutations(3);
        assert_eq!(threes.len(), 6);
        assert_eq!(threes[0], p("123"));
        assert_eq!(threes[1], p("132"));
        let mut sorted = threes.clone();
        sorted.sort();
        assert_eq!(sorted, threes);
        assert_eq!(enumerate_permutations(6).len(), 720);
    }

    #[test]
    fn permutation_matrix_is_doubly_stochastic() {
        for q in [p("12"), p("21"), p("2413")] {
            let m = q.permutation_matrix();
            let k = q.order();
            for i in 0..k {
                let row: Rational = (0..k).map(|j| m.get(i, j).clone()).sum();
                let col: Rational = (0..k).map(|j| m.get(j, i).clone()).sum();
                assert_eq!(row, rat(1));
                assert_eq!(col, rat(1));
            }
        }
        assert_eq!(p("12").permutation_matrix().get(0, 0), &rat(1));
        assert_eq!(p("21").permutation_matrix().get(0, 1), &rat(1));
        assert_eq!(p("21").permutation_matrix().get(0, 0), &rat(0));
    }

    #[test]
    fn symmetries_compose() {
        let q = p("2413");
        assert_eq!(q.inverse().inverse(), q);
        assert_eq!(q.reverse_complement(), p("2413"));
        assert_eq!(p("132").reverse_complement(), p("213"));
    }
}
