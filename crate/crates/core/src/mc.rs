//! Seeded Monte Carlo estimation of pattern densities in permutons.
//!
//! The random source is ChaCha8. Work is split into a fixed number of
//! shards; shard `s` draws from the substream `(seed, s)`, and counts are
//! merged by summation, so results are bit-identical for a given seed no
//! matter how many threads run the shards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::perm::{pattern_of_values, Permutation};
use crate::segment::SegmentPermuton;
use crate::step::DoublyStochasticMatrix;

/// Fixed shard count for all Monte Carlo runs.
const SHARDS: u64 = 64;

/// A measure on the unit square that supports i.i.d. point sampling.
pub trait PointSampler: Sync {
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> (f64, f64);
}

impl PointSampler for SegmentPermuton {
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        self.point_from_uniforms(u, v)
    }
}

/// A step permuton: tile `(i,j)` of the `n x n` grid carries mass
/// `M_{i,j}/n`, uniformly spread over the tile.
#[derive(Clone, Debug)]
pub struct StepPermuton {
    n: usize,
    /// Cumulative tile masses, row-major.
    cumulative: Vec<f64>,
}

impl StepPermuton {
    pub fn new(matrix: &DoublyStochasticMatrix) -> Self {
        let n = matrix.order();
        let mut cumulative = Vec::with_capacity(n * n);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += crate::rational::to_f64(matrix.get(i, j)) / n as f64;
                cumulative.push(acc);
            }
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self { n, cumulative }
    }

    pub fn order(&self) -> usize {
        self.n
    }
}

impl PointSampler for StepPermuton {
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let u: f64 = rng.random();
        let idx = self
            .cumulative
            .partition_point(|&c| c < u)
            .min(self.cumulative.len() - 1);
        let (i, j) = (idx / self.n, idx % self.n);
        let n = self.n as f64;
        let x = (i as f64 + rng.random::<f64>()) / n;
        let y = (j as f64 + rng.random::<f64>()) / n;
        (x, y)
    }
}

/// `count` i.i.d. points from the measure, deterministic in `seed`.
pub fn sample_points<P: PointSampler>(p: &P, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| p.sample_point(&mut rng)).collect()
}

/// A Monte Carlo estimate with its binomial standard error and provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Draws `k` points with distinct coordinates, sorted by `x`, and reads off
/// the induced pattern from the `y` ranks. Coordinate ties are a
/// probability-zero event (floating point aside) and trigger a redraw.
fn draw_pattern<P: PointSampler>(p: &P, k: usize, rng: &mut ChaCha8Rng) -> Permutation {
    loop {
        let mut pts: Vec<(f64, f64)> = (0..k).map(|_| p.sample_point(rng)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let distinct = pts.windows(2).all(|w| w[0].0 != w[1].0)
            && (0..k).all(|i| (0..i).all(|j| pts[i].1 != pts[j].1));
        if !distinct {
            continue;
        }
        let ranks: Vec<usize> = pts
            .iter()
            .map(|(_, y)| 1 + pts.iter().filter(|(_, y2)| y2 < y).count())
            .collect();
        return pattern_of_values(&ranks);
    }
}

/// Tallies every order-`k` pattern over `samples` independent draws.
/// Returns counts indexed by the position of the pattern in
/// [`crate::perm::enumerate_permutations`]`(k)`.
pub fn pattern_counts<P: PointSampler>(k: usize, p: &P, samples: u64, seed: u64) -> Vec<u64> {
    let all = crate::perm::enumerate_permutations(k);
    let index: std::collections::HashMap<Permutation, usize> = all
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, q)| (q, i))
        .collect();
    let per_shard = samples / SHARDS;
    let remainder = samples % SHARDS;
    let shard_counts: Vec<Vec<u64>> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard + 1);
            let draws = per_shard + u64::from(shard < remainder);
            let mut counts = vec![0u64; all.len()];
            for _ in 0..draws {
                let pat = draw_pattern(p, k, &mut rng);
                counts[index[&pat]] += 1;
            }
            counts
        })
        .collect();
    let mut merged = vec![0u64; all.len()];
    for counts in shard_counts {
        for (m, c) in merged.iter_mut().zip(counts) {
            *m += c;
        }
    }
    merged
}

/// Empirical density of one pattern, with standard error
/// `sqrt(p(1-p)/samples)`.
pub fn mc_density<P: PointSampler>(
    pattern: &Permutation,
    p: &P,
    samples: u64,
    seed: u64,
) -> McEstimate {
    let k = pattern.order();
    let counts = pattern_counts(k, p, samples, seed);
    let all = crate::perm::enumerate_permutations(k);
    let idx = all
        .iter()
        .position(|q| q == pattern)
        .expect("pattern enumerated");
    let hits = counts[idx];
    let estimate = hits as f64 / samples as f64;
    McEstimate {
        estimate,
        stderr: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
        samples,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::enumerate_permutations;
    use crate::rational::frac;
    use crate::rational::to_f64;
    use crate::step::{perturb, step_density, PerturbationVector};

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn uniform_step_samples_center_on_the_square() {
        let sp = StepPermuton::new(&DoublyStochasticMatrix::constant(1));
        let pts = sample_points(&sp, 40_000, 11);
        let mx: f64 = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my: f64 = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        // 3 sigma of the mean of Uniform[0,1] over 40k samples.
        let bound = 3.0 * (1.0f64 / 12.0 / 40_000.0).sqrt();
        assert!((mx - 0.5).abs() < bound, "mean x = {mx}");
        assert!((my - 0.5).abs() < bound, "mean y = {my}");
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let sp = SegmentPermuton::new(0.3).unwrap();
        assert_eq!(sample_points(&sp, 100, 7), sample_points(&sp, 100, 7));
        assert_ne!(sample_points(&sp, 100, 7), sample_points(&sp, 100, 8));
        let a = mc_density(&p("12"), &sp, 10_000, 3);
        let b = mc_density(&p("12"), &sp, 10_000, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn segment_marginals_are_uniform_by_decile() {
        let sp = SegmentPermuton::new(0.5).unwrap();
        let n = 200_000usize;
        let pts = sample_points(&sp, n, 5);
        let mut deciles = [0u64; 10];
        for (x, _) in pts {
            deciles[((x * 10.0) as usize).min(9)] += 1;
        }
        let expect = n as f64 / 10.0;
        let sigma = (n as f64 * 0.1 * 0.9).sqrt();
        for (d, &c) in deciles.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() < 4.0 * sigma,
                "decile {d}: {c} vs {expect}"
            );
        }
    }

    #[test]
    fn mc_density_agrees_with_exact_step_density() {
        let x =
            PerturbationVector::from_flat(3, vec![frac(1, 12), frac(-1, 12), rat0(), frac(1, 12)])
                .unwrap();
        let m = perturb(&x).unwrap();
        let sp = StepPermuton::new(&m);
        for q in enumerate_permutations(2)
            .iter()
            .chain(&enumerate_permutations(3))
        {
            let exact = to_f64(&step_density(q, &m));
            let est = mc_density(q, &sp, 200_000, 13);
            assert!(
                (est.estimate - exact).abs() <= 4.0 * est.stderr.max(1e-9),
                "{q}: {} vs exact {exact}",
                est.estimate
            );
        }
    }

    fn rat0() -> crate::rational::Rational {
        crate::rational::rat(0)
    }

    #[test]
    fn symmetric_family_gives_half_to_each_two_pattern() {
        for alpha in [0.0, 0.3, 1.0] {
            let sp = SegmentPermuton::new(alpha).unwrap();
            let est = mc_density(&p("12"), &sp, 100_000, 2);
            assert!(
                (est.estimate - 0.5).abs() <= 4.0 * est.stderr,
                "alpha = {alpha}: {}",
                est.estimate
            );
        }
    }

    #[test]
    fn endpoint_densities_match_known_values() {
        let mu0 = SegmentPermuton::new(0.0).unwrap();
        let est0 = mc_density(&p("123"), &mu0, 200_000, 17);
        assert!((est0.estimate - 0.25).abs() <= 4.0 * est0.stderr);

        let mu1 = SegmentPermuton::new(1.0).unwrap();
        let est1 = mc_density(&p("123"), &mu1, 200_000, 17);
        assert!((est1.estimate - 0.125).abs() <= 4.0 * est1.stderr);
    }

    #[test]
    fn pattern_counts_cover_all_draws() {
        let sp = SegmentPermuton::new(0.4).unwrap();
        let counts = pattern_counts(3, &sp, 50_000, 23);
        assert_eq!(counts.iter().sum::<u64>(), 50_000);
        assert_eq!(counts.len(), 6);
    }
}
