//! Linear-dependence analysis of gradient-polynomial sets: cover matrices,
//! exact dependence certification, structural verifiers for dependent
//! combinations, and exhaustive searches at small orders.
//!
//! Independence of the gradient polynomials certifies a set as non-forcing.
//! The converse is not available from this tool: a dependent set is reported
//! as undecided, never as forcing.

use std::collections::HashSet;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gradpoly::{b_vector, gradient_polynomial, BivariatePolynomial};
use crate::linalg::{normalize_kernel_vector, RatMatrix};
use crate::perm::{enumerate_permutations, Permutation};
use crate::rational::Rational;
use num_traits::Zero;

/// A formal linear combination of equal-order permutations.
#[derive(Clone, Debug)]
pub struct FormalCombination {
    terms: Vec<(Rational, Permutation)>,
}

impl FormalCombination {
    pub fn new(terms: Vec<(Rational, Permutation)>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::MixedOrders(
                "combination needs at least one term".into(),
            ));
        };
        let order = first.1.order();
        if terms.iter().any(|(_, q)| q.order() != order) {
            return Err(Error::MixedOrders(format!(
                "all permutations must have order {order}"
            )));
        }
        Ok(Self { terms })
    }

    pub fn order(&self) -> usize {
        self.terms[0].1.order()
    }

    pub fn terms(&self) -> &[(Rational, Permutation)] {
        &self.terms
    }
}

/// The weighted sum of the permutation matrices of a combination. Every row
/// and column sums to the sum of the weights.
pub fn cover_matrix(combination: &FormalCombination) -> RatMatrix {
    let k = combination.order();
    let mut cov = RatMatrix::zeros(k, k);
    for (t, q) in combination.terms() {
        for pos in 1..=k {
            let col = q.value_at(pos) - 1;
            let v = cov.get(pos - 1, col) + t;
            cov.set(pos - 1, col, v);
        }
    }
    cov
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DependenceStatus {
    Independent,
    Dependent,
}

/// Evidence that a set is non-forcing: the stacked coefficient matrix of its
/// gradient polynomials has full rank.
#[derive(Clone, Debug)]
pub struct NonForcingCertificate {
    pub set: Vec<Permutation>,
    /// One row per permutation: its polynomial flattened on the common grid.
    pub coefficient_matrix: Vec<Vec<Rational>>,
    pub rank: usize,
}

#[derive(Clone, Debug)]
pub struct DependenceResult {
    pub status: DependenceStatus,
    /// Present iff dependent: weights with `sum t_i P_i = 0`, scaled to
    /// max-norm one with the first non-zero entry positive, aligned with the
    /// input order of the set.
    pub kernel: Option<Vec<Rational>>,
    /// Present iff independent.
    pub certificate: Option<NonForcingCertificate>,
}

fn validate_set(set: &[Permutation]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::IndexError("empty set".into()));
    }
    for q in set {
        if q.order() < 2 {
            return Err(Error::OrderOne(format!(
                "{q} has order one; its density is 1 in every permuton, so it \
                 carries no information and the analysis here assumes order >= 2"
            )));
        }
    }
    let mut seen = HashSet::new();
    for q in set {
        if !seen.insert(q.clone()) {
            return Err(Error::DuplicateMember(q.to_string()));
        }
    }
    Ok(())
}

/// Flattens each polynomial on the common `(max_order - 1)^2` grid. The
/// degree bound makes this embedding exact for every member.
fn polynomial_vectors(set: &[Permutation]) -> Result<(Vec<Vec<Rational>>, usize)> {
    let dim = set.iter().map(Permutation::order).max().unwrap() - 1;
    let vectors = set
        .iter()
        .map(|q| Ok(gradient_polynomial(q)?.flatten_padded(dim)))
        .collect::<Result<Vec<_>>>()?;
    Ok((vectors, dim))
}

fn dependence_of_vectors(set: &[Permutation], vectors: &[Vec<Rational>]) -> DependenceResult {
    let rows = vectors[0].len();
    let cols = vectors.len();
    let mut m = RatMatrix::zeros(rows, cols);
    for (c, v) in vectors.iter().enumerate() {
        for (r, x) in v.iter().enumerate() {
            m.set(r, c, x.clone());
        }
    }
    let kernel = m.kernel();
    if let Some(first) = kernel.first() {
        DependenceResult {
            status: DependenceStatus::Dependent,
            kernel: Some(normalize_kernel_vector(first)),
            certificate: None,
        }
    } else {
        DependenceResult {
            status: DependenceStatus::Independent,
            kernel: None,
            certificate: Some(NonForcingCertificate {
                set: set.to_vec(),
                coefficient_matrix: vectors.to_vec(),
                rank: cols,
            }),
        }
    }
}

/// Exact dependence test of the gradient polynomials of a set, via the null
/// space of their stacked coefficient vectors over the rationals.
pub fn dependence(set: &[Permutation]) -> Result<DependenceResult> {
    validate_set(set)?;
    let (vectors, _) = polynomial_vectors(set)?;
    let result = dependence_of_vectors(set, &vectors);
    if let Some(kernel) = &result.kernel {
        debug_assert!(kernel_annihilates(set, kernel));
    }
    Ok(result)
}

/// Checks `sum t_i P_i = 0` coefficient by coefficient.
pub fn kernel_annihilates(set: &[Permutation], kernel: &[Rational]) -> bool {
    let mut total = BivariatePolynomial::zero(0);
    for (t, q) in kernel.iter().zip(set) {
        let poly = gradient_polynomial(q).expect("orders validated");
        total = total.add(&poly.scale(t));
    }
    total.is_zero()
}

/// Verifies that the cover matrix of the top-order part of a vanishing
/// combination annihilates the b-vector `b_h` on both sides.
///
/// `h` must satisfy `2 <= h <= k` for the maximal order `k` in the set, and
/// every non-maximal-order member must have order at most `h - 1`.
pub fn verify_zero_sums(set: &[Permutation], kernel: &[Rational], h: usize) -> Result<bool> {
    validate_set(set)?;
    if kernel.len() != set.len() {
        return Err(Error::IndexError(format!(
            "kernel length {} does not match set size {}",
            kernel.len(),
            set.len()
        )));
    }
    let k = set.iter().map(Permutation::order).max().unwrap();
    if h < 2 || h > k {
        return Err(Error::Range(format!("need 2 <= h <= {k}, got h = {h}")));
    }
    if set.iter().any(|q| q.order() < k && q.order() > h - 1) {
        return Err(Error::Range(format!(
            "every non-maximal-order member must have order <= {}",
            h - 1
        )));
    }
    let top_terms: Vec<(Rational, Permutation)> = kernel
        .iter()
        .zip(set)
        .filter(|(_, q)| q.order() == k)
        .map(|(t, q)| (t.clone(), q.clone()))
        .collect();
    let cov = cover_matrix(&FormalCombination::new(top_terms)?);
    let b = b_vector(k, h)?;
    let left = cov.mul_vec_i64(&b.entries);
    let right = cov.vec_mul_i64(&b.entries);
    Ok(left.iter().all(Zero::is_zero) && right.iter().all(Zero::is_zero))
}

/// Verifies that the cover matrix of an equal-order combination is constant.
/// Meaningful for combinations whose weighted polynomial sum vanishes.
pub fn verify_constant_cover(combination: &FormalCombination) -> Result<bool> {
    Ok(cover_matrix(combination).is_constant())
}

/// Every `h` for which [`verify_zero_sums`] preconditions hold for this set.
pub fn valid_zero_sum_levels(set: &[Permutation]) -> Vec<usize> {
    let k = set.iter().map(Permutation::order).max().unwrap();
    let non_top_max = set
        .iter()
        .map(Permutation::order)
        .filter(|&o| o < k)
        .max()
        .unwrap_or(1);
    (non_top_max + 1..=k).filter(|&h| h >= 2).collect()
}

/// Structural facts about a dependent set that the dependence analysis
/// guarantees; checked exactly, with one token per verified pattern.
/// Violations are reported as solver errors since they would contradict the
/// analysis behind the search.
pub fn lemma_patterns(set: &[Permutation], kernel: &[Rational]) -> Result<Vec<String>> {
    let mut patterns = Vec::new();

    // Restrict to the support: members carried with non-zero weight.
    let support: Vec<&Permutation> = kernel
        .iter()
        .zip(set)
        .filter(|(t, _)| !t.is_zero())
        .map(|(_, q)| q)
        .collect();
    if support.is_empty() {
        return Err(Error::SolveFailed(
            "kernel vector is identically zero".into(),
        ));
    }
    let max_support = support.iter().map(|q| q.order()).max().unwrap();
    let max_count = support.iter().filter(|q| q.order() == max_support).count();
    if support.len() < 2 || max_count < 2 {
        return Err(Error::SolveFailed(format!(
            "vanishing combination with a unique maximal-order member: {:?}",
            support
        )));
    }
    patterns.push("max-order-appears-twice".into());

    for h in valid_zero_sum_levels(set) {
        if !verify_zero_sums(set, kernel, h)? {
            return Err(Error::SolveFailed(format!(
                "cover matrix fails to annihilate b_{h} for {set:?}"
            )));
        }
        patterns.push(format!("cover-annihilates-b{h}"));
    }

    let support_orders: HashSet<usize> = support.iter().map(|q| q.order()).collect();
    if support_orders.len() == 1 {
        let combination = FormalCombination::new(
            kernel
                .iter()
                .zip(set)
                .filter(|(t, _)| !t.is_zero())
                .map(|(t, q)| (t.clone(), q.clone()))
                .collect(),
        )?;
        if !verify_constant_cover(&combination)? {
            return Err(Error::SolveFailed(format!(
                "equal-order vanishing combination with non-constant cover: {set:?}"
            )));
        }
        patterns.push("constant-cover".into());
    }

    if set.len() == 2 {
        if set.iter().any(|q| q.order() != 2) {
            return Err(Error::SolveFailed(format!(
                "dependent pair with an order above two: {set:?}"
            )));
        }
        patterns.push("pair-both-order-two".into());
    }

    if set.len() == 3 {
        let mut orders: Vec<usize> = set.iter().map(Permutation::order).collect();
        orders.sort_unstable();
        if orders[0] == orders[2] {
            if orders[0] != 3 {
                return Err(Error::SolveFailed(format!(
                    "equal-order dependent triple of order {} (expected three): {set:?}",
                    orders[0]
                )));
            }
            patterns.push("equal-order-triple-of-order-three".into());
        }
        if orders[2] > 3 {
            if orders[0] != 2 || orders[1] != 2 {
                return Err(Error::SolveFailed(format!(
                    "dependent triple with a member of order above three must \
                     pair it with both order-two permutations: {set:?}"
                )));
            }
            patterns.push("two-order-two-beside-large".into());
        }
    }

    Ok(patterns)
}

/// Exhaustively finds all dependent sets of the given size drawn from the
/// permutations of order `2..=max_order`, in canonical order. Every returned
/// set has passed the structural verifiers of [`lemma_patterns`].
pub fn search_dependent_sets(
    max_order: usize,
    size: usize,
) -> Result<Vec<(Vec<Permutation>, DependenceResult)>> {
    if !(1..=3).contains(&size) || !(2..=5).contains(&max_order) {
        return Err(Error::Range(format!(
            "search is budgeted for size 1..=3 and max_order 2..=5, got size {size}, \
             max_order {max_order}"
        )));
    }
    let mut pool: Vec<Permutation> = Vec::new();
    for k in 2..=max_order {
        pool.extend(enumerate_permutations(k));
    }
    pool.sort();
    let dim = max_order - 1;
    let vectors: Vec<Vec<Rational>> = pool
        .iter()
        .map(|q| {
            gradient_polynomial(q)
                .expect("orders >= 2")
                .flatten_padded(dim)
        })
        .collect();

    let combos: Vec<Vec<usize>> = index_combinations(pool.len(), size);
    let mut found: Vec<(Vec<Permutation>, DependenceResult)> = combos
        .par_iter()
        .filter_map(|idxs| {
            let set: Vec<Permutation> = idxs.iter().map(|&i| pool[i].clone()).collect();
            let vecs: Vec<Vec<Rational>> = idxs.iter().map(|&i| vectors[i].clone()).collect();
            let result = dependence_of_vectors(&set, &vecs);
            match result.status {
                DependenceStatus::Dependent => Some((set, result)),
                DependenceStatus::Independent => None,
            }
        })
        .collect();
    found.sort_by(|a, b| a.0.cmp(&b.0));
    for (set, result) in &found {
        let kernel = result.kernel.as_ref().expect("dependent result has kernel");
        if !kernel_annihilates(set, kernel) {
            return Err(Error::SolveFailed(format!(
                "kernel fails to annihilate {set:?}"
            )));
        }
        lemma_patterns(set, kernel)?;
    }
    Ok(found)
}

fn index_combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..n).combinations(size).collect()
}

/// Aggregated verdict for a single set.
#[derive(Clone, Debug)]
pub struct SetReport {
    /// Canonically sorted presentation of the set.
    pub set: Vec<Permutation>,
    pub result: DependenceResult,
    pub lemma_patterns: Vec<String>,
    pub verdict: String,
}

impl SetReport {
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert(
            "set".into(),
            Value::Array(
                self.set
                    .iter()
                    .map(|q| Value::String(q.to_string()))
                    .collect(),
            ),
        );
        obj.insert(
            "status".into(),
            Value::String(
                match self.result.status {
                    DependenceStatus::Independent => "independent",
                    DependenceStatus::Dependent => "dependent",
                }
                .into(),
            ),
        );
        if let Some(kernel) = &self.result.kernel {
            obj.insert(
                "kernel".into(),
                Value::Array(
                    kernel
                        .iter()
                        .map(|t| Value::String(t.to_string()))
                        .collect(),
                ),
            );
        }
        if let Some(cert) = &self.result.certificate {
            obj.insert(
                "certificate".into(),
                json!({
                    "rank": cert.rank,
                    "coefficient_matrix": cert
                        .coefficient_matrix
                        .iter()
                        .map(|row| row.iter().map(|c| c.to_string()).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                }),
            );
        }
        obj.insert(
            "lemma_patterns".into(),
            Value::Array(
                self.lemma_patterns
                    .iter()
                    .map(|s| Value::String(s.clone()))
                    .collect(),
            ),
        );
        obj.insert("verdict".into(), Value::String(self.verdict.clone()));
        Value::Object(obj)
    }
}

/// Classifies a set: certified non-forcing when the polynomials are
/// independent, otherwise dependent with the forcing question left open.
pub fn classify_set(set: &[Permutation]) -> Result<SetReport> {
    validate_set(set)?;
    let mut sorted = set.to_vec();
    sorted.sort();
    let result = dependence(&sorted)?;
    let (lemma_patterns, verdict) = match result.status {
        DependenceStatus::Independent => (
            Vec::new(),
            "certified non-forcing (independent gradient polynomials)".to_string(),
        ),
        DependenceStatus::Dependent => {
            let kernel = result.kernel.as_ref().expect("dependent means kernel");
            (
                lemma_patterns(&sorted, kernel)?,
                "dependent — forcing status not decided by this tool".to_string(),
            )
        }
    };
    Ok(SetReport {
        set: sorted,
        result,
        lemma_patterns,
        verdict,
    })
}
