//! Gradient polynomials of permutations.
//!
//! The gradient polynomial of a `k`-permutation is the scaled limit of the
//! density-function gradient of the step permutons as the grid is refined.
//! It is a bivariate polynomial of degree at most `k - 2` in each variable,
//! with coefficients given exactly by a signed-binomial bilinear form of the
//! permutation matrix. Three routes to its values are provided and cross
//! checked: the coefficient formula, a direct evaluation of the defining
//! sum, and finite-grid estimates that converge to it.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::comb::{binomial, binomial_i64, factorial};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rational::{parse_rational, rat, Rational};
use crate::step::density_gradient;

/// The signed binomial vector with `a` leading entries
/// `(-1)^(i-1) C(a-1, i-1)` followed by zeros, in dimension `k`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BVector {
    pub k: usize,
    pub a: usize,
    pub entries: Vec<i64>,
}

pub fn b_vector(k: usize, a: usize) -> Result<BVector> {
    if k < 1 || a < 1 || a > k {
        return Err(Error::IndexError(format!(
            "b-vector needs 1 <= a <= k, got a = {a}, k = {k}"
        )));
    }
    let entries = (1..=k)
        .map(|i| {
            if i <= a {
                let sign = if (i - 1).is_multiple_of(2) { 1 } else { -1 };
                sign * binomial_i64(a - 1, i - 1)
            } else {
                0
            }
        })
        .collect();
    Ok(BVector { k, a, entries })
}

/// The all-ones vector of dimension `k`; together with the b-vectors for
/// `a = 2..k` it forms a basis.
pub fn ones_vector(k: usize) -> Vec<i64> {
    vec![1; k]
}

/// The coefficient constant `k! (-1)^(i+j) / (i! j! (k-i-2)! (k-j-2)!)`,
/// defined (and never zero) for `0 <= i, j <= k-2`.
pub fn k_constant(k: usize, i: usize, j: usize) -> Result<Rational> {
    if k < 2 || i > k - 2 || j > k - 2 {
        return Err(Error::Range(format!(
            "coefficient constant needs 0 <= i,j <= k-2, got i = {i}, j = {j}, k = {k}"
        )));
    }
    #[cfg(not(feature = "canary-coef-sign"))]
    let sign = if (i + j).is_multiple_of(2) { 1 } else { -1 };
    #[cfg(feature = "canary-coef-sign")]
    let sign = 1;
    let num = factorial(k) * BigInt::from(sign);
    let den = factorial(i) * factorial(j) * factorial(k - i - 2) * factorial(k - j - 2);
    Ok(Rational::new(num, den))
}

/// Dense rational coefficient grid of a bivariate polynomial; entry `(i,j)`
/// is the coefficient of `alpha^i beta^j`.
#[derive(Clone, Debug)]
pub struct BivariatePolynomial {
    coeffs: Vec<Vec<Rational>>, // square (d+1) x (d+1)
}

impl BivariatePolynomial {
    pub fn zero(degree_bound: usize) -> Self {
        Self {
            coeffs: vec![vec![rat(0); degree_bound + 1]; degree_bound + 1],
        }
    }

    pub fn from_grid(coeffs: Vec<Vec<Rational>>) -> Result<Self> {
        let d = coeffs.len();
        if d == 0 || coeffs.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidMatrix(
                "coefficient grid must be square and non-empty".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// Grid side length; the degree in each variable is at most this minus 1.
    pub fn grid_size(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `alpha^i beta^j`, zero outside the stored grid.
    pub fn coeff(&self, i: usize, j: usize) -> Rational {
        self.coeffs
            .get(i)
            .and_then(|row| row.get(j))
            .cloned()
            .unwrap_or_else(|| rat(0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.grid_size().max(other.grid_size());
        let mut out = Self::zero(d - 1);
        for i in 0..d {
            for j in 0..d {
                out.coeffs[i][j] = self.coeff(i, j) + other.coeff(i, j);
            }
        }
        out
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|row| row.iter().map(|c| c * factor).collect())
                .collect(),
        }
    }

    /// Exact evaluation by Horner's rule in both variables.
    pub fn evaluate(&self, alpha: &Rational, beta: &Rational) -> Rational {
        let mut acc = rat(0);
        for row in self.coeffs.iter().rev() {
            let mut row_val = rat(0);
            for c in row.iter().rev() {
                row_val = row_val * beta + c;
            }
            acc = acc * alpha + row_val;
        }
        acc
    }

    /// The polynomial `Q(alpha, beta) = P(1 - alpha, beta)`, expanded
    /// exactly.
    pub fn substitute_alpha_one_minus(&self) -> Self {
        let d = self.grid_size();
        let mut out = Self::zero(d - 1);
        for i in 0..d {
            for j in 0..d {
                // alpha^i' expands as sum_i C(i',i) (-1)^i alpha^i.
                let mut acc = rat(0);
                for i2 in i..d {
                    acc += &self.coeffs[i2][j] * rat(binomial_i64(i2, i));
                }
                let sign = if i % 2 == 0 { rat(1) } else { rat(-1) };
                out.coeffs[i][j] = acc * sign;
            }
        }
        out
    }

    /// Row-major flattening into a `dim x dim` grid, zero-padded; `dim` must
    /// cover the stored grid.
    pub fn flatten_padded(&self, dim: usize) -> Vec<Rational> {
        assert!(dim >= self.grid_size(), "flatten target too small");
        let mut out = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                out.push(self.coeff(i, j));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .coeffs
            .iter()
            .map(|row| Value::Array(row.iter().map(|c| Value::String(c.to_string())).collect()))
            .collect();
        json!({ "k": self.grid_size() + 1, "coeffs": rows })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let rows_v = v
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("polynomial JSON needs array field \"coeffs\"".into()))?;
        let mut coeffs = Vec::with_capacity(rows_v.len());
        for rv in rows_v {
            let cells = rv
                .as_array()
                .ok_or_else(|| Error::Parse("polynomial row is not an array".into()))?;
            coeffs.push(
                cells
                    .iter()
                    .map(|c| {
                        c.as_str()
                            .ok_or_else(|| Error::Parse("coefficient is not a string".into()))
                            .and_then(parse_rational)
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Self::from_grid(coeffs)
    }
}

impl PartialEq for BivariatePolynomial {
    /// Mathematical equality: grids are compared with implicit zero padding.
    fn eq(&self, other: &Self) -> bool {
        let d = self.grid_size().max(other.grid_size());
        (0..d).all(|i| (0..d).all(|j| self.coeff(i, j) == other.coeff(i, j)))
    }
}

impl Eq for BivariatePolynomial {}

impl fmt::Display for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mut t = c.to_string();
                if i > 0 {
                    t.push_str(&format!("*a^{i}"));
                }
                if j > 0 {
                    t.push_str(&format!("*b^{j}"));
                }
                terms.push(t);
            }
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

fn require_order_at_least_two(pattern: &Permutation) -> Result<usize> {
    let k = pattern.order();
    if k < 2 {
        return Err(Error::OrderOne(format!(
            "gradient polynomial of {pattern} is undefined"
        )));
    }
    Ok(k)
}

/// The gradient polynomial of a permutation of order at least two:
/// coefficient `(i,j)` is the constant `K_{i,j}` times the bilinear form of
/// the permutation matrix against the b-vectors `b_{i+2}` and `b_{j+2}`.
pub fn gradient_polynomial(pattern: &Permutation) -> Result<BivariatePolynomial> {
    let k = require_order_at_least_two(pattern)?;
    let mut poly = BivariatePolynomial::zero(k - 2);
    for i in 0..=k - 2 {
        let left = b_vector(k, i + 2)?;
        for j in 0..=k - 2 {
            let right = b_vector(k, j + 2)?;
            let mut form = 0i64;
            for pos in 1..=k {
                form += left.entries[pos - 1] * right.entries[pattern.value_at(pos) - 1];
            }
            poly.coeffs[i][j] = k_constant(k, i, j)? * rat(form);
        }
    }
    Ok(poly)
}

/// The mirror gradient polynomial, i.e. the gradient polynomial with
/// `alpha` replaced by `1 - alpha`; computed directly from the row-mirrored
/// permutation matrix.
pub fn mirror_polynomial(pattern: &Permutation) -> Result<BivariatePolynomial> {
    let k = require_order_at_least_two(pattern)?;
    let mut poly = BivariatePolynomial::zero(k - 2);
    for i in 0..=k - 2 {
        let left = b_vector(k, i + 2)?;
        for j in 0..=k - 2 {
            let right = b_vector(k, j + 2)?;
            let mut form = 0i64;
            for pos in 1..=k {
                // Row mirror: row m of the mirrored matrix is row k+1-m.
                form += left.entries[k - pos] * right.entries[pattern.value_at(pos) - 1];
            }
            poly.coeffs[i][j] = -(k_constant(k, i, j)? * rat(form));
        }
    }
    Ok(poly)
}

/// Exact evaluation of the defining sum for the gradient polynomial at an
/// interior rational point. This route never touches the coefficient
/// formula, so it serves as an independent cross-check of it.
pub fn sum_formula_eval(
    pattern: &Permutation,
    alpha: &Rational,
    beta: &Rational,
) -> Result<Rational> {
    let k = require_order_at_least_two(pattern)?;
    let zero = rat(0);
    let one = rat(1);
    if alpha <= &zero || alpha >= &one || beta <= &zero || beta >= &one {
        return Err(Error::Range(format!(
            "evaluation point must lie strictly inside (0,1)^2, got ({alpha}, {beta})"
        )));
    }
    let am = &one - alpha;
    let bm = &one - beta;
    let mut total = rat(0);
    for pos in 1..=k {
        let m = pos;
        let v = pattern.value_at(pos);
        let left = rat((k - m) as i64) / &am - rat((m - 1) as i64) / alpha;
        let right = rat((k - v) as i64) / &bm - rat((v - 1) as i64) / beta;
        let mut weight = Rational::new(
            BigInt::one(),
            factorial(m - 1) * factorial(k - m) * factorial(v - 1) * factorial(k - v),
        );
        weight *= pow_rational(alpha, m - 1) * pow_rational(&am, k - m);
        weight *= pow_rational(beta, v - 1) * pow_rational(&bm, k - v);
        total += left * right * weight;
    }
    Ok(total * Rational::from_integer(factorial(k)))
}

fn pow_rational(base: &Rational, exp: usize) -> Rational {
    let mut acc = rat(1);
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Number of strictly increasing maps `[k] -> [n]` sending `m` to `v`.
fn strictly_increasing_count(n: usize, k: usize, m: usize, v: i64) -> BigInt {
    if v < 1 || v > n as i64 {
        return BigInt::zero();
    }
    binomial(v as usize - 1, m - 1) * binomial(n - v as usize, k - m)
}

/// Finite-`n` estimate of the gradient polynomial built from the
/// strictly-increasing-map counts in closed binomial form; converges to the
/// polynomial value as `n` grows. `n` must be large enough that
/// `k <= floor(alpha n) <= n - k` (and likewise for `beta`).
pub fn finite_n_estimate(pattern: &Permutation, alpha: f64, beta: f64, n: usize) -> Result<f64> {
    let k = require_order_at_least_two(pattern)?;
    let i = (alpha * n as f64).floor() as i64;
    let j = (beta * n as f64).floor() as i64;
    for (name, idx) in [("alpha", i), ("beta", j)] {
        if idx < k as i64 || idx > (n - k) as i64 {
            return Err(Error::Range(format!(
                "n = {n} too small: floor({name} n) = {idx} must lie in [{k}, {}]",
                n - k
            )));
        }
    }
    let mut total = BigInt::zero();
    for pos in 1..=k {
        let v = pattern.value_at(pos);
        let du =
            strictly_increasing_count(n, k, pos, i) - strictly_increasing_count(n, k, pos, i + 1);
        let dv = strictly_increasing_count(n, k, v, j) - strictly_increasing_count(n, k, v, j + 1);
        total += du * dv;
    }
    let value = Rational::new(factorial(k) * total, BigInt::from(n).pow(2 * k as u32 - 4));
    Ok(crate::rational::to_f64(&value))
}

/// The cubically rescaled exact density gradient at grid position
/// `(floor(alpha n), floor(beta n))`; converges to the gradient polynomial.
pub fn n3_gradient_estimate(pattern: &Permutation, alpha: f64, beta: f64, n: usize) -> Result<f64> {
    let k = require_order_at_least_two(pattern)?;
    if n < 2 || k > n {
        return Err(Error::Range(format!(
            "need n >= 2 and pattern order {k} <= n, got n = {n}"
        )));
    }
    let i = (alpha * n as f64).floor() as i64;
    let j = (beta * n as f64).floor() as i64;
    if i < 1 || i > (n - 1) as i64 || j < 1 || j > (n - 1) as i64 {
        return Err(Error::Range(format!(
            "grid position ({i},{j}) outside [1,{}]^2",
            n - 1
        )));
    }
    let grid = density_gradient(pattern, n)?;
    let entry = &grid[i as usize - 1][j as usize - 1];
    let scaled = entry * rat((n * n * n) as i64);
    Ok(crate::rational::to_f64(&scaled))
}
