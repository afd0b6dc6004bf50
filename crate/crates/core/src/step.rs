//! Step permutons: doubly stochastic matrices, checkerboard perturbations of
//! the constant matrix, exact pattern densities and exact density gradients.
//!
//! The density of a `k`-pattern in the step permuton of an order-`n` matrix
//! is a sum over pairs of non-decreasing maps `[k] -> [n]`, so its cost grows
//! as `C(n+k-1,k)^2 * k`; fine for the intended scale (`k <= 5`, `n <= 12`).

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::comb::factorial_u64;
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rational::{parse_rational, rat, Rational};

/// A square matrix of non-negative rationals whose rows and columns each sum
/// to exactly one.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DoublyStochasticMatrix {
    n: usize,
    entries: Vec<Rational>, // row-major n*n
}

impl DoublyStochasticMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("matrix must be square".into()));
        }
        let entries: Vec<Rational> = rows.into_iter().flatten().collect();
        let m = Self { n, entries };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if self.get(i, j).is_negative() {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({},{}) is negative: {}",
                        i + 1,
                        j + 1,
                        self.get(i, j)
                    )));
                }
            }
        }
        for i in 0..n {
            let row: Rational = (0..n).map(|j| self.get(i, j).clone()).sum();
            if row != rat(1) {
                return Err(Error::InvalidMatrix(format!(
                    "row {} sums to {row}, not 1",
                    i + 1
                )));
            }
            let col: Rational = (0..n).map(|j| self.get(j, i).clone()).sum();
            if col != rat(1) {
                return Err(Error::InvalidMatrix(format!(
                    "column {} sums to {col}, not 1",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// The order-`n` matrix with every entry `1/n`; its step permuton is the
    /// uniform measure.
    pub fn constant(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            n,
            entries: vec![Rational::new(BigInt::one(), BigInt::from(n)); n * n],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry at 0-indexed `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut entries = vec![rat(0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.get(i, j).clone();
            }
        }
        Self { n, entries }
    }

    pub fn to_f64_grid(&self) -> Vec<f64> {
        self.entries.iter().map(crate::rational::to_f64).collect()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = (0..self.n)
            .map(|i| {
                Value::Array(
                    (0..self.n)
                        .map(|j| Value::String(self.get(i, j).to_string()))
                        .collect(),
                )
            })
            .collect();
        json!({ "n": self.n, "rows": rows })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("matrix JSON needs integer field \"n\"".into()))?
            as usize;
        let rows_v = v
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("matrix JSON needs array field \"rows\"".into()))?;
        if rows_v.len() != n {
            return Err(Error::Parse(format!(
                "matrix JSON declares n = {n} but has {} rows",
                rows_v.len()
            )));
        }
        let mut rows = Vec::with_capacity(n);
        for rv in rows_v {
            let cells = rv
                .as_array()
                .ok_or_else(|| Error::Parse("matrix row is not an array".into()))?;
            let row: Vec<Rational> = cells
                .iter()
                .map(|c| {
                    c.as_str()
                        .ok_or_else(|| Error::Parse("matrix entry is not a string".into()))
                        .and_then(parse_rational)
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }
}

/// Coefficients of the checkerboard perturbations `B^{i,j}`, stored as the
/// `(n-1) x (n-1)` grid `x` (row-major flat form, freely interchanged).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PerturbationVector {
    n: usize,
    entries: Vec<Rational>, // (n-1)^2 flat row-major
}

impl PerturbationVector {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 2);
        Self {
            n,
            entries: vec![rat(0); (n - 1) * (n - 1)],
        }
    }

    pub fn from_flat(n: usize, entries: Vec<Rational>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Range("perturbations need order n >= 2".into()));
        }
        if entries.len() != (n - 1) * (n - 1) {
            return Err(Error::Range(format!(
                "expected {} coordinates for order {n}, got {}",
                (n - 1) * (n - 1),
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n - 1
    }

    /// Coordinate at 0-indexed grid position.
    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * (self.n - 1) + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * (self.n - 1) + j] = v;
    }

    pub fn flat(&self) -> &[Rational] {
        &self.entries
    }
}

/// `CM + sum x_{i,j} B^{i,j}`: applies every checkerboard perturbation to the
/// constant matrix. Row and column sums stay exactly one; the only way to
/// leave the doubly stochastic polytope is a negative entry, which is
/// reported with its 1-indexed tile.
pub fn perturb(x: &PerturbationVector) -> Result<DoublyStochasticMatrix> {
    let n = x.order();
    let mut entries = vec![Rational::new(BigInt::one(), BigInt::from(n)); n * n];
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let v = x.get(i, j);
            if v.is_zero() {
                continue;
            }
            entries[i * n + j] += v;
            entries[(i + 1) * n + j + 1] += v;
            entries[i * n + j + 1] -= v;
            entries[(i + 1) * n + j] -= v;
        }
    }
    for i in 0..n {
        for j in 0..n {
            if entries[i * n + j].is_negative() {
                return Err(Error::NegativeTile {
                    row: i + 1,
                    col: j + 1,
                    value: entries[i * n + j].to_string(),
                });
            }
        }
    }
    Ok(DoublyStochasticMatrix { n, entries })
}

/// Float analogue of [`perturb`] used inside iterative solvers; performs no
/// validity check.
pub fn perturb_f64(n: usize, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), (n - 1) * (n - 1));
    let mut m = vec![1.0 / n as f64; n * n];
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let v = x[i * (n - 1) + j];
            m[i * n + j] += v;
            m[(i + 1) * n + j + 1] += v;
            m[i * n + j + 1] -= v;
            m[(i + 1) * n + j] -= v;
        }
    }
    m
}

/// All non-decreasing maps `[k] -> [n]` (0-indexed values) paired with the
/// multiplicity `prod_i |f^{-1}(i)|!` of each map.
pub(crate) fn nondecreasing_maps(k: usize, n: usize) -> Vec<(Vec<usize>, u64)> {
    let mut out = Vec::new();
    let mut f = vec![0usize; k];
    loop {
        let mut mult = 1u64;
        let mut run = 1usize;
        for m in 1..k {
            if f[m] == f[m - 1] {
                run += 1;
                mult *= run as u64;
            } else {
                run = 1;
            }
        }
        out.push((f.clone(), mult));
        // Advance to the next non-decreasing map.
        let Some(pos) = (0..k).rev().find(|&m| f[m] < n - 1) else {
            break;
        };
        let v = f[pos] + 1;
        for entry in f.iter_mut().skip(pos) {
            *entry = v;
        }
    }
    out
}

/// Exact density of `pattern` in the step permuton of `m`.
///
/// Direct evaluation of the double sum over non-decreasing map pairs with the
/// inner product taken over a common integer denominator, so the whole inner
/// loop is integer arithmetic.
pub fn step_density(pattern: &Permutation, m: &DoublyStochasticMatrix) -> Rational {
    let k = pattern.order();
    let n = m.order();
    // Write every entry as an integer over one common denominator.
    let denom_lcm = m.entries.iter().fold(BigInt::one(), |acc, e| {
        num_integer::lcm(acc, e.denom().clone())
    });
    let numerators: Vec<BigInt> = m
        .entries
        .iter()
        .map(|e| e.numer() * (&denom_lcm / e.denom()))
        .collect();

    let maps = nondecreasing_maps(k, n);
    let weight_lcm = factorial_u64(k); // every multiplicity divides k!
    let mut total = BigInt::zero();
    for (f, mf) in &maps {
        let wf = weight_lcm / mf;
        for (g, mg) in &maps {
            let mut prod = BigInt::from(wf * (weight_lcm / mg));
            for pos in 1..=k {
                let row = f[pos - 1];
                let col = g[pattern.value_at(pos) - 1];
                let numer = &numerators[row * n + col];
                if numer.is_zero() {
                    prod = BigInt::zero();
                    break;
                }
                prod *= numer;
            }
            total += prod;
        }
    }
    // total / (lcm^k * (k!)^2) summed the weighted products; restore the
    // leading k!/n^k.
    let kfact = BigInt::from(factorial_u64(k));
    let scale_num = &kfact * total;
    let scale_den = BigInt::from(n).pow(k as u32) * denom_lcm.pow(k as u32) * &kfact * &kfact;
    Rational::new(scale_num, scale_den)
}

/// Density of `pattern` in the step permuton of the perturbed constant
/// matrix; errors propagate from [`perturb`].
pub fn density_function(pattern: &Permutation, x: &PerturbationVector) -> Result<Rational> {
    Ok(step_density(pattern, &perturb(x)?))
}

/// Exact gradient of [`density_function`] at the zero perturbation, as an
/// `(n-1) x (n-1)` grid indexed like the perturbation coordinates.
///
/// Uses the factored form of the derivative sum: each checkerboard summand is
/// an outer product, so one pass over non-decreasing maps builds a `k x n`
/// table from which every gradient entry is an integer dot product.
pub fn density_gradient(pattern: &Permutation, n: usize) -> Result<Vec<Vec<Rational>>> {
    if n < 2 {
        return Err(Error::Range("gradient needs order n >= 2".into()));
    }
    let k = pattern.order();
    let kfact = factorial_u64(k);
    // w[m][v] = sum over maps f with f(m) = v of k!/mult(f)  (integers).
    let mut w = vec![vec![0i64; n]; k];
    for (f, mult) in nondecreasing_maps(k, n) {
        let scaled = (kfact / mult) as i64;
        for (m, &v) in f.iter().enumerate() {
            w[m][v] += scaled;
        }
    }
    // Gradient entry (i,j), 0-indexed on the (n-1)^2 grid:
    //   k!/n^(2k-1) * sum_m (W[m][i]-W[m][i+1]) (W[pi(m)][j]-W[pi(m)][j+1])
    // with W = w/k!.
    let scale_den = BigInt::from(kfact) * BigInt::from(n).pow(2 * k as u32 - 1);
    let mut grid = vec![vec![rat(0); n - 1]; n - 1];
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let mut dot = 0i64;
            for pos in 1..=k {
                let du = w[pos - 1][i] - w[pos - 1][i + 1];
                let dv_row = &w[pattern.value_at(pos) - 1];
                let dv = dv_row[j] - dv_row[j + 1];
                dot += du * dv;
            }
            grid[i][j] = Rational::new(BigInt::from(dot), scale_den.clone());
        }
    }
    Ok(grid)
}

/// Float density of `pattern` in the step permuton of a row-major `n x n`
/// grid; used by the witness solver where the matrix itself is float-valued.
pub fn step_density_f64(pattern: &Permutation, grid: &[f64], n: usize) -> f64 {
    density_and_jacobian_f64(pattern, grid, n).0
}

/// Float density together with its gradient with respect to the perturbation
/// coordinates, evaluated at the given matrix.
///
/// The derivative of the product term with respect to `x_{i,j}` is the exact
/// product rule applied to the density sum; each summand touches the four
/// grid coordinates around its tile.
pub fn density_and_jacobian_f64(pattern: &Permutation, grid: &[f64], n: usize) -> (f64, Vec<f64>) {
    let k = pattern.order();
    assert_eq!(grid.len(), n * n);
    let maps = nondecreasing_maps(k, n);
    let mut density = 0.0f64;
    let mut jac = vec![0.0f64; (n - 1) * (n - 1)];
    let mut tiles = vec![(0usize, 0usize); k];
    let mut factors = vec![0.0f64; k];
    for (f, mf) in &maps {
        for (g, mg) in &maps {
            let weight = 1.0 / (*mf as f64 * *mg as f64);
            let mut prod = 1.0f64;
            for pos in 1..=k {
                let a = f[pos - 1];
                let b = g[pattern.value_at(pos) - 1];
                let v = grid[a * n + b];
                tiles[pos - 1] = (a, b);
                factors[pos - 1] = v;
                prod *= v;
            }
            density += weight * prod;
            for (m, &(a, b)) in tiles.iter().enumerate() {
                let mut partial = weight;
                for (m2, &fac) in factors.iter().enumerate() {
                    if m2 != m {
                        partial *= fac;
                    }
                }
                if partial == 0.0 {
                    continue;
                }
                let d = n - 1;
                if a < d && b < d {
                    jac[a * d + b] += partial;
                }
                if a > 0 && b > 0 {
                    jac[(a - 1) * d + (b - 1)] += partial;
                }
                if a > 0 && b < d {
                    jac[(a - 1) * d + b] -= partial;
                }
                if a < d && b > 0 {
                    jac[a * d + (b - 1)] -= partial;
                }
            }
        }
    }
    let kfact = factorial_u64(k) as f64;
    let scale = kfact / (n as f64).powi(k as i32);
    for v in &mut jac {
        *v *= scale;
    }
    (density * scale, jac)
}
