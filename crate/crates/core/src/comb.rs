//! Small integer combinatorics helpers.

use num_bigint::BigInt;
use num_traits::One;

pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// `n!` as a machine integer; valid for `n <= 20`.
pub fn factorial_u64(n: usize) -> u64 {
    assert!(n <= 20, "factorial_u64 overflows above 20!");
    (2..=n as u64).product::<u64>().max(1)
}

/// Binomial coefficient with the usual convention `C(n,k) = 0` for `k > n`.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Signed machine-sized binomial for small arguments (`n <= 62`).
pub fn binomial_i64(n: usize, k: usize) -> i64 {
    assert!(n <= 62, "binomial_i64 overflows above n = 62");
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}
