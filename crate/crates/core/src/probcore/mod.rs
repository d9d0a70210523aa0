//! Exact probability, entropy and mutual-information arithmetic over finite
//! alphabets. Logarithms are base 2 throughout.

mod dist;
mod joint;

pub use dist::{Alphabet, CondDist, Dist, MASS_TOL};
pub use joint::{compose, JointDist, Link, MAX_CELLS, ZERO_MASS};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute tolerance of the inverse binary entropy.
pub const INV_HB_TOL: f64 = 1e-12;
const INV_HB_MAX_ITERS: usize = 200;

fn unit_interval<T: Scalar>(x: T, what: &'static str) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x.as_f64(),
        })
    }
}

/// `H_b(x) = -x log x - (1-x) log(1-x)`.
pub fn binary_entropy<T: Scalar>(x: T) -> Result<T> {
    unit_interval(x, "binary entropy argument")?;
    let term = |p: T| if p > T::zero() { -p * p.log2() } else { T::zero() };
    Ok(term(x) + term(T::one() - x))
}

/// Inverse of `H_b` restricted to `[0, 1/2]`, by bisection.
pub fn inv_binary_entropy<T: Scalar>(h: T) -> Result<T> {
    unit_interval(h, "inverse binary entropy argument")?;
    let half = T::lit(0.5);
    if h >= T::one() {
        return Ok(half);
    }
    if h <= T::zero() {
        return Ok(T::zero());
    }
    let tol = T::tol(INV_HB_TOL);
    let (mut lo, mut hi) = (T::zero(), half);
    for _ in 0..INV_HB_MAX_ITERS {
        let mid = (lo + hi) * half;
        let hm = binary_entropy(mid)?;
        if (hm - h).abs() <= tol && hi - lo <= tol {
            return Ok(mid);
        }
        if hm < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * half)
}

/// Crossover of two cascaded binary symmetric channels, `a + b - 2ab`.
pub fn bsc_convolve<T: Scalar>(a: T, b: T) -> Result<T> {
    unit_interval(a, "BSC crossover")?;
    unit_interval(b, "BSC crossover")?;
    Ok(a + b - T::lit(2.0) * a * b)
}

/// `[a]^- = min(a, 0)`.
pub fn min_zero<T: Scalar>(a: T) -> T {
    a.min(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5f64).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0f64).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0f64).unwrap(), 0.0);
        let direct = -(0.11f64 * 0.11f64.log2() + 0.89 * 0.89f64.log2());
        assert!((binary_entropy(0.11f64).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.4999).abs() < 1e-4);
        assert!(binary_entropy(1.5f64).is_err());
        assert!(binary_entropy(-0.1f64).is_err());
    }

    #[test]
    fn inverse_binary_entropy_examples() {
        assert_eq!(inv_binary_entropy(1.0f64).unwrap(), 0.5);
        assert_eq!(inv_binary_entropy(0.0f64).unwrap(), 0.0);
        let h = binary_entropy(0.2f64).unwrap();
        assert!((inv_binary_entropy(h).unwrap() - 0.2).abs() < 1e-10);
        assert!(inv_binary_entropy(1.01f64).is_err());
    }

    #[test]
    fn convolution_examples() {
        assert_eq!(bsc_convolve(0.0, 0.3f64).unwrap(), 0.3);
        assert_eq!(bsc_convolve(0.5, 0.3f64).unwrap(), 0.5);
        assert!((bsc_convolve(0.1, 0.06f64).unwrap() - 0.148).abs() < 1e-15);
        assert!(bsc_convolve(1.2, 0.0f64).is_err());
    }

    #[test]
    fn min_zero_examples() {
        assert_eq!(min_zero(-0.3f64), -0.3);
        assert_eq!(min_zero(0.3f64), 0.0);
        assert_eq!(min_zero(0.0f64), 0.0);
    }
}
