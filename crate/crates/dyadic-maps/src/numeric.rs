//! Exact rational arithmetic with a dyadic view.
//!
//! Every coordinate in the crate is a [`Q`]. Dyadic numbers are not a
//! separate type: [`is_dyadic`] and [`Dyadic`] validate and decompose.

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// `n/d` as a reduced rational. Panics on `d == 0`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn add(a: &Q, b: &Q) -> Q {
    a + b
}

pub fn sub(a: &Q, b: &Q) -> Q {
    a - b
}

pub fn mul(a: &Q, b: &Q) -> Q {
    a * b
}

pub fn div(a: &Q, b: &Q) -> Result<Q> {
    if b.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(a / b)
}

/// Exponent `k` when the big integer is exactly `2^k`.
fn int_log2(n: &BigInt) -> Option<u64> {
    if !n.is_positive() {
        return None;
    }
    let tz = n.trailing_zeros().unwrap_or(0);
    if (n >> tz as usize).is_one() {
        Some(tz)
    } else {
        None
    }
}

pub fn is_dyadic(a: &Q) -> bool {
    int_log2(a.denom()).is_some()
}

/// `Some(k)` when `a = 2^k`; `None` when `a > 0` is not a power of two.
pub fn log2_exact(a: &Q) -> Result<Option<i64>> {
    if !a.is_positive() {
        return Err(Error::Domain(format!("log2 of non-positive {}", a)));
    }
    let n = int_log2(a.numer());
    let d = int_log2(a.denom());
    Ok(match (n, d) {
        (Some(n), Some(d)) => Some(n as i64 - d as i64),
        _ => None,
    })
}

/// `2^k` for any integer `k`.
pub fn pow2(k: i64) -> Q {
    let p = BigInt::one() << k.unsigned_abs() as usize;
    if k >= 0 {
        Q::from_integer(p)
    } else {
        Q::new(BigInt::one(), p)
    }
}

/// Largest `k` with `2^k <= a`, for `a > 0`.
pub fn floor_log2(a: &Q) -> i64 {
    assert!(a.is_positive(), "floor_log2 of non-positive value");
    let nb = a.numer().bits() as i64;
    let db = a.denom().bits() as i64;
    let mut k = nb - db;
    while pow2(k) > *a {
        k -= 1;
    }
    while pow2(k + 1) <= *a {
        k += 1;
    }
    k
}

/// Smallest `k` with `2^k >= a`, for `a > 0`.
pub fn ceil_log2(a: &Q) -> i64 {
    let k = floor_log2(a);
    if pow2(k) == *a {
        k
    } else {
        k + 1
    }
}

/// Exponent of the reduced denominator; `None` when `a` is not dyadic.
pub fn dyadic_exponent(a: &Q) -> Option<u64> {
    int_log2(a.denom())
}

/// Dyadic view `p / 2^k` with `k` minimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    pub p: BigInt,
    pub k: u64,
}

impl Dyadic {
    pub fn from_q(a: &Q) -> Option<Dyadic> {
        dyadic_exponent(a).map(|k| Dyadic { p: a.numer().clone(), k })
    }

    pub fn to_q(&self) -> Q {
        Q::new(self.p.clone(), BigInt::one() << self.k as usize)
    }
}

impl std::fmt::Display for Dyadic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.k == 0 {
            write!(f, "{}", self.p)
        } else {
            write!(f, "{}/2^{}", self.p, self.k)
        }
    }
}

/// Round `a` down to the grid `2^-k`.
pub fn floor_to_grid(a: &Q, k: u64) -> Q {
    let s = pow2(k as i64);
    (a * &s).floor() / s
}

/// Round `a` to the nearest point of the grid `2^-k` (ties go down).
pub fn round_to_grid(a: &Q, k: u64) -> Q {
    let s = pow2(k as i64);
    let scaled = a * &s;
    let lo = scaled.floor();
    let r = if &scaled - &lo > q(1, 2) { lo + Q::one() } else { lo };
    r / s
}

/// Canonical text: `p/q` in lowest terms, `q` omitted when 1.
pub fn fmt_q(a: &Q) -> String {
    a.to_string()
}

/// Parses `p`, `p/q` or `p/2^k`; also accepts a plain decimal such as `0.375`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Domain(format!("not a rational: {:?}", s));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d = d.trim();
        let d: BigInt = if let Some(e) = d.strip_prefix("2^") {
            let e: u32 = e.parse().map_err(|_| bad())?;
            BigInt::one() << e as usize
        } else {
            d.parse().map_err(|_| bad())?
        };
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip_val: BigInt = if ip.is_empty() || ip == "-" {
            BigInt::zero()
        } else {
            ip.parse().map_err(|_| bad())?
        };
        let fv: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = num::pow(BigInt::from(10), fp.len());
        let frac = Q::new(fv, scale);
        let whole = Q::from_integer(ip_val.abs());
        let v = whole + frac;
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

pub fn to_f64(a: &Q) -> f64 {
    a.to_f64().unwrap_or(f64::NAN)
}

/// Sorts and removes duplicates.
///
/// Orders by an `f64` key, sorts runs of equal keys exactly and verifies the
/// result pairwise; a full exact sort runs only if the check fails.
pub fn sort_dedup(v: &mut Vec<Q>) {
    let mut keyed: Vec<(f64, Q)> = v.drain(..).map(|x| (to_f64(&x), x)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut i = 0;
    while i < keyed.len() {
        let j = i + keyed[i..].iter().take_while(|e| e.0 == keyed[i].0).count();
        keyed[i..j].sort_by(|a, b| a.1.cmp(&b.1));
        i = j;
    }
    v.extend(keyed.into_iter().map(|e| e.1));
    if v.windows(2).any(|w| w[0] > w[1]) {
        v.sort();
    }
    v.dedup();
}

pub fn abs(a: &Q) -> Q {
    a.abs()
}

pub fn min_q(a: &Q, b: &Q) -> Q {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max_q(a: &Q, b: &Q) -> Q {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_dedup_matches_exact_sort() {
        let mut v: Vec<Q> = vec![q(1, 3), q(1, 2), qi(0), q(1, 3), q(-5, 7), q(1, 3) + pow2(-80), q(1, 3)];
        let mut w = v.clone();
        sort_dedup(&mut v);
        w.sort();
        w.dedup();
        assert_eq!(v, w);
    }

    #[test]
    fn arithmetic_is_exact() {
        assert_eq!(add(&q(1, 2), &q(1, 4)), q(3, 4));
        assert_eq!(q(6, 8), q(3, 4));
        assert_eq!(div(&q(3, 4), &q(1, 2)).unwrap(), q(3, 2));
        assert_eq!(div(&q(1, 2), &qi(0)), Err(Error::DivisionByZero));
        assert_eq!(sub(&q(1, 3), &q(1, 3)), qi(0));
        assert_eq!(mul(&q(2, 3), &q(3, 4)), q(1, 2));
    }

    #[test]
    fn dyadic_predicate() {
        assert!(is_dyadic(&q(3, 8)));
        assert!(!is_dyadic(&q(1, 3)));
        assert!(is_dyadic(&qi(0)));
        assert!(is_dyadic(&q(-5, 1)));
    }

    #[test]
    fn exact_logarithm() {
        assert_eq!(log2_exact(&qi(4)).unwrap(), Some(2));
        assert_eq!(log2_exact(&q(1, 8)).unwrap(), Some(-3));
        assert_eq!(log2_exact(&q(3, 2)).unwrap(), None);
        assert_eq!(log2_exact(&qi(1)).unwrap(), Some(0));
        assert!(log2_exact(&qi(0)).is_err());
        assert!(log2_exact(&q(-1, 2)).is_err());
    }

    #[test]
    fn floor_and_ceil_log2() {
        assert_eq!(floor_log2(&q(3, 2)), 0);
        assert_eq!(floor_log2(&q(1, 3)), -2);
        assert_eq!(floor_log2(&qi(8)), 3);
        assert_eq!(ceil_log2(&qi(8)), 3);
        assert_eq!(ceil_log2(&qi(9)), 4);
        assert_eq!(ceil_log2(&q(1, 3)), -1);
    }

    #[test]
    fn canonical_text_round_trip() {
        for s in ["0", "1", "3/4", "-7/16", "21/64", "4/17"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(parse_q("6/8").unwrap(), q(3, 4));
        assert_eq!(parse_q("5/2^3").unwrap(), q(5, 8));
        assert_eq!(parse_q("0.375").unwrap(), q(3, 8));
        assert_eq!(parse_q("-0.5").unwrap(), q(-1, 2));
        assert!(parse_q("x").is_err());
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn dyadic_view() {
        let d = Dyadic::from_q(&q(6, 16)).unwrap();
        assert_eq!((d.p.clone(), d.k), (BigInt::from(3), 3));
        assert_eq!(d.to_string(), "3/2^3");
        assert_eq!(d.to_q(), q(3, 8));
        assert!(Dyadic::from_q(&q(1, 3)).is_none());
    }

    #[test]
    fn grid_rounding() {
        assert_eq!(floor_to_grid(&q(1, 3), 2), q(1, 4));
        assert_eq!(round_to_grid(&q(1, 3), 2), q(1, 4));
        assert_eq!(round_to_grid(&q(2, 3), 2), q(3, 4));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn rat() -> impl Strategy<Value = Q> {
            (-1000i64..1000, 1i64..500).prop_map(|(n, d)| q(n, d))
        }

        proptest! {
            #[test]
            fn commutative_and_round_trip(a in rat(), b in rat()) {
                prop_assert_eq!(add(&a, &b), add(&b, &a));
                if !a.is_zero() {
                    prop_assert_eq!(mul(&a, &div(&b, &a).unwrap()), b.clone());
                }
                prop_assert_eq!(parse_q(&fmt_q(&a)).unwrap(), a);
            }

            #[test]
            fn dyadic_closure(p in -500i64..500, k in 0u32..12, r in -500i64..500, j in 0u32..12, e in -6i64..6) {
                let a = q(p, 1 << k);
                let b = q(r, 1 << j);
                prop_assert!(is_dyadic(&(&a + &b)));
                prop_assert!(is_dyadic(&(&a - &b)));
                prop_assert!(is_dyadic(&(&a * &b)));
                prop_assert!(is_dyadic(&(&a * pow2(e))));
            }
        }
    }
}
