//! Exact arithmetic on sums of square roots of rationals.
//!
//! Every square root of a positive rational has a canonical form `(m/q)·√s`
//! with `s` a squarefree integer. Square roots of distinct squarefree integers
//! are linearly independent over ℚ, so two sums in canonical form are equal
//! exactly when their coefficient maps agree. Canonical forms need the
//! squarefree kernel of `s`; trial division certifies it for every radicand
//! below `B³` (B = 2¹⁶) and for anything whose cofactor is a perfect square.
//! Uncertified radicands are still usable; equality involving them falls back
//! to interval refinement, which can separate but never prove equality.

use std::cmp::Ordering;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

const TRIAL_BOUND: u32 = 1 << 16;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_BOUND as usize;
        let mut sieve = vec![true; n + 1];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i <= n {
            if sieve[i] {
                let mut j = i * i;
                while j <= n {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (2..=n).filter(|&k| sieve[k]).map(|k| k as u32).collect()
    })
}

/// `n = root² · radicand`, with `radicand` squarefree when `certified`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquarefreeSplit {
    pub root: BigUint,
    pub radicand: BigUint,
    pub certified: bool,
}

pub fn squarefree_split(n: &BigUint) -> SquarefreeSplit {
    if n.is_zero() {
        return SquarefreeSplit {
            root: BigUint::zero(),
            radicand: BigUint::one(),
            certified: true,
        };
    }
    if let Some(small) = n.to_u128() {
        let (root, rad, certified) = split_u128(small);
        return SquarefreeSplit {
            root: BigUint::from(root),
            radicand: BigUint::from(rad),
            certified,
        };
    }
    let mut rest = n.clone();
    let mut root = BigUint::one();
    let mut radicand = BigUint::one();
    for &p in small_primes() {
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            break;
        }
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            root *= pb.pow(e / 2);
            if e % 2 == 1 {
                radicand *= &pb;
            }
        }
    }
    let certified = finish_cofactor(&mut rest, &mut root, &mut radicand);
    SquarefreeSplit {
        root,
        radicand,
        certified,
    }
}

fn finish_cofactor(rest: &mut BigUint, root: &mut BigUint, radicand: &mut BigUint) -> bool {
    if rest.is_one() {
        return true;
    }
    let s = rest.sqrt();
    if &s * &s == *rest {
        *root *= s;
        return true;
    }
    let b = BigUint::from(TRIAL_BOUND);
    let certified = *rest < &b * &b * &b;
    *radicand *= &*rest;
    certified
}

fn split_u128(mut n: u128) -> (u128, u128, bool) {
    let mut root = 1u128;
    let mut rad = 1u128;
    for &p in small_primes() {
        let p = p as u128;
        if p * p > n {
            break;
        }
        let mut e = 0u32;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            root *= p.pow(e / 2);
            if e % 2 == 1 {
                rad *= p;
            }
        }
    }
    if n == 1 {
        return (root, rad, true);
    }
    let s = n.sqrt();
    if s * s == n {
        return (root * s, rad, true);
    }
    let b = TRIAL_BOUND as u128;
    (root, rad * n, n < b * b * b)
}

/// Canonical `coef · √radicand` form of the square root of a rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Radical {
    pub coef: BigRational,
    pub radicand: BigUint,
    pub certified: bool,
}

impl Radical {
    pub fn sqrt_of(sq: &BigRational) -> Radical {
        assert!(!sq.is_negative(), "square root of negative rational");
        let p = sq.numer().magnitude();
        let q = sq.denom().magnitude();
        let split = squarefree_split(&(p * q));
        Radical {
            coef: BigRational::new(
                BigInt::from_biguint(Sign::Plus, split.root),
                BigInt::from_biguint(Sign::Plus, q.clone()),
            ),
            radicand: split.radicand,
            certified: split.certified,
        }
    }

    pub fn from_rational(r: BigRational) -> Radical {
        Radical {
            coef: r,
            radicand: BigUint::one(),
            certified: true,
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::scalar::ratio_to_f64(&self.coef) * self.radicand.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }
}

/// Exact square root of a rational when both numerator and denominator are squares.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let p = r.numer().magnitude();
    let q = r.denom().magnitude();
    let sp = p.sqrt();
    let sq = q.sqrt();
    if &sp * &sp == *p && &sq * &sq == *q {
        Some(BigRational::new(
            BigInt::from_biguint(Sign::Plus, sp),
            BigInt::from_biguint(Sign::Plus, sq),
        ))
    } else {
        None
    }
}

/// `⌊√r⌋` for a non-negative rational, using `⌊√r⌋ = ⌊√⌊r⌋⌋`.
pub fn floor_sqrt(r: &BigRational) -> BigUint {
    assert!(!r.is_negative());
    r.floor().to_integer().magnitude().sqrt()
}

/// Whether `√r` is an integer.
pub fn sqrt_is_integer(r: &BigRational) -> bool {
    if !r.is_integer() {
        return false;
    }
    let n = r.numer().magnitude();
    let s = n.sqrt();
    &s * &s == *n
}

/// Sign of `offset + Σ coef·√radicand`, decided by exact cancellation when the
/// irrational part vanishes and otherwise by interval refinement doubling the
/// working precision from 64 bits up to `max_bits`. `None` means the interval
/// never excluded zero.
pub fn sign_of_sum(terms: &[(BigRational, BigUint)], offset: &BigRational, max_bits: u32) -> Option<Ordering> {
    let mut rational = offset.clone();
    let mut irrational: Vec<(&BigRational, &BigUint)> = Vec::new();
    for (c, s) in terms {
        if c.is_zero() {
            continue;
        }
        if s.is_one() {
            rational += c;
        } else {
            irrational.push((c, s));
        }
    }
    if irrational.is_empty() {
        return Some(rational.cmp(&BigRational::zero()));
    }
    let mut bits = 64u32;
    loop {
        let scale = BigInt::one() << bits as usize;
        let scaled = &rational * BigRational::from_integer(scale.clone());
        let mut lo = scaled.floor().to_integer();
        let mut hi = scaled.ceil().to_integer();
        for (c, s) in &irrational {
            // |c|·√s·2^bits lies in [r/q, (r+1)/q] with r = ⌊√(p²·s·4^bits)⌋.
            let p = c.numer().magnitude();
            let q = BigInt::from_biguint(Sign::Plus, c.denom().magnitude().clone());
            let radicand = (p * p * *s) << (2 * bits as usize);
            let r = BigInt::from_biguint(Sign::Plus, radicand.sqrt());
            let t_lo = Integer::div_floor(&r, &q);
            let t_hi = Integer::div_ceil(&(&r + BigInt::one()), &q);
            if c.is_positive() {
                lo += t_lo;
                hi += t_hi;
            } else {
                lo -= t_hi;
                hi -= t_lo;
            }
        }
        if lo.is_positive() {
            return Some(Ordering::Greater);
        }
        if hi.is_negative() {
            return Some(Ordering::Less);
        }
        if bits >= max_bits {
            return None;
        }
        bits = (bits * 2).min(max_bits);
    }
}
