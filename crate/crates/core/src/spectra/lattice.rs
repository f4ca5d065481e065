//! Shell enumeration of the shifted lattices `{o + n·p}` under the Euclidean norm.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{GeodesicClass, Pair};

pub(super) struct Axis<'a> {
    pub offset: &'a Scalar,
    pub period: &'a Scalar,
    /// `n ∈ ℤ` when true, `n ≥ 0` otherwise.
    pub signed: bool,
}

/// Annulus `lo < length ≤ hi`; `lo = None` means the full ball.
#[derive(Clone, Copy, Debug)]
pub(super) struct Shell {
    pub lo: Option<f64>,
    pub hi: f64,
}

struct Bounds {
    lo_sq: Option<BigRational>,
    hi_sq: BigRational,
}

struct Walk<'a, 'b> {
    pair: Pair,
    axes: &'b [Axis<'a>],
    shell: Shell,
    exact: Option<Bounds>,
    cap: usize,
    base: usize,
    out: &'b mut Vec<GeodesicClass>,
}

pub(super) fn enumerate(
    pair: Pair,
    axes: &[Axis<'_>],
    shell: Shell,
    cap: usize,
    base: usize,
    out: &mut Vec<GeodesicClass>,
) -> Result<()> {
    let all_exact = axes.iter().all(|ax| ax.offset.exact().is_some() && ax.period.exact().is_some());
    let exact = if all_exact {
        let hi = BigRational::from_float(shell.hi).expect("finite cutoff");
        Some(Bounds {
            lo_sq: shell
                .lo
                .map(|lo| {
                    let r = BigRational::from_float(lo).expect("finite cutoff");
                    &r * &r
                }),
            hi_sq: &hi * &hi,
        })
    } else {
        None
    };
    let mut walk = Walk {
        pair,
        axes,
        shell,
        exact,
        cap,
        base,
        out,
    };
    let mut index = Vec::with_capacity(axes.len());
    walk.descend(0, 0.0, BigRational::zero(), &mut index)
}

impl Walk<'_, '_> {
    fn descend(&mut self, depth: usize, partial: f64, partial_exact: BigRational, index: &mut Vec<i64>) -> Result<()> {
        let ax = &self.axes[depth];
        let o = ax.offset.value();
        let p = ax.period.value();
        let r = (self.shell.hi * self.shell.hi - partial).max(0.0).sqrt();
        let mut n_lo = ((-r - o) / p).ceil() as i64 - 1;
        let n_hi = ((r - o) / p).floor() as i64 + 1;
        if !ax.signed {
            n_lo = n_lo.max(0);
        }
        let last = depth + 1 == self.axes.len();
        // Indices strictly inside the inner radius by a full period are skipped.
        let inner = match (last, self.shell.lo) {
            (true, Some(lo)) if lo * lo > partial => {
                let rin = (lo * lo - partial).sqrt();
                let a = ((-rin - o) / p).ceil() as i64 + 1;
                let b = ((rin - o) / p).floor() as i64 - 1;
                (a <= b).then_some((a, b))
            }
            _ => None,
        };
        let mut n = n_lo;
        while n <= n_hi {
            if let Some((a, b)) = inner {
                if n >= a && n <= b {
                    n = b + 1;
                    continue;
                }
            }
            let x = o + n as f64 * p;
            let sq = partial + x * x;
            let sq_exact = self.exact.as_ref().map(|_| {
                let xe = ax.offset.exact().unwrap() + ax.period.exact().unwrap() * BigRational::from_integer(n.into());
                &partial_exact + &xe * &xe
            });
            index.push(n);
            if last {
                self.emit(sq, sq_exact, index)?;
            } else if sq <= self.shell.hi * self.shell.hi * (1.0 + 1e-12) + 1e-300 {
                self.descend(depth + 1, sq, sq_exact.unwrap_or_else(BigRational::zero), index)?;
            }
            index.pop();
            n += 1;
        }
        Ok(())
    }

    fn emit(&mut self, sq: f64, sq_exact: Option<BigRational>, index: &[i64]) -> Result<()> {
        let length = sq.sqrt();
        let keep = match (&self.exact, &sq_exact) {
            (Some(b), Some(s)) => {
                !s.is_zero() && s <= &b.hi_sq && b.lo_sq.as_ref().is_none_or(|lo| s > lo)
            }
            _ => length > 0.0 && length <= self.shell.hi && self.shell.lo.is_none_or(|lo| length > lo),
        };
        if keep {
            if self.base + self.out.len() >= self.cap {
                return Err(Error::ClassCap { cap: self.cap });
            }
            let length = match &sq_exact {
                Some(s) => crate::scalar::ratio_to_f64(s).sqrt(),
                None => length,
            };
            self.out.push(GeodesicClass {
                pair: self.pair,
                index: index.to_vec(),
                length,
                sq_length: sq_exact,
            });
        }
        Ok(())
    }
}
