//! Certified real values: exact rational enclosures with an on-demand
//! refinement handle, plus the symbolic form `m·α + r` that step-function
//! Birkhoff sums live in.

use crate::dyadic::Rat;
use crate::error::{CoreError, PrecisionPolicy, Result};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use std::cmp::Ordering;
use std::sync::{Arc, Mutex};

type Refiner = dyn Fn(u32) -> Result<(Rat, Rat)> + Send + Sync;

/// An interval enclosure `[lo, hi]` of a real number. When a refiner is
/// attached, `refine` shrinks the enclosure by doubling the working
/// precision; comparisons against exact rationals terminate whenever the
/// enclosed value differs from the rational.
pub struct CertifiedValue {
    state: Mutex<CvState>,
    refiner: Option<Arc<Refiner>>,
    policy: PrecisionPolicy,
}

struct CvState {
    lo: Rat,
    hi: Rat,
    prec: u32,
}

impl Clone for CertifiedValue {
    fn clone(&self) -> Self {
        let st = self.state.lock().unwrap();
        CertifiedValue {
            state: Mutex::new(CvState {
                lo: st.lo.clone(),
                hi: st.hi.clone(),
                prec: st.prec,
            }),
            refiner: self.refiner.clone(),
            policy: self.policy,
        }
    }
}

impl std::fmt::Debug for CertifiedValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (lo, hi) = self.bounds();
        write!(f, "CertifiedValue[{lo}, {hi}]")
    }
}

impl CertifiedValue {
    pub fn exact(r: Rat) -> Self {
        CertifiedValue {
            state: Mutex::new(CvState {
                lo: r.clone(),
                hi: r,
                prec: 0,
            }),
            refiner: None,
            policy: PrecisionPolicy::default(),
        }
    }

    pub fn from_bounds(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi);
        CertifiedValue {
            state: Mutex::new(CvState { lo, hi, prec: 0 }),
            refiner: None,
            policy: PrecisionPolicy::default(),
        }
    }

    pub fn with_refiner<F>(policy: PrecisionPolicy, f: F) -> Result<Self>
    where
        F: Fn(u32) -> Result<(Rat, Rat)> + Send + Sync + 'static,
    {
        let (lo, hi) = f(policy.start)?;
        Ok(CertifiedValue {
            state: Mutex::new(CvState {
                lo,
                hi,
                prec: policy.start,
            }),
            refiner: Some(Arc::new(f)),
            policy,
        })
    }

    pub fn bounds(&self) -> (Rat, Rat) {
        let st = self.state.lock().unwrap();
        (st.lo.clone(), st.hi.clone())
    }

    pub fn is_exact(&self) -> bool {
        let st = self.state.lock().unwrap();
        st.lo == st.hi
    }

    pub fn width(&self) -> Rat {
        let st = self.state.lock().unwrap();
        &st.hi - &st.lo
    }

    /// One refinement step: doubles the precision and intersects the new
    /// bounds with the old ones.
    pub fn refine(&self) -> Result<()> {
        let refiner = match &self.refiner {
            Some(r) => r.clone(),
            None => return Ok(()), // already exact
        };
        let mut st = self.state.lock().unwrap();
        let next = self.policy.bump(st.prec)?;
        let (lo, hi) = refiner(next)?;
        if lo > st.lo {
            st.lo = lo;
        }
        if hi < st.hi {
            st.hi = hi;
        }
        st.prec = next;
        Ok(())
    }

    pub fn refine_to_width(&self, eps: &Rat) -> Result<()> {
        while &self.width() > eps {
            if self.refiner.is_none() {
                break;
            }
            self.refine()?;
        }
        Ok(())
    }

    /// Exact comparison against a rational; refines until decided.
    pub fn cmp_rat(&self, r: &Rat) -> Result<Ordering> {
        loop {
            {
                let st = self.state.lock().unwrap();
                if st.hi < *r {
                    return Ok(Ordering::Less);
                }
                if st.lo > *r {
                    return Ok(Ordering::Greater);
                }
                if st.lo == st.hi && st.lo == *r {
                    return Ok(Ordering::Equal);
                }
                if self.refiner.is_none() {
                    // Exact interval that straddles r and cannot shrink.
                    return Err(CoreError::PrecisionExhausted {
                        bits: st.prec as u64,
                        cap: self.policy.cap as u64,
                    });
                }
            }
            self.refine()?;
        }
    }

    pub fn sign(&self) -> Result<Ordering> {
        self.cmp_rat(&Rat::zero())
    }

    pub fn to_f64(&self) -> f64 {
        let (lo, hi) = self.bounds();
        0.5 * (rat_to_f64(&lo) + rat_to_f64(&hi))
    }

    pub fn to_f64_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.bounds();
        // pad one part in 2^40 outward; plenty for reporting purposes
        let pad = |v: f64| v.abs() * 1e-12 + 1e-300;
        (rat_to_f64(&lo) - pad(rat_to_f64(&lo)), rat_to_f64(&hi) + pad(rat_to_f64(&hi)))
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// The symbolic value `m·α + r` with integer `m` and rational `r`. All
/// step-function Birkhoff sums are exactly of this shape, so equality and
/// order tests reduce to certified sign decisions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaLinear {
    pub m: BigInt,
    pub r: Rat,
}

impl AlphaLinear {
    pub fn zero() -> Self {
        AlphaLinear {
            m: BigInt::zero(),
            r: Rat::zero(),
        }
    }

    pub fn from_rat(r: Rat) -> Self {
        AlphaLinear {
            m: BigInt::zero(),
            r,
        }
    }

    pub fn new(m: BigInt, r: Rat) -> Self {
        AlphaLinear { m, r }
    }

    pub fn is_rational(&self) -> bool {
        self.m.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        AlphaLinear {
            m: &self.m + &o.m,
            r: &self.r + &o.r,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        AlphaLinear {
            m: &self.m - &o.m,
            r: &self.r - &o.r,
        }
    }

    pub fn neg(&self) -> Self {
        AlphaLinear {
            m: -&self.m,
            r: -&self.r,
        }
    }

    pub fn add_rat(&self, r: &Rat) -> Self {
        AlphaLinear {
            m: self.m.clone(),
            r: &self.r + r,
        }
    }

    pub fn scale(&self, k: &Rat) -> Self {
        // scaling by a non-integer k would leave the m·α + r form; only
        // integer and rational-times-rational scalings are used, with the
        // rational scaling applied to values whose m-part is divisible.
        debug_assert!(k.is_integer() || (&self.m * k.numer()) % k.denom() == BigInt::zero());
        AlphaLinear {
            m: (&self.m * k.numer()) / k.denom(),
            r: &self.r * k,
        }
    }

    pub fn scale_int(&self, k: &BigInt) -> Self {
        AlphaLinear {
            m: &self.m * k,
            r: &self.r * k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::rat;

    #[test]
    fn exact_compare() {
        let v = CertifiedValue::exact(rat(1, 3));
        assert_eq!(v.cmp_rat(&rat(1, 3)).unwrap(), Ordering::Equal);
        assert_eq!(v.cmp_rat(&rat(1, 2)).unwrap(), Ordering::Less);
        assert_eq!(v.cmp_rat(&rat(1, 4)).unwrap(), Ordering::Greater);
    }

    #[test]
    fn refiner_shrinks() {
        // enclosure of 1/3 via halving widths
        let v = CertifiedValue::with_refiner(PrecisionPolicy::default(), |prec| {
            let w = Rat::new(BigInt::from(1), BigInt::from(2).pow(prec.min(512)));
            Ok((rat(1, 3) - &w, rat(1, 3) + &w))
        })
        .unwrap();
        assert_eq!(v.cmp_rat(&rat(333, 1000)).unwrap(), Ordering::Greater);
        assert_eq!(v.cmp_rat(&rat(334, 1000)).unwrap(), Ordering::Less);
    }
}
