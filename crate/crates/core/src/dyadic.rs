//! Dyadic fixed-point numbers with directed rounding, and a certified
//! natural logarithm. These are the low-level enclosures behind every
//! non-rational quantity in the engine.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

pub type Rat = Ratio<BigInt>;

pub fn rat(n: i64, d: i64) -> Rat {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

/// Exact dyadic rational `mant * 2^exp`.
#[derive(Clone, Debug)]
pub struct Dyadic {
    pub mant: BigInt,
    pub exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic {
            mant: BigInt::from(n),
            exp: 0,
        }
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Dyadic { mant: n, exp: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i64) {
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        (a, b, e)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b, e) = self.aligned(other);
        Dyadic { mant: a + b, exp: e }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (a, b, e) = self.aligned(other);
        Dyadic { mant: a - b, exp: e }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Dyadic {
            mant: &self.mant * &other.mant,
            exp: self.exp + other.exp,
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        Dyadic {
            mant: &self.mant * k,
            exp: self.exp,
        }
    }

    pub fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }

    /// Round down to the grid `2^-prec`.
    pub fn floor_prec(&self, prec: u32) -> Self {
        let target = -(prec as i64);
        if self.exp >= target {
            return self.clone();
        }
        let shift = (target - self.exp) as u64;
        // BigInt shr rounds toward negative infinity.
        Dyadic {
            mant: &self.mant >> shift,
            exp: target,
        }
    }

    /// Round up to the grid `2^-prec`.
    pub fn ceil_prec(&self, prec: u32) -> Self {
        self.neg().floor_prec(prec).neg()
    }

    pub fn floor_int(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            &self.mant >> (-self.exp) as u64
        }
    }

    pub fn to_rat(&self) -> Rat {
        if self.exp >= 0 {
            Ratio::from_integer(&self.mant << self.exp as u64)
        } else {
            Ratio::new(self.mant.clone(), BigInt::from(1) << (-self.exp) as u64)
        }
    }

    pub fn from_rat_floor(r: &Rat, prec: u32) -> Self {
        let num = r.numer() << prec as u64;
        Dyadic {
            mant: num.div_floor(r.denom()),
            exp: -(prec as i64),
        }
    }

    pub fn from_rat_ceil(r: &Rat, prec: u32) -> Self {
        let num = r.numer() << prec as u64;
        Dyadic {
            mant: num.div_ceil(r.denom()),
            exp: -(prec as i64),
        }
    }

    pub fn cmp_rat(&self, r: &Rat) -> Ordering {
        // mant * 2^exp  vs  p/q  (q > 0)
        let lhs_core = &self.mant * r.denom();
        if self.exp >= 0 {
            (lhs_core << self.exp as u64).cmp(r.numer())
        } else {
            lhs_core.cmp(&(r.numer() << (-self.exp) as u64))
        }
    }

    /// Divide by `other` with rounding controlled by `up`, result snapped to
    /// the `2^-prec` grid. `other` must be nonzero.
    pub fn div_prec(&self, other: &Self, prec: u32, up: bool) -> Self {
        debug_assert!(!other.mant.is_zero());
        // value = (ma/mb) * 2^(ea-eb); want m * 2^-prec.
        // m = round(ma * 2^(ea-eb+prec) / mb)
        let s = self.exp - other.exp + prec as i64;
        let (mut num, mut den) = (self.mant.clone(), other.mant.clone());
        if s >= 0 {
            num <<= s as u64;
        } else {
            den <<= (-s) as u64;
        }
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        let mant = if up {
            num.div_ceil(&den)
        } else {
            num.div_floor(&den)
        };
        Dyadic {
            mant,
            exp: -(prec as i64),
        }
    }

    /// Sound double bounds: `lo <= value <= hi` as f64.
    pub fn to_f64_bounds(&self) -> (f64, f64) {
        if self.mant.is_zero() {
            return (0.0, 0.0);
        }
        let bits = self.mant.bits() as i64;
        let excess = bits - 53;
        if excess <= 0 {
            // mantissa exact in f64
            let m = self.mant.to_f64().expect("small mantissa");
            let v = scale_pow2(m, self.exp);
            return (v.0, v.1);
        }
        let top_floor = (&self.mant >> excess as u64).to_f64().expect("53-bit");
        let lo = scale_pow2(top_floor, self.exp + excess).0;
        let hi = scale_pow2(top_floor + 1.0, self.exp + excess).1;
        (lo, hi)
    }

    pub fn to_f64(&self) -> f64 {
        let (lo, hi) = self.to_f64_bounds();
        0.5 * (lo + hi)
    }
}

/// Multiply an exactly-representable f64 by 2^e with saturation on overflow
/// and outward rounding on underflow; returns (lower, upper).
fn scale_pow2(m: f64, e: i64) -> (f64, f64) {
    if m == 0.0 {
        return (0.0, 0.0);
    }
    if e == 0 {
        return (m, m);
    }
    let v = libm_ldexp(m, e);
    if v.is_infinite() {
        return if m > 0.0 {
            (f64::MAX, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::MIN)
        };
    }
    // ldexp on a 53-bit mantissa is exact unless the result is subnormal.
    if v != 0.0 && v.abs() >= f64::MIN_POSITIVE {
        (v, v)
    } else {
        // Subnormal or flushed: pad by one ulp each way.
        let pad = f64::MIN_POSITIVE;
        (v - pad, v + pad)
    }
}

fn libm_ldexp(m: f64, e: i64) -> f64 {
    let e = e.clamp(-4096, 4096) as i32;
    let mut v = m;
    let mut k = e;
    while k > 1000 {
        v *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        v *= 2f64.powi(-1000);
        k += 1000;
    }
    v * 2f64.powi(k)
}

/// Closed interval of dyadics; the invariant `lo <= hi` is maintained by
/// construction.
#[derive(Clone, Debug)]
pub struct DyInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl DyInterval {
    pub fn point(d: Dyadic) -> Self {
        DyInterval { lo: d.clone(), hi: d }
    }

    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        debug_assert!(lo.cmp(&hi) != Ordering::Greater);
        DyInterval { lo, hi }
    }

    pub fn from_rat(r: &Rat, prec: u32) -> Self {
        DyInterval {
            lo: Dyadic::from_rat_floor(r, prec),
            hi: Dyadic::from_rat_ceil(r, prec),
        }
    }

    pub fn from_rat_bounds(lo: &Rat, hi: &Rat, prec: u32) -> Self {
        DyInterval {
            lo: Dyadic::from_rat_floor(lo, prec),
            hi: Dyadic::from_rat_ceil(hi, prec),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        DyInterval {
            lo: self.lo.add(&o.lo),
            hi: self.hi.add(&o.hi),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        DyInterval {
            lo: self.lo.sub(&o.hi),
            hi: self.hi.sub(&o.lo),
        }
    }

    pub fn neg(&self) -> Self {
        DyInterval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn add_int(&self, k: i64) -> Self {
        let d = Dyadic::from_int(k);
        DyInterval {
            lo: self.lo.add(&d),
            hi: self.hi.add(&d),
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        let a = self.lo.mul_int(k);
        let b = self.hi.mul_int(k);
        if k.is_negative() {
            DyInterval { lo: b, hi: a }
        } else {
            DyInterval { lo: a, hi: b }
        }
    }

    pub fn scale_rat(&self, k: &Rat, prec: u32) -> Self {
        let kn = Dyadic::from_bigint(k.numer().clone());
        let kd = Dyadic::from_bigint(k.denom().clone());
        let a = self.lo.mul(&kn).div_prec(&kd, prec, false);
        let b = self.hi.mul(&kn).div_prec(&kd, prec, true);
        if k.numer().is_negative() {
            DyInterval {
                lo: self.hi.mul(&kn).div_prec(&kd, prec, false),
                hi: self.lo.mul(&kn).div_prec(&kd, prec, true),
            }
        } else {
            DyInterval { lo: a, hi: b }
        }
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    pub fn round_out(&self, prec: u32) -> Self {
        DyInterval {
            lo: self.lo.floor_prec(prec),
            hi: self.hi.ceil_prec(prec),
        }
    }

    /// True if the whole interval is strictly above `r`.
    pub fn certainly_gt(&self, r: &Rat) -> bool {
        self.lo.cmp_rat(r) == Ordering::Greater
    }

    /// True if the whole interval is strictly below `r`.
    pub fn certainly_lt(&self, r: &Rat) -> bool {
        self.hi.cmp_rat(r) == Ordering::Less
    }

    pub fn certainly_ge(&self, r: &Rat) -> bool {
        self.lo.cmp_rat(r) != Ordering::Less
    }

    pub fn certainly_le(&self, r: &Rat) -> bool {
        self.hi.cmp_rat(r) != Ordering::Greater
    }

    pub fn to_f64_bounds(&self) -> (f64, f64) {
        (self.lo.to_f64_bounds().0, self.hi.to_f64_bounds().1)
    }

    pub fn mid_f64(&self) -> f64 {
        0.5 * (self.lo.to_f64() + self.hi.to_f64())
    }

    /// Enclosure of ln over a positive interval; `prec` controls the output
    /// grid and the series truncation.
    pub fn ln(&self, prec: u32) -> Self {
        debug_assert!(self.lo.is_positive());
        let (l, _) = ln_point(&self.lo, prec);
        let (_, h) = ln_point(&self.hi, prec);
        DyInterval { lo: l, hi: h }
    }
}

/// Certified enclosure of ln(x) for a positive dyadic x, outward-rounded to
/// the 2^-prec grid.
pub fn ln_point(x: &Dyadic, prec: u32) -> (Dyadic, Dyadic) {
    assert!(x.is_positive(), "ln of non-positive dyadic");
    let wp = prec + 12;
    // x = y * 2^k with y in [1,2)
    let bits = x.mant.bits() as i64;
    let k = bits + x.exp - 1;
    // y mantissa at wp bits after the point: y = ym * 2^-wp
    let shift = wp as i64 - (bits - 1);
    let ym = if shift >= 0 {
        &x.mant << shift as u64
    } else {
        &x.mant >> (-shift) as u64 // floor; at most drops 2^-wp
    };
    let one = BigInt::from(1) << wp as u64;
    // reduce y in [1,2) by y' = y * 16/(16+j), j = floor((y-1)*16)
    let j = ((&ym - &one) >> (wp as u64 - 4)).to_i64().unwrap().clamp(0, 15);
    // y' = ym*16/(16+j), fixed point, directed
    let denj = BigInt::from(16 + j);
    let ylo = (&ym * BigInt::from(16)).div_floor(&denj);
    let yhi = ((&ym + 1u32) * BigInt::from(16)).div_ceil(&denj);
    // z = (y'-1)/(y'+1), in [0, ~1/33)
    let zlo = ((&ylo - &one) << wp as u64).div_floor(&(&ylo + &one));
    let zhi = ((&yhi - &one) << wp as u64).div_ceil(&(&yhi + &one));
    let (slo, shi) = atanh_fixed(&zlo.max(BigInt::zero()), &zhi, wp);
    // ln y = 2*atanh(z) + ln((16+j)/16)
    let table = ln_small_cached(16 + j as u32, 16, wp);
    let mut lo = Dyadic {
        mant: (&slo << 1) + &table.0,
        exp: -(wp as i64),
    };
    let mut hi = Dyadic {
        mant: (&shi << 1) + &table.1,
        exp: -(wp as i64),
    };
    // rounding slack for the two fixed-point reductions above
    hi = hi.add(&Dyadic {
        mant: BigInt::from(8),
        exp: -(wp as i64),
    });
    lo = lo.add(&Dyadic {
        mant: BigInt::from(-8),
        exp: -(wp as i64),
    });
    if k != 0 {
        let ln2 = ln_small_cached(2, 1, wp);
        let kk = BigInt::from(k);
        let (a, b) = (
            Dyadic {
                mant: &ln2.0 * &kk,
                exp: -(wp as i64),
            },
            Dyadic {
                mant: &ln2.1 * &kk,
                exp: -(wp as i64),
            },
        );
        let (ka, kb) = if k > 0 { (a, b) } else { (b, a) };
        lo = lo.add(&ka);
        hi = hi.add(&kb);
    }
    (lo.floor_prec(prec), hi.ceil_prec(prec))
}

/// atanh evaluated on a fixed-point interval [zlo, zhi] * 2^-wp with
/// 0 <= z < 1/2; returns fixed-point bounds at the same scale.
fn atanh_fixed(zlo: &BigInt, zhi: &BigInt, wp: u32) -> (BigInt, BigInt) {
    let mulf = |a: &BigInt, b: &BigInt| -> BigInt { (a * b) >> wp as u64 };
    let mulc = |a: &BigInt, b: &BigInt| -> BigInt {
        ((a * b) + ((BigInt::from(1) << wp as u64) - 1u32)) >> wp as u64
    };
    let z2lo = mulf(zlo, zlo);
    let z2hi = mulc(zhi, zhi);
    let mut plo = zlo.clone();
    let mut phi = zhi.clone();
    let mut slo = BigInt::zero();
    let mut shi = BigInt::zero();
    let mut t = 0u32;
    loop {
        let d = BigInt::from(2 * t + 1);
        slo += plo.div_floor(&d);
        shi += phi.div_ceil(&d);
        plo = mulf(&plo, &z2lo);
        phi = mulc(&phi, &z2hi);
        t += 1;
        if phi.is_zero() || t > 4 * wp {
            break;
        }
        if t > 2 && &phi < &BigInt::from(2) {
            // tail sum bounded by phi * z2/(1-z2) < phi
            shi += &phi + 1u32;
            break;
        }
    }
    // accumulated per-term rounding: at most t each way
    (slo - t, shi + t)
}

type LnKey = (u32, u32, u32);
static LN_CACHE: OnceLock<Mutex<HashMap<LnKey, (BigInt, BigInt)>>> = OnceLock::new();

/// ln(num/den) for small integers num > den >= 1, fixed-point at 2^-wp,
/// cached per (num, den, wp-bucket).
fn ln_small_cached(num: u32, den: u32, wp: u32) -> (BigInt, BigInt) {
    if num == den {
        return (BigInt::zero(), BigInt::zero());
    }
    let bucket = wp.next_multiple_of(64);
    let key = (num, den, bucket);
    let cache = LN_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    {
        let guard = cache.lock().unwrap();
        if let Some((lo, hi)) = guard.get(&key) {
            let sh = (bucket - wp) as u64;
            return (lo >> sh, (hi >> sh) + 1u32);
        }
    }
    // z = (num-den)/(num+den) exactly
    let zlo = (BigInt::from(num - den) << bucket as u64).div_floor(&BigInt::from(num + den));
    let zhi = (BigInt::from(num - den) << bucket as u64).div_ceil(&BigInt::from(num + den));
    let (slo, shi) = atanh_fixed(&zlo, &zhi, bucket);
    let val = ((&slo << 1) - 2u32, (&shi << 1) + 2u32);
    let mut guard = cache.lock().unwrap();
    guard.insert(key, val.clone());
    drop(guard);
    let sh = (bucket - wp) as u64;
    (&val.0 >> sh, (&val.1 >> sh) + 1u32)
}

/// Enclosure of ln of a rational r > 0.
pub fn ln_rat(r: &Rat, prec: u32) -> DyInterval {
    let x = DyInterval::from_rat(r, prec + 16);
    assert!(x.lo.is_positive(), "ln_rat of non-positive rational");
    x.ln(prec)
}

/// Enclosure of ln 2.
pub fn ln2(prec: u32) -> DyInterval {
    let (lo, hi) = ln_small_cached(2, 1, prec);
    DyInterval {
        lo: Dyadic {
            mant: lo,
            exp: -(prec as i64),
        },
        hi: Dyadic {
            mant: hi,
            exp: -(prec as i64),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn bigint_shr_is_floor() {
        let a = BigInt::from(-5) >> 1u64;
        assert_eq!(a, BigInt::from(-3));
    }

    #[test]
    fn ln2_matches_f64() {
        let i = ln2(80);
        let (lo, hi) = i.to_f64_bounds();
        assert!(lo <= std::f64::consts::LN_2 && std::f64::consts::LN_2 <= hi);
        assert!((hi - lo) < 1e-20);
    }

    #[test]
    fn ln_point_various() {
        for &(num, den) in &[(1i64, 3i64), (2, 1), (7, 2), (1, 100), (997, 996), (5, 4)] {
            let r = rat(num, den);
            let enc = ln_rat(&r, 100);
            let truth = (num as f64 / den as f64).ln();
            let (lo, hi) = enc.to_f64_bounds();
            assert!(
                lo <= truth && truth <= hi,
                "ln({num}/{den}): [{lo}, {hi}] vs {truth}"
            );
            assert!(hi - lo < 1e-25, "width too large: {}", hi - lo);
        }
    }

    #[test]
    fn ln_dist_integral_constant() {
        // |log dist to nearest int| integral constant: 1 + ln 2 to 1e-12
        let v = ln2(100);
        let (lo, hi) = v.to_f64_bounds();
        let c = 1.0 + 0.5 * (lo + hi);
        assert!((c - (1.0 + std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn div_prec_directed() {
        let a = Dyadic::from_int(1);
        let b = Dyadic::from_int(3);
        let lo = a.div_prec(&b, 64, false);
        let hi = a.div_prec(&b, 64, true);
        assert!(lo.cmp_rat(&rat(1, 3)) == Ordering::Less);
        assert!(hi.cmp_rat(&rat(1, 3)) == Ordering::Greater);
        let w = hi.sub(&lo);
        assert!(w.cmp_rat(&Rat::new(BigInt::one(), BigInt::from(1u64) << 62)) == Ordering::Less);
    }

    #[test]
    fn f64_bounds_sound() {
        let d = Dyadic {
            mant: BigInt::from(123456789012345678i64),
            exp: -57,
        };
        let (lo, hi) = d.to_f64_bounds();
        let v = 123456789012345678f64 / (2f64).powi(57);
        assert!(lo <= v && v <= hi);
        assert!(hi - lo < 1e-10);
    }
}
