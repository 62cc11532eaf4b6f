//! Exact continued fractions: lazy digit generation (explicit, periodic and
//! uniformly sampled sources), convergents, certified enclosures of α, and
//! the α-dependent arithmetic on `m·α + r` values.

use crate::certified::{AlphaLinear, CertifiedValue};
use crate::dyadic::{DyInterval, Rat};
use crate::error::{CoreError, PrecisionPolicy, Result};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

/// Tail rule for explicitly prescribed quotient lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    /// All partial quotients equal to 1 after the prefix.
    Ones,
    /// The given block repeats forever (the prefix is empty in the usual
    /// quadratic-irrational usage, e.g. `[2r]` for sqrt(2)-1).
    Periodic(Vec<u64>),
}

#[derive(Clone, Debug)]
enum Source {
    Explicit { prefix: Vec<BigUint>, tail: Tail },
    Sampled { seed: u64 },
}

/// Homographic state for digit extraction from a uniform bit stream:
/// x = (A t + B) / (C t + D) where t ∈ [0,1] is the unread tail.
struct BitGauss {
    rng: ChaCha8Rng,
    word: u64,
    bits_left: u8,
    bits_used: u64,
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

impl BitGauss {
    fn new(seed: u64) -> Self {
        BitGauss {
            rng: ChaCha8Rng::seed_from_u64(seed),
            word: 0,
            bits_left: 0,
            bits_used: 0,
            a: BigInt::one(),
            b: BigInt::zero(),
            c: BigInt::zero(),
            d: BigInt::one(),
        }
    }

    fn next_bit(&mut self) -> u8 {
        if self.bits_left == 0 {
            self.word = self.rng.next_u64();
            self.bits_left = 64;
        }
        let bit = (self.word & 1) as u8;
        self.word >>= 1;
        self.bits_left -= 1;
        self.bits_used += 1;
        bit
    }

    /// Emit the next partial quotient, consuming bits until it is certified.
    fn next_digit(&mut self, bit_cap: u64) -> Result<BigUint> {
        loop {
            if self.b.is_positive() && (&self.a + &self.b).is_positive() {
                // 1/x = (C t + D) / (A t + B); evaluate at t = 0 and t = 1.
                let (v0, r0) = self.d.div_mod_floor(&self.b);
                let den1 = &self.a + &self.b;
                let (v1, r1) = (&self.c + &self.d).div_mod_floor(&den1);
                if v0 == v1 && !r0.is_zero() && !r1.is_zero() && v0.is_positive() {
                    let a_new = &self.c - &v0 * &self.a;
                    let b_new = &self.d - &v0 * &self.b;
                    self.c = std::mem::replace(&mut self.a, a_new);
                    self.d = std::mem::replace(&mut self.b, b_new);
                    return Ok(v0.to_biguint().expect("positive digit"));
                }
            }
            if self.bits_used >= bit_cap {
                return Err(CoreError::PrecisionExhausted {
                    bits: self.bits_used,
                    cap: bit_cap,
                });
            }
            let beta = self.next_bit();
            // t = (beta + t')/2
            self.b = &self.a * beta + (&self.b << 1);
            self.d = &self.c * beta + (&self.d << 1);
        }
    }
}

struct CfState {
    digits: Vec<BigUint>,
    // convergents p_k, q_k for k = 0..=digits.len(); p_0 = 0, q_0 = 1
    p: Vec<BigInt>,
    q: Vec<BigInt>,
    gauss: Option<BitGauss>,
    dyadic_cache: Option<(u32, DyInterval)>,
}

/// An irrational α ∈ (0,1) represented by its partial quotients. Digits are
/// materialized lazily under an internal lock, so values are safe to share
/// across threads; the logical value never changes after construction.
pub struct ContinuedFraction {
    source: Source,
    pub policy: PrecisionPolicy,
    state: Mutex<CfState>,
}

impl std::fmt::Debug for ContinuedFraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.source {
            Source::Explicit { prefix, tail } => {
                write!(f, "CF(explicit {:?}.. tail {:?})", prefix.len(), tail)
            }
            Source::Sampled { seed } => write!(f, "CF(seed {seed})"),
        }
    }
}

impl ContinuedFraction {
    fn fresh(source: Source, policy: PrecisionPolicy) -> Self {
        let gauss = match &source {
            Source::Sampled { seed } => Some(BitGauss::new(*seed)),
            _ => None,
        };
        ContinuedFraction {
            source,
            policy,
            state: Mutex::new(CfState {
                digits: Vec::new(),
                p: vec![BigInt::zero()],
                q: vec![BigInt::one()],
                gauss,
                dyadic_cache: None,
            }),
        }
    }

    /// Explicit quotient list with a declared tail rule.
    pub fn explicit(prefix: Vec<u64>, tail: Tail) -> Result<Arc<Self>> {
        if prefix.iter().any(|&a| a == 0) {
            return Err(CoreError::BadParams("partial quotients must be >= 1".into()));
        }
        if let Tail::Periodic(block) = &tail {
            if block.is_empty() || block.iter().any(|&a| a == 0) {
                return Err(CoreError::BadParams(
                    "periodic block must be nonempty with quotients >= 1".into(),
                ));
            }
        }
        Ok(Arc::new(Self::fresh(
            Source::Explicit {
                prefix: prefix.into_iter().map(BigUint::from).collect(),
                tail,
            },
            PrecisionPolicy::default(),
        )))
    }

    pub fn explicit_big(prefix: Vec<BigUint>, tail: Tail) -> Result<Arc<Self>> {
        if prefix.iter().any(|a| a.is_zero()) {
            return Err(CoreError::BadParams("partial quotients must be >= 1".into()));
        }
        Ok(Arc::new(Self::fresh(
            Source::Explicit { prefix, tail },
            PrecisionPolicy::default(),
        )))
    }

    /// Periodic continued fraction `[0; block, block, ...]`.
    pub fn periodic(block: Vec<u64>) -> Result<Arc<Self>> {
        Self::explicit(Vec::new(), Tail::Periodic(block))
    }

    /// Lazily refined uniform real in (0,1): uniform bits are drawn on
    /// demand and digits emitted once certified. Deterministic per seed.
    pub fn sampled(seed: u64) -> Arc<Self> {
        Arc::new(Self::fresh(
            Source::Sampled { seed },
            PrecisionPolicy::default(),
        ))
    }

    pub fn sampled_with_policy(seed: u64, policy: PrecisionPolicy) -> Arc<Self> {
        Arc::new(Self::fresh(Source::Sampled { seed }, policy))
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.source {
            Source::Sampled { seed } => Some(*seed),
            _ => None,
        }
    }

    pub fn tail(&self) -> Option<&Tail> {
        match &self.source {
            Source::Explicit { tail, .. } => Some(tail),
            _ => None,
        }
    }

    pub fn prefix_len(&self) -> usize {
        match &self.source {
            Source::Explicit { prefix, .. } => prefix.len(),
            _ => 0,
        }
    }

    fn extend_one(&self, st: &mut CfState) -> Result<()> {
        let k = st.digits.len();
        let next: BigUint = match &self.source {
            Source::Explicit { prefix, tail } => {
                if k < prefix.len() {
                    prefix[k].clone()
                } else {
                    match tail {
                        Tail::Ones => BigUint::one(),
                        Tail::Periodic(block) => {
                            BigUint::from(block[(k - prefix.len()) % block.len()])
                        }
                    }
                }
            }
            Source::Sampled { .. } => {
                let cap = self.policy.cap as u64;
                st.gauss.as_mut().expect("sampled state").next_digit(cap)?
            }
        };
        let a = BigInt::from(next.clone());
        let (pk, qk) = (st.p[k].clone(), st.q[k].clone());
        let (pk1, qk1) = if k == 0 {
            (BigInt::one(), BigInt::zero()) // virtual p_{-1}, q_{-1}
        } else {
            (st.p[k - 1].clone(), st.q[k - 1].clone())
        };
        st.p.push(&a * &pk + pk1);
        st.q.push(&a * &qk + qk1);
        st.digits.push(next);
        Ok(())
    }

    pub fn ensure_digits(&self, n: usize) -> Result<()> {
        let mut st = self.state.lock().unwrap();
        while st.digits.len() < n {
            self.extend_one(&mut st)?;
        }
        Ok(())
    }

    /// Partial quotient a_k, 1-based.
    pub fn digit(&self, k: usize) -> Result<BigUint> {
        assert!(k >= 1);
        self.ensure_digits(k)?;
        let st = self.state.lock().unwrap();
        Ok(st.digits[k - 1].clone())
    }

    pub fn digits(&self, n: usize) -> Result<Vec<BigUint>> {
        self.ensure_digits(n)?;
        let st = self.state.lock().unwrap();
        Ok(st.digits[..n].to_vec())
    }

    /// Convergent (p_k, q_k).
    pub fn convergent(&self, k: usize) -> Result<(BigInt, BigInt)> {
        self.ensure_digits(k)?;
        let st = self.state.lock().unwrap();
        Ok((st.p[k].clone(), st.q[k].clone()))
    }

    /// Smallest k with q_k > bound; extends the expansion as needed.
    pub fn index_with_q_above(&self, bound: &BigInt) -> Result<usize> {
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some(k) = st.q.iter().position(|q| q > bound) {
                return Ok(k);
            }
            self.extend_one(&mut st)?;
        }
    }

    /// Rational enclosure lo < α < hi of width at most 2^-prec, from two
    /// consecutive convergents.
    pub fn enclosure_rat(&self, prec: u32) -> Result<(Rat, Rat)> {
        let mut st = self.state.lock().unwrap();
        let needed = prec as u64 + 1;
        loop {
            let k = st.q.len() - 1;
            if k >= 1 && st.q[k - 1].bits() + st.q[k].bits() > needed + 1 {
                // width = 1/(q_{k-1} q_k) <= 2^-prec once the bit sum is big
                let a = Ratio::new(st.p[k - 1].clone(), st.q[k - 1].clone());
                let b = Ratio::new(st.p[k].clone(), st.q[k].clone());
                return Ok(if a < b { (a, b) } else { (b, a) });
            }
            self.extend_one(&mut st)?;
        }
    }

    /// Dyadic enclosure of α, cached at the best precision computed so far.
    pub fn enclosure_dyadic(&self, prec: u32) -> Result<DyInterval> {
        {
            let st = self.state.lock().unwrap();
            if let Some((p, iv)) = &st.dyadic_cache {
                if *p >= prec {
                    return Ok(iv.clone());
                }
            }
        }
        let (lo, hi) = self.enclosure_rat(prec + 2)?;
        let iv = DyInterval::from_rat_bounds(&lo, &hi, prec + 2);
        let mut st = self.state.lock().unwrap();
        st.dyadic_cache = Some((prec, iv.clone()));
        Ok(iv)
    }

    /// Number of digits currently materialized (for diagnostics only).
    pub fn materialized(&self) -> usize {
        self.state.lock().unwrap().digits.len()
    }
}

impl AlphaLinear {
    /// Dyadic enclosure of m·α + r at roughly 2^-prec width.
    pub fn eval_dyadic(&self, alpha: &ContinuedFraction, prec: u32) -> Result<DyInterval> {
        let extra = self.m.bits() as u32 + 2;
        let a = alpha.enclosure_dyadic(prec + extra)?;
        let scaled = a.mul_int(&self.m);
        let r_iv = DyInterval::from_rat(&self.r, prec + extra);
        Ok(scaled.add(&r_iv))
    }

    /// Certified sign; exact when m = 0, by refinement otherwise
    /// (terminates because α is irrational).
    pub fn sign_with(&self, alpha: &ContinuedFraction) -> Result<Ordering> {
        if self.m.is_zero() {
            return Ok(self.r.cmp(&Rat::zero()));
        }
        let mut prec = alpha.policy.start;
        loop {
            let iv = self.eval_dyadic(alpha, prec)?;
            if iv.lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if iv.hi.is_negative() {
                return Ok(Ordering::Less);
            }
            prec = alpha.policy.bump(prec)?;
        }
    }

    pub fn cmp_rat_with(&self, alpha: &ContinuedFraction, t: &Rat) -> Result<Ordering> {
        self.add_rat(&-t.clone()).sign_with(alpha)
    }

    pub fn cmp_with(&self, alpha: &ContinuedFraction, other: &Self) -> Result<Ordering> {
        self.sub(other).sign_with(alpha)
    }

    /// Exact floor of m·α + r.
    pub fn floor_with(&self, alpha: &ContinuedFraction) -> Result<BigInt> {
        if self.m.is_zero() {
            return Ok(self.r.floor().to_integer());
        }
        let mut prec = alpha.policy.start;
        loop {
            let iv = self.eval_dyadic(alpha, prec)?;
            let fl = iv.lo.floor_int();
            let fh = iv.hi.floor_int();
            if fl == fh {
                return Ok(fl);
            }
            prec = alpha.policy.bump(prec)?;
        }
    }

    /// Fractional part: returns ({value}, floor).
    pub fn frac_with(&self, alpha: &ContinuedFraction) -> Result<(AlphaLinear, BigInt)> {
        let fl = self.floor_with(alpha)?;
        Ok((
            AlphaLinear {
                m: self.m.clone(),
                r: &self.r - Ratio::from_integer(fl.clone()),
            },
            fl,
        ))
    }

    /// Distance to the nearest integer, as a (non-negative) symbolic value.
    pub fn norm_dist_with(&self, alpha: &ContinuedFraction) -> Result<AlphaLinear> {
        let (frac, _) = self.frac_with(alpha)?;
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        match frac.cmp_rat_with(alpha, &half)? {
            Ordering::Less | Ordering::Equal => Ok(frac),
            Ordering::Greater => Ok(AlphaLinear {
                m: -frac.m,
                r: Rat::one() - frac.r,
            }),
        }
    }

    /// Wrap into a CertifiedValue that refines through α's convergents.
    pub fn to_certified(&self, alpha: &Arc<ContinuedFraction>) -> CertifiedValue {
        if self.m.is_zero() {
            return CertifiedValue::exact(self.r.clone());
        }
        let lin = self.clone();
        let a = alpha.clone();
        CertifiedValue::with_refiner(alpha.policy, move |prec| {
            let (lo, hi) = a.enclosure_rat(prec)?;
            let x = &lin.r + Ratio::from_integer(lin.m.clone()) * lo;
            let y = &lin.r + Ratio::from_integer(lin.m.clone()) * hi;
            Ok(if x <= y { (x, y) } else { (y, x) })
        })
        .expect("refiner construction")
    }

    pub fn to_f64_with(&self, alpha: &ContinuedFraction) -> f64 {
        self.eval_dyadic(alpha, 96)
            .map(|iv| iv.mid_f64())
            .unwrap_or(f64::NAN)
    }
}

/// Convergent table for α: p_k, q_k for k ≤ k_max together with exact
/// symbolic gaps δ_k = |q_k α − p_k|.
pub struct ConvergentTable {
    pub alpha: Arc<ContinuedFraction>,
    k_max: usize,
    p: Vec<BigInt>,
    q: Vec<BigInt>,
}

/// Build a convergent table covering indices 0..=k_max.
pub fn convergents(alpha: &Arc<ContinuedFraction>, k_max: usize) -> Result<ConvergentTable> {
    alpha.ensure_digits(k_max)?;
    let st = alpha.state.lock().unwrap();
    Ok(ConvergentTable {
        alpha: alpha.clone(),
        k_max,
        p: st.p[..=k_max].to_vec(),
        q: st.q[..=k_max].to_vec(),
    })
}

impl ConvergentTable {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn p(&self, k: usize) -> &BigInt {
        &self.p[k]
    }

    pub fn q(&self, k: usize) -> &BigInt {
        &self.q[k]
    }

    /// Partial quotient a_k (1-based, k ≤ k_max).
    pub fn a(&self, k: usize) -> BigUint {
        self.alpha.digit(k).expect("digit within table range")
    }

    /// δ_k = |q_k α − p_k| = (−1)^k (q_k α − p_k), exactly.
    pub fn delta(&self, k: usize) -> AlphaLinear {
        if k % 2 == 0 {
            AlphaLinear::new(self.q[k].clone(), Ratio::from_integer(-self.p[k].clone()))
        } else {
            AlphaLinear::new(-self.q[k].clone(), Ratio::from_integer(self.p[k].clone()))
        }
    }

    /// Sign of q_k α − p_k.
    pub fn sign(&self, k: usize) -> i8 {
        if k % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// The unique K with q_{K-1} <= N < q_K.
    pub fn k_of(&self, n: u64) -> Result<usize> {
        if n == 0 {
            return Err(CoreError::BadParams("K(N) needs N >= 1".into()));
        }
        let nb = BigInt::from(n);
        for k in 1..=self.k_max {
            if self.q[k - 1] <= nb && nb < self.q[k] {
                return Ok(k);
            }
        }
        Err(CoreError::TableTooShort {
            needed: n.to_string(),
            available: self.k_max,
        })
    }

    /// Σ_{i=1}^{k} a_i.
    pub fn sum_a(&self, k: usize) -> BigUint {
        let mut s = BigUint::zero();
        for i in 1..=k {
            s += self.a(i);
        }
        s
    }
}

/// Ostrowski digit vector b_0..b_{K-1} of a non-negative integer N in the
/// q_ℓ numeration of a fixed α.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OstrowskiExpansion {
    pub digits: Vec<BigUint>,
}

/// Greedy Ostrowski expansion; errors with TableTooShort when the table does
/// not cover N.
pub fn ostrowski_expand(n: &BigUint, table: &ConvergentTable) -> Result<OstrowskiExpansion> {
    if n.is_zero() {
        return Ok(OstrowskiExpansion { digits: Vec::new() });
    }
    let nn = BigInt::from(n.clone());
    // find K with q_{K-1} <= n < q_K
    let mut k_idx = None;
    for k in 1..=table.k_max {
        if table.q[k - 1] <= nn && nn < table.q[k] {
            k_idx = Some(k);
            break;
        }
    }
    let k = k_idx.ok_or_else(|| CoreError::TableTooShort {
        needed: n.to_string(),
        available: table.k_max,
    })?;
    let mut rem = nn;
    let mut digits = vec![BigUint::zero(); k];
    for l in (0..k).rev() {
        let (d, r) = rem.div_mod_floor(&table.q[l]);
        digits[l] = d.to_biguint().expect("nonnegative digit");
        rem = r;
    }
    debug_assert!(rem.is_zero());
    Ok(OstrowskiExpansion { digits })
}

/// Exact Σ b_ℓ q_ℓ after validating the canonical-form constraints.
pub fn ostrowski_value(e: &OstrowskiExpansion, table: &ConvergentTable) -> Result<BigUint> {
    let k = e.digits.len();
    if k == 0 {
        return Ok(BigUint::zero());
    }
    if k > table.k_max {
        return Err(CoreError::TableTooShort {
            needed: format!("digit index {}", k),
            available: table.k_max,
        });
    }
    if e.digits[k - 1].is_zero() {
        return Err(CoreError::InvalidDigits("leading digit b_{K-1} is zero".into()));
    }
    if e.digits[0] >= table.a(1) {
        return Err(CoreError::InvalidDigits("b_0 must satisfy 0 <= b_0 < a_1".into()));
    }
    for l in 1..k {
        let cap = table.a(l + 1);
        if e.digits[l] > cap {
            return Err(CoreError::InvalidDigits(format!(
                "b_{l} exceeds a_{}",
                l + 1
            )));
        }
        if e.digits[l] == cap && !e.digits[l - 1].is_zero() {
            return Err(CoreError::InvalidDigits(format!(
                "b_{l} = a_{} requires b_{} = 0",
                l + 1,
                l - 1
            )));
        }
    }
    let mut s = BigInt::zero();
    for (l, d) in e.digits.iter().enumerate() {
        s += BigInt::from(d.clone()) * &table.q[l];
    }
    Ok(s.to_biguint().expect("nonnegative"))
}

/// A source of certified real numbers for continued-fraction expansion.
pub trait CertifiedRealSource: Send + Sync {
    /// Enclosure lo <= x <= hi with width shrinking as prec grows.
    fn enclosure(&self, prec: u32) -> Result<(Rat, Rat)>;
    /// Exact rational value, when the source is rational.
    fn exact(&self) -> Option<Rat> {
        None
    }
}

/// scale·sqrt(n) + shift with integer n >= 0.
pub struct SqrtSource {
    pub n: u64,
    pub scale: Rat,
    pub shift: Rat,
}

impl CertifiedRealSource for SqrtSource {
    fn enclosure(&self, prec: u32) -> Result<(Rat, Rat)> {
        let scaled = BigUint::from(self.n) << (2 * prec as u64);
        let root = scaled.sqrt();
        let den = BigInt::one() << prec as u64;
        let lo = Ratio::new(BigInt::from(root.clone()), den.clone());
        let hi = Ratio::new(BigInt::from(root + 1u32), den);
        let (a, b) = (
            &self.scale * lo + &self.shift,
            &self.scale * hi + &self.shift,
        );
        Ok(if a <= b { (a, b) } else { (b, a) })
    }

    fn exact(&self) -> Option<Rat> {
        let r = BigUint::from(self.n).sqrt();
        if &r * &r == BigUint::from(self.n) {
            Some(&self.scale * Ratio::from_integer(BigInt::from(r)) + &self.shift)
        } else {
            None
        }
    }
}

pub struct RationalSource(pub Rat);

impl CertifiedRealSource for RationalSource {
    fn enclosure(&self, _prec: u32) -> Result<(Rat, Rat)> {
        Ok((self.0.clone(), self.0.clone()))
    }
    fn exact(&self) -> Option<Rat> {
        Some(self.0.clone())
    }
}

pub struct CfRealSource(pub Arc<ContinuedFraction>);

impl CertifiedRealSource for CfRealSource {
    fn enclosure(&self, prec: u32) -> Result<(Rat, Rat)> {
        self.0.enclosure_rat(prec)
    }
}

/// Expand a certified real in (0,1) to K partial quotients. Each digit is
/// certified by interval refinement before it is emitted.
pub fn expand_cf(
    x: &dyn CertifiedRealSource,
    k: usize,
    policy: PrecisionPolicy,
) -> Result<Vec<BigUint>> {
    if let Some(r) = x.exact() {
        return expand_rational(&r, k);
    }
    let mut prec = policy.start;
    'outer: loop {
        let (mut lo, mut hi) = x.enclosure(prec)?;
        if !(lo > Rat::zero() && hi < Rat::one()) {
            prec = policy.bump(prec)?;
            continue;
        }
        let mut digits = Vec::with_capacity(k);
        for _ in 0..k {
            if !lo.is_positive() {
                prec = policy.bump(prec)?;
                continue 'outer;
            }
            // 1/x in [1/hi, 1/lo]
            let inv_lo = hi.recip();
            let inv_hi = lo.recip();
            let a0 = inv_lo.floor().to_integer();
            let a1 = inv_hi.floor().to_integer();
            if a0 != a1 {
                prec = policy.bump(prec)?;
                continue 'outer;
            }
            let a = a0;
            debug_assert!(a.is_positive());
            digits.push(a.to_biguint().expect("positive quotient"));
            let fa = Ratio::from_integer(a);
            let new_lo = inv_lo - &fa;
            let new_hi = inv_hi - &fa;
            lo = new_lo;
            hi = new_hi;
        }
        return Ok(digits);
    }
}

/// Exact continued fraction of a rational in (0,1); RationalInput when it
/// terminates before k digits.
fn expand_rational(r: &Rat, k: usize) -> Result<Vec<BigUint>> {
    if !(r > &Rat::zero() && r < &Rat::one()) {
        return Err(CoreError::BadParams("expansion needs x in (0,1)".into()));
    }
    let mut digits = Vec::new();
    let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
    // x = num/den; a = floor(den/num), then x <- {den/num}
    while !num.is_zero() && digits.len() < k {
        let (a, rem) = den.div_mod_floor(&num);
        digits.push(a.to_biguint().expect("positive"));
        den = std::mem::replace(&mut num, rem);
    }
    if digits.len() < k {
        return Err(CoreError::RationalInput {
            digits: digits.len(),
        });
    }
    Ok(digits)
}

/// Uniformly sampled α with K digits materialized upfront.
pub fn sample_alpha(seed: u64, k: usize) -> Result<Arc<ContinuedFraction>> {
    let cf = ContinuedFraction::sampled(seed);
    cf.ensure_digits(k)?;
    Ok(cf)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn matches(&self, n: usize) -> bool {
        match self {
            Parity::Even => n % 2 == 0,
            Parity::Odd => n % 2 == 1,
        }
    }
}

/// Congruence request for construct_alpha: find K with
/// q_{K-1} ≡ residue (mod modulus), with optional parity of K and a
/// minimum size for a_K.
#[derive(Clone, Debug)]
pub struct CongruenceTarget {
    pub modulus: u64,
    pub residue: u64,
    pub k_parity: Option<Parity>,
    pub min_a_k: Option<u64>,
}

/// Result of construct_alpha: the quotient list plus the designated index K
/// at which a_K equals the requested big quotient.
pub struct ConstructedAlpha {
    pub alpha: Arc<ContinuedFraction>,
    pub k: usize,
}

/// BFS over the (q_{j-1} mod d, q_j mod d) pair-residue graph with the given
/// edge labels; returns the digit path reaching an accepted state.
pub(crate) fn bfs_pair_residues(
    start: (u64, u64, u8),
    modulus: u64,
    labels: &[u64],
    accept: impl Fn(u64, u64, u8) -> bool,
) -> Option<Vec<u64>> {
    if accept(start.0, start.1, start.2) {
        return Some(Vec::new());
    }
    let d = modulus;
    let idx = |u: u64, v: u64, par: u8| -> usize { ((u * d + v) * 2 + par as u64) as usize };
    let mut prev: Vec<Option<(usize, u64)>> = vec![None; (d * d * 2) as usize];
    let mut seen = vec![false; (d * d * 2) as usize];
    let mut queue = VecDeque::new();
    seen[idx(start.0, start.1, start.2)] = true;
    queue.push_back(start);
    while let Some((u, v, par)) = queue.pop_front() {
        for &a in labels {
            let nv = (a % d * v + u) % d;
            let npar = 1 - par;
            let key = idx(v, nv, npar);
            if seen[key] {
                continue;
            }
            seen[key] = true;
            prev[key] = Some((idx(u, v, par), a));
            if accept(v, nv, npar) {
                // reconstruct path
                let mut path = vec![a];
                let mut cur = idx(u, v, par);
                let start_key = idx(start.0, start.1, start.2);
                while cur != start_key {
                    let (p, lab) = prev[cur].expect("bfs chain");
                    path.push(lab);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back((v, nv, npar));
        }
    }
    None
}

/// Extend `prefix` so that at the designated index K the denominator
/// satisfies q_{K-1} ≡ c (mod d), K has the requested parity, and
/// a_K = big_quotient; the tail after K is all ones.
pub fn construct_alpha(
    prefix: &[u64],
    target: &CongruenceTarget,
    big_quotient: u64,
) -> Result<ConstructedAlpha> {
    let d = target.modulus;
    if d < 2 {
        return Err(CoreError::InvalidTarget("modulus must be >= 2".into()));
    }
    if target.residue >= d {
        return Err(CoreError::InvalidTarget(format!(
            "residue {} >= modulus {}",
            target.residue, d
        )));
    }
    if big_quotient == 0 {
        return Err(CoreError::InvalidTarget("a_K must be >= 1".into()));
    }
    if let Some(min) = target.min_a_k {
        if big_quotient < min {
            return Err(CoreError::InvalidTarget(format!(
                "a_K = {big_quotient} below requested minimum {min}"
            )));
        }
    }
    if prefix.iter().any(|&a| a == 0) {
        return Err(CoreError::BadParams("partial quotients must be >= 1".into()));
    }
    // state after the prefix: (q_{j-1} mod d, q_j mod d, j mod 2)
    let (mut qm1, mut q) = (0u64, 1u64);
    for &a in prefix {
        let nq = (a % d * q + qm1) % d;
        qm1 = q;
        q = nq;
    }
    let j0 = prefix.len();
    let labels: Vec<u64> = (1..=2 * d + 1).collect();
    let accept = |_u: u64, v: u64, par: u8| -> bool {
        if v != target.residue % d {
            return false;
        }
        match target.k_parity {
            // state parity is j mod 2; K = j + 1
            Some(p) => p.matches(par as usize + 1),
            None => true,
        }
    };
    let path = bfs_pair_residues((qm1, q, (j0 % 2) as u8), d, &labels, accept)
        .ok_or(CoreError::Unreachable)?;
    let mut digits: Vec<u64> = prefix.to_vec();
    digits.extend_from_slice(&path);
    let k = digits.len() + 1;
    digits.push(big_quotient);
    let alpha = ContinuedFraction::explicit(digits, Tail::Ones)?;
    Ok(ConstructedAlpha { alpha, k })
}

/// Enclosure of {nα + q} together with the index of the half-open cell
/// between consecutive cutpoints that provably contains it.
pub fn certified_frac(
    n: u64,
    alpha: &Arc<ContinuedFraction>,
    q: &Rat,
    cutpoints: &[Rat],
) -> Result<(CertifiedValue, usize)> {
    if n == 0 {
        return Err(CoreError::BadParams("n must be >= 1".into()));
    }
    if cutpoints.len() < 2 {
        return Err(CoreError::BadParams("need at least two cutpoints".into()));
    }
    for w in cutpoints.windows(2) {
        if w[0] >= w[1] {
            return Err(CoreError::BadParams("cutpoints must increase strictly".into()));
        }
    }
    let lin = AlphaLinear::new(BigInt::from(n), q.clone());
    let (frac, _) = lin.frac_with(alpha)?;
    let mut cell = None;
    for i in 0..cutpoints.len() - 1 {
        let above = frac.cmp_rat_with(alpha, &cutpoints[i])? != Ordering::Less;
        let below = frac.cmp_rat_with(alpha, &cutpoints[i + 1])? == Ordering::Less;
        if above && below {
            cell = Some(i);
            break;
        }
    }
    let idx = cell.ok_or_else(|| {
        CoreError::BadParams("value lies outside the cutpoint range".into())
    })?;
    Ok((frac.to_certified(alpha), idx))
}

/// JSON document for a ContinuedFraction per the external interface:
/// {"a": [..], "tail": "ones"|"periodic"|"sampled", "seed": int|null}
/// with all integers as decimal strings.
pub fn cf_to_json(alpha: &ContinuedFraction, digits: usize) -> Result<serde_json::Value> {
    let ds = alpha.digits(digits)?;
    let arr: Vec<serde_json::Value> = ds
        .iter()
        .map(|d| serde_json::Value::String(d.to_string()))
        .collect();
    let (tail, seed) = match (&alpha.source, alpha.seed()) {
        (Source::Explicit { tail, .. }, _) => (
            match tail {
                Tail::Ones => "ones",
                Tail::Periodic(_) => "periodic",
            },
            None,
        ),
        (Source::Sampled { .. }, seed) => ("sampled", seed),
    };
    let mut doc = serde_json::Map::new();
    doc.insert("a".into(), serde_json::Value::Array(arr));
    doc.insert("tail".into(), serde_json::Value::String(tail.into()));
    doc.insert(
        "seed".into(),
        match seed {
            Some(s) => serde_json::Value::String(s.to_string()),
            None => serde_json::Value::Null,
        },
    );
    if let Source::Explicit {
        tail: Tail::Periodic(block),
        ..
    } = &alpha.source
    {
        doc.insert(
            "period".into(),
            serde_json::Value::Array(
                block
                    .iter()
                    .map(|d| serde_json::Value::String(d.to_string()))
                    .collect(),
            ),
        );
    }
    Ok(serde_json::Value::Object(doc))
}

/// JSON rows for a ConvergentTable (decimal strings; delta as an enclosure).
pub fn table_to_json(table: &ConvergentTable, prec: u32) -> Result<serde_json::Value> {
    let mut rows = Vec::new();
    for k in 0..=table.k_max() {
        let delta = table.delta(k);
        let iv = delta.eval_dyadic(&table.alpha, prec)?;
        let (lo, hi) = (iv.lo.to_rat(), iv.hi.to_rat());
        rows.push(serde_json::json!({
            "k": k.to_string(),
            "p": table.p(k).to_string(),
            "q": table.q(k).to_string(),
            "delta_lo": format!("{}/{}", lo.numer(), lo.denom()),
            "delta_hi": format!("{}/{}", hi.numer(), hi.denom()),
            "sign": table.sign(k).to_string(),
        }));
    }
    Ok(serde_json::Value::Array(rows))
}

pub fn sqrt2_minus_1() -> SqrtSource {
    SqrtSource {
        n: 2,
        scale: Rat::one(),
        shift: -Rat::one(),
    }
}

pub fn golden_ratio_conjugate() -> SqrtSource {
    // (sqrt 5 - 1)/2
    SqrtSource {
        n: 5,
        scale: Rat::new(BigInt::one(), BigInt::from(2)),
        shift: Rat::new(BigInt::from(-1), BigInt::from(2)),
    }
}
