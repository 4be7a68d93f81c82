//! Scalar abstraction shared by the binary64 and double-double code paths.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// `self^e` for `self > 0`.
    fn powr(self, e: f64) -> Self;
    fn exp(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn sq(self) -> Self {
        self * self
    }
    fn max_r(self, o: Self) -> Self {
        if o > self {
            o
        } else {
            self
        }
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powr(self, e: f64) -> Self {
        if e == 0.0 {
            1.0
        } else if e == 1.0 {
            self
        } else if e == 0.5 {
            self.sqrt()
        } else if e == -1.0 {
            1.0 / self
        } else if e == 2.0 {
            self * self
        } else {
            self.powf(e)
        }
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, about 32 significant digits.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DD { hi, lo }
    }

    fn mul_f64(self, b: f64) -> DD {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }

    /// Exact power for exponents that are multiples of 1/16, via repeated square roots.
    fn root_pow(self, e: f64) -> Option<DD> {
        let mut k = e;
        let mut depth = 0;
        while k.fract() != 0.0 {
            if depth == 4 {
                return None;
            }
            k *= 2.0;
            depth += 1;
        }
        let mut base = self;
        for _ in 0..depth {
            base = base.sqrt();
        }
        let n = k.abs() as u64;
        let mut acc = DD::one();
        let mut b = base;
        let mut m = n;
        while m > 0 {
            if m & 1 == 1 {
                acc = acc * b;
            }
            b = b * b;
            m >>= 1;
        }
        Some(if k < 0.0 { acc.recip() } else { acc })
    }

    pub fn ln(self) -> DD {
        // one Newton step on exp from the binary64 seed
        let x = DD::from_f64(self.hi.ln());
        x + self * (-x).exp() - DD::one()
    }

    pub fn exp(self) -> DD {
        let ln2 = DD::new(std::f64::consts::LN_2, 2.319_046_813_846_299_6e-17);
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self - ln2.mul_f64(k);
        // r/2^8 then square back
        let r = r.mul_f64(1.0 / 256.0);
        let mut term = DD::one();
        let mut sum = DD::one();
        for n in 1..=20 {
            term = term * r / DD::from_f64(n as f64);
            sum += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..8 {
            sum = sum * sum;
        }
        let scale = 2f64.powi(k as i32);
        DD::new(sum.hi * scale, sum.lo * scale)
    }
}

impl fmt::Debug for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DD({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.hi + self.lo)
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            c => c,
        }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD::new(-self.hi, -self.lo)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

impl AddAssign for DD {
    fn add_assign(&mut self, b: DD) {
        *self = *self + b;
    }
}
impl SubAssign for DD {
    fn sub_assign(&mut self, b: DD) {
        *self = *self - b;
    }
}
impl MulAssign for DD {
    fn mul_assign(&mut self, b: DD) {
        *self = *self * b;
    }
}

impl Real for DD {
    fn from_f64(x: f64) -> Self {
        DD::new(x, 0.0)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::from_f64(self.hi.sqrt());
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - DD::new(p, e)).hi;
        let (hi, lo) = quick_two_sum(x, r / (2.0 * x));
        DD { hi, lo }
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn powr(self, e: f64) -> Self {
        if e == 0.0 {
            return DD::one();
        }
        match self.root_pow(e) {
            Some(v) => v,
            None => (self.ln().mul_f64(e)).exp(),
        }
    }
    fn exp(self) -> Self {
        DD::exp(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: DD, b: DD) -> f64 {
        ((a - b) / b).to_f64().abs()
    }

    #[test]
    fn division_and_sqrt_reach_double_double_accuracy() {
        let one = DD::one();
        for k in 1..500 {
            let x = DD::from_f64(k as f64 * 0.7312 + 0.013) + DD::from_f64(1e-19 * k as f64);
            let s = x.sqrt();
            assert!(((s * s - x) / x).to_f64().abs() < 1e-31);
            assert!((x.recip() * x - one).to_f64().abs() < 1e-31);
            let y = DD::from_f64(1.0 / 3.0) + DD::from_f64(1e-20);
            assert!(rel((x / y) * y, x) < 1e-31);
        }
    }

    #[test]
    fn quarter_powers_are_exact_to_dd() {
        let x = DD::from_f64(7.25);
        let p = x.powr(0.75);
        let q = x.sqrt() * x.sqrt().sqrt();
        assert!(rel(p, q) < 1e-31);
        let m = x.powr(-1.25);
        assert!(rel(m * x.powr(1.25), DD::one()) < 1e-31);
    }

    #[test]
    fn exp_ln_roundtrip() {
        for &v in &[0.1, 1.0, 3.0, 1234.5, 1e-7] {
            let x = DD::from_f64(v);
            assert!(rel(x.ln().exp(), x) < 1e-29, "{v} {}", rel(x.ln().exp(), x));
        }
        let e = DD::one().exp();
        // e to 32 digits
        let e_ref = DD::new(2.718281828459045, 1.4456468917292502e-16);
        assert!(rel(e, e_ref) < 1e-30);
    }

    #[test]
    fn f64_powr_shortcuts_match_powf() {
        for &x in &[0.3f64, 2.0, 17.5] {
            for &e in &[0.0, 0.5, 1.0, -1.0, 2.0, 0.7] {
                assert!((x.powr(e) - x.powf(e)).abs() <= 4.0 * f64::EPSILON * x.powf(e));
            }
        }
    }
}
