//! Forward-mode first derivatives. Nesting `Jet<Jet<R, N>, N>` gives second derivatives.

use crate::real::Real;
use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug)]
pub struct Jet<R, const N: usize> {
    pub v: R,
    pub d: [R; N],
}

impl<R: Real, const N: usize> Jet<R, N> {
    pub fn constant(v: R) -> Self {
        Jet { v, d: [R::zero(); N] }
    }

    pub fn var(v: R, i: usize) -> Self {
        let mut d = [R::zero(); N];
        d[i] = R::one();
        Jet { v, d }
    }

    pub fn vars(x: [R; N]) -> [Self; N] {
        let mut out = [Self::constant(R::zero()); N];
        for i in 0..N {
            out[i] = Self::var(x[i], i);
        }
        out
    }

    fn chain(self, f: R, df: R) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = *x * df;
        }
        Jet { v: f, d }
    }
}

impl<R: Real, const N: usize> PartialEq for Jet<R, N> {
    fn eq(&self, o: &Self) -> bool {
        self.v == o.v
    }
}

impl<R: Real, const N: usize> PartialOrd for Jet<R, N> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.v.partial_cmp(&o.v)
    }
}

impl<R: Real, const N: usize> Add for Jet<R, N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl<R: Real, const N: usize> Sub for Jet<R, N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl<R: Real, const N: usize> Neg for Jet<R, N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for x in self.d.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl<R: Real, const N: usize> Mul for Jet<R, N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [R::zero(); N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Jet { v: self.v * o.v, d }
    }
}

impl<R: Real, const N: usize> Div for Jet<R, N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        let mut d = [R::zero(); N];
        for i in 0..N {
            d[i] = (self.d[i] - q * o.d[i]) / o.v;
        }
        Jet { v: q, d }
    }
}

impl<R: Real, const N: usize> AddAssign for Jet<R, N> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<R: Real, const N: usize> SubAssign for Jet<R, N> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<R: Real, const N: usize> MulAssign for Jet<R, N> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<R: Real, const N: usize> Real for Jet<R, N> {
    fn from_f64(x: f64) -> Self {
        Self::constant(R::from_f64(x))
    }
    fn to_f64(self) -> f64 {
        self.v.to_f64()
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, (s + s).recip())
    }
    fn abs(self) -> Self {
        if self.v < R::zero() {
            -self
        } else {
            self
        }
    }
    fn powr(self, e: f64) -> Self {
        if e == 0.0 {
            return Self::one();
        }
        let p = self.v.powr(e);
        let dp = R::from_f64(e) * self.v.powr(e - 1.0);
        self.chain(p, dp)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::DD;

    #[test]
    fn product_and_quotient_rules() {
        let [x, y] = Jet::<f64, 2>::vars([3.0, 2.0]);
        let f = x * x * y / (x + y);
        // f = x^2 y/(x+y); df/dx = (2xy(x+y) - x^2 y)/(x+y)^2
        let dx = (2.0 * 3.0 * 2.0 * 5.0 - 9.0 * 2.0) / 25.0;
        let dy = (9.0 * 5.0 - 18.0) / 25.0;
        assert!((f.d[0] - dx).abs() < 1e-14);
        assert!((f.d[1] - dy).abs() < 1e-14);
    }

    #[test]
    fn nested_jets_give_second_derivatives() {
        type J2 = Jet<Jet<f64, 1>, 1>;
        let x = J2::var(Jet::var(2.0, 0), 0);
        let f = x.powr(1.5);
        // f'' = 0.75 x^{-1/2}
        assert!((f.d[0].d[0] - 0.75 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sqrt_derivative_in_double_double() {
        let x = Jet::<DD, 1>::var(DD::from_f64(3.0), 0);
        let f = x.sqrt();
        let want = DD::from_f64(0.5) / DD::from_f64(3.0).sqrt();
        assert!(((f.d[0] - want) / want).to_f64().abs() < 1e-31);
    }
}
