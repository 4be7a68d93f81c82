//! Closed-form solutions with matching sources, evaluated through jets so every partial is exact.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::real::Real;
use crate::taylor::{Taylor, Vars};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ManufacturedKind {
    SphericalWaveBump,
    KgModulatedBump,
    WaveWithPolynomialSource,
}

impl ManufacturedKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spherical_wave_bump" => Ok(Self::SphericalWaveBump),
            "kg_modulated_bump" => Ok(Self::KgModulatedBump),
            "wave_with_polynomial_source" => Ok(Self::WaveWithPolynomialSource),
            _ => Err(Error::InvalidData(format!("unknown manufactured case {s:?}"))),
        }
    }
}

/// `exp(1 - 1/(1 - x^2))` on `|x| < 1`, peak value 1.
pub fn smooth_bump<R: Real>(x: R) -> R {
    let one = R::one();
    let q = one - x * x;
    if q > R::zero() {
        (one - one / q).exp()
    } else {
        R::zero()
    }
}

/// Degree-11 smoothstep, `C^5` at both ends.
fn smoothstep<R: Real>(x: R) -> R {
    if !(x > R::zero()) {
        return R::zero();
    }
    if !(x < R::one()) {
        return R::one();
    }
    const C: [f64; 6] = [462.0, -1980.0, 3465.0, -3080.0, 1386.0, -252.0];
    let mut acc = R::zero();
    for c in C.iter().rev() {
        acc = acc * x + R::from_f64(*c);
    }
    let x2 = x * x;
    let x3 = x2 * x;
    acc * x3 * x3
}

/// Radial cutoff in `rho = r^2`: 1 for `r <= r1`, 0 for `r >= r2`.
pub fn cutoff<R: Real>(rho: R, r1: f64, r2: f64) -> R {
    let x = (rho - R::from_f64(r1 * r1)) / R::from_f64(r2 * r2 - r1 * r1);
    R::one() - smoothstep(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub kind: ManufacturedKind,
    pub amplitude: f64,
    /// Klein-Gordon mass; zero for the wave cases.
    pub c_mass: f64,
}

const KG_R: (f64, f64) = (0.3, 1.0);
const POLY_R: (f64, f64) = (0.5, 1.5);

impl Manufactured {
    pub fn new(kind: ManufacturedKind, amplitude: f64, c_mass: f64) -> Self {
        let c_mass = if kind == ManufacturedKind::KgModulatedBump { c_mass } else { 0.0 };
        Manufactured { kind, amplitude, c_mass }
    }

    /// Radius beyond which the field vanishes at time `t`.
    pub fn support_radius(&self, t: f64) -> f64 {
        match self.kind {
            ManufacturedKind::SphericalWaveBump => (t - 2.0).max(0.0),
            ManufacturedKind::KgModulatedBump => KG_R.1,
            ManufacturedKind::WaveWithPolynomialSource => POLY_R.1,
        }
    }

    /// Earliest start time keeping the support inside `r <= t - 1.05`.
    pub fn min_start(&self) -> f64 {
        match self.kind {
            ManufacturedKind::SphericalWaveBump => 3.05,
            ManufacturedKind::KgModulatedBump => KG_R.1 + 1.05,
            ManufacturedKind::WaveWithPolynomialSource => POLY_R.1 + 1.05,
        }
    }

    /// Field as a function of `(t, rho = r^2)`.
    pub fn phi<R: Real>(&self, t: R, rho: R) -> R {
        let amp = R::from_f64(self.amplitude);
        match self.kind {
            ManufacturedKind::SphericalWaveBump => {
                if !(rho > R::zero()) {
                    return R::zero();
                }
                let r = rho.sqrt();
                let z = t - r - R::from_f64(2.5);
                amp * smooth_bump(z * R::from_f64(2.0)) / r
            }
            ManufacturedKind::KgModulatedBump => amp * (-t).exp() * cutoff(rho, KG_R.0, KG_R.1),
            ManufacturedKind::WaveWithPolynomialSource => {
                amp * (t * t - rho) * cutoff(rho, POLY_R.0, POLY_R.1)
            }
        }
    }

    /// `Box phi - c^2 phi` with `Box = -d_t^2 + Laplacian`, from second-order jets in `(t, rho)`.
    pub fn source<R: Real>(&self, t: R, rho: R) -> R {
        if self.kind == ManufacturedKind::SphericalWaveBump {
            return R::zero();
        }
        type J<R> = Jet<Jet<R, 2>, 2>;
        let tj: J<R> = Jet::var(Jet::var(t, 0), 0);
        let pj: J<R> = Jet::var(Jet::var(rho, 1), 1);
        let f = self.phi(tj, pj);
        let f_tt = f.d[0].d[0];
        let f_p = f.d[1].v;
        let f_pp = f.d[1].d[1];
        let lap = R::from_f64(4.0) * rho * f_pp + R::from_f64(6.0) * f_p;
        -f_tt + lap - R::from_f64(self.c_mass * self.c_mass) * f.v.v
    }

    /// `(phi, d_t phi)` at a radius.
    pub fn data(&self, t: f64, r: f64) -> (f64, f64) {
        let tj = Jet::<f64, 1>::var(t, 0);
        let v = self.phi(tj, Jet::constant(r * r));
        (v.v, v.d[0])
    }

    /// Table of partials up to order 3 of the field at a node.
    pub fn field_table(&self, vars: Vars, point: [f64; 4]) -> Taylor {
        table3(vars, point, |t, rho| self.phi(t, rho))
    }

    /// Table of partials up to order 2 of the source at a node.
    pub fn source_table(&self, vars: Vars, point: [f64; 4]) -> Taylor {
        let mut tab = table3(vars, point, |t, rho| self.source(t, rho));
        tab.order = 2;
        tab
    }
}

type J3<const N: usize> = Jet<Jet<Jet<f64, N>, N>, N>;

fn lift3<const N: usize>(x: f64, k: usize) -> J3<N> {
    Jet::var(Jet::var(Jet::var(x, k), k), k)
}

/// Partials up to order 3 of a function of `(t, rho)` in the table's coordinates.
pub fn table3<F>(vars: Vars, point: [f64; 4], f: F) -> Taylor
where
    F: Fn(J3Any, J3Any) -> J3Any,
{
    let mut tab = Taylor::zeros(vars, 3);
    match vars {
        Vars::Radial => {
            let t = lift3::<2>(point[0], 0);
            let r = lift3::<2>(point[1], 1);
            let v = f(J3Any::R(t), J3Any::R(r * r));
            let J3Any::R(v) = v else { unreachable!() };
            for a in vars.alphas() {
                tab.set(a, pick3(&v, a));
            }
        }
        Vars::Cartesian => {
            let t = lift3::<4>(point[0], 0);
            let x = [lift3::<4>(point[1], 1), lift3::<4>(point[2], 2), lift3::<4>(point[3], 3)];
            let rho = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let v = f(J3Any::C(t), J3Any::C(rho));
            let J3Any::C(v) = v else { unreachable!() };
            for a in vars.alphas() {
                tab.set(a, pick3(&v, a));
            }
        }
    }
    tab
}

fn pick3<const N: usize>(v: &J3<N>, a: [u8; 4]) -> f64 {
    let mut idx = Vec::new();
    for (k, n) in a.iter().enumerate() {
        for _ in 0..*n {
            idx.push(k);
        }
    }
    match idx.len() {
        0 => v.v.v.v,
        1 => v.d[idx[0]].v.v,
        2 => v.d[idx[0]].d[idx[1]].v,
        _ => v.d[idx[0]].d[idx[1]].d[idx[2]],
    }
}

/// Third-order jets in either coordinate system, so one closure serves both.
#[derive(Clone, Copy, Debug)]
pub enum J3Any {
    R(J3<2>),
    C(J3<4>),
}

impl PartialEq for J3Any {
    fn eq(&self, o: &Self) -> bool {
        self.to_f64() == o.to_f64()
    }
}

impl PartialOrd for J3Any {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&o.to_f64())
    }
}

macro_rules! j3_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl std::ops::$tr for J3Any {
            type Output = J3Any;
            fn $m(self, o: J3Any) -> J3Any {
                match (self, o) {
                    (J3Any::R(a), J3Any::R(b)) => J3Any::R(a $op b),
                    (J3Any::C(a), J3Any::C(b)) => J3Any::C(a $op b),
                    (J3Any::R(a), J3Any::C(b)) => J3Any::C(widen(a) $op b),
                    (J3Any::C(a), J3Any::R(b)) => J3Any::C(a $op widen(b)),
                }
            }
        }
    };
}

j3_binop!(Add, add, +);
j3_binop!(Sub, sub, -);
j3_binop!(Mul, mul, *);
j3_binop!(Div, div, /);

/// Constants are created radial; promote them when they meet Cartesian jets.
fn widen(a: J3<2>) -> J3<4> {
    Jet::constant(Jet::constant(Jet::constant(a.v.v.v)))
}

impl std::ops::Neg for J3Any {
    type Output = J3Any;
    fn neg(self) -> J3Any {
        match self {
            J3Any::R(a) => J3Any::R(-a),
            J3Any::C(a) => J3Any::C(-a),
        }
    }
}

impl std::ops::AddAssign for J3Any {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl std::ops::SubAssign for J3Any {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl std::ops::MulAssign for J3Any {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl Real for J3Any {
    fn from_f64(x: f64) -> Self {
        J3Any::R(J3::<2>::from_f64(x))
    }
    fn to_f64(self) -> f64 {
        match self {
            J3Any::R(a) => a.to_f64(),
            J3Any::C(a) => a.to_f64(),
        }
    }
    fn sqrt(self) -> Self {
        match self {
            J3Any::R(a) => J3Any::R(a.sqrt()),
            J3Any::C(a) => J3Any::C(a.sqrt()),
        }
    }
    fn abs(self) -> Self {
        match self {
            J3Any::R(a) => J3Any::R(a.abs()),
            J3Any::C(a) => J3Any::C(a.abs()),
        }
    }
    fn powr(self, e: f64) -> Self {
        match self {
            J3Any::R(a) => J3Any::R(a.powr(e)),
            J3Any::C(a) => J3Any::C(a.powr(e)),
        }
    }
    fn exp(self) -> Self {
        match self {
            J3Any::R(a) => J3Any::R(a.exp()),
            J3Any::C(a) => J3Any::C(a.exp()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_wave_is_homogeneous() {
        let m = Manufactured::new(ManufacturedKind::SphericalWaveBump, 1.0, 0.0);
        assert_eq!(m.source(4.0, 2.25), 0.0);
        // check Box phi = 0 through the table: -phi_tt + phi_rr + 2 phi_r / r
        let (t, r) = (4.0, 1.5);
        let tab = m.field_table(Vars::Radial, [t, r, 0.0, 0.0]);
        let boxv = -tab.get([2, 0, 0, 0]) + tab.get([0, 2, 0, 0]) + 2.0 * tab.get([0, 1, 0, 0]) / r;
        assert!(boxv.abs() < 1e-12 * tab.get([0, 2, 0, 0]).abs().max(1.0), "{boxv}");
    }

    #[test]
    fn polynomial_source_value_on_plateau() {
        let m = Manufactured::new(ManufacturedKind::WaveWithPolynomialSource, 1.0, 0.0);
        // chi = 1 near the center: Box(t^2 - r^2) = -2 - 6 = -8
        assert!((m.source(3.0, 0.04) + 8.0).abs() < 1e-12);
        assert!(m.source(3.0, 4.0).abs() < 1e-15);
    }

    #[test]
    fn kg_source_matches_table_operator() {
        let m = Manufactured::new(ManufacturedKind::KgModulatedBump, 1.0, 1.0);
        let (t, r) = (2.5, 0.7);
        let tab = m.field_table(Vars::Radial, [t, r, 0.0, 0.0]);
        let f = -tab.get([2, 0, 0, 0]) + tab.get([0, 2, 0, 0]) + 2.0 * tab.get([0, 1, 0, 0]) / r - tab.value();
        assert!((f - m.source(t, r * r)).abs() < 1e-12);
    }

    #[test]
    fn cartesian_and_radial_tables_agree_on_axis_direction() {
        let m = Manufactured::new(ManufacturedKind::KgModulatedBump, 1.0, 1.0);
        let rt = m.field_table(Vars::Radial, [2.0, 0.6, 0.0, 0.0]);
        let ct = m.field_table(Vars::Cartesian, [2.0, 0.6, 0.0, 0.0]);
        for a in [[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0], [2, 1, 0, 0], [0, 3, 0, 0]] {
            assert!((rt.get(a) - ct.get(a)).abs() < 1e-12, "{a:?}");
        }
        // phi_yy on the x axis equals phi_r / r
        assert!((ct.get([0, 0, 2, 0]) - rt.get([0, 1, 0, 0]) / 0.6).abs() < 1e-12);
    }

    #[test]
    fn cutoff_is_flat_then_zero() {
        assert_eq!(cutoff(0.1f64, 0.5, 1.5), 1.0);
        assert_eq!(cutoff(3.0f64, 0.5, 1.5), 0.0);
        let mid: f64 = cutoff(1.0, 0.5, 1.5);
        assert!(mid > 0.0 && mid < 1.0);
    }
}
