//! Radial multiplier fields, conformal weights, deformation coefficients and boundary flux densities.

use crate::error::{Error, Result};
use crate::geometry::{frame_transform, japanese, SlicePoint};
use crate::jet::Jet;
use crate::quadrature::gauss64;
use crate::real::Real;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
pub enum MultiplierKind {
    T,
    Ka,
    Ya,
    Kconf,
}

impl MultiplierKind {
    pub const ALL: [MultiplierKind; 4] = [Self::T, Self::Ka, Self::Ya, Self::Kconf];

    pub fn name(self) -> &'static str {
        match self {
            Self::T => "T",
            Self::Ka => "Ka",
            Self::Ya => "Ya",
            Self::Kconf => "Kconf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn a_range(self) -> (f64, f64) {
        match self {
            Self::Ka => (0.5, 1.0),
            Self::Ya => (0.0, 0.5),
            Self::T | Self::Kconf => (0.0, 1.0),
        }
    }

    pub fn omega(self) -> OmegaKind {
        match self {
            Self::T => OmegaKind::Unit,
            Self::Ka | Self::Ya => OmegaKind::R,
            Self::Kconf => OmegaKind::S2,
        }
    }

    pub fn lambda(self) -> LambdaKind {
        match self {
            Self::Kconf => LambdaKind::SPow,
            _ => LambdaKind::Unit,
        }
    }

    pub fn check_a(self, a: f64) -> Result<()> {
        let (lo, hi) = self.a_range();
        if a.is_finite() && lo <= a && a <= hi {
            Ok(())
        } else {
            Err(Error::ExponentOutOfRange { kind: self.name(), a })
        }
    }
}

impl fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaKind {
    Unit,
    R,
    S2,
}

impl OmegaKind {
    pub fn value<R: Real>(self, u: R, r: R) -> R {
        match self {
            Self::Unit => R::one(),
            Self::R => r,
            Self::S2 => u * (u + r + r),
        }
    }

    /// `(d_u Omega, d_r Omega)` in Bondi coordinates.
    pub fn grad<R: Real>(self, u: R, r: R) -> (R, R) {
        match self {
            Self::Unit => (R::zero(), R::zero()),
            Self::R => (R::zero(), R::one()),
            Self::S2 => (R::from_f64(2.0) * (u + r), R::from_f64(2.0) * u),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaKind {
    Unit,
    /// `s^{2a-2}`
    SPow,
}

impl LambdaKind {
    pub fn value<R: Real>(self, a: f64, s2: R) -> R {
        match self {
            Self::Unit => R::one(),
            Self::SPow => s2.powr(a - 1.0),
        }
    }
}

/// Bondi components `(X^u, X^r)` as functions of `(u, r)`.
pub fn components<R: Real>(kind: MultiplierKind, a: f64, u: R, r: R) -> (R, R) {
    let two = R::from_f64(2.0);
    match kind {
        MultiplierKind::T => (R::one(), R::zero()),
        MultiplierKind::Ka => {
            let ubar = u + two * r;
            let up = u.powr(2.0 * a);
            (R::one() + up, R::from_f64(0.5) * (ubar.powr(2.0 * a) - up))
        }
        MultiplierKind::Ya => {
            let ubar = u + two * r;
            let tp2 = R::one() + ubar * ubar;
            let tm = japanese(u);
            // tau_+^{2a} tau_0 = tau_+^{2a-1} tau_-
            let xu = R::one() + R::from_f64(2.0 * a) * tp2.powr(a - 0.5) * tm;
            (xu, r.powr(2.0 * a))
        }
        MultiplierKind::Kconf => (R::one() + u * u, two * (u + r) * r),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MultiplierSpec {
    pub kind: MultiplierKind,
    pub a: f64,
    pub xu: f64,
    pub xr: f64,
    pub omega: OmegaKind,
    pub omega_value: f64,
    pub lambda: LambdaKind,
    pub lambda_value: f64,
}

pub fn multiplier_field(kind: MultiplierKind, a: f64, p: &SlicePoint) -> Result<MultiplierSpec> {
    kind.check_a(a)?;
    let omega = kind.omega();
    if omega == OmegaKind::R && !(p.r > 0.0) {
        return Err(Error::CenterAxis);
    }
    let (xu, xr) = components(kind, a, p.u, p.r);
    let lambda = kind.lambda();
    Ok(MultiplierSpec {
        kind,
        a,
        xu,
        xr,
        omega,
        omega_value: omega.value(p.u, p.r),
        lambda,
        lambda_value: lambda.value(a, p.u * p.ubar),
    })
}

/// Cartesian components `(X^t, X^1, X^2, X^3)` of the radial field.
pub fn cartesian_field<R: Real>(kind: MultiplierKind, a: f64, p: &SlicePoint<R>) -> [R; 4] {
    let (xu, xr) = components(kind, a, p.u, p.r);
    match p.omega() {
        Some(w) => [xu + xr, xr * w[0], xr * w[1], xr * w[2]],
        None => [xu + xr, R::zero(), R::zero(), R::zero()],
    }
}

/// Contravariant coefficient tensor in polar Bondi components. `kappa` is the
/// coefficient of the unit-sphere metric in the angular block, so `A^{bc} = kappa delta^{bc}/r^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BondiA<R = f64> {
    pub uu: R,
    pub ur: R,
    pub rr: R,
    pub kappa: R,
}

#[derive(Clone, Copy, Debug)]
pub struct CoefficientSet {
    pub auu: f64,
    pub aur: f64,
    pub arr: f64,
    /// Coefficient multiplying `delta^{bc}`: `kappa / r^2`.
    pub abc_scalar: f64,
    pub kappa: f64,
    pub b: f64,
    pub c_vector: [f64; 4],
    pub v: f64,
}

/// Closed forms worked out per multiplier family.
pub fn closed_form_a<R: Real>(kind: MultiplierKind, a: f64, u: R, r: R) -> BondiA<R> {
    let zero = R::zero();
    match kind {
        MultiplierKind::T => BondiA { uu: zero, ur: zero, rr: zero, kappa: zero },
        MultiplierKind::Ka => {
            let q = q_direct(a, u, u + r + r);
            BondiA { uu: zero, ur: zero, rr: zero, kappa: R::from_f64(0.5) * q }
        }
        MultiplierKind::Ya => {
            let reg = ya_regular_a(a, u, r);
            let r1 = r.powr(2.0 * a - 1.0);
            BondiA { rr: reg.rr + R::from_f64(a) * r1, kappa: reg.kappa + R::from_f64(1.0 - a) * r1, ..reg }
        }
        MultiplierKind::Kconf => {
            let t = u + r;
            let w = R::from_f64(2.0) * t / (u * (t + r));
            BondiA { uu: zero, ur: -w, rr: w, kappa: w }
        }
    }
}

/// Part of the Ya coefficients that stays bounded at `r = 0`; the rest is `r^{2a-1}` times `(a, 1 - a)` in `(rr, kappa)`.
pub fn ya_regular_a<R: Real>(a: f64, u: R, r: R) -> BondiA<R> {
    let ubar = u + r + r;
    let tm = japanese(u);
    let tp2 = R::one() + ubar * ubar;
    let a_ = R::from_f64(a);
    let p3 = ubar * tm * tp2.powr(a - 1.5);
    let p1 = tp2.powr(a - 0.5) * u / tm;
    let c = R::from_f64(a * (1.0 - 2.0 * a));
    let uu = R::from_f64(4.0) * c * p3;
    BondiA { uu, ur: -(R::from_f64(0.5) * uu), rr: c * p3 - a_ * p1, kappa: c * p3 - a_ * p1 }
}

/// Inputs of the component formulas: values and first Bondi partials of the field.
#[derive(Clone, Copy, Debug)]
pub struct FieldJet<R> {
    pub xu: R,
    pub xr: R,
    pub dxu_du: R,
    pub dxu_dr: R,
    pub dxr_du: R,
    pub dxr_dr: R,
    pub x_ln_omega: R,
}

impl<R: Real> FieldJet<R> {
    /// Sum of magnitudes of the constituent terms, used to normalise residuals.
    pub fn scale(&self, r: R) -> R {
        self.dxu_du.abs()
            + self.dxu_dr.abs()
            + self.dxr_du.abs()
            + self.dxr_dr.abs()
            + (self.xr / r).abs()
            + self.x_ln_omega.abs()
    }
}

pub fn field_jet_ad<R: Real>(kind: MultiplierKind, a: f64, u: R, r: R) -> FieldJet<R> {
    let uj = Jet::<R, 2>::var(u, 0);
    let rj = Jet::<R, 2>::var(r, 1);
    let (xu, xr) = components(kind, a, uj, rj);
    let om = kind.omega();
    let (gu, gr) = om.grad(u, r);
    FieldJet {
        xu: xu.v,
        xr: xr.v,
        dxu_du: xu.d[0],
        dxu_dr: xu.d[1],
        dxr_du: xr.d[0],
        dxr_dr: xr.d[1],
        x_ln_omega: (xu.v * gu + xr.v * gr) / om.value(u, r),
    }
}

/// Same as [`field_jet_ad`] with fourth-order central differences, step `1e-4 max(1,|u|,|r|)`.
pub fn field_jet_fd(kind: MultiplierKind, a: f64, u: f64, r: f64) -> FieldJet<f64> {
    let h = 1e-4 * 1f64.max(u.abs()).max(r.abs());
    let d = |f: &dyn Fn(f64) -> f64, x: f64| {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    };
    let xu = |u: f64, r: f64| components(kind, a, u, r).0;
    let xr = |u: f64, r: f64| components(kind, a, u, r).1;
    let (x_u, x_r) = components(kind, a, u, r);
    let om = kind.omega();
    let (gu, gr) = om.grad(u, r);
    FieldJet {
        xu: x_u,
        xr: x_r,
        dxu_du: d(&|v| xu(v, r), u),
        dxu_dr: d(&|v| xu(u, v), r),
        dxr_du: d(&|v| xr(v, r), u),
        dxr_dr: d(&|v| xr(u, v), r),
        x_ln_omega: (x_u * gu + x_r * gr) / om.value(u, r),
    }
}

/// The component formulas for a field without angular part.
pub fn component_formulas<R: Real>(j: &FieldJet<R>, r: R) -> BondiA<R> {
    let half = R::from_f64(0.5);
    let w = j.xr / r - j.x_ln_omega;
    BondiA {
        uu: -j.dxu_dr,
        rr: half * j.dxr_dr - half * j.dxu_du - j.dxr_du - w,
        ur: half * j.dxu_dr + w,
        kappa: j.xr / r - half * j.dxu_du - half * j.dxr_dr - w,
    }
}

/// Contravariant Minkowski metric, diagonal.
const ETA: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

/// The generic route: build the trace-adjusted deformation tensor from Cartesian
/// derivatives of X, add the weight term, then contract with the polar Bondi covectors.
/// Also returns the largest off-diagonal/anisotropic leftover.
pub fn cartesian_route<R: Real>(kind: MultiplierKind, a: f64, p: &SlicePoint<R>) -> (BondiA<R>, R) {
    let v = Jet::<R, 4>::vars([p.t, p.x[0], p.x[1], p.x[2]]);
    let r = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
    let u = v[0] - r;
    let (xu, xr) = components(kind, a, u, r);
    let x = [xu + xr, xr * v[1] / r, xr * v[2] / r, xr * v[3] / r];
    let om = kind.omega().value(u, r);
    let mut x_omega = R::zero();
    for g in 0..4 {
        x_omega += x[g].v * om.d[g];
    }
    let x_ln_omega = x_omega / om.v;
    let mut div = R::zero();
    for g in 0..4 {
        div += x[g].d[g];
    }
    let half = R::from_f64(0.5);
    let mut am = [[R::zero(); 4]; 4];
    for al in 0..4 {
        for be in 0..4 {
            let eta_ab = if al == be { R::from_f64(ETA[al]) } else { R::zero() };
            let pi_hat = -(eta_ab * div)
                + R::from_f64(ETA[al]) * x[be].d[al]
                + R::from_f64(ETA[be]) * x[al].d[be];
            am[al][be] = half * pi_hat + x_ln_omega * eta_ab;
        }
    }
    let w = p.omega().expect("cartesian route needs r > 0");
    let du = [R::one(), -w[0], -w[1], -w[2]];
    let dr = [R::zero(), w[0], w[1], w[2]];
    let (e1, e2) = tangent_pair(w);
    let e1 = [R::zero(), e1[0], e1[1], e1[2]];
    let e2 = [R::zero(), e2[0], e2[1], e2[2]];
    let c = |x: &[R; 4], y: &[R; 4]| {
        let mut acc = R::zero();
        for al in 0..4 {
            for be in 0..4 {
                acc += am[al][be] * x[al] * y[be];
            }
        }
        acc
    };
    let kappa = c(&e1, &e1);
    let leftovers = [
        c(&e2, &e2) - kappa,
        c(&e1, &e2),
        c(&du, &e1),
        c(&du, &e2),
        c(&dr, &e1),
        c(&dr, &e2),
    ];
    let mut worst = R::zero();
    for l in leftovers {
        worst = worst.max_r(l.abs());
    }
    (BondiA { uu: c(&du, &du), ur: c(&du, &dr), rr: c(&dr, &dr), kappa }, worst)
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `w`.
pub fn tangent_pair<R: Real>(w: [R; 3]) -> ([R; 3], [R; 3]) {
    let aw = [w[0].abs(), w[1].abs(), w[2].abs()];
    let k = if aw[0] <= aw[1] && aw[0] <= aw[2] {
        0
    } else if aw[1] <= aw[2] {
        1
    } else {
        2
    };
    let mut ax = [R::zero(); 3];
    ax[k] = R::one();
    let cross = |a: [R; 3], b: [R; 3]| {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    let e1 = cross(w, ax);
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    let e1 = [e1[0] / n, e1[1] / n, e1[2] / n];
    let e2 = cross(w, e1);
    (e1, e2)
}

/// `nabla^alpha Lambda` in Cartesian components.
pub fn lambda_gradient<R: Real>(kind: MultiplierKind, a: f64, p: &SlicePoint<R>) -> [R; 4] {
    match kind.lambda() {
        LambdaKind::Unit => [R::zero(); 4],
        LambdaKind::SPow => {
            let s2 = p.u * p.ubar;
            let c = R::from_f64(2.0 - 2.0 * a) * s2.powr(a - 2.0);
            [c * p.t, c * p.x[0], c * p.x[1], c * p.x[2]]
        }
    }
}

pub fn deformation_a(spec: &MultiplierSpec, p: &SlicePoint) -> Result<CoefficientSet> {
    if !(p.r > 0.0) {
        return Err(Error::CenterAxis);
    }
    let b = closed_form_a(spec.kind, spec.a, p.u, p.r);
    Ok(CoefficientSet {
        auu: b.uu,
        aur: b.ur,
        arr: b.rr,
        abc_scalar: b.kappa / (p.r * p.r),
        kappa: b.kappa,
        b: 0.0,
        c_vector: lambda_gradient(spec.kind, spec.a, p),
        v: 0.0,
    })
}

/// The same coefficients from the component formulas with finite-difference partials.
pub fn deformation_a_fd(spec: &MultiplierSpec, p: &SlicePoint) -> Result<CoefficientSet> {
    if !(p.r > 0.0) {
        return Err(Error::CenterAxis);
    }
    let j = field_jet_fd(spec.kind, spec.a, p.u, p.r);
    let b = component_formulas(&j, p.r);
    Ok(CoefficientSet {
        auu: b.uu,
        aur: b.ur,
        arr: b.rr,
        abc_scalar: b.kappa / (p.r * p.r),
        kappa: b.kappa,
        b: 0.0,
        c_vector: lambda_gradient(spec.kind, spec.a, p),
        v: 0.0,
    })
}

/// Conformal potential `Omega^3 Box Omega^{-1}`; zero for the unit, r and s^2 weights.
pub fn conformal_potential(omega: OmegaKind, p: &SlicePoint) -> Result<f64> {
    check_potential_domain(omega, p)?;
    Ok(0.0)
}

fn check_potential_domain(omega: OmegaKind, p: &SlicePoint) -> Result<()> {
    match omega {
        OmegaKind::R if !(p.r > 0.0) => Err(Error::CenterAxis),
        OmegaKind::S2 if !(p.u > 0.0) => Err(Error::OutsideCone { t: p.t, r: p.r }),
        _ => Ok(()),
    }
}

/// Radial Bondi wave operator applied to `Omega^{-1}` with second-order jets.
/// Returns `(V, sum of |terms| * Omega^3)`.
pub fn potential_bondi_ad<R: Real>(omega: OmegaKind, u: R, r: R) -> (R, R) {
    type J<R> = Jet<Jet<R, 2>, 2>;
    let uj: J<R> = Jet::var(Jet::var(u, 0), 0);
    let rj: J<R> = Jet::var(Jet::var(r, 1), 1);
    let f = omega.value(uj, rj).recip();
    let f_u = f.d[0].v;
    let f_r = f.d[1].v;
    let f_ur = f.d[0].d[1];
    let f_rr = f.d[1].d[1];
    let two = R::from_f64(2.0);
    let terms = [-(two * f_ur), f_rr, -(two * f_u / r), two * f_r / r];
    let om3 = omega.value(u, r).powr(3.0);
    let mut sum = R::zero();
    let mut mag = R::zero();
    for t in terms {
        sum += t;
        mag += t.abs();
    }
    (om3 * sum, om3 * mag)
}

/// Cartesian `-d_t^2 + Laplacian` of `Omega^{-1}` with second-order jets in (t, x).
pub fn potential_cartesian_ad<R: Real>(omega: OmegaKind, p: &SlicePoint<R>) -> (R, R) {
    type J<R> = Jet<Jet<R, 4>, 4>;
    let coords = [p.t, p.x[0], p.x[1], p.x[2]];
    let mut v: [J<R>; 4] = [Jet::constant(Jet::constant(R::zero())); 4];
    for i in 0..4 {
        v[i] = Jet::var(Jet::var(coords[i], i), i);
    }
    let r = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
    let u = v[0] - r;
    let f = omega.value(u, r).recip();
    let om3 = omega.value(p.u, p.r).powr(3.0);
    let mut sum = R::zero();
    let mut mag = R::zero();
    for i in 0..4 {
        let t = R::from_f64(ETA[i]) * f.d[i].d[i];
        sum += t;
        mag += t.abs();
    }
    (om3 * sum, om3 * mag)
}

/// Finite-difference cross-check of the potential with fourth-order stencils of step `h`.
pub fn potential_fd(omega: OmegaKind, u: f64, r: f64, h: f64) -> f64 {
    let f = |u: f64, r: f64| 1.0 / omega.value(u, r);
    let d1 = |g: &dyn Fn(f64) -> f64, x: f64| {
        (g(x - 2.0 * h) - 8.0 * g(x - h) + 8.0 * g(x + h) - g(x + 2.0 * h)) / (12.0 * h)
    };
    let d2 = |g: &dyn Fn(f64) -> f64, x: f64| {
        (-g(x - 2.0 * h) + 16.0 * g(x - h) - 30.0 * g(x) + 16.0 * g(x + h) - g(x + 2.0 * h))
            / (12.0 * h * h)
    };
    let f_u = d1(&|v| f(v, r), u);
    let f_r = d1(&|v| f(u, v), r);
    let f_rr = d2(&|v| f(u, v), r);
    let f_ur = d1(&|v| d1(&|w| f(v, w), r), u);
    omega.value(u, r).powi(3) * (-2.0 * f_ur + f_rr - 2.0 * f_u / r + 2.0 * f_r / r)
}

pub fn conformal_potential_fd(omega: OmegaKind, p: &SlicePoint, h: f64) -> Result<f64> {
    check_potential_domain(omega, p)?;
    Ok(potential_fd(omega, p.u, p.r, h))
}

/// Coercivity parameter; any value in (1/2, 1) works.
pub const EPS_SQ: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxDensity {
    pub value: f64,
    pub coercive_lower: f64,
    pub coercive_upper: f64,
}

/// Boundary density in the Bondi frame of `Phi`: `(d_u Phi, d_r Phi, |angular grad Phi|^2)`.
pub fn flux_value<R: Real>(xu: R, xr: R, lambda: R, w: R, du: R, dr: R, ang_sq: R) -> R {
    let half = R::from_f64(0.5);
    let a = R::one() - w;
    lambda
        * (xu * a * du * du + half * (xu + xr * (R::one() + w)) * dr * dr - xu * a * du * dr
            + half * (xu + xr * a) * ang_sq)
}

pub fn flux_bounds(xu: f64, xr: f64, lambda: f64, w: f64, du: f64, dr: f64, ang_sq: f64) -> (f64, f64) {
    let a = 1.0 - w;
    let cu = 1.0 / (2.0 * EPS_SQ);
    let cr = 0.5 * EPS_SQ;
    let common = 0.5 * xu * w * dr * dr + 0.5 * xr * (1.0 + w) * dr * dr + 0.5 * (xu + xr * a) * ang_sq;
    let lo = xu * a * ((1.0 - cu) * du * du + (0.5 - cr) * dr * dr) + common;
    let hi = xu * a * ((1.0 + cu) * du * du + (0.5 + cr) * dr * dr) + common;
    (lambda * lo, lambda * hi)
}

/// `Phi` frames must be Bondi-available (r > 0). `b` is the potential coefficient (zero here).
pub fn flux_density(
    spec: &MultiplierSpec,
    p: &SlicePoint,
    frames: &crate::geometry::FrameDerivatives,
    phi: f64,
    b: f64,
) -> Result<FluxDensity> {
    let rad = frames.radial.ok_or(Error::CenterAxis)?;
    let w = p.r / p.t;
    let (du, dr, ang) = (rad.del_b_u, rad.del_b_r, rad.slashed_sq);
    let extra = spec.lambda_value / (spec.omega_value * spec.omega_value) * b * phi * phi;
    let value = flux_value(spec.xu, spec.xr, spec.lambda_value, w, du, dr, ang) + extra;
    let (lo, hi) = flux_bounds(spec.xu, spec.xr, spec.lambda_value, w, du, dr, ang);
    Ok(FluxDensity { value, coercive_lower: lo + extra, coercive_upper: hi + extra })
}

/// `Lambda Q[Phi](X, N')` by direct Cartesian contraction.
pub fn flux_contraction<R: Real>(x: [R; 4], lambda: R, partials: [R; 4], p: &SlicePoint<R>) -> R {
    let n = crate::geometry::rescaled_normal(p);
    let mut x_phi = R::zero();
    let mut n_phi = R::zero();
    let mut eta_xn = R::zero();
    let mut grad_sq = R::zero();
    for i in 0..4 {
        x_phi += x[i] * partials[i];
        n_phi += n[i] * partials[i];
        eta_xn += R::from_f64(ETA[i]) * x[i] * n[i];
        grad_sq += R::from_f64(ETA[i]) * partials[i] * partials[i];
    }
    lambda * (x_phi * n_phi - R::from_f64(0.5) * eta_xn * grad_sq)
}

/// `Q[Phi](-grad s, X)` for the dominant-energy check.
pub fn normal_energy<R: Real>(x: [R; 4], partials: [R; 4], p: &SlicePoint<R>) -> R {
    let n = crate::geometry::unit_normal(p);
    let mut x_phi = R::zero();
    let mut n_phi = R::zero();
    let mut eta_xn = R::zero();
    let mut grad_sq = R::zero();
    for i in 0..4 {
        x_phi += x[i] * partials[i];
        n_phi += n[i] * partials[i];
        eta_xn += R::from_f64(ETA[i]) * x[i] * n[i];
        grad_sq += R::from_f64(ETA[i]) * partials[i] * partials[i];
    }
    x_phi * n_phi - R::from_f64(0.5) * eta_xn * grad_sq
}

/// Flux density from Cartesian partials of `Phi`, via the Bondi frame.
pub fn flux_from_partials(spec: &MultiplierSpec, p: &SlicePoint, partials: [f64; 4]) -> Result<FluxDensity> {
    let f = frame_transform(partials, p);
    flux_density(spec, p, &f, 0.0, 0.0)
}

/// `q = (ubar^{2a} - u^{2a})/r - 2a(ubar^{2a-1} + u^{2a-1})` straight from the definition.
pub fn q_direct<R: Real>(a: f64, u: R, ubar: R) -> R {
    let r = R::from_f64(0.5) * (ubar - u);
    (ubar.powr(2.0 * a) - u.powr(2.0 * a)) / r
        - R::from_f64(2.0 * a) * (ubar.powr(2.0 * a - 1.0) + u.powr(2.0 * a - 1.0))
}

/// `q = t^{2a-1} h(r/t)` with `h(w) = -(1/w) int_0^w y g''(y) dy`, integrated after the
/// substitution `1 - y = exp(-L sigma)`. Signs are exact and a = 1/2, 1 give exact zeros.
pub fn q_weight(a: f64, u: f64, ubar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::ExponentOutOfRange { kind: "q", a });
    }
    if !(u > 0.0 && ubar > u) {
        return Err(Error::Degenerate("q needs 0 < u < ubar"));
    }
    let t = 0.5 * (u + ubar);
    let w = (ubar - u) / (ubar + u);
    Ok(t.powf(2.0 * a - 1.0) * h_weight(a, w))
}

fn h_weight(a: f64, w: f64) -> f64 {
    let c = 2.0 * a * (2.0 * a - 1.0);
    if c == 0.0 || 2.0 * a - 2.0 == 0.0 {
        return 0.0;
    }
    let l = -(-w).ln_1p();
    let (xs, ws) = gauss64();
    let mut acc = 0.0;
    for (sig, wt) in xs.iter().zip(ws) {
        let one_minus_y = (-l * sig).exp();
        let y = -(-l * sig).exp_m1();
        let bracket = (1.0 + y).powf(2.0 * a - 2.0) - one_minus_y.powf(2.0 * a - 2.0);
        // dy = L (1-y) dsigma
        acc += wt * y * bracket * l * one_minus_y;
    }
    -c * acc / w
}

/// `g(w) = (1+w)^{2a} - (1-w)^{2a}` with linear bounds `(2a w, 2a(2^{2a-1}+1) w)`.
pub fn g_bounds(a: f64, w: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::Degenerate("g needs 0 <= w < 1"));
    }
    let g = (1.0 - w).powf(2.0 * a) * (4.0 * a * w.atanh()).exp_m1();
    Ok((g, 2.0 * a * w, 2.0 * a * (2f64.powf(2.0 * a - 1.0) + 1.0) * w))
}

/// `(ubar^{2a} - u^{2a}) / (a r t^{2a-1})`, which equals `g(w)/(a w)`.
pub fn weight_ratio(a: f64, u: f64, ubar: f64) -> f64 {
    let w = (ubar - u) / (ubar + u);
    let (g, _, _) = g_bounds(a, w).expect("inside the cone");
    g / (a * w)
}

/// Second derivative of `f(r) = ubar^{2a} - u^{2a}` at fixed t.
pub fn f_second(a: f64, u: f64, ubar: f64) -> f64 {
    (2.0 * a - 1.0) * 2.0 * a * (ubar.powf(2.0 * a - 2.0) - u.abs().powf(2.0 * a - 2.0))
}
