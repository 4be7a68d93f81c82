//! Light-cone coordinates, the hyperboloidal foliation and its frames.

use crate::error::{Error, Result};
use crate::real::Real;

pub fn japanese<R: Real>(f: R) -> R {
    (R::one() + f * f).sqrt()
}

#[derive(Clone, Copy, Debug)]
pub struct SlicePoint<R = f64> {
    pub t: R,
    pub x: [R; 3],
    pub r: R,
    pub s: R,
    pub u: R,
    pub ubar: R,
    pub tau_minus: R,
    pub tau_plus: R,
    pub tau_zero: R,
}

impl<R: Real> SlicePoint<R> {
    /// Unit radial direction, `None` on the axis.
    pub fn omega(&self) -> Option<[R; 3]> {
        if self.r > R::zero() {
            Some([self.x[0] / self.r, self.x[1] / self.r, self.x[2] / self.r])
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> SlicePoint<f64> {
        SlicePoint {
            t: self.t.to_f64(),
            x: [self.x[0].to_f64(), self.x[1].to_f64(), self.x[2].to_f64()],
            r: self.r.to_f64(),
            s: self.s.to_f64(),
            u: self.u.to_f64(),
            ubar: self.ubar.to_f64(),
            tau_minus: self.tau_minus.to_f64(),
            tau_plus: self.tau_plus.to_f64(),
            tau_zero: self.tau_zero.to_f64(),
        }
    }
}

pub fn hyperboloidal_time<R: Real>(t: R, x: [R; 3]) -> Result<SlicePoint<R>> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if !(t > r) {
        return Err(Error::OutsideCone { t: t.to_f64(), r: r.to_f64() });
    }
    let u = t - r;
    let ubar = t + r;
    // u*ubar keeps relative accuracy near the cone where t^2 - r^2 cancels
    let s = (u * ubar).sqrt();
    let tau_minus = japanese(u);
    let tau_plus = japanese(ubar);
    Ok(SlicePoint { t, x, r, s, u, ubar, tau_minus, tau_plus, tau_zero: tau_minus / tau_plus })
}

/// Point on the x1 axis at radius r; the radial code paths only need (t, r).
pub fn radial_point<R: Real>(t: R, r: R) -> Result<SlicePoint<R>> {
    hyperboloidal_time(t, [r, R::zero(), R::zero()])
}

pub fn slice_height<R: Real>(s: R, r: R) -> Result<R> {
    if !(s > R::zero()) {
        return Err(Error::NonPositiveS(s.to_f64()));
    }
    Ok((s * s + r * r).sqrt())
}

/// Rescaled normal `(s/t) N` in Cartesian components; the time component is 1.
pub fn rescaled_normal<R: Real>(p: &SlicePoint<R>) -> [R; 4] {
    [R::one(), p.x[0] / p.t, p.x[1] / p.t, p.x[2] / p.t]
}

/// Future unit normal to the slice through `p`.
pub fn unit_normal<R: Real>(p: &SlicePoint<R>) -> [R; 4] {
    [p.t / p.s, p.x[0] / p.s, p.x[1] / p.s, p.x[2] / p.s]
}

/// Coefficients of the rescaled normal on the Bondi vectors (d_u, d_r).
pub fn rescaled_normal_bondi<R: Real>(p: &SlicePoint<R>) -> Result<(R, R)> {
    if !(p.r > R::zero()) {
        return Err(Error::CenterAxis);
    }
    let w = p.r / p.t;
    Ok((R::one() - w, w))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainTag {
    Outside,
    /// `r < t/2`; `in_slab` when `s1 <= s <= s2`.
    Interior { in_slab: bool },
    /// `t/2 <= r < t - 1`.
    Wave { in_slab: bool },
}

impl DomainTag {
    pub fn in_domain(&self) -> bool {
        !matches!(self, DomainTag::Outside)
    }
}

pub fn classify_domain(t: f64, r: f64, s1: f64, s2: f64) -> DomainTag {
    if !(r < t - 1.0) {
        return DomainTag::Outside;
    }
    let s = ((t - r) * (t + r)).sqrt();
    let in_slab = s1 <= s && s <= s2;
    if r < 0.5 * t {
        DomainTag::Interior { in_slab }
    } else {
        DomainTag::Wave { in_slab }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Radial<R> {
    pub delu_r: R,
    pub del_b_u: R,
    pub del_b_r: R,
    pub del_b: [R; 3],
    pub slashed_sq: R,
}

#[derive(Clone, Copy, Debug)]
pub struct FrameDerivatives<R = f64> {
    pub del_t: R,
    pub del: [R; 3],
    pub delu_0: R,
    pub delu: [R; 3],
    /// `None` on the axis.
    pub radial: Option<Radial<R>>,
}

impl<R: Real> FrameDerivatives<R> {
    pub fn slashed_grad(&self) -> Option<R> {
        self.radial.map(|b| b.slashed_sq.sqrt())
    }
}

pub fn frame_transform<R: Real>(partials: [R; 4], p: &SlicePoint<R>) -> FrameDerivatives<R> {
    let dt = partials[0];
    let del = [partials[1], partials[2], partials[3]];
    let mut delu = [R::zero(); 3];
    for i in 0..3 {
        delu[i] = del[i] + p.x[i] / p.t * dt;
    }
    let radial = p.omega().map(|w| {
        let dr = w[0] * del[0] + w[1] * del[1] + w[2] * del[2];
        let mut del_b = [R::zero(); 3];
        let mut sum = R::zero();
        for i in 0..3 {
            del_b[i] = del[i] + w[i] * dt;
            sum += del_b[i] * del_b[i];
        }
        let del_b_r = dt + dr;
        let mut slashed_sq = sum - del_b_r * del_b_r;
        if slashed_sq < R::zero() {
            slashed_sq = R::zero();
        }
        Radial { delu_r: dr + p.r / p.t * dt, del_b_u: dt, del_b_r, del_b, slashed_sq }
    });
    FrameDerivatives { del_t: dt, del, delu_0: dt, delu, radial }
}

/// Bondi frame values of a gradient given radial/angular split: `(d_t, d_r, |angular|^2)`.
pub fn bondi_from_split<R: Real>(dt: R, dr: R, ang_sq: R) -> (R, R, R) {
    (dt, dt + dr, ang_sq)
}
