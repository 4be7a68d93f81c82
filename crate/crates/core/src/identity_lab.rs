//! Randomized pointwise checks of the tensor identities, in binary64 or double-double.

use crate::geometry::{frame_transform, hyperboloidal_time, SlicePoint};
use crate::jet::Jet;
use crate::multipliers::{
    cartesian_field, cartesian_route, closed_form_a, component_formulas, components, f_second, field_jet_ad,
    flux_bounds, flux_contraction, flux_value, g_bounds, potential_bondi_ad, potential_cartesian_ad, potential_fd,
    q_direct, q_weight, weight_ratio, MultiplierKind, OmegaKind,
};
use crate::real::{Real, DD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: String,
    pub samples: usize,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub seed: u64,
    /// Samples dropped from the statistics (near-axis points for r-weighted identities).
    #[serde(skip)]
    pub excluded: usize,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    Extended,
}

impl Precision {
    pub fn default_tolerance(self) -> f64 {
        match self {
            Precision::F64 => 1e-10,
            Precision::Extended => 1e-25,
        }
    }

    fn a_grid(self) -> Vec<f64> {
        match self {
            Precision::F64 => (0..=20).map(|k| k as f64 / 20.0).collect(),
            Precision::Extended => vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

pub const AXIS_TUBE: f64 = 1e-6;
const S_MIN: f64 = 1.1;
const S_MAX: f64 = 1e3;

fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Log-uniform `s`, uniform `r/(t-1)`, uniform direction.
pub fn sample_cone_point(rng: &mut impl Rng) -> (f64, [f64; 3]) {
    let s = (S_MIN.ln() + rng.gen::<f64>() * (S_MAX.ln() - S_MIN.ln())).exp();
    let w: f64 = rng.gen();
    // r = w (t - 1) on t^2 - r^2 = s^2, rationalized
    let s2m1 = s * s - 1.0;
    let r = w * s2m1 / (1.0 + (1.0 + (1.0 - w * w) * s2m1).sqrt());
    let t = (s * s + r * r).sqrt();
    let z: f64 = rng.gen_range(-1.0..1.0);
    let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let rho = (1.0 - z * z).sqrt();
    (t, [r * rho * ph.cos(), r * rho * ph.sin(), r * z])
}

fn lift<R: Real>(t: f64, x: [f64; 3]) -> Option<SlicePoint<R>> {
    hyperboloidal_time(R::from_f64(t), [R::from_f64(x[0]), R::from_f64(x[1]), R::from_f64(x[2])]).ok()
}

/// Per-sample outcome: `None` when excluded.
type Sample = Option<(f64, f64)>;

fn finish(id: &str, samples: usize, seed: u64, tol: f64, judge_abs: bool, results: Vec<Sample>) -> IdentityReport {
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut excluded = 0;
    for r in results {
        match r {
            None => excluded += 1,
            Some((a, b)) => {
                let a = if a.is_nan() { f64::INFINITY } else { a };
                let b = if b.is_nan() { f64::INFINITY } else { b };
                max_abs = max_abs.max(a);
                max_rel = max_rel.max(b);
            }
        }
    }
    let judged = if judge_abs { max_abs } else { max_rel };
    IdentityReport {
        identity_id: id.to_string(),
        samples,
        max_abs_residual: max_abs,
        max_rel_residual: max_rel,
        tolerance: tol,
        verdict: if judged <= tol { Verdict::Pass } else { Verdict::Fail },
        seed,
        excluded,
    }
}

fn run<F>(samples: usize, f: F) -> Vec<Sample>
where
    F: Fn(usize) -> Sample + Sync,
{
    (0..samples).into_par_iter().map(&f).collect()
}

fn rel(abs: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        abs / scale
    } else {
        abs
    }
}

fn pick_a(rng: &mut impl Rng, kind: MultiplierKind, precision: Precision) -> f64 {
    let (lo, hi) = kind.a_range();
    let grid: Vec<f64> = precision.a_grid().into_iter().filter(|a| lo <= *a && *a <= hi).collect();
    grid[rng.gen_range(0..grid.len())]
}

fn deformation_sample<R: Real>(kind: MultiplierKind, a: f64, t: f64, x: [f64; 3]) -> Sample {
    let p: SlicePoint<R> = lift(t, x)?;
    if p.r.to_f64() < AXIS_TUBE {
        return None;
    }
    let closed = closed_form_a(kind, a, p.u, p.r);
    let jet = field_jet_ad(kind, a, p.u, p.r);
    let generic = component_formulas(&jet, p.r);
    let (cart, leftover) = cartesian_route(kind, a, &p);
    let mut worst = leftover.to_f64().abs();
    for (c, g, k) in [
        (closed.uu, generic.uu, cart.uu),
        (closed.ur, generic.ur, cart.ur),
        (closed.rr, generic.rr, cart.rr),
        (closed.kappa, generic.kappa, cart.kappa),
    ] {
        worst = worst.max((c - g).abs().to_f64()).max((c - k).abs().to_f64());
    }
    Some((worst, rel(worst, jet.scale(p.r).to_f64())))
}

/// Closed forms, component formulas and the Cartesian deformation tensor agree for every multiplier.
pub fn check_deformation_identity(samples: usize, seed: u64, tol: f64, precision: Precision) -> IdentityReport {
    let res = run(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let kind = MultiplierKind::ALL[i % 4];
        let a = pick_a(&mut rng, kind, precision);
        let (t, x) = sample_cone_point(&mut rng);
        match precision {
            Precision::F64 => deformation_sample::<f64>(kind, a, t, x),
            Precision::Extended => deformation_sample::<DD>(kind, a, t, x),
        }
    });
    finish("deformation", samples, seed, tol, false, res)
}

fn flux_sample<R: Real>(kind: MultiplierKind, a: f64, t: f64, x: [f64; 3], partials: [f64; 4]) -> Sample {
    let p: SlicePoint<R> = lift(t, x)?;
    if p.r.to_f64() < AXIS_TUBE {
        return None;
    }
    let dphi = partials.map(R::from_f64);
    let frames = frame_transform(dphi, &p);
    let rad = frames.radial?;
    let (xu, xr) = components(kind, a, p.u, p.r);
    let lambda = kind.lambda().value(a, p.u * p.ubar);
    let w = p.r / p.t;
    let value = flux_value(xu, xr, lambda, w, rad.del_b_u, rad.del_b_r, rad.slashed_sq);
    let direct = flux_contraction(cartesian_field(kind, a, &p), lambda, dphi, &p);
    let mut grad = R::zero();
    for d in dphi {
        grad += d * d;
    }
    let scale = (lambda * (xu + xr) * grad).to_f64();
    let diff = (value - direct).abs().to_f64();
    let (lo, hi) = flux_bounds(
        xu.to_f64(),
        xr.to_f64(),
        lambda.to_f64(),
        w.to_f64(),
        rad.del_b_u.to_f64(),
        rad.del_b_r.to_f64(),
        rad.slashed_sq.to_f64(),
    );
    let v = value.to_f64();
    // bounds are only evaluated in binary64
    let slack = 1e-13 * scale;
    let violation = (lo - v - slack).max(v - hi - slack).max(0.0);
    let abs = diff.max(violation);
    Some((abs, rel(diff, scale).max(if violation > 0.0 { f64::INFINITY } else { 0.0 })))
}

/// Bondi-frame flux density equals the contraction of Q with X and the rescaled normal, inside its coercive bounds.
pub fn check_flux_identity(samples: usize, seed: u64, tol: f64, precision: Precision) -> IdentityReport {
    let res = run(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let kind = MultiplierKind::ALL[i % 4];
        let a = pick_a(&mut rng, kind, precision);
        let (t, x) = sample_cone_point(&mut rng);
        let partials: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        match precision {
            Precision::F64 => flux_sample::<f64>(kind, a, t, x, partials),
            Precision::Extended => flux_sample::<DD>(kind, a, t, x, partials),
        }
    });
    finish("flux", samples, seed, tol, false, res)
}

fn potential_sample<R: Real>(omega: OmegaKind, t: f64, x: [f64; 3]) -> Sample {
    let p: SlicePoint<R> = lift(t, x)?;
    if omega == OmegaKind::R && p.r.to_f64() < AXIS_TUBE {
        return None;
    }
    let (v1, m1) = potential_bondi_ad(omega, p.u, p.r);
    let (v2, m2) = potential_cartesian_ad(omega, &p);
    let (v1, v2) = (v1.to_f64().abs(), v2.to_f64().abs());
    Some((v1.max(v2), rel(v1, m1.to_f64()).max(rel(v2, m2.to_f64()))))
}

/// The conformal potentials of the r and s^2 weights vanish, via Bondi and Cartesian second derivatives.
pub fn check_potentials(samples: usize, seed: u64, tol: f64, precision: Precision) -> IdentityReport {
    let res = run(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let omega = if i % 2 == 0 { OmegaKind::R } else { OmegaKind::S2 };
        let (t, x) = sample_cone_point(&mut rng);
        match precision {
            Precision::F64 => potential_sample::<f64>(omega, t, x),
            Precision::Extended => potential_sample::<DD>(omega, t, x),
        }
    });
    finish("potentials", samples, seed, tol, false, res)
}

/// Finite-difference route for the potentials on a moderate box `u in [1,3], r in [0.5,3]`.
pub fn check_potentials_fd(samples: usize, seed: u64, step: f64, tol: f64) -> IdentityReport {
    let res = run(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let omega = if i % 2 == 0 { OmegaKind::R } else { OmegaKind::S2 };
        let u = rng.gen_range(1.0..3.0);
        let r = rng.gen_range(0.5..3.0);
        let v = potential_fd(omega, u, r, step).abs();
        let (_, mag) = potential_bondi_ad(omega, u, r);
        Some((v, rel(v, mag)))
    });
    finish("potentials_fd", samples, seed, tol, true, res)
}

const MONOMIALS: usize = 70;

fn exponents() -> Vec<[u32; 4]> {
    let mut out = Vec::with_capacity(MONOMIALS);
    for i in 0..=4u32 {
        for j in 0..=4 - i {
            for k in 0..=4 - i - j {
                for l in 0..=4 - i - j - k {
                    out.push([i, j, k, l]);
                }
            }
        }
    }
    out
}

fn poly_jet<R: Real>(coef: &[f64], exps: &[[u32; 4]], p: &SlicePoint<R>) -> Jet<R, 4> {
    let v = Jet::<R, 4>::vars([p.t, p.x[0], p.x[1], p.x[2]]);
    let mut pows = [[Jet::<R, 4>::constant(R::one()); 5]; 4];
    for c in 0..4 {
        for k in 1..5 {
            pows[c][k] = pows[c][k - 1] * v[c];
        }
    }
    let mut acc = Jet::constant(R::zero());
    for (cf, e) in coef.iter().zip(exps) {
        let mono = pows[0][e[0] as usize] * pows[1][e[1] as usize] * pows[2][e[2] as usize] * pows[3][e[3] as usize];
        acc += Jet::constant(R::from_f64(*cf)) * mono;
    }
    acc
}

fn radial_of<R: Real>(f: &Jet<R, 4>, w: [R; 3]) -> R {
    w[0] * f.d[1] + w[1] * f.d[2] + w[2] * f.d[3]
}

/// Residuals `(|lhs - rhs|, scale)` of the conjugation identities for one field.
pub fn conjugation_residuals<R: Real>(phi: &Jet<R, 4>, p: &SlicePoint<R>, a: f64) -> [(R, R); 5] {
    let w = p.omega().expect("off axis");
    let v = Jet::<R, 4>::vars([p.t, p.x[0], p.x[1], p.x[2]]);
    let rj = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
    let s2j = v[0] * v[0] - rj * rj;
    let two = R::from_f64(2.0);
    let (r, s2) = (p.r, p.u * p.ubar);
    let ph = phi.v;
    let dt = phi.d[0];
    let dbr = dt + radial_of(phi, w);

    let rphi = rj * *phi;
    let l1 = (rphi.d[0] + radial_of(&rphi, w)) / r;
    let r1 = dbr + ph / r;
    let l2 = rphi.d[0] / r;
    let r2 = dt;

    let sphi = s2j * *phi;
    let l3 = (sphi.d[0] + radial_of(&sphi, w)) / s2;
    let r3 = dbr + two * ph / p.ubar;
    let l4 = sphi.d[0] / s2;
    let r4 = dt + two * p.t * ph / (p.ubar * p.u);

    let sa = p.s.powr(a);
    let sa1 = p.s.powr(a - 1.0);
    let sot = p.s / p.t;
    let under_r = radial_of(&sphi, w) + r / p.t * sphi.d[0];
    let l5 = sa * (p.ubar / p.t) * under_r / s2;
    let t5a = sa1 * p.ubar * sot * ((sphi.d[0] + radial_of(&sphi, w)) / s2);
    let t5b = sa1 * p.u * p.ubar / p.t * (sot * sphi.d[0] / s2);
    let r5 = t5a - t5b;

    let pair = |l: R, rr: R, extra: R| ((l - rr).abs(), l.abs() + rr.abs() + extra);
    [
        pair(l1, r1, dbr.abs() + (ph / r).abs()),
        pair(l2, r2, R::zero()),
        pair(l3, r3, dbr.abs() + (two * ph / p.ubar).abs()),
        pair(l4, r4, dt.abs() + (two * p.t * ph / (p.ubar * p.u)).abs()),
        pair(l5, r5, t5a.abs() + t5b.abs()),
    ]
}

fn combining_sample<R: Real>(coef: &[f64], exps: &[[u32; 4]], a: f64, t: f64, x: [f64; 3]) -> Sample {
    let p: SlicePoint<R> = lift(t, x)?;
    if p.r.to_f64() < AXIS_TUBE {
        return None;
    }
    let phi = poly_jet(coef, exps, &p);
    let mut abs: f64 = 0.0;
    let mut relm: f64 = 0.0;
    for (d, sc) in conjugation_residuals(&phi, &p, a) {
        let d = d.to_f64();
        abs = abs.max(d);
        relm = relm.max(rel(d, sc.to_f64()));
    }
    Some((abs, relm))
}

/// Conjugation identities for the r and s^2 weights on random quartic polynomial fields.
pub fn check_combining_identities(samples: usize, seed: u64, tol: f64, precision: Precision) -> IdentityReport {
    let exps = exponents();
    let res = run(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let coef: Vec<f64> = (0..MONOMIALS).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let grid = precision.a_grid();
        let a = grid[rng.gen_range(0..grid.len())];
        let (t, x) = sample_cone_point(&mut rng);
        match precision {
            Precision::F64 => combining_sample::<f64>(&coef, &exps, a, t, x),
            Precision::Extended => combining_sample::<DD>(&coef, &exps, a, t, x),
        }
    });
    finish("combining", samples, seed, tol, false, res)
}

pub const WEIGHT_TOL: f64 = 1e-12;

/// Violation of the sign pattern, ratio bounds and concavity, all as absolute excess (0 when satisfied).
pub fn weight_violation(a: f64, u: f64, ubar: f64) -> f64 {
    let q = q_weight(a, u, ubar).unwrap_or(f64::NAN);
    let mut v: f64 = if a == 0.5 || a == 1.0 {
        q.abs()
    } else if a > 0.5 {
        (-q).max(0.0)
    } else {
        q.max(0.0)
    };
    let fpp = f_second(a, u, ubar);
    v = v.max(if a >= 0.5 { fpp.max(0.0) } else { (-fpp).max(0.0) });
    if a >= 0.5 {
        let w = (ubar - u) / (ubar + u);
        let (g, lo, hi) = g_bounds(a, w).unwrap_or((f64::NAN, 0.0, 0.0));
        v = v.max((lo - g).max(g - hi).max(0.0) / w);
        let ratio = weight_ratio(a, u, ubar);
        let upper = 2.0 * (2f64.powf(2.0 * a - 1.0) + 1.0);
        v = v.max((2.0 - ratio).max(ratio - upper).max(0.0));
    }
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn weight_sample_dd(a: f64, u: f64, ubar: f64) -> f64 {
    let q = q_direct(a, DD::from_f64(u), DD::from_f64(ubar)).to_f64();
    if a == 0.5 || a == 1.0 {
        q.abs()
    } else if a > 0.5 {
        (-q).max(0.0)
    } else {
        q.max(0.0)
    }
}

/// Sign pattern of q across the exponent grid, the linear bounds on g and the ratio constants.
pub fn check_weight_lemma(samples: usize, seed: u64, precision: Precision) -> IdentityReport {
    let tol = match precision {
        Precision::F64 => WEIGHT_TOL,
        Precision::Extended => 1e-25,
    };
    let grid = precision.a_grid();
    let res = run(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let (t, x) = sample_cone_point(&mut rng);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let (u, ubar) = (t - r, t + r);
        if r < AXIS_TUBE {
            return None;
        }
        let mut worst: f64 = 0.0;
        for &a in &grid {
            let v = match precision {
                Precision::F64 => weight_violation(a, u, ubar),
                Precision::Extended => weight_sample_dd(a, u, ubar),
            };
            worst = worst.max(v);
        }
        Some((worst, worst))
    });
    finish("weight_lemma", samples, seed, tol, true, res)
}

/// All five checks in a fixed order.
pub fn run_suite(samples: usize, seed: u64, tol: f64, precision: Precision) -> Vec<IdentityReport> {
    vec![
        check_deformation_identity(samples, seed, tol, precision),
        check_flux_identity(samples, seed, tol, precision),
        check_potentials(samples, seed, tol, precision),
        check_combining_identities(samples, seed, tol, precision),
        check_weight_lemma(samples, seed, precision),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::radial_point;

    #[test]
    fn sampler_stays_in_domain() {
        let mut rng = sample_rng(7, 0);
        for _ in 0..2000 {
            let (t, x) = sample_cone_point(&mut rng);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let s = ((t - r) * (t + r)).sqrt();
            assert!(r < t - 1.0 + 1e-9 && s > 1.09 && s < 1000.1, "{t} {r}");
        }
    }

    #[test]
    fn combining_examples() {
        // phi = 1
        let p = radial_point(5.0, 3.0).unwrap();
        let one = Jet::<f64, 4>::constant(1.0);
        let res = conjugation_residuals(&one, &p, 0.5);
        assert!(res.iter().all(|(d, _)| *d < 1e-15));
        let s2 = 16.0;
        let l4 = 2.0 * 5.0 / s2;
        assert!((l4 - 2.0 * p.t / (p.ubar * p.u)).abs() < 1e-15);
        // phi = u: (1/r) d_t (r u) = 1
        let v = Jet::<f64, 4>::vars([p.t, p.x[0], p.x[1], p.x[2]]);
        let u = v[0] - (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
        let res = conjugation_residuals(&u, &p, 0.5);
        assert!(res.iter().all(|(d, _)| *d < 1e-14));
        assert_eq!(u.d[0], 1.0);
    }

    #[test]
    fn empty_run_passes_vacuously() {
        let r = check_deformation_identity(0, 1, 1e-10, Precision::F64);
        assert!(r.passed() && r.max_abs_residual == 0.0 && r.samples == 0);
    }

    #[test]
    fn small_suite_passes_in_both_precisions() {
        for pr in [Precision::F64, Precision::Extended] {
            for rep in run_suite(200, 11, pr.default_tolerance(), pr) {
                assert!(rep.passed(), "{}", rep.to_json_line());
            }
        }
    }

    #[test]
    fn fd_potentials_within_step_tolerance() {
        let r = check_potentials_fd(200, 3, 1e-3, 1e-6);
        assert!(r.passed(), "{}", r.to_json_line());
    }

    #[test]
    fn report_json_has_exact_fields() {
        let r = check_weight_lemma(10, 5, Precision::F64);
        let v: serde_json::Value = serde_json::from_str(&r.to_json_line()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["identity_id", "max_abs_residual", "max_rel_residual", "samples", "seed", "tolerance", "verdict"]
        );
        assert_eq!(v["verdict"], "pass");
    }
}
