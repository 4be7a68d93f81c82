//! Integral checks of the multiplier identities, energy estimates on s-series, decay fits.

use crate::energies::EnergyRecord;
use crate::error::{Error, Result};
use crate::geometry::{frame_transform, hyperboloidal_time, japanese};
use crate::multipliers::{
    cartesian_field, closed_form_a, components, deformation_a, flux_contraction, lambda_gradient, multiplier_field,
    MultiplierKind, OmegaKind,
};
use crate::quadrature::{par_tree_sum_vec, power_weights};
use crate::solver::{evolve, exact_hyperboloid, hyperboloid_nodes, FieldTrace, Hyperboloid, Setup};
use serde::{Deserialize, Serialize};

const ETA: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

/// Integrals of one hyperboloid entering the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LayerBalance {
    pub s: f64,
    /// `int Omega^{-2} Lambda Q(X, N') dx`
    pub flux: f64,
    pub bulk_a: f64,
    pub bulk_c: f64,
    pub source: f64,
    pub min_a_density: f64,
    pub min_c_density: f64,
    pub axis_excluded: usize,
}

fn q_pair(x: [f64; 4], y: [f64; 4], d: [f64; 4]) -> f64 {
    let mut xd = 0.0;
    let mut yd = 0.0;
    let mut xy = 0.0;
    let mut dd = 0.0;
    for i in 0..4 {
        xd += x[i] * d[i];
        yd += y[i] * d[i];
        xy += ETA[i] * x[i] * y[i];
        dd += ETA[i] * d[i] * d[i];
    }
    xd * yd - 0.5 * xy * dd
}

fn cartesian_partials(trace: &FieldTrace, j: usize, x: [f64; 3], r: f64) -> [f64; 4] {
    let g = trace.tables[j].gradient();
    match trace.tables[j].vars {
        crate::taylor::Vars::Cartesian => g,
        crate::taylor::Vars::Radial => {
            if r > 0.0 {
                [g[0], g[1] * x[0] / r, g[1] * x[1] / r, g[1] * x[2] / r]
            } else {
                [g[0], 0.0, 0.0, 0.0]
            }
        }
    }
}

/// Integrands at one node. `reg` holds `[flux, bulk_a, bulk_c, source]` (bulk ones include `s/t`) to be
/// multiplied by `weight`; `sing` holds the smooth factors of the `r^{2a}`, `r^{2a-1}`, `r^{2a}` parts of
/// flux, bulk_a and source, including `4 pi r^2 / Omega^2`, for product integration.
#[derive(Clone, Copy, Debug, Default)]
struct Terms {
    reg: [f64; 4],
    weight: f64,
    sing: [f64; 3],
    excluded: bool,
}

/// Whether the `r^{2a-1}` behaviour of the Ya field needs product weights.
fn split_singular(hyp: &Hyperboloid, kind: MultiplierKind, a: f64) -> bool {
    kind == MultiplierKind::Ya && a > 0.0 && a < 0.5 && hyp.vars == crate::taylor::Vars::Radial
}

fn node_terms(hyp: &Hyperboloid, trace: &FieldTrace, j: usize, kind: MultiplierKind, a: f64, split: bool) -> Result<Terms> {
    let n = &hyp.nodes[j];
    let omega = kind.omega();
    let phi = trace.tables[j].value();
    let st = hyp.s / n.t;
    let four_pi = 4.0 * std::f64::consts::PI;
    if n.r == 0.0 && omega == OmegaKind::R {
        if n.axis_weight == 0.0 {
            return Ok(Terms { excluded: n.weight > 0.0, ..Default::default() });
        }
        // limits of r^2 times the integrands, with d_u Phi = 0 and d_r Phi = phi
        let (xu, xr) = components(kind, a, n.t, 0.0);
        let p2 = phi * phi;
        let (reg, sing) = if split {
            let rr = crate::multipliers::ya_regular_a(a, n.t, 0.0).rr;
            ([0.5 * xu * p2, rr * p2 * st, 0.0, 0.0], [0.5 * four_pi * p2, four_pi * a * p2 * st, 0.0])
        } else {
            let rr = closed_form_a(kind, a, n.t, 0.0).rr;
            let bulk_a = if rr.is_finite() { rr * p2 * st } else { 0.0 };
            ([0.5 * (xu + xr) * p2, bulk_a, 0.0, 0.0], [0.0; 3])
        };
        return Ok(Terms { reg, weight: n.axis_weight, sing, excluded: false });
    }
    let p = hyperboloidal_time(n.t, n.x)?;
    let d = cartesian_partials(trace, j, n.x, n.r);
    let (om, dom) = match omega {
        OmegaKind::Unit => (1.0, [0.0; 4]),
        OmegaKind::R => (n.r, [0.0, n.x[0] / n.r, n.x[1] / n.r, n.x[2] / n.r]),
        OmegaKind::S2 => (hyp.s * hyp.s, [2.0 * n.t, -2.0 * n.x[0], -2.0 * n.x[1], -2.0 * n.x[2]]),
    };
    let big: [f64; 4] = std::array::from_fn(|k| om * d[k] + phi * dom[k]);
    let lambda = kind.lambda().value(a, hyp.s * hyp.s);
    let inv2 = 1.0 / (om * om);
    let f = trace.sources[j].value() + trace.mass * trace.mass * phi;
    let (x, x_sing) = if split {
        let (xu, _) = components(kind, a, n.t - n.r, n.r);
        let w = [n.x[0] / n.r, n.x[1] / n.r, n.x[2] / n.r];
        ([xu, 0.0, 0.0, 0.0], Some([1.0, w[0], w[1], w[2]]))
    } else {
        (cartesian_field(kind, a, &p), None)
    };
    let flux = flux_contraction(x, lambda, big, &p) * inv2;
    let c = lambda_gradient(kind, a, &p);
    let bulk_c = q_pair(c, x, big) * inv2 * st;
    let dot = |v: [f64; 4]| -> f64 { (0..4).map(|k| v[k] * big[k]).sum() };
    let source = lambda * f / om * dot(x) * st;
    let mut sing = [0.0; 3];
    if let Some(xs) = x_sing {
        let g = four_pi * n.r * n.r;
        sing[0] = g * flux_contraction(xs, lambda, big, &p) * inv2;
        sing[2] = g * lambda * f / om * dot(xs) * st;
    }
    if n.r == 0.0 {
        // A needs the Bondi frame; it vanishes for the Killing field and the node has measure zero otherwise
        return Ok(Terms { reg: [flux, 0.0, bulk_c, source], weight: n.weight, sing, excluded: false });
    }
    let spec = multiplier_field(kind, a, &p)?;
    let coeff = if split {
        let b = crate::multipliers::ya_regular_a(a, p.u, p.r);
        crate::multipliers::CoefficientSet { auu: b.uu, aur: b.ur, arr: b.rr, kappa: b.kappa, ..deformation_a(&spec, &p)? }
    } else {
        deformation_a(&spec, &p)?
    };
    let fr = frame_transform(big, &p);
    let rad = fr.radial.ok_or(Error::CenterAxis)?;
    let (du, dr, ang) = (rad.del_b_u, rad.del_b_r, rad.slashed_sq);
    let aform = coeff.auu * du * du + 2.0 * coeff.aur * du * dr + coeff.arr * dr * dr + coeff.kappa * ang;
    if split {
        sing[1] = four_pi * n.r * n.r * lambda * inv2 * st * (a * dr * dr + (1.0 - a) * ang);
    }
    Ok(Terms { reg: [flux, lambda * inv2 * aform * st, bulk_c, source], weight: n.weight, sing, excluded: false })
}

pub fn layer_balance(hyp: &Hyperboloid, trace: &FieldTrace, kind: MultiplierKind, a: f64) -> Result<LayerBalance> {
    kind.check_a(a)?;
    let split = split_singular(hyp, kind, a);
    let nn = hyp.nodes.len();
    let terms: Vec<Terms> = (0..nn)
        .map(|j| node_terms(hyp, trace, j, kind, a, split))
        .collect::<Result<Vec<_>>>()?;
    let pw = if split {
        let m = nn - 1;
        let h = hyp.nodes[1].r;
        let (wf, wa) = (power_weights(m, h, 2.0 * a), power_weights(m, h, 2.0 * a - 1.0));
        Some((wf, wa))
    } else {
        None
    };
    let sums = par_tree_sum_vec(nn, 4, |j, acc| {
        let t = &terms[j];
        for k in 0..4 {
            acc[k] += t.weight * t.reg[k];
        }
        if let Some((wf, wa)) = &pw {
            acc[0] += wf[j] * t.sing[0];
            acc[1] += wa[j] * t.sing[1];
            acc[3] += wf[j] * t.sing[2];
        }
    });
    let mut out = LayerBalance {
        s: hyp.s,
        flux: sums[0],
        bulk_a: sums[1],
        bulk_c: sums[2],
        source: sums[3],
        min_a_density: f64::INFINITY,
        min_c_density: f64::INFINITY,
        axis_excluded: 0,
    };
    for (j, t) in terms.iter().enumerate() {
        if t.excluded {
            out.axis_excluded += 1;
        } else if hyp.nodes[j].r > 0.0 {
            let r2 = hyp.nodes[j].r.powi(2) * 4.0 * std::f64::consts::PI;
            let sa = if pw.is_some() { t.sing[1] / r2 * hyp.nodes[j].r.powf(2.0 * a - 1.0) } else { 0.0 };
            out.min_a_density = out.min_a_density.min(t.reg[1] + sa);
            out.min_c_density = out.min_c_density.min(t.reg[2]);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub multiplier: MultiplierKind,
    pub a: f64,
    pub s0: f64,
    pub s1: f64,
    pub flux_in: f64,
    pub flux_out: f64,
    pub bulk_a: f64,
    pub bulk_c: f64,
    pub source_term: f64,
    pub residual: f64,
    pub min_a_density: f64,
    pub min_c_density: f64,
    pub layers: usize,
    pub axis_excluded: usize,
    pub grid_id: String,
}

impl BalanceReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Trapezoid in s over layers sorted by s.
pub fn assemble_balance(layers: &[LayerBalance], kind: MultiplierKind, a: f64, grid_id: &str) -> Result<BalanceReport> {
    if layers.len() < 2 {
        return Err(Error::InvalidData("balance needs at least two layers".into()));
    }
    let mut ls = layers.to_vec();
    ls.sort_by(|x, y| x.s.total_cmp(&y.s));
    let trap = |f: fn(&LayerBalance) -> f64| -> f64 {
        ls.windows(2).map(|w| 0.5 * (w[1].s - w[0].s) * (f(&w[0]) + f(&w[1]))).sum()
    };
    let bulk_a = trap(|l| l.bulk_a);
    let bulk_c = trap(|l| l.bulk_c);
    let source = trap(|l| l.source);
    let (first, last) = (ls[0], ls[ls.len() - 1]);
    let gap = first.flux - last.flux - bulk_a - bulk_c - source;
    let scale = first.flux.abs().max(last.flux.abs()).max(bulk_a.abs() + bulk_c.abs() + source.abs());
    let residual = if scale > 0.0 { gap.abs() / scale } else { 0.0 };
    Ok(BalanceReport {
        multiplier: kind,
        a,
        s0: first.s,
        s1: last.s,
        flux_in: first.flux,
        flux_out: last.flux,
        bulk_a,
        bulk_c,
        source_term: source,
        residual,
        min_a_density: ls.iter().map(|l| l.min_a_density).fold(f64::INFINITY, f64::min),
        min_c_density: ls.iter().map(|l| l.min_c_density).fold(f64::INFINITY, f64::min),
        layers: ls.len(),
        axis_excluded: ls.iter().map(|l| l.axis_excluded).sum(),
        grid_id: grid_id.to_string(),
    })
}

/// Layer values in `[s0, s1]` with spacing at most `dt s0 / t_max`.
pub fn balance_layers(setup: &Setup, s0: f64, s1: f64) -> Result<Vec<f64>> {
    if !(s1 > s0) {
        return Err(Error::InvalidData("balance needs s1 > s0".into()));
    }
    let nodes = hyperboloid_nodes(&setup.grid, s1)?;
    let t_max = nodes.last().map_or(s1, |n| n.t);
    let ds = setup.grid.dt() * s0 / t_max;
    let k = ((s1 - s0) / ds).ceil().max(1.0) as usize;
    Ok((0..=k).map(|i| s0 + (s1 - s0) * i as f64 / k as f64).collect())
}

pub fn grid_id(setup: &Setup) -> String {
    let g = &setup.grid;
    let mode = match g.mode {
        crate::solver::Mode::Radial => "radial",
        crate::solver::Mode::Cartesian3d => "cartesian3d",
    };
    format!("{mode}-n{}-h{}", g.n_cells, g.h())
}

fn field_index(setup: &Setup, field: &str) -> Result<usize> {
    setup
        .model
        .field_names()
        .iter()
        .position(|f| *f == field)
        .ok_or_else(|| Error::InvalidData(format!("model has no field {field:?}")))
}

/// Evolves the setup and checks the identity between `s0` and `s1` for one field.
pub fn verify_balance(setup: &Setup, field: &str, kind: MultiplierKind, a: f64, s0: f64, s1: f64) -> Result<BalanceReport> {
    kind.check_a(a)?;
    let fi = field_index(setup, field)?;
    let layers = balance_layers(setup, s0, s1)?;
    let mut out = Vec::with_capacity(layers.len());
    evolve(setup, &layers, |hyp| {
        out.push(layer_balance(&hyp, &hyp.fields[fi], kind, a)?);
        Ok(())
    })?;
    assemble_balance(&out, kind, a, &format!("{}/{field}", grid_id(setup)))
}

/// Same check on the closed-form manufactured solution, isolating the quadrature error.
pub fn verify_balance_exact(setup: &Setup, kind: MultiplierKind, a: f64, s0: f64, s1: f64) -> Result<BalanceReport> {
    kind.check_a(a)?;
    let layers = balance_layers(setup, s0, s1)?;
    let out = layers
        .iter()
        .map(|&s| {
            let hyp = exact_hyperboloid(setup, s)?;
            layer_balance(&hyp, &hyp.fields[0], kind, a)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_balance(&out, kind, a, &format!("{}/exact", grid_id(setup)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    EnergyEst1,
    EstWeight1,
    EstWeight2,
    FracConfWave1,
    FracConfWave2,
}

impl Estimate {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "energy_est1" => Some(Self::EnergyEst1),
            "est_weight1" => Some(Self::EstWeight1),
            "est_weight2" => Some(Self::EstWeight2),
            "frac_conf_wave1" => Some(Self::FracConfWave1),
            "frac_conf_wave2" => Some(Self::FracConfWave2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: Estimate,
    pub field: String,
    pub a: f64,
    pub k: usize,
    pub s0: f64,
    pub s1: f64,
    /// `sup_s LHS(s) / RHS(s)` with unit constant.
    pub ratio: f64,
    pub lhs_sup: f64,
    pub rhs_at_sup: f64,
}

/// Checks one estimate on a series of energy rows; `a = 0` rows are needed for the plain energy estimate.
pub fn verify_estimate(rows: &[EnergyRecord], field: &str, estimate: Estimate, a: f64, k: usize) -> Result<EstimateReport> {
    let want_a = if estimate == Estimate::EnergyEst1 { 0.0 } else { a };
    let mut sel: Vec<&EnergyRecord> = rows
        .iter()
        .filter(|r| r.field() == field && (r.a - want_a).abs() < 1e-12 && r.order() <= k)
        .collect();
    if sel.is_empty() {
        return Err(Error::InvalidData(format!("no rows for field {field:?} at a={want_a}")));
    }
    sel.sort_by(|x, y| x.s.total_cmp(&y.s));
    let mut svals: Vec<f64> = sel.iter().map(|r| r.s).collect();
    svals.dedup();
    let sum_at = |s: f64, f: &dyn Fn(&EnergyRecord) -> f64| -> f64 { sel.iter().filter(|r| r.s == s).map(|r| f(r)).sum() };
    let s0 = svals[0];
    let lhs_of = |s: f64| -> f64 {
        match estimate {
            Estimate::EnergyEst1 => sum_at(s, &|r| r.ew),
            Estimate::EstWeight1 => sum_at(s, &|r| r.e1a),
            Estimate::EstWeight2 => sum_at(s, &|r| r.e2a),
            Estimate::FracConfWave1 => sum_at(s, &|r| r.e1a + r.e2a),
            Estimate::FracConfWave2 => sum_at(s, &|r| r.ewa),
        }
    };
    let init = match estimate {
        Estimate::FracConfWave2 => sum_at(s0, &|r| r.e1a + r.e2a + r.ew),
        _ => lhs_of(s0),
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &s in &svals {
        let lhs = lhs_of(s);
        let rhs = init + sum_at(s, &|r| r.nwa_cum);
        if !(rhs > 0.0) {
            if lhs == 0.0 {
                return Err(Error::Degenerate("estimate is 0/0"));
            }
            best = (f64::INFINITY, lhs, rhs);
            break;
        }
        if lhs / rhs > best.0 {
            best = (lhs / rhs, lhs, rhs);
        }
    }
    Ok(EstimateReport {
        estimate,
        field: field.to_string(),
        a,
        k,
        s0,
        s1: *svals.last().expect("non-empty"),
        ratio: best.0,
        lhs_sup: best.1,
        rhs_at_sup: best.2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub series: String,
    /// Exponent in `value ~ C s^p`.
    pub p: f64,
    pub log_c: f64,
    pub rms: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
}

impl DecayFit {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("fit serializes")
    }
}

/// Least squares line through `(ln s, ln value)`.
pub fn fit_decay(series: &str, pts: &[(f64, f64)]) -> Result<DecayFit> {
    if pts.len() < 8 {
        return Err(Error::InvalidData(format!("decay fit needs at least 8 points, got {}", pts.len())));
    }
    if let Some(bad) = pts.iter().find(|(s, v)| !(*v > 0.0) || !(*s > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidData(format!("non-positive point {bad:?} in decay fit")));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("decay fit needs distinct s values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    let log_c = my - p * mx;
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - log_c - p * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit {
        series: series.to_string(),
        p,
        log_c,
        rms,
        s_min: pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        s_max: pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        points: pts.len(),
    })
}

/// Column of an energies series restricted to one field, `a`, member and s-window.
pub fn series_from_rows(rows: &[EnergyRecord], column: &str, field: Option<&str>, a: Option<f64>, smin: f64, smax: f64) -> Result<Vec<(f64, f64)>> {
    if rows.first().is_some_and(|r| r.column(column).is_none()) {
        return Err(Error::InvalidData(format!("unknown column {column:?}")));
    }
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.is_base() && r.s >= smin && r.s <= smax)
        .filter(|r| field.map_or(true, |f| r.field() == f))
        .filter(|r| a.map_or(true, |a| (r.a - a).abs() < 1e-12))
        .map(|r| (r.s, r.column(column).expect("checked")))
        .collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.dedup_by(|x, y| x.0 == y.0);
    Ok(pts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointWeight {
    TauHalf,
    TauThreehalf,
    SATauHalf,
}

impl PointWeight {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tau_half" => Some(Self::TauHalf),
            "tau_threehalf" => Some(Self::TauThreehalf),
            "s_a_tau_half" => Some(Self::SATauHalf),
            _ => None,
        }
    }
}

/// Weighted sup of `|phi|` over the nodes of a hyperboloid.
pub fn pointwise_tracker(hyp: &Hyperboloid, trace: &FieldTrace, weight: PointWeight, a: f64) -> f64 {
    hyp.nodes
        .iter()
        .zip(&trace.tables)
        .map(|(n, t)| {
            let tp = japanese(n.t + n.r);
            let w = match weight {
                PointWeight::TauHalf => tp.sqrt(),
                PointWeight::TauThreehalf => tp.powf(1.5),
                PointWeight::SATauHalf => hyp.s.powf(a) * tp.sqrt(),
            };
            w * t.value().abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::manufactured::ManufacturedKind;
    use crate::solver::{DataSpec, GridSpec, Mode, Model, Profile, SourceKind};

    pub(crate) fn forced(n: usize) -> Setup {
        Setup {
            model: Model::LinearWave { source: SourceKind::Manufactured },
            grid: GridSpec { mode: Mode::Radial, extent: 8.0, n_cells: n, cfl: 0.5, t0: 2.6, t_end: None, band_depth: 5 },
            data: DataSpec {
                profile: Profile::Manufactured,
                r_inner: 0.0,
                r_outer: 0.0,
                amplitude: 1.0,
                kg_amplitude: None,
                case: Some(ManufacturedKind::WaveWithPolynomialSource),
            },
        }
    }

    #[test]
    fn exact_solution_balances_to_quadrature_error() {
        for (kind, a) in [(MultiplierKind::T, 0.0), (MultiplierKind::Ka, 0.75), (MultiplierKind::Ya, 0.25), (MultiplierKind::Kconf, 0.5)] {
            let r1 = verify_balance_exact(&forced(400), kind, a, 2.7, 3.2).unwrap();
            let r2 = verify_balance_exact(&forced(800), kind, a, 2.7, 3.2).unwrap();
            assert!(r2.residual < 1e-6, "{kind}: {r2:?}");
            assert!(r1.residual / r2.residual > 3.4, "{kind}: {} {}", r1.residual, r2.residual);
        }
    }

    #[test]
    fn zero_field_has_zero_entries() {
        let st = forced(100);
        let mut hyp = exact_hyperboloid(&st, 3.0).unwrap();
        let f = &mut hyp.fields[0];
        for t in f.tables.iter_mut().chain(f.sources.iter_mut()) {
            t.vals.iter_mut().for_each(|v| *v = 0.0);
        }
        let l = layer_balance(&hyp, &hyp.fields[0], MultiplierKind::Ka, 0.75).unwrap();
        assert_eq!((l.flux, l.bulk_a, l.bulk_c, l.source), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn power_laws_are_recovered() {
        let pts: Vec<(f64, f64)> = (0..20).map(|i| 2.0 + i as f64).map(|s| (s, 10.0 * s.powf(-1.5))).collect();
        let f = fit_decay("x", &pts).unwrap();
        assert!((f.p + 1.5).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, 3.0)).collect();
        assert!(fit_decay("c", &flat).unwrap().p.abs() < 1e-14);
        assert!(fit_decay("few", &pts[..5]).is_err());
        let mut bad = pts.clone();
        bad[3].1 = 0.0;
        assert!(fit_decay("bad", &bad).is_err());
    }
}
