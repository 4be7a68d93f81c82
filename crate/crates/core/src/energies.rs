//! Weighted hyperboloidal norms by node quadrature, their s-series, and the energies CSV.

use crate::error::{Error, Result};
use crate::geometry::japanese;
use crate::quadrature::par_tree_sum_vec;
use crate::solver::{FieldTrace, Hyperboloid, NodePos};
use crate::taylor::Member;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

pub const CSV_COLUMNS: [&str; 11] = ["s", "EW", "EKG", "EWa", "E1a", "E2a", "NWa_cum", "a", "I", "J", "grid_id"];

/// Derivatives of one commuted field at one node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Local {
    pub phi: f64,
    pub dt: f64,
    pub dx: [f64; 3],
}

impl Local {
    pub fn from_eval(e: [f64; 5]) -> Self {
        Local { phi: e[0], dt: e[1], dx: [e[2], e[3], e[4]] }
    }

    /// `(d_r phi, |angular gradient|^2)`; the radial derivative is taken as zero at the axis.
    pub fn radial_split(&self, n: &NodePos) -> (f64, f64) {
        let g2 = self.dx.iter().map(|d| d * d).sum::<f64>();
        if n.r > 0.0 {
            let dr = (0..3).map(|i| n.x[i] * self.dx[i]).sum::<f64>() / n.r;
            (dr, (g2 - dr * dr).max(0.0))
        } else {
            (0.0, g2)
        }
    }

    /// `sum_i |d_i phi + (x^i/t) d_t phi|^2`
    pub fn hyperbolic_grad_sq(&self, n: &NodePos) -> f64 {
        (0..3).map(|i| (self.dx[i] + n.x[i] / n.t * self.dt).powi(2)).sum()
    }
}

/// Squared densities of every norm at one node, before quadrature.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Densities {
    pub ew: f64,
    pub mass: f64,
    pub ewa: f64,
    pub e1a: f64,
    /// Limit of `r^2` times the `E1a` density at the axis.
    pub e1a_axis: f64,
    pub e2a: f64,
    pub nwa: f64,
    pub su_tau: f64,
}

pub fn densities(n: &NodePos, s: f64, a: f64, f: &Local, source: f64) -> Densities {
    let t = n.t;
    let u = t - n.r;
    let ubar = t + n.r;
    let tp = japanese(ubar);
    let tm = japanese(u);
    let t0 = tm / tp;
    let st = s / t;
    let grad = f.hyperbolic_grad_sq(n);
    let sa = s.powf(a);
    let w1 = 1.0 + a * tp.powf(a) * t0.powf(a.max(0.5));
    let (dr, ang) = f.radial_split(n);
    let e1a = if n.r > 0.0 {
        let tpa = tp.powf(a);
        (w1 * st * f.dt).powi(2)
            + w1 * w1 * ang
            + (tpa * (f.dt + dr + f.phi / n.r)).powi(2)
            + (tpa * st).powi(2) * ang
    } else {
        0.0
    };
    let inner = 1.0 + s.powf(a - 1.0) * tm;
    let outer = s.powf(a - 1.0) * tp;
    let s2 = s * s;
    let e2a = inner * inner * ((st * (f.dt + 2.0 * t * f.phi / s2)).powi(2) + ang)
        + outer * outer * ((f.dt + dr + 2.0 * u * f.phi / s2).powi(2) + st * st * ang);
    Densities {
        ew: (st * f.dt).powi(2) + grad,
        mass: f.phi * f.phi,
        ewa: (w1 * st * f.dt).powi(2) + sa * sa * grad + (a * sa / t * f.phi).powi(2),
        e1a,
        e1a_axis: (tp.powf(a) * f.phi).powi(2),
        e2a,
        nwa: (tp.powf(a) * st * source).powi(2),
        su_tau: (sa / tp * f.phi).powi(2),
    }
}

/// Norms of every commuted field of one trace on one hyperboloid.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorms {
    pub s: f64,
    pub field: String,
    pub labels: Vec<(String, String)>,
    pub a_list: Vec<f64>,
    pub ew: Vec<f64>,
    pub ekg: Vec<f64>,
    /// Indexed `[member][a]`.
    pub ewa: Vec<Vec<f64>>,
    pub e1a: Vec<Vec<f64>>,
    pub e2a: Vec<Vec<f64>>,
    pub nwa: Vec<Vec<f64>>,
    pub su_tau: Vec<Vec<f64>>,
}

pub fn layer_norms(hyp: &Hyperboloid, trace: &FieldTrace, members: &[Member], a_list: &[f64]) -> LayerNorms {
    let na = a_list.len();
    let stride = 2 + 5 * na;
    let dim = members.len() * stride;
    let c2 = trace.mass * trace.mass;
    let sums = par_tree_sum_vec(hyp.nodes.len(), dim, |j, acc| {
        let n = &hyp.nodes[j];
        let tab = &trace.tables[j];
        let src = &trace.sources[j];
        for (m, mem) in members.iter().enumerate() {
            let f = Local::from_eval(mem.eval(n.point, tab));
            let fsrc = if mem.order <= src.order { mem.op.apply(n.point, src) } else { f64::NAN };
            let base = m * stride;
            for (k, &a) in a_list.iter().enumerate() {
                let d = densities(n, hyp.s, a, &f, fsrc);
                if k == 0 {
                    acc[base] += n.weight * d.ew;
                    acc[base + 1] += n.weight * d.mass;
                }
                let o = base + 2 + 5 * k;
                acc[o] += n.weight * d.ewa;
                acc[o + 1] += n.weight * d.e1a + n.axis_weight * d.e1a_axis;
                acc[o + 2] += n.weight * d.e2a;
                acc[o + 3] += n.weight * d.nwa;
                acc[o + 4] += n.weight * d.su_tau;
            }
        }
    });
    let get = |m: usize, k: usize, q: usize| sums[m * stride + 2 + 5 * k + q].max(0.0).sqrt();
    let per_a = |q: usize| -> Vec<Vec<f64>> { (0..members.len()).map(|m| (0..na).map(|k| get(m, k, q)).collect()).collect() };
    LayerNorms {
        s: hyp.s,
        field: trace.name.clone(),
        labels: members.iter().map(|m| (m.i_label.clone(), m.j_label.clone())).collect(),
        a_list: a_list.to_vec(),
        ew: (0..members.len()).map(|m| sums[m * stride].max(0.0).sqrt()).collect(),
        ekg: (0..members.len())
            .map(|m| (sums[m * stride] + c2 * sums[m * stride + 1]).max(0.0).sqrt())
            .collect(),
        ewa: per_a(0),
        e1a: per_a(1),
        e2a: per_a(2),
        nwa: per_a(3),
        su_tau: per_a(4),
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub s: f64,
    #[serde(rename = "EW")]
    pub ew: f64,
    #[serde(rename = "EKG")]
    pub ekg: f64,
    #[serde(rename = "EWa")]
    pub ewa: f64,
    #[serde(rename = "E1a")]
    pub e1a: f64,
    #[serde(rename = "E2a")]
    pub e2a: f64,
    #[serde(rename = "NWa_cum")]
    pub nwa_cum: f64,
    pub a: f64,
    #[serde(rename = "I")]
    pub i_label: String,
    #[serde(rename = "J")]
    pub j_label: String,
    pub grid_id: String,
}

impl EnergyRecord {
    pub fn field(&self) -> &str {
        self.grid_id.rsplit_once('/').map_or("", |(_, f)| f)
    }

    pub fn is_base(&self) -> bool {
        self.i_label.chars().all(|c| c == '0') && self.j_label.chars().all(|c| c == '0')
    }

    /// Commutator count `|I| + |J|`.
    pub fn order(&self) -> usize {
        let count = |l: &str| -> usize {
            if l.len() == 1 {
                l.parse().unwrap_or(0)
            } else {
                l.chars().filter_map(|c| c.to_digit(10)).sum::<u32>() as usize
            }
        };
        count(&self.i_label) + count(&self.j_label)
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "s" => self.s,
            "EW" => self.ew,
            "EKG" => self.ekg,
            "EWa" => self.ewa,
            "E1a" => self.e1a,
            "E2a" => self.e2a,
            "NWa_cum" => self.nwa_cum,
            "a" => self.a,
            _ => return None,
        })
    }
}

/// Turns a sequence of layers (any order) into rows sorted by field, s, member and a,
/// accumulating the source norm with the trapezoid rule in s.
pub fn records_from_layers(layers: &[LayerNorms], grid_id: &str) -> Vec<EnergyRecord> {
    let mut sorted: Vec<&LayerNorms> = layers.iter().collect();
    sorted.sort_by(|x, y| x.field.cmp(&y.field).then(x.s.total_cmp(&y.s)));
    let mut out = Vec::new();
    let mut cum: Vec<Vec<f64>> = Vec::new();
    let mut prev: Option<&LayerNorms> = None;
    for l in sorted {
        let same = prev.is_some_and(|p| p.field == l.field);
        if !same {
            cum = l.nwa.iter().map(|v| vec![0.0; v.len()]).collect();
        } else if let Some(p) = prev {
            let ds = l.s - p.s;
            for (m, row) in cum.iter_mut().enumerate() {
                for (k, c) in row.iter_mut().enumerate() {
                    *c += 0.5 * ds * (p.nwa[m][k] + l.nwa[m][k]);
                }
            }
        }
        for (m, (il, jl)) in l.labels.iter().enumerate() {
            for (k, &a) in l.a_list.iter().enumerate() {
                out.push(EnergyRecord {
                    s: l.s,
                    ew: l.ew[m],
                    ekg: l.ekg[m],
                    ewa: l.ewa[m][k],
                    e1a: l.e1a[m][k],
                    e2a: l.e2a[m][k],
                    nwa_cum: cum[m][k],
                    a,
                    i_label: il.clone(),
                    j_label: jl.clone(),
                    grid_id: format!("{grid_id}/{}", l.field),
                });
            }
        }
        prev = Some(l);
    }
    out
}

/// Provenance line written above the header row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvMeta {
    pub artifact: String,
    pub config_sha256: String,
}

pub(crate) fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_csv<W: Write>(mut w: W, meta: &CsvMeta, rows: &[EnergyRecord]) -> Result<()> {
    writeln!(w, "# artifact={} config_sha256={}", meta.artifact, meta.config_sha256)?;
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(CSV_COLUMNS).map_err(|e| Error::Csv(e.to_string()))?;
    for r in rows {
        let nums = [r.s, r.ew, r.ekg, r.ewa, r.e1a, r.e2a, r.nwa_cum, r.a].map(fmt17);
        let mut rec: Vec<String> = nums.to_vec();
        rec.push(r.i_label.clone());
        rec.push(r.j_label.clone());
        rec.push(r.grid_id.clone());
        cw.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    cw.flush()?;
    Ok(())
}

/// Reads the CSV written by [`write_csv`]; the provenance line is optional.
/// Splits off the optional `# artifact=… config_sha256=…` line.
pub fn read_meta(text: &str) -> (Option<CsvMeta>, &str) {
    let Some(rest) = text.strip_prefix('#') else {
        return (None, text);
    };
    let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
    let mut artifact = None;
    let mut hash = None;
    for kv in line.split_whitespace() {
        match kv.split_once('=') {
            Some(("artifact", v)) => artifact = Some(v.to_string()),
            Some(("config_sha256", v)) => hash = Some(v.to_string()),
            _ => {}
        }
    }
    let meta = match (artifact, hash) {
        (Some(artifact), Some(config_sha256)) => Some(CsvMeta { artifact, config_sha256 }),
        _ => None,
    };
    (meta, tail)
}

pub fn read_csv<R: BufRead>(mut r: R) -> Result<(Option<CsvMeta>, Vec<EnergyRecord>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (meta, body) = read_meta(&text);
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = rd.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let row: EnergyRecord = rec.map_err(|e| Error::Csv(e.to_string()))?;
        rows.push(row);
    }
    Ok((meta, rows))
}

/// `int f dx` over the hyperboloid nodes.
pub fn integrate<F>(hyp: &Hyperboloid, f: F) -> f64
where
    F: Fn(&NodePos, usize) -> f64 + Sync,
{
    par_tree_sum_vec(hyp.nodes.len(), 1, |j, acc| acc[0] += hyp.nodes[j].weight * f(&hyp.nodes[j], j))[0]
}

fn base_local(hyp: &Hyperboloid, trace: &FieldTrace, j: usize) -> Local {
    let t = &trace.tables[j];
    let g = t.gradient();
    let _ = hyp;
    Local { phi: t.value(), dt: g[0], dx: [g[1], g[2], g[3]] }
}

/// `||phi/r|| / sum_i ||d_i phi + (x^i/t) d_t phi||`; nodes on the axis are left out of the numerator.
pub fn check_hardy(hyp: &Hyperboloid, trace: &FieldTrace) -> Result<f64> {
    let interior = integrate(hyp, |n, j| if n.r > 0.0 { (trace.tables[j].value() / n.r).powi(2) } else { 0.0 });
    let axis: f64 = hyp.nodes.iter().zip(&trace.tables).map(|(n, t)| n.axis_weight * t.value().powi(2)).sum();
    let num = (interior + axis).sqrt();
    let den = match hyp.vars {
        crate::taylor::Vars::Radial => {
            3f64.sqrt()
                * integrate(hyp, |n, j| {
                    let l = base_local(hyp, trace, j);
                    (l.dx[0] + n.r / n.t * l.dt).powi(2)
                })
                .sqrt()
        }
        crate::taylor::Vars::Cartesian => (0..3)
            .map(|i| {
                integrate(hyp, |n, j| {
                    let l = base_local(hyp, trace, j);
                    (l.dx[i] + n.x[i] / n.t * l.dt).powi(2)
                })
                .sqrt()
            })
            .sum(),
    };
    if !(den > 0.0) {
        return Err(Error::Degenerate("hyperbolic gradient vanishes"));
    }
    Ok(num / den)
}

/// `sup s^a tau_+^{1/2} |phi|` over `sum_{|J|<=2} ||(s^a/t) L^J phi||`, boosts only.
pub fn check_sobolev(hyp: &Hyperboloid, trace: &FieldTrace, members: &[Member], a: f64) -> Result<f64> {
    let boosts: Vec<&Member> = members.iter().filter(|m| m.i_label.chars().all(|c| c == '0') && m.order <= 2).collect();
    if !boosts.iter().any(|m| m.order == 2) {
        return Err(Error::InvalidData("Sobolev check needs second-order boosts".into()));
    }
    let sa = hyp.s.powf(a);
    let lhs = hyp
        .nodes
        .iter()
        .zip(&trace.tables)
        .map(|(n, t)| sa * japanese(n.t + n.r).sqrt() * t.value().abs())
        .fold(0.0, f64::max);
    let rhs: f64 = boosts
        .iter()
        .map(|m| integrate(hyp, |n, j| (sa / n.t * m.op.apply(n.point, &trace.tables[j])).powi(2)).sqrt())
        .sum();
    if !(rhs > 0.0) {
        return Err(Error::Degenerate("weighted boost norms vanish"));
    }
    Ok(lhs / rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{Real, DD};
    use crate::solver::manufactured::{Manufactured, ManufacturedKind};
    use crate::solver::{exact_hyperboloid, DataSpec, GridSpec, Mode, Model, Profile, Setup, SourceKind};
    use crate::taylor::{family, Taylor, Vars};

    fn setup(mode: Mode, n: usize, extent: f64, case: ManufacturedKind) -> Setup {
        let model = match case {
            ManufacturedKind::KgModulatedBump => Model::KleinGordon { c_mass: 1.0, source: SourceKind::Manufactured },
            ManufacturedKind::SphericalWaveBump => Model::LinearWave { source: SourceKind::None },
            ManufacturedKind::WaveWithPolynomialSource => Model::LinearWave { source: SourceKind::Manufactured },
        };
        Setup {
            model,
            grid: GridSpec { mode, extent, n_cells: n, cfl: 0.4, t0: 3.1, t_end: None, band_depth: 5 },
            data: DataSpec {
                profile: Profile::Manufactured,
                r_inner: 0.0,
                r_outer: 0.0,
                amplitude: 1.0,
                kg_amplitude: None,
                case: Some(case),
            },
        }
    }

    #[test]
    fn volume_weighted_integral_matches_fine_quadrature() {
        // int (s/t) dx over r <= 3 on s = 4: 4 pi int_0^3 s r^2 / sqrt(s^2 + r^2) dr
        let oracle = {
            let (x, w) = crate::quadrature::gauss64();
            let s = DD::from_f64(4.0);
            let mut acc = DD::zero();
            for (xi, wi) in x.iter().zip(w) {
                let r = DD::from_f64(3.0) * DD::from_f64(*xi);
                acc += DD::from_f64(*wi) * s * r * r / (s * s + r * r).sqrt();
            }
            (acc * DD::from_f64(3.0 * 4.0 * std::f64::consts::PI)).to_f64()
        };
        let mut errs = vec![];
        for m in [40usize, 80] {
            // grid chosen so the last node sits exactly at r = 3
            let mut st = setup(Mode::Radial, m + 3, 6.0, ManufacturedKind::SphericalWaveBump);
            st.grid.extent = 3.0 * (m + 3) as f64 / m as f64;
            let hyp = exact_hyperboloid(&st, 4.0).unwrap();
            assert!((hyp.nodes.last().unwrap().r - 3.0).abs() < 1e-12);
            let v = integrate(&hyp, |nd, _| 4.0 / nd.t);
            errs.push((v - oracle).abs() / oracle);
        }
        assert!(errs[1] < 1e-8, "{errs:?}");
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn zero_field_gives_zero_norms() {
        let st = setup(Mode::Radial, 64, 8.0, ManufacturedKind::SphericalWaveBump);
        let mut hyp = exact_hyperboloid(&st, 4.0).unwrap();
        for t in hyp.fields[0].tables.iter_mut() {
            *t = Taylor::zeros(Vars::Radial, 3);
        }
        let fam = family(Vars::Radial, 2);
        let l = layer_norms(&hyp, &hyp.fields[0], &fam, &[0.0, 0.5, 1.0]);
        assert!(l.ew.iter().chain(&l.ekg).all(|v| *v == 0.0));
        assert!(l.ewa.iter().chain(&l.e1a).chain(&l.e2a).flatten().all(|v| *v == 0.0));
        assert!(check_hardy(&hyp, &hyp.fields[0]).is_err());
    }

    #[test]
    fn weighted_energy_at_zero_is_plain_energy() {
        let st = setup(Mode::Radial, 400, 10.0, ManufacturedKind::SphericalWaveBump);
        let hyp = exact_hyperboloid(&st, 5.0).unwrap();
        let fam = family(Vars::Radial, 1);
        let l = layer_norms(&hyp, &hyp.fields[0], &fam, &[0.0, 0.5]);
        for m in 0..fam.len() {
            assert_eq!(l.ewa[m][0], l.ew[m]);
            assert!(l.ewa[m][1] >= l.ew[m]);
            assert_eq!(l.ekg[m], l.ew[m]);
        }
    }

    /// `E_W^{1/2}` of the spherical wave on `s = 5` from a fine Gauss rule in DD on the closed form.
    fn spherical_oracle() -> f64 {
        let m = Manufactured::new(ManufacturedKind::SphericalWaveBump, 1.0, 0.0);
        let s = 5.0f64;
        // support r in (t-3, t-2): r from (s^2-9)/6 to (s^2-4)/4
        let (r0, r1) = ((s * s - 9.0) / 6.0, (s * s - 4.0) / 4.0);
        let (x, w) = crate::quadrature::gauss64();
        let panels = 64;
        let mut acc = DD::zero();
        for p in 0..panels {
            let lo = r0 + (r1 - r0) * p as f64 / panels as f64;
            let len = (r1 - r0) / panels as f64;
            for (xi, wi) in x.iter().zip(w) {
                let r = lo + len * xi;
                let t = (s * s + r * r).sqrt();
                let tab = m.field_table(Vars::Radial, [t, r, 0.0, 0.0]);
                let l = Local { phi: tab.value(), dt: tab.get([1, 0, 0, 0]), dx: [tab.get([0, 1, 0, 0]), 0.0, 0.0] };
                let node = NodePos {
                    t,
                    x: [r, 0.0, 0.0],
                    r,
                    weight: 0.0,
                    axis_weight: 0.0,
                    point: [t, r, 0.0, 0.0],
                    index: crate::solver::band::NodeIndex::Radial(0),
                };
                let d = densities(&node, s, 0.5, &l, 0.0);
                acc += DD::from_f64(wi * len * 4.0 * std::f64::consts::PI * r * r * d.ewa);
            }
        }
        acc.to_f64().sqrt()
    }

    #[test]
    fn spherical_wave_weighted_energy_matches_oracle() {
        let want = spherical_oracle();
        let st = setup(Mode::Radial, 4000, 12.0, ManufacturedKind::SphericalWaveBump);
        let hyp = exact_hyperboloid(&st, 5.0).unwrap();
        let fam = family(Vars::Radial, 0);
        let l = layer_norms(&hyp, &hyp.fields[0], &fam, &[0.5]);
        let rel = (l.ewa[0][0] - want).abs() / want;
        assert!(rel < 1e-6, "{} vs {want}: {rel:e}", l.ewa[0][0]);
    }

    #[test]
    fn hardy_ratio_is_stable_under_refinement() {
        let st = setup(Mode::Radial, 200, 10.0, ManufacturedKind::WaveWithPolynomialSource);
        let mut st2 = st.clone();
        st2.grid.n_cells = 400;
        let h1 = check_hardy(&exact_hyperboloid(&st, 4.0).unwrap(), &exact_hyperboloid(&st, 4.0).unwrap().fields[0]).unwrap();
        let hyp2 = exact_hyperboloid(&st2, 4.0).unwrap();
        let h2 = check_hardy(&hyp2, &hyp2.fields[0]).unwrap();
        assert!(h1.is_finite() && h1 > 0.0);
        assert!((h1 - h2).abs() < 1e-3 * h2, "{h1} {h2}");
        // Hardy's inequality in 3d has constant 2 for ||phi/r|| <= 2 ||d_r phi||
        assert!(h2 < 2.0 / 3f64.sqrt() * 1.5);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let rows = vec![
            EnergyRecord {
                s: 2.0,
                ew: 0.1 + 0.2,
                ekg: 1.0 / 3.0,
                ewa: 1e-300,
                e1a: 5e-324,
                e2a: 123456789.123456789,
                nwa_cum: f64::NAN,
                a: 0.75,
                i_label: "0".into(),
                j_label: "1".into(),
                grid_id: "radial-n64-h0.125/phi".into(),
            },
            EnergyRecord {
                s: 2.5,
                ew: 0.0,
                ekg: 0.0,
                ewa: 0.0,
                e1a: 0.0,
                e2a: 0.0,
                nwa_cum: 0.0,
                a: 0.5,
                i_label: "1000".into(),
                j_label: "010".into(),
                grid_id: "cartesian3d-n32-h0.25/u".into(),
            },
        ];
        let meta = CsvMeta { artifact: "wkgs-0.1.0".into(), config_sha256: "ab".repeat(32) };
        let mut buf = Vec::new();
        write_csv(&mut buf, &meta, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap() == CSV_COLUMNS.join(","));
        let (m2, back) = read_csv(&buf[..]).unwrap();
        assert_eq!(m2, Some(meta));
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].ew.to_bits(), rows[0].ew.to_bits());
        assert_eq!(back[0].e1a.to_bits(), rows[0].e1a.to_bits());
        assert!(back[0].nwa_cum.is_nan());
        assert_eq!(back[1], rows[1]);
        assert_eq!(back[1].order(), 2);
        assert_eq!(back[0].field(), "phi");
        assert!(read_csv("s,EW\n1,2\n".as_bytes()).is_err());
    }
}
