//! Time evolution on constant-t slices and reconstruction of hyperboloids from a sliding band.

pub mod band;
pub mod cart3d;
pub mod manufactured;
pub mod radial;
pub mod snapshot;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::simpson_weights;
use crate::taylor::{Taylor, Vars};
use band::{FieldBand, NodeIndex, Slice};
use manufactured::{smooth_bump, Manufactured, ManufacturedKind};
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Radial,
    Cartesian3d,
}

impl Mode {
    pub fn cfl_limit(self) -> f64 {
        match self {
            Mode::Radial => 0.9,
            Mode::Cartesian3d => 0.45,
        }
    }

    pub fn vars(self) -> Vars {
        match self {
            Mode::Radial => Vars::Radial,
            Mode::Cartesian3d => Vars::Cartesian,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub mode: Mode,
    /// `r_max` (radial) or box half-width (3d).
    pub extent: f64,
    pub n_cells: usize,
    pub cfl: f64,
    pub t0: f64,
    /// Last time stepped to; `None` stops once every requested hyperboloid is complete.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_band_depth")]
    pub band_depth: usize,
}

fn default_band_depth() -> usize {
    5
}

impl GridSpec {
    pub fn h(&self) -> f64 {
        match self.mode {
            Mode::Radial => self.extent / self.n_cells as f64,
            Mode::Cartesian3d => 2.0 * self.extent / self.n_cells as f64,
        }
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.h()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) || self.cfl > self.mode.cfl_limit() {
            return Err(Error::Cfl { cfl: self.cfl, limit: self.mode.cfl_limit() });
        }
        if self.n_cells < 8 || !(self.extent > 0.0) || !self.extent.is_finite() {
            return Err(Error::InvalidData("grid needs n_cells >= 8 and a positive extent".into()));
        }
        if self.mode == Mode::Cartesian3d && self.n_cells > 160 {
            return Err(Error::InvalidData("3d grids are capped at 160 cells per side".into()));
        }
        if self.band_depth < 4 {
            return Err(Error::InvalidData("band_depth must be at least 4".into()));
        }
        if !(self.t0 > 1.0) || !self.t0.is_finite() {
            return Err(Error::InvalidData("t0 must exceed 1".into()));
        }
        if let Some(te) = self.t_end {
            if !(te > self.t0) {
                return Err(Error::InvalidData("t_end must exceed t0".into()));
            }
        }
        Ok(())
    }
}

/// Constant couplings of the coupled system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default)]
    pub p00: f64,
    #[serde(default)]
    pub piso: f64,
    #[serde(default)]
    pub r_coupling: f64,
    #[serde(default)]
    pub h00: f64,
    #[serde(default)]
    pub hiso: f64,
    pub c_mass: f64,
    #[serde(default = "one")]
    pub eps_amp: f64,
    /// Full symmetric matrices, 3d mode only.
    #[serde(default)]
    pub p_full: Option<[[f64; 4]; 4]>,
    #[serde(default)]
    pub h_full: Option<[[f64; 4]; 4]>,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn p_matrix(&self) -> [[f64; 4]; 4] {
        self.p_full.unwrap_or_else(|| diag(self.p00, self.piso))
    }

    pub fn h_matrix(&self) -> [[f64; 4]; 4] {
        self.h_full.unwrap_or_else(|| diag(self.h00, self.hiso))
    }
}

fn diag(a: f64, b: f64) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    m[0][0] = a;
    for i in 1..4 {
        m[i][i] = b;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    None,
    Manufactured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Model {
    LinearWave { source: SourceKind },
    KleinGordon { c_mass: f64, source: SourceKind },
    Coupled { params: ModelParams },
}

impl Model {
    pub fn field_names(&self) -> Vec<&'static str> {
        match self {
            Model::LinearWave { .. } => vec!["phi"],
            Model::KleinGordon { .. } => vec!["v"],
            Model::Coupled { .. } => vec!["u", "v"],
        }
    }

    pub fn masses(&self) -> Vec<f64> {
        match self {
            Model::LinearWave { .. } => vec![0.0],
            Model::KleinGordon { c_mass, .. } => vec![*c_mass],
            Model::Coupled { params } => vec![0.0, params.c_mass],
        }
    }

    pub fn params(&self) -> ModelParams {
        match self {
            Model::Coupled { params } => params.clone(),
            _ => ModelParams {
                p00: 0.0,
                piso: 0.0,
                r_coupling: 0.0,
                h00: 0.0,
                hiso: 0.0,
                c_mass: self.masses()[0],
                eps_amp: 1.0,
                p_full: None,
                h_full: None,
            },
        }
    }

    fn source_kind(&self) -> SourceKind {
        match self {
            Model::LinearWave { source } | Model::KleinGordon { source, .. } => *source,
            Model::Coupled { .. } => SourceKind::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    TimeSymmetric,
    Outgoing,
    Manufactured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub profile: Profile,
    #[serde(default)]
    pub r_inner: f64,
    pub r_outer: f64,
    pub amplitude: f64,
    /// Amplitude of the Klein-Gordon component of the coupled model; defaults to `amplitude`.
    #[serde(default)]
    pub kg_amplitude: Option<f64>,
    #[serde(default)]
    pub case: Option<ManufacturedKind>,
}

impl DataSpec {
    /// Profile `b(r)` and its derivative; even in r when `r_inner = 0`.
    fn bump(&self, r: f64) -> (f64, f64) {
        let (c, w) = if self.r_inner > 0.0 {
            (0.5 * (self.r_inner + self.r_outer), 0.5 * (self.r_outer - self.r_inner))
        } else {
            (0.0, self.r_outer)
        };
        let x = Jet::<f64, 1>::var((r - c) / w, 0);
        let b = smooth_bump(x);
        (b.v, b.d[0] / w)
    }

    /// `(phi, d_t phi)` for field `k` at `(t0, r)`.
    pub fn values(&self, model: &Model, k: usize, t0: f64, r: f64) -> (f64, f64) {
        let amp = if k == 1 { self.kg_amplitude.unwrap_or(self.amplitude) } else { self.amplitude };
        let amp = amp * model.params().eps_amp;
        match self.profile {
            Profile::TimeSymmetric => (amp * self.bump(r).0, 0.0),
            Profile::Outgoing => {
                if r == 0.0 {
                    return (0.0, 0.0);
                }
                let (b, db) = self.bump(r);
                (amp * b / r, -amp * db / r)
            }
            Profile::Manufactured => self.manufactured(model).data(t0, r),
        }
    }

    pub fn manufactured(&self, model: &Model) -> Manufactured {
        let kind = self.case.unwrap_or(ManufacturedKind::SphericalWaveBump);
        Manufactured::new(kind, self.amplitude, model.masses()[0])
    }

    pub fn support_radius(&self, model: &Model, t0: f64) -> f64 {
        match self.profile {
            Profile::Manufactured => self.manufactured(model).support_radius(t0),
            _ => self.r_outer,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub model: Model,
    pub grid: GridSpec,
    pub data: DataSpec,
}

impl Setup {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let d = &self.data;
        if d.profile != Profile::Manufactured {
            if !(d.r_outer > d.r_inner) || d.r_inner < 0.0 {
                return Err(Error::InvalidData("data needs 0 <= r_inner < r_outer".into()));
            }
            if d.profile == Profile::Outgoing && d.r_inner <= 0.0 {
                return Err(Error::InvalidData("outgoing data needs r_inner > 0".into()));
            }
        } else {
            let m = d.manufactured(&self.model);
            if self.grid.t0 < m.min_start() {
                return Err(Error::InvalidData(format!(
                    "manufactured case needs t0 >= {}",
                    m.min_start()
                )));
            }
            let ok = match (&self.model, m.kind) {
                (Model::KleinGordon { .. }, ManufacturedKind::KgModulatedBump) => true,
                (Model::LinearWave { .. }, ManufacturedKind::KgModulatedBump) => false,
                (Model::LinearWave { .. }, _) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidData("manufactured case does not match the model".into()));
            }
        }
        if self.model.source_kind() == SourceKind::Manufactured && d.profile != Profile::Manufactured {
            return Err(Error::InvalidData("a manufactured source needs manufactured data".into()));
        }
        if let Model::KleinGordon { c_mass, .. } = self.model {
            if !(c_mass > 0.0) {
                return Err(Error::InvalidData("Klein-Gordon mass must be positive".into()));
            }
        }
        if let Model::Coupled { params } = &self.model {
            if !(params.c_mass > 0.0) {
                return Err(Error::InvalidData("Klein-Gordon mass must be positive".into()));
            }
            if self.grid.mode == Mode::Radial && (params.p_full.is_some() || params.h_full.is_some()) {
                return Err(Error::InvalidData("full coupling matrices need cartesian3d mode".into()));
            }
        }
        let sup = d.support_radius(&self.model, self.grid.t0);
        if sup > self.grid.t0 - 1.05 + 1e-12 {
            return Err(Error::InvalidData(format!(
                "data support {sup} must stay within t0 - 1.05 = {}",
                self.grid.t0 - 1.05
            )));
        }
        Ok(())
    }

    /// Source of field `k` when it is prescribed rather than built from the fields.
    pub fn prescribed_source(&self) -> Option<Manufactured> {
        (self.model.source_kind() == SourceKind::Manufactured).then(|| self.data.manufactured(&self.model))
    }
}

/// Geometry of one quadrature node on a hyperboloid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodePos {
    pub t: f64,
    pub x: [f64; 3],
    pub r: f64,
    /// Weight for `int dx`, including `4 pi r^2` in radial mode.
    pub weight: f64,
    /// Multiplies the limit of `r^2 f` at the radial axis node, where `weight` vanishes.
    pub axis_weight: f64,
    /// Coordinates in the table's variables.
    pub point: [f64; 4],
    pub index: NodeIndex,
}

#[derive(Clone, Debug)]
pub struct FieldTrace {
    pub name: String,
    pub mass: f64,
    pub tables: Vec<Taylor>,
    pub sources: Vec<Taylor>,
}

/// Field data on the quadrature nodes of one hyperboloid.
#[derive(Clone, Debug)]
pub struct Hyperboloid {
    pub s: f64,
    pub vars: Vars,
    pub nodes: Vec<NodePos>,
    pub fields: Vec<FieldTrace>,
}

impl Hyperboloid {
    pub fn field(&self, name: &str) -> Option<&FieldTrace> {
        self.fields.iter().find(|f| f.name == name)
    }
}

/// Quadrature nodes of `H_s` within the grid and inside `r < t - 1`.
pub fn hyperboloid_nodes(grid: &GridSpec, s: f64) -> Result<Vec<NodePos>> {
    if !(s > 1.0) {
        return Err(Error::NonPositiveS(s));
    }
    let h = grid.h();
    let r_cone = 0.5 * (s * s - 1.0);
    match grid.mode {
        Mode::Radial => {
            let r_lim = r_cone.min(grid.extent - 3.0 * h);
            let mut m = (r_lim / h + 1e-9).floor() as usize;
            m -= m % 2;
            if m < 2 {
                return Err(Error::Degenerate("hyperboloid narrower than two cells"));
            }
            let w = simpson_weights(m, h);
            Ok((0..=m)
                .map(|j| {
                    let r = j as f64 * h;
                    NodePos {
                        t: (s * s + r * r).sqrt(),
                        x: [r, 0.0, 0.0],
                        r,
                        weight: w[j] * 4.0 * std::f64::consts::PI * r * r,
                        axis_weight: if j == 0 { w[0] * 4.0 * std::f64::consts::PI } else { 0.0 },
                        point: [(s * s + r * r).sqrt(), r, 0.0, 0.0],
                        index: NodeIndex::Radial(j),
                    }
                })
                .collect())
        }
        Mode::Cartesian3d => {
            let n = grid.n_cells;
            let l = grid.extent;
            let r_lim = r_cone.min(l - 3.0 * h);
            let mut out = Vec::new();
            for i in 0..=n {
                for j in 0..=n {
                    for k in 0..=n {
                        let x = [-l + i as f64 * h, -l + j as f64 * h, -l + k as f64 * h];
                        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                        if r <= r_lim {
                            let t = (s * s + r * r).sqrt();
                            out.push(NodePos {
                                t,
                                x,
                                r,
                                weight: h * h * h,
                                axis_weight: 0.0,
                                point: [t, x[0], x[1], x[2]],
                                index: NodeIndex::Cart(i, j, k),
                            });
                        }
                    }
                }
            }
            out.sort_by(|a, b| a.t.total_cmp(&b.t));
            Ok(out)
        }
    }
}

/// Source tables of each field at a node from the model and the field tables.
pub fn node_sources(setup: &Setup, vars: Vars, point: [f64; 4], tables: &[Taylor]) -> Vec<Taylor> {
    if let Some(m) = setup.prescribed_source() {
        return vec![m.source_table(vars, point)];
    }
    match &setup.model {
        Model::Coupled { params } => coupled_sources(params, vars, point, &tables[0], &tables[1]),
        _ => vec![Taylor::zeros(vars, 3)],
    }
}

type J2<const N: usize> = Jet<Jet<f64, N>, N>;

fn shift(a: [u8; 4], k: usize) -> [u8; 4] {
    let mut b = a;
    b[k] += 1;
    b
}

fn jet2<const N: usize>(t: &Taylor, a: [u8; 4]) -> J2<N> {
    let mut v = Jet::<f64, N>::constant(t.get(a));
    let mut d = [Jet::<f64, N>::constant(0.0); N];
    for k in 0..N {
        v.d[k] = t.get(shift(a, k));
        d[k].v = t.get(shift(a, k));
        for l in 0..N {
            d[k].d[l] = t.get(shift(shift(a, k), l));
        }
    }
    Jet { v, d }
}

fn jet1<const N: usize>(t: &Taylor, a: [u8; 4]) -> Jet<f64, N> {
    let mut j = Jet::<f64, N>::constant(t.get(a));
    for k in 0..N {
        j.d[k] = t.get(shift(a, k));
    }
    j
}

fn unit(k: usize) -> [u8; 4] {
    let mut a = [0; 4];
    a[k] = 1;
    a
}

/// `Box u = -(P dv dv + R v^2)` to second order and `Box v - c^2 v = -u H ddv` to first order.
fn coupled_sources(p: &ModelParams, vars: Vars, point: [f64; 4], tu: &Taylor, tv: &Taylor) -> Vec<Taylor> {
    let mut fu = Taylor::zeros(vars, 2);
    let mut fv = Taylor::zeros(vars, 1);
    match vars {
        Vars::Radial => {
            let v = jet2::<2>(tv, [0; 4]);
            let vt = jet2::<2>(tv, unit(0));
            let vr = jet2::<2>(tv, unit(1));
            let pc = |x: f64| Jet::constant(Jet::constant(x));
            let f = -(pc(p.p00) * vt * vt + pc(p.piso) * vr * vr + pc(p.r_coupling) * v * v);
            fill2(&mut fu, &f);
            let u = jet1::<2>(tu, [0; 4]);
            let vtt = jet1::<2>(tv, [2, 0, 0, 0]);
            let vrr = jet1::<2>(tv, [0, 2, 0, 0]);
            let vr1 = jet1::<2>(tv, unit(1));
            let r = Jet::<f64, 2>::var(point[1], 1);
            let c = Jet::constant;
            let lap = vrr + c(2.0) * vr1 / r;
            let g = -(u * (c(p.h00) * vtt + c(p.hiso) * lap));
            fill1(&mut fv, &g);
        }
        Vars::Cartesian => {
            let pm = p.p_matrix();
            let hm = p.h_matrix();
            let v = jet2::<4>(tv, [0; 4]);
            let dv: [J2<4>; 4] = std::array::from_fn(|k| jet2::<4>(tv, unit(k)));
            let pc = |x: f64| Jet::constant(Jet::constant(x));
            let mut f = pc(p.r_coupling) * v * v;
            for a in 0..4 {
                for b in 0..4 {
                    if pm[a][b] != 0.0 {
                        f += pc(pm[a][b]) * dv[a] * dv[b];
                    }
                }
            }
            fill2(&mut fu, &(-f));
            let u = jet1::<4>(tu, [0; 4]);
            let mut hv = Jet::<f64, 4>::constant(0.0);
            for a in 0..4 {
                for b in 0..4 {
                    if hm[a][b] != 0.0 {
                        hv += Jet::constant(hm[a][b]) * jet1::<4>(tv, shift(unit(a), b));
                    }
                }
            }
            fill1(&mut fv, &(-(u * hv)));
        }
    }
    vec![fu, fv]
}

fn fill2<const N: usize>(t: &mut Taylor, f: &J2<N>) {
    t.set([0; 4], f.v.v);
    for k in 0..N {
        t.set(unit(k), f.d[k].v);
        for l in k..N {
            t.set(shift(unit(k), l), f.d[k].d[l]);
        }
    }
}

fn fill1<const N: usize>(t: &mut Taylor, f: &Jet<f64, N>) {
    t.set([0; 4], f.v);
    for k in 0..N {
        t.set(unit(k), f.d[k]);
    }
}

/// Either stepper behind one interface.
pub enum Stepper {
    Radial(radial::RadialStepper),
    Cart(cart3d::CartStepper),
}

impl Stepper {
    pub fn new(setup: &Setup) -> Result<Self> {
        setup.validate()?;
        Ok(match setup.grid.mode {
            Mode::Radial => Stepper::Radial(radial::RadialStepper::new(setup)?),
            Mode::Cartesian3d => Stepper::Cart(cart3d::CartStepper::new(setup)?),
        })
    }

    pub fn initial_slice(&self) -> Slice {
        match self {
            Stepper::Radial(s) => s.initial_slice(),
            Stepper::Cart(s) => s.initial_slice(),
        }
    }

    /// Advances one step; returns the newest slice whose time derivative is now known.
    pub fn advance(&mut self) -> Result<Option<Slice>> {
        match self {
            Stepper::Radial(s) => s.advance(),
            Stepper::Cart(s) => s.advance(),
        }
    }

    /// Time of the newest computed level.
    pub fn time(&self) -> f64 {
        match self {
            Stepper::Radial(s) => s.time(),
            Stepper::Cart(s) => s.time(),
        }
    }
}

struct Pending {
    s: f64,
    nodes: Vec<NodePos>,
    tables: Vec<Vec<Taylor>>,
    done: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    pub dt: f64,
    pub h: f64,
    pub hyperboloids: usize,
}

/// Evolves and hands every requested hyperboloid to `sink` once all its nodes are reconstructed.
/// Returns the final band along with the summary.
pub fn evolve<F>(setup: &Setup, s_targets: &[f64], mut sink: F) -> Result<(RunSummary, FieldBand)>
where
    F: FnMut(Hyperboloid) -> Result<()>,
{
    let mut stepper = Stepper::new(setup)?;
    let grid = &setup.grid;
    let dt = grid.dt();
    let nfields = setup.model.field_names().len();
    let mut pending = Vec::new();
    let mut t_needed = grid.t0;
    let mut targets: Vec<f64> = s_targets.to_vec();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    for &s in &targets {
        if s < grid.t0 {
            return Err(Error::BandCoverage { t: s, t_lo: grid.t0, t_hi: f64::INFINITY });
        }
        let nodes = hyperboloid_nodes(grid, s)?;
        t_needed = t_needed.max(nodes.last().map_or(s, |n| n.t));
        pending.push(Pending { s, tables: vec![Vec::with_capacity(nodes.len()); nfields], nodes, done: 0 });
    }
    let t_stop = grid.t_end.unwrap_or(t_needed + 3.0 * dt);
    if t_needed > t_stop {
        return Err(Error::BandCoverage { t: t_needed, t_lo: grid.t0, t_hi: t_stop });
    }
    let mut band = FieldBand::new(setup, dt, grid.band_depth.max(5));
    band.push(stepper.initial_slice());
    let mut steps = 0;
    let mut emitted = 0;
    loop {
        if let Some(sl) = stepper.advance()? {
            band.push(sl);
        }
        steps += 1;
        let finished = stepper.time() > t_stop;
        emitted += collect(setup, &band, &mut pending, finished, &mut sink)?;
        if finished || (grid.t_end.is_none() && pending.is_empty()) {
            break;
        }
    }
    if let Some(p) = pending.first() {
        let t = p.nodes[p.done].t;
        return Err(Error::BandCoverage { t, t_lo: band.t_first(), t_hi: band.t_last() });
    }
    let summary = RunSummary { steps, t_final: band.t_last(), dt, h: grid.h(), hyperboloids: emitted };
    Ok((summary, band))
}

fn collect<F>(setup: &Setup, band: &FieldBand, pending: &mut Vec<Pending>, finished: bool, sink: &mut F) -> Result<usize>
where
    F: FnMut(Hyperboloid) -> Result<()>,
{
    if band.len() < 4 {
        return Ok(0);
    }
    let limit = if finished { band.t_last() } else { band.t_last() - band.dt() };
    let vars = setup.grid.mode.vars();
    for p in pending.iter_mut() {
        let start = p.done;
        let mut end = start;
        while end < p.nodes.len() && p.nodes[end].t <= limit {
            end += 1;
        }
        if end == start {
            continue;
        }
        let fresh: Vec<Vec<Taylor>> = p.nodes[start..end]
            .par_iter()
            .map(|n| (0..p.tables.len()).map(|f| band.node_table(f, n.index, n.t, vars)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        for node in fresh {
            for (f, tab) in node.into_iter().enumerate() {
                p.tables[f].push(tab);
            }
        }
        p.done = end;
    }
    let mut emitted = 0;
    let mut keep = Vec::new();
    for p in pending.drain(..) {
        if p.done < p.nodes.len() {
            keep.push(p);
            continue;
        }
        let sources: Vec<Vec<Taylor>> = p
            .nodes
            .par_iter()
            .enumerate()
            .map(|(j, n)| {
                let tabs: Vec<Taylor> = p.tables.iter().map(|t| t[j].clone()).collect();
                node_sources(setup, vars, n.point, &tabs)
            })
            .collect();
        let names = setup.model.field_names();
        let masses = setup.model.masses();
        let fields = p
            .tables
            .into_iter()
            .enumerate()
            .map(|(f, tables)| FieldTrace {
                name: names[f].to_string(),
                mass: masses[f],
                tables,
                sources: sources.iter().map(|s| s[f].clone()).collect(),
            })
            .collect();
        sink(Hyperboloid { s: p.s, vars, nodes: p.nodes, fields })?;
        emitted += 1;
    }
    *pending = keep;
    Ok(emitted)
}

/// The same hyperboloid filled from a manufactured solution instead of a run.
pub fn exact_hyperboloid(setup: &Setup, s: f64) -> Result<Hyperboloid> {
    let m = setup.data.manufactured(&setup.model);
    let vars = setup.grid.mode.vars();
    let nodes = hyperboloid_nodes(&setup.grid, s)?;
    let tables: Vec<Taylor> = nodes.par_iter().map(|n| m.field_table(vars, n.point)).collect();
    let sources: Vec<Taylor> = nodes.par_iter().map(|n| m.source_table(vars, n.point)).collect();
    Ok(Hyperboloid {
        s,
        vars,
        nodes,
        fields: vec![FieldTrace {
            name: setup.model.field_names()[0].to_string(),
            mass: setup.model.masses()[0],
            tables,
            sources,
        }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn radial_setup(n: usize, extent: f64, case: ManufacturedKind, t0: f64) -> Setup {
        let model = match case {
            ManufacturedKind::KgModulatedBump => Model::KleinGordon { c_mass: 1.0, source: SourceKind::Manufactured },
            ManufacturedKind::SphericalWaveBump => Model::LinearWave { source: SourceKind::None },
            ManufacturedKind::WaveWithPolynomialSource => Model::LinearWave { source: SourceKind::Manufactured },
        };
        Setup {
            model,
            grid: GridSpec { mode: Mode::Radial, extent, n_cells: n, cfl: 0.5, t0, t_end: None, band_depth: 5 },
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
    fn nodes_cover_cone_part() {
        let setup = radial_setup(256, 16.0, ManufacturedKind::SphericalWaveBump, 4.0);
        let nodes = hyperboloid_nodes(&setup.grid, 5.0).unwrap();
        let last = nodes.last().unwrap();
        assert!(last.r <= 12.0 && last.r > 11.8);
        let vol: f64 = nodes.iter().map(|n| n.weight).sum();
        let want = 4.0 / 3.0 * std::f64::consts::PI * last.r.powi(3);
        assert!((vol - want).abs() < 1e-9 * want);
        assert!(hyperboloid_nodes(&setup.grid, 1.0).is_err());
    }

    #[test]
    fn coupled_sources_match_direct_formula() {
        let p = ModelParams {
            p00: 0.3,
            piso: -0.2,
            r_coupling: 0.5,
            h00: 0.1,
            hiso: 0.4,
            c_mass: 1.0,
            eps_amp: 1.0,
            p_full: None,
            h_full: None,
        };
        let m = Manufactured::new(ManufacturedKind::KgModulatedBump, 1.0, 1.0);
        let w = Manufactured::new(ManufacturedKind::WaveWithPolynomialSource, 1.0, 0.0);
        let pt = [2.5, 0.7, 0.0, 0.0];
        let tv = m.field_table(Vars::Radial, pt);
        let tu = w.field_table(Vars::Radial, pt);
        let src = coupled_sources(&p, Vars::Radial, pt, &tu, &tv);
        let (v, vt, vr) = (tv.value(), tv.get([1, 0, 0, 0]), tv.get([0, 1, 0, 0]));
        let fu = -(0.3 * vt * vt - 0.2 * vr * vr + 0.5 * v * v);
        assert!((src[0].value() - fu).abs() < 1e-14);
        let lap = tv.get([0, 2, 0, 0]) + 2.0 * vr / 0.7;
        let fv = -tu.value() * (0.1 * tv.get([2, 0, 0, 0]) + 0.4 * lap);
        assert!((src[1].value() - fv).abs() < 1e-14);
        // d_t of F_u by the chain rule
        let vtt = tv.get([2, 0, 0, 0]);
        let vrt = tv.get([1, 1, 0, 0]);
        let dfu = -(0.6 * vt * vtt - 0.4 * vr * vrt + 1.0 * v * vt);
        assert!((src[0].get([1, 0, 0, 0]) - dfu).abs() < 1e-13);
        // Cartesian version agrees on the x axis
        let tvc = m.field_table(Vars::Cartesian, pt);
        let tuc = w.field_table(Vars::Cartesian, pt);
        let srcc = coupled_sources(&p, Vars::Cartesian, pt, &tuc, &tvc);
        assert!((srcc[0].value() - fu).abs() < 1e-13);
        assert!((srcc[1].value() - fv).abs() < 1e-13);
    }
}
