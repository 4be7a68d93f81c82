//! End-to-end runs: evolve a config, reduce each hyperboloid as it completes, write the artifacts.

use crate::balance::{grid_id, pointwise_tracker, verify_balance, PointWeight};
use crate::config::{ConvQuantity, ConvergenceConfig, NormRequest, RunConfig, ARTIFACT_VERSION};
use crate::energies::{check_hardy, check_sobolev, fmt17, layer_norms, records_from_layers, read_meta, write_csv, CsvMeta, EnergyRecord, LayerNorms};
use crate::error::{Error, Result};
use crate::solver::band::FieldBand;
use crate::solver::snapshot::Snapshot;
use crate::solver::{evolve, exact_hyperboloid, Hyperboloid, RunSummary};
use crate::taylor::family;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const POINTWISE_COLUMNS: [&str; 5] = ["s", "weight", "a", "value", "grid_id"];
pub const CONVERGENCE_COLUMNS: [&str; 5] = ["level", "n_cells", "h", "value", "order"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub s: f64,
    pub weight: String,
    pub a: f64,
    pub value: f64,
    pub grid_id: String,
}

impl PointRecord {
    pub fn field(&self) -> &str {
        self.grid_id.rsplit_once('/').map_or("", |(_, f)| f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub s: f64,
    pub field: String,
    pub check: String,
    pub a: Option<f64>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub layers: Vec<LayerNorms>,
    pub energies: Vec<EnergyRecord>,
    pub pointwise: Vec<PointRecord>,
    pub diagnostics: Vec<Diagnostic>,
    pub band: FieldBand,
}

fn weight_name(w: PointWeight) -> &'static str {
    match w {
        PointWeight::TauHalf => "tau_half",
        PointWeight::TauThreehalf => "tau_threehalf",
        PointWeight::SATauHalf => "s_a_tau_half",
    }
}

fn center_value(hyp: &Hyperboloid, f: usize) -> Option<f64> {
    let j = hyp.nodes.iter().position(|n| n.r == 0.0)?;
    Some(hyp.fields[f].tables[j].value().abs())
}

/// Runs one config in memory.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let setup = cfg.setup();
    let gid = grid_id(&setup);
    let members = family(setup.grid.mode.vars(), cfg.k_max);
    let wants = |n: NormRequest| cfg.norms.contains(&n);
    let mut layers = Vec::new();
    let mut pointwise = Vec::new();
    let mut diagnostics = Vec::new();
    let (summary, band) = evolve(&setup, &cfg.slices.values(), |hyp| {
        for (f, trace) in hyp.fields.iter().enumerate() {
            let fid = format!("{gid}/{}", trace.name);
            if wants(NormRequest::Energies) {
                layers.push(layer_norms(&hyp, trace, &members, &cfg.a_list));
            }
            let mut point = |weight: &str, a: f64, value: f64| {
                pointwise.push(PointRecord { s: hyp.s, weight: weight.into(), a, value, grid_id: fid.clone() })
            };
            for (req, w) in [
                (NormRequest::TauHalf, PointWeight::TauHalf),
                (NormRequest::TauThreehalf, PointWeight::TauThreehalf),
            ] {
                if wants(req) {
                    point(weight_name(w), 0.0, pointwise_tracker(&hyp, trace, w, 0.0));
                }
            }
            if wants(NormRequest::SATauHalf) {
                for &a in &cfg.a_list {
                    point("s_a_tau_half", a, pointwise_tracker(&hyp, trace, PointWeight::SATauHalf, a));
                }
            }
            if wants(NormRequest::Center) {
                if let Some(v) = center_value(&hyp, f) {
                    point("center", 0.0, v);
                }
            }
            let mut diag = |check: &str, a: Option<f64>, r: Result<f64>| {
                let (ratio, error) = match r {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                diagnostics.push(Diagnostic { s: hyp.s, field: trace.name.clone(), check: check.into(), a, ratio, error });
            };
            if wants(NormRequest::Hardy) {
                diag("hardy", None, check_hardy(&hyp, trace));
            }
            if wants(NormRequest::Sobolev) {
                for &a in &cfg.a_list {
                    diag("sobolev", Some(a), check_sobolev(&hyp, trace, &members, a));
                }
            }
        }
        Ok(())
    })?;
    let energies = records_from_layers(&layers, &gid);
    pointwise.sort_by(|x: &PointRecord, y| {
        x.grid_id.cmp(&y.grid_id).then(x.weight.cmp(&y.weight)).then(x.a.total_cmp(&y.a)).then(x.s.total_cmp(&y.s))
    });
    diagnostics.sort_by(|x: &Diagnostic, y| x.field.cmp(&y.field).then(x.check.cmp(&y.check)).then(x.s.total_cmp(&y.s)));
    Ok(RunOutcome { summary, layers, energies, pointwise, diagnostics, band })
}

pub fn write_pointwise<W: Write>(mut w: W, meta: &CsvMeta, rows: &[PointRecord]) -> Result<()> {
    writeln!(w, "# artifact={} config_sha256={}", meta.artifact, meta.config_sha256)?;
    let mut cw = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    cw.write_record(POINTWISE_COLUMNS).map_err(csv_err)?;
    for r in rows {
        cw.write_record([fmt17(r.s), r.weight.clone(), fmt17(r.a), fmt17(r.value), r.grid_id.clone()])
            .map_err(csv_err)?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_pointwise<R: std::io::Read>(mut r: R) -> Result<(Option<CsvMeta>, Vec<PointRecord>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (meta, body) = read_meta(&text);
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = rd.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.iter().ne(POINTWISE_COLUMNS.iter().copied()) {
        return Err(Error::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        rows.push(rec.map_err(|e: csv::Error| Error::Csv(e.to_string()))?);
    }
    Ok((meta, rows))
}

/// Column selector `NAME[/field][@a]`.
///
/// For an energies file NAME is a column header; for a pointwise file it is a weight
/// name (`tau_half`, `tau_threehalf`, `s_a_tau_half`, `center`).
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSelector {
    pub name: String,
    pub field: Option<String>,
    pub a: Option<f64>,
}

impl SeriesSelector {
    pub fn parse(spec: &str) -> Result<Self> {
        let (rest, a) = match spec.split_once('@') {
            Some((r, a)) => {
                let a: f64 = a.parse().map_err(|_| Error::Config(format!("bad exponent in column spec {spec:?}")))?;
                (r, Some(a))
            }
            None => (spec, None),
        };
        let (name, field) = match rest.split_once('/') {
            Some((n, f)) => (n, Some(f.to_string())),
            None => (rest, None),
        };
        if name.is_empty() || field.as_deref() == Some("") {
            return Err(Error::Config(format!("empty name in column spec {spec:?}")));
        }
        Ok(SeriesSelector { name: name.to_string(), field, a })
    }
}

/// Extracts one `(s, value)` series from an energies or pointwise CSV.
///
/// Fails when the selector matches rows of more than one field or exponent.
pub fn series_from_csv(text: &str, sel: &SeriesSelector, smin: f64, smax: f64) -> Result<Vec<(f64, f64)>> {
    let (_, body) = read_meta(text);
    let pointwise = body.starts_with("s,weight,");
    let mut keyed: Vec<(String, f64, f64, f64)> = Vec::new();
    if pointwise {
        let (_, rows) = read_pointwise(text.as_bytes())?;
        for r in rows.iter().filter(|r| r.weight == sel.name) {
            keyed.push((r.field().to_string(), r.a, r.s, r.value));
        }
    } else {
        let (_, rows) = crate::energies::read_csv(text.as_bytes())?;
        if rows.first().is_some_and(|r| r.column(&sel.name).is_none()) {
            return Err(Error::InvalidData(format!("unknown column {:?}", sel.name)));
        }
        for r in rows.iter().filter(|r| r.is_base()) {
            keyed.push((r.field().to_string(), r.a, r.s, r.column(&sel.name).expect("checked")));
        }
    }
    keyed.retain(|(f, a, s, _)| {
        sel.field.as_ref().map_or(true, |x| x == f) && sel.a.map_or(true, |x| (x - a).abs() < 1e-12) && *s >= smin && *s <= smax
    });
    let mut groups: Vec<(String, f64)> = keyed.iter().map(|(f, a, _, _)| (f.clone(), *a)).collect();
    groups.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    groups.dedup();
    if groups.len() > 1 {
        let list: Vec<String> = groups.iter().map(|(f, a)| format!("{}/{f}@{a}", sel.name)).collect();
        return Err(Error::InvalidData(format!("column spec is ambiguous, choose one of {}", list.join(", "))));
    }
    let mut pts: Vec<(f64, f64)> = keyed.into_iter().map(|(_, _, s, v)| (s, v)).collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.dedup_by(|x, y| x.0 == y.0);
    Ok(pts)
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'a str,
    config_sha256: String,
    config: &'a RunConfig,
    summary: &'a RunSummary,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    artifact: &'a str,
    config_sha256: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// JSON line carrying the artifact version and config hash next to the payload.
pub fn stamped_json<T: Serialize>(body: &T, config_sha256: &str) -> String {
    serde_json::to_string(&Stamped { artifact: ARTIFACT_VERSION, config_sha256, body }).expect("record serializes")
}

/// Writes every requested artifact of a finished run into `dir`; returns the paths written.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let hash = cfg.sha256();
    let meta = CsvMeta { artifact: ARTIFACT_VERSION.into(), config_sha256: hash.clone() };
    let o = &cfg.outputs;
    let mut files = Vec::new();
    let create = |name: &str| -> Result<(PathBuf, std::io::BufWriter<std::fs::File>)> {
        let p = dir.join(name);
        Ok((p.clone(), std::io::BufWriter::new(std::fs::File::create(&p)?)))
    };
    if cfg.norms.contains(&NormRequest::Energies) {
        let (p, w) = create(&o.energies)?;
        write_csv(w, &meta, &out.energies)?;
        files.push(p);
    }
    if !out.pointwise.is_empty() {
        let (p, w) = create(&o.pointwise)?;
        write_pointwise(w, &meta, &out.pointwise)?;
        files.push(p);
    }
    if !out.diagnostics.is_empty() {
        let (p, mut w) = create(&o.diagnostics)?;
        for d in &out.diagnostics {
            writeln!(w, "{}", stamped_json(d, &hash))?;
        }
        w.flush()?;
        files.push(p);
    }
    if let Some(name) = &o.snapshot {
        let setup = cfg.setup();
        let mut snap = Snapshot::from_band(&out.band, &setup.grid, &setup.model.params(), &setup.model.field_names());
        snap.header.artifact = Some(ARTIFACT_VERSION.into());
        snap.header.config_sha256 = Some(hash.clone());
        let p = dir.join(name);
        std::fs::write(&p, snap.encode()?)?;
        files.push(p);
    }
    let names: Vec<String> = files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    let manifest = Manifest { artifact: ARTIFACT_VERSION, config_sha256: hash, config: cfg, summary: &out.summary, files: names };
    let p = dir.join(&o.manifest);
    std::fs::write(&p, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
    files.push(p);
    Ok(files)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n_cells: usize,
    pub h: f64,
    pub value: f64,
    /// Observed order against the previous level; NaN where undefined.
    pub order: f64,
}

fn field_error(cfg: &RunConfig, s: f64) -> Result<f64> {
    let setup = cfg.setup();
    if setup.data.case.is_none() {
        return Err(Error::Config("quantity field_error needs manufactured data".into()));
    }
    let exact = exact_hyperboloid(&setup, s)?;
    let mut err = None;
    evolve(&setup, &[s], |hyp| {
        let e = hyp.fields[0]
            .tables
            .iter()
            .zip(&exact.fields[0].tables)
            .map(|(a, b)| (a.value() - b.value()).abs())
            .fold(0.0, f64::max);
        err = Some(e);
        Ok(())
    })?;
    err.ok_or(Error::Degenerate("hyperboloid was not reconstructed"))
}

fn energy_value(cfg: &RunConfig, s: f64, column: &str, field: Option<&str>, a: Option<f64>) -> Result<f64> {
    let mut c = cfg.clone();
    c.slices = crate::config::SliceSpec { s_start: s, s_end: s, count: 1, spacing: crate::config::Spacing::Linear };
    c.norms = vec![NormRequest::Energies];
    if let Some(a) = a {
        c.a_list = vec![a];
    }
    let out = run(&c)?;
    let field = field.unwrap_or(c.model.field_names()[0]);
    let row = out
        .energies
        .iter()
        .find(|r| r.is_base() && r.field() == field)
        .ok_or_else(|| Error::Config(format!("no energies for field {field:?}")))?;
    row.column(column).ok_or_else(|| Error::Config(format!("unknown energies column {column:?}")))
}

/// Runs every level of a convergence study and reports observed orders.
pub fn convergence(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (level, &n) in cfg.levels.iter().enumerate() {
        let rc = cfg.level(n);
        let value = match &cfg.quantity {
            ConvQuantity::FieldError { s } => field_error(&rc, *s)?,
            ConvQuantity::Energy { s, column, field, a } => energy_value(&rc, *s, column, field.as_deref(), *a)?,
            ConvQuantity::Balance { multiplier, a, s0, s1, field } => {
                let setup = rc.setup();
                let f = field.clone().unwrap_or_else(|| setup.model.field_names()[0].to_string());
                verify_balance(&setup, &f, *multiplier, *a, *s0, *s1)?.residual
            }
        };
        rows.push(ConvergenceRow { level, n_cells: n, h: rc.grid.h(), value, order: f64::NAN });
    }
    match cfg.quantity {
        ConvQuantity::Energy { .. } => {
            for i in 2..rows.len() {
                let d1 = (rows[i - 1].value - rows[i - 2].value).abs();
                let d2 = (rows[i].value - rows[i - 1].value).abs();
                rows[i].order = (d1 / d2).ln() / (rows[i - 1].h / rows[i].h).ln();
            }
        }
        _ => {
            for i in 1..rows.len() {
                rows[i].order = (rows[i - 1].value / rows[i].value).ln() / (rows[i - 1].h / rows[i].h).ln();
            }
        }
    }
    Ok(rows)
}

pub fn write_convergence<W: Write>(mut w: W, meta: &CsvMeta, rows: &[ConvergenceRow]) -> Result<()> {
    writeln!(w, "# artifact={} config_sha256={}", meta.artifact, meta.config_sha256)?;
    let mut cw = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    cw.write_record(CONVERGENCE_COLUMNS).map_err(csv_err)?;
    for r in rows {
        cw.write_record([r.level.to_string(), r.n_cells.to_string(), fmt17(r.h), fmt17(r.value), fmt17(r.order)])
            .map_err(csv_err)?;
    }
    cw.flush()?;
    Ok(())
}
