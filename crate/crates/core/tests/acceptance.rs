//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;
use wkgs_core::balance::{fit_decay, series_from_rows, verify_balance};
use wkgs_core::config::{ConvergenceConfig, RunConfig};
use wkgs_core::identity_lab::{check_weight_lemma, run_suite, Precision};
use wkgs_core::multipliers::MultiplierKind;
use wkgs_core::pipeline::{convergence, run, write_outputs, RunOutcome};

const FREE_WAVE: &str = include_str!("../../../configs/free_wave.json");
const FREE_KG: &str = include_str!("../../../configs/free_kg.json");
const FORCED: &str = include_str!("../../../configs/forced.json");
const COUPLED: &str = include_str!("../../../configs/coupled.json");
const WAVE_3D: &str = include_str!("../../../configs/free_wave_3d.json");
const SPHERICAL: &str = include_str!("../../../configs/spherical_convergence.json");

const SEED: u64 = 20240611;

struct Verdict {
    pass: bool,
    detail: String,
}

fn config(text: &str) -> RunConfig {
    RunConfig::from_json(text).expect("checked-in config parses")
}

fn energy_fit(out: &RunOutcome, column: &str, field: &str, a: f64, smin: f64, smax: f64) -> f64 {
    let pts = series_from_rows(&out.energies, column, Some(field), Some(a), smin, smax).expect("series");
    fit_decay(column, &pts).expect("fit").p
}

fn point_fit(out: &RunOutcome, weight: &str, field: &str, a: f64, smin: f64, smax: f64) -> f64 {
    let pts: Vec<(f64, f64)> = out
        .pointwise
        .iter()
        .filter(|r| r.weight == weight && r.field() == field && r.a == a && r.s >= smin && r.s <= smax)
        .map(|r| (r.s, r.value))
        .collect();
    fit_decay(weight, &pts).map(|f| f.p).unwrap_or(f64::NAN)
}

fn identities() -> Verdict {
    let t = Instant::now();
    let mut worst = Vec::new();
    let mut pass = true;
    for p in [Precision::F64, Precision::Extended] {
        for r in run_suite(10_000, SEED, p.default_tolerance(), p) {
            pass &= r.passed();
            if !r.passed() {
                worst.push(format!("{}({p:?}) rel {:e}", r.identity_id, r.max_rel_residual));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Verdict {
        pass: pass && secs < 30.0,
        detail: format!("10 reports at 1e-10/1e-25 in {secs:.1}s (limit 30s){}", if worst.is_empty() { String::new() } else { format!("; failing: {}", worst.join(", ")) }),
    }
}

fn weight_lemma() -> Verdict {
    let f = check_weight_lemma(10_000, SEED, Precision::F64);
    let x = check_weight_lemma(10_000, SEED, Precision::Extended);
    Verdict {
        pass: f.passed() && x.passed(),
        detail: format!("worst violation {:e} (f64, a in 0..1 step 0.05), {:e} (extended)", f.max_abs_residual, x.max_abs_residual),
    }
}

fn convergence_order() -> Verdict {
    let t = Instant::now();
    let cfg = ConvergenceConfig::from_json(SPHERICAL).expect("config");
    let rows = convergence(&cfg).expect("convergence runs");
    let secs = t.elapsed().as_secs_f64();
    let orders: Vec<f64> = rows.iter().skip(1).map(|r| r.order).collect();
    Verdict {
        pass: orders.iter().all(|o| (o - 2.0).abs() <= 0.2) && secs < 300.0,
        detail: format!("n={:?} orders {orders:.3?} (want 2.0 +- 0.2) in {secs:.1}s", cfg.levels),
    }
}

fn conservation(out: &RunOutcome) -> Verdict {
    let rows = |a: f64| out.energies.iter().filter(move |r| r.is_base() && r.a == a && r.s <= 20.0 + 1e-9);
    let ew: Vec<f64> = rows(0.0).map(|r| r.ew).collect();
    let drift = ew.iter().map(|e| (e / ew[0] - 1.0).abs()).fold(0.0, f64::max);
    let mut pass = drift <= 5e-3;
    let mut parts = vec![format!("E_W drift {:.3}% (limit 0.5%)", 100.0 * drift)];
    for a in [0.5, 0.75, 1.0] {
        let e1: Vec<f64> = rows(a).map(|r| r.e1a).collect();
        let e2: Vec<f64> = rows(a).map(|r| r.e2a).collect();
        let sup = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v[0];
        let (r1, r2) = (sup(&e1), sup(&e2));
        pass &= r1 <= 1.05 && r2 <= 1.05;
        parts.push(format!("a={a}: supE1/E1(s0)={r1:.4} supE2/E2(s0)={r2:.4}"));
    }
    Verdict { pass, detail: format!("{} (limit 1.05)", parts.join("; ")) }
}

fn balance_rates() -> Verdict {
    let base = config(FORCED);
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, a) in [(MultiplierKind::T, 0.0), (MultiplierKind::Ka, 0.75)] {
        let res: Vec<f64> = [400, 800, 1600]
            .iter()
            .map(|&n| {
                let mut c = base.clone();
                c.grid.n_cells = n;
                verify_balance(&c.setup(), "phi", kind, a, 2.7, 3.2).expect("balance").residual
            })
            .collect();
        let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
        pass &= ratios.iter().all(|&r| r >= 3.4);
        let res: Vec<String> = res.iter().map(|r| format!("{r:.2e}")).collect();
        parts.push(format!("{kind}(a={a}) residuals [{}] ratios {ratios:.2?}", res.join(", ")));
    }
    Verdict { pass, detail: format!("{} (want >= 3.4)", parts.join("; ")) }
}

fn linear_decay(wave: &RunOutcome) -> Verdict {
    let kg = run(&config(FREE_KG)).expect("free KG run");
    let p_kg = point_fit(&kg, "tau_threehalf", "v", 0.0, 3.0, 20.0);
    let p_center = point_fit(wave, "center", "phi", 0.0, 3.0, 20.0);
    let ok_kg = p_kg.abs() <= 0.15;
    let ok_center = (p_center + 1.5).abs() <= 0.15;
    Verdict {
        pass: ok_kg && ok_center,
        detail: format!(
            "KG tau+^(3/2) sup slope {p_kg:.3} (want |p|<=0.15: {}); wave |phi(t,0)| slope {p_center:.3} (want -1.5+-0.15: {})",
            if ok_kg { "ok" } else { "no" },
            if ok_center { "ok" } else { "no" }
        ),
    }
}

fn nonlinear_growth() -> Verdict {
    let out = run(&config(COUPLED)).expect("coupled run");
    let p_u = energy_fit(&out, "EWa", "u", 0.5, 2.0, 30.0);
    let p_v = energy_fit(&out, "EKG", "v", 0.5, 2.0, 30.0);
    let q_u = point_fit(&out, "s_a_tau_half", "u", 0.5, 2.0, 30.0);
    let q_v = point_fit(&out, "tau_threehalf", "v", 0.0, 2.0, 30.0);
    let pass = p_u <= 0.10 && p_v <= 0.10 && q_u.abs() <= 0.15 && q_v.abs() <= 0.15;
    Verdict {
        pass,
        detail: format!(
            "growth EWa(u,a=1/2) {p_u:.3}, EKG(v) {p_v:.3} (want <= 0.10); pointwise s^(1/2)tau+^(1/2)|u| {q_u:.3}, tau+^(3/2)|v| {q_v:.3} (want |p| <= 0.15)"
        ),
    }
}

fn outputs_under(threads: usize, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool");
    pool.install(|| {
        let mut files = Vec::new();
        for (name, text) in [("coupled", COUPLED), ("wave3d", WAVE_3D)] {
            let cfg = config(text);
            let out = run(&cfg).expect("run");
            let sub = dir.join(name);
            for p in write_outputs(&cfg, &out, &sub).expect("outputs") {
                let rel = p.strip_prefix(dir).expect("inside dir").display().to_string();
                files.push((rel, std::fs::read(&p).expect("read back")));
            }
        }
        let lines: Vec<String> = run_suite(2_000, SEED, 1e-10, Precision::F64).iter().map(|r| r.to_json_line()).collect();
        files.push(("identities.jsonl".into(), lines.join("\n").into_bytes()));
        files
    })
}

fn determinism() -> Verdict {
    let runs: Vec<Vec<(String, Vec<u8>)>> = [1, 4, 8]
        .iter()
        .map(|&k| {
            let dir = tempfile::tempdir().expect("tempdir");
            outputs_under(k, dir.path())
        })
        .collect();
    let differing: Vec<String> = runs[0]
        .iter()
        .enumerate()
        .filter(|(i, (_, bytes))| runs[1..].iter().any(|r| r.get(*i).map(|x| &x.1) != Some(bytes)))
        .map(|(_, (name, _))| name.clone())
        .collect();
    let same_count = runs.iter().all(|r| r.len() == runs[0].len());
    Verdict {
        pass: same_count && differing.is_empty(),
        detail: format!(
            "{} artifacts compared across 1/4/8 threads{}",
            runs[0].len(),
            if differing.is_empty() { String::new() } else { format!("; differing: {}", differing.join(", ")) }
        ),
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: &str, v: Verdict| {
        all &= v.pass;
        println!("{} {id} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    };
    report("A1 identity suite", identities());
    report("A2 weight lemma", weight_lemma());
    report("A3 spherical wave convergence", convergence_order());
    let wave = run(&config(FREE_WAVE)).expect("free wave run");
    report("A4 conservation and boundedness", conservation(&wave));
    report("A5 balance refinement", balance_rates());
    report("A6 linear decay", linear_decay(&wave));
    report("A7 coupled growth", nonlinear_growth());
    report("A8 thread determinism", determinism());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
