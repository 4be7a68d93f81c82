//! Spherically symmetric leapfrog for `psi = r phi` with `psi = 0` at both ends.

use super::band::{Slice, SliceField};
use super::manufactured::Manufactured;
use super::{Model, ModelParams, Setup};
use crate::error::{Error, Result};
use crate::jet::Jet;

pub struct RadialStepper {
    n: usize,
    h: f64,
    dt: f64,
    t0: f64,
    level: usize,
    r: Vec<f64>,
    masses: Vec<f64>,
    coupled: Option<ModelParams>,
    source: Option<Manufactured>,
    prev: Vec<Vec<f64>>,
    cur: Vec<Vec<f64>>,
    cur_t: Vec<Vec<f64>>,
}

/// Cells next to the outer edge watched for outgoing support.
const EDGE_CELLS: usize = 8;
const EDGE_REL: f64 = 1e-8;

impl RadialStepper {
    pub fn new(setup: &Setup) -> Result<Self> {
        let g = &setup.grid;
        let n = g.n_cells;
        let h = g.h();
        let r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let nf = setup.model.field_names().len();
        let mut cur = vec![vec![0.0; n + 1]; nf];
        let mut cur_t = vec![vec![0.0; n + 1]; nf];
        for f in 0..nf {
            for i in 1..n {
                let (v, vt) = setup.data.values(&setup.model, f, g.t0, r[i]);
                cur[f][i] = r[i] * v;
                cur_t[f][i] = r[i] * vt;
            }
        }
        let coupled = match &setup.model {
            Model::Coupled { params } => Some(params.clone()),
            _ => None,
        };
        Ok(RadialStepper {
            n,
            h,
            dt: g.dt(),
            t0: g.t0,
            level: 0,
            r,
            masses: setup.model.masses(),
            coupled,
            source: setup.prescribed_source(),
            prev: vec![vec![0.0; n + 1]; nf],
            cur,
            cur_t,
        })
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.level as f64 * self.dt
    }

    /// Divides by `r`, with the axis value from the odd expansion of `psi`.
    fn unscale(&self, psi: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = psi.iter().zip(&self.r).map(|(p, r)| if *r > 0.0 { p / r } else { 0.0 }).collect();
        v[0] = (8.0 * psi[1] - psi[2]) / (6.0 * self.h);
        v
    }

    fn d2(&self, a: &[f64], i: usize) -> f64 {
        (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (self.h * self.h)
    }

    pub fn initial_slice(&self) -> Slice {
        Slice {
            t: self.t0,
            fields: (0..self.cur.len())
                .map(|f| SliceField { val: self.unscale(&self.cur[f]), dt: self.unscale(&self.cur_t[f]) })
                .collect(),
        }
    }

    fn linear_acc(&self, f: usize, psi: &[f64], t: f64) -> Vec<f64> {
        let c2 = self.masses[f] * self.masses[f];
        let mut a = vec![0.0; self.n + 1];
        for i in 1..self.n {
            a[i] = self.d2(psi, i) - c2 * psi[i];
            if let Some(m) = &self.source {
                let ri = self.r[i];
                if ri <= m.support_radius(t) {
                    a[i] -= ri * m.source(t, ri * ri);
                }
            }
        }
        a
    }

    fn source_rate(&self, t: f64) -> Vec<f64> {
        let mut a = vec![0.0; self.n + 1];
        if let Some(m) = &self.source {
            for i in 1..self.n {
                let ri = self.r[i];
                if ri <= m.support_radius(t) {
                    a[i] = ri * m.source(Jet::<f64, 1>::var(t, 0), Jet::constant(ri * ri)).d[0];
                }
            }
        }
        a
    }

    /// Second time derivative of the Klein-Gordon part with the quasilinear term solved out.
    fn kg_acc(&self, p: &ModelParams, u: &[f64], chi: &[f64]) -> Result<Vec<f64>> {
        let c2 = p.c_mass * p.c_mass;
        let mut a = vec![0.0; self.n + 1];
        for i in 1..self.n {
            let lead = 1.0 - u[i] * p.h00;
            if lead < 0.1 {
                return Err(Error::Degenerate("coupled system lost hyperbolicity"));
            }
            a[i] = ((1.0 + u[i] * p.hiso) * self.d2(chi, i) - c2 * chi[i]) / lead;
        }
        Ok(a)
    }

    fn wave_acc(&self, p: &ModelParams, psi: &[f64], v: &[f64], vt: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0; self.n + 1];
        for i in 1..self.n {
            let vr = (v[i + 1] - v[i - 1]) / (2.0 * self.h);
            let q = p.p00 * vt[i] * vt[i] + p.piso * vr * vr + p.r_coupling * v[i] * v[i];
            a[i] = self.d2(psi, i) + self.r[i] * q;
        }
        a
    }

    fn first_step(&self) -> Result<Vec<Vec<f64>>> {
        let (dt, t) = (self.dt, self.t0);
        let taylor = |psi: &[f64], psi_t: &[f64], acc: &[f64], jerk: &[f64]| -> Vec<f64> {
            (0..=self.n)
                .map(|i| psi[i] + dt * psi_t[i] + 0.5 * dt * dt * acc[i] + dt * dt * dt / 6.0 * jerk[i])
                .collect()
        };
        let mut next = Vec::new();
        match &self.coupled {
            None => {
                let acc = self.linear_acc(0, &self.cur[0], t);
                let c2 = self.masses[0] * self.masses[0];
                let mut jerk = self.source_rate(t);
                for i in 1..self.n {
                    jerk[i] = self.d2(&self.cur_t[0], i) - c2 * self.cur_t[0][i] - jerk[i];
                }
                next.push(taylor(&self.cur[0], &self.cur_t[0], &acc, &jerk));
            }
            Some(p) => {
                let u = self.unscale(&self.cur[0]);
                let v = self.unscale(&self.cur[1]);
                let vt = self.unscale(&self.cur_t[1]);
                let acc_u = self.wave_acc(p, &self.cur[0], &v, &vt);
                let acc_v = self.kg_acc(p, &u, &self.cur[1])?;
                let mut jerk_u = vec![0.0; self.n + 1];
                let mut jerk_v = vec![0.0; self.n + 1];
                let c2 = p.c_mass * p.c_mass;
                for i in 1..self.n {
                    jerk_u[i] = self.d2(&self.cur_t[0], i);
                    jerk_v[i] = (self.d2(&self.cur_t[1], i) - c2 * self.cur_t[1][i]) / (1.0 - u[i] * p.h00);
                }
                next.push(taylor(&self.cur[0], &self.cur_t[0], &acc_u, &jerk_u));
                next.push(taylor(&self.cur[1], &self.cur_t[1], &acc_v, &jerk_v));
            }
        }
        Ok(next)
    }

    fn leapfrog(&self) -> Result<Vec<Vec<f64>>> {
        let dt2 = self.dt * self.dt;
        let step = |cur: &[f64], prev: &[f64], acc: &[f64]| -> Vec<f64> {
            (0..=self.n).map(|i| if i == 0 || i == self.n { 0.0 } else { 2.0 * cur[i] - prev[i] + dt2 * acc[i] }).collect()
        };
        match &self.coupled {
            None => (0..self.cur.len())
                .map(|f| {
                    let acc = self.linear_acc(f, &self.cur[f], self.time());
                    Ok(step(&self.cur[f], &self.prev[f], &acc))
                })
                .collect(),
            Some(p) => {
                let u = self.unscale(&self.cur[0]);
                let acc_v = self.kg_acc(p, &u, &self.cur[1])?;
                let chi_next = step(&self.cur[1], &self.prev[1], &acc_v);
                let rate: Vec<f64> =
                    chi_next.iter().zip(&self.prev[1]).map(|(a, b)| (a - b) / (2.0 * self.dt)).collect();
                let vt = self.unscale(&rate);
                let v = self.unscale(&self.cur[1]);
                let acc_u = self.wave_acc(p, &self.cur[0], &v, &vt);
                Ok(vec![step(&self.cur[0], &self.prev[0], &acc_u), chi_next])
            }
        }
    }

    fn check(&self, next: &[Vec<f64>], t: f64) -> Result<()> {
        for psi in next {
            if let Some(cell) = psi.iter().position(|x| !x.is_finite()) {
                return Err(Error::NotFinite { t, cell });
            }
            let peak = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let edge = psi[self.n - EDGE_CELLS..self.n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if peak > 0.0 && edge > EDGE_REL * peak {
                return Err(Error::SupportEscape { t });
            }
        }
        Ok(())
    }

    pub fn advance(&mut self) -> Result<Option<Slice>> {
        let next = if self.level == 0 { self.first_step()? } else { self.leapfrog()? };
        self.check(&next, self.time() + self.dt)?;
        let out = (self.level > 0).then(|| Slice {
            t: self.time(),
            fields: (0..next.len())
                .map(|f| {
                    let rate: Vec<f64> =
                        next[f].iter().zip(&self.prev[f]).map(|(a, b)| (a - b) / (2.0 * self.dt)).collect();
                    SliceField { val: self.unscale(&self.cur[f]), dt: self.unscale(&rate) }
                })
                .collect(),
        });
        self.prev = std::mem::replace(&mut self.cur, next);
        self.level += 1;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::manufactured::ManufacturedKind;
    use super::super::tests::radial_setup;
    use super::*;

    fn run_to(st: &mut RadialStepper, t: f64) -> Slice {
        let mut last = None;
        while st.time() < t + 1.5 * st.dt {
            if let Some(s) = st.advance().unwrap() {
                last = Some(s);
            }
        }
        last.unwrap()
    }

    fn max_err(setup: &Setup, n: usize) -> f64 {
        let mut s = setup.clone();
        s.grid.n_cells = n;
        let mut st = RadialStepper::new(&s).unwrap();
        let sl = run_to(&mut st, 5.0);
        let m = s.data.manufactured(&s.model);
        (0..=n)
            .map(|i| {
                let r = i as f64 * s.grid.h();
                (sl.fields[0].val[i] - m.data(sl.t, r).0).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn manufactured_cases_converge_at_second_order() {
        for case in [
            ManufacturedKind::SphericalWaveBump,
            ManufacturedKind::KgModulatedBump,
            ManufacturedKind::WaveWithPolynomialSource,
        ] {
            // the travelling bump is steep and needs a finer grid to reach the asymptotic regime
            let (t0, n) = match case {
                ManufacturedKind::SphericalWaveBump => (3.1, 1600),
                _ => (2.6, 200),
            };
            let setup = radial_setup(n, 10.0, case, t0);
            let e1 = max_err(&setup, n);
            let e2 = max_err(&setup, 2 * n);
            let rate = (e1 / e2).log2();
            assert!(rate > 1.7 && rate < 2.3, "{case:?}: errors {e1} {e2} rate {rate}");
        }
    }

    #[test]
    fn edge_guard_trips() {
        let mut setup = radial_setup(64, 4.0, ManufacturedKind::SphericalWaveBump, 3.1);
        setup.grid.t_end = Some(20.0);
        let mut st = RadialStepper::new(&setup).unwrap();
        let err = loop {
            if let Err(e) = st.advance() {
                break e;
            }
        };
        assert!(matches!(err, Error::SupportEscape { .. }));
    }
}
