//! Classical RK4 on a uniform box with second-order stencils and zero boundary values.

use super::band::{Slice, SliceField};
use super::manufactured::Manufactured;
use super::{Model, ModelParams, Setup};
use crate::error::{Error, Result};
use rayon::prelude::*;

pub struct CartStepper {
    n: usize,
    h: f64,
    dt: f64,
    t0: f64,
    level: usize,
    xs: Vec<f64>,
    masses: Vec<f64>,
    coupled: Option<([[f64; 4]; 4], [[f64; 4]; 4], f64, f64)>,
    source: Option<Manufactured>,
    /// Per field: values then time derivatives.
    state: Vec<(Vec<f64>, Vec<f64>)>,
}

const EDGE_CELLS: usize = 3;
const EDGE_REL: f64 = 1e-8;

type State = Vec<(Vec<f64>, Vec<f64>)>;

impl CartStepper {
    pub fn new(setup: &Setup) -> Result<Self> {
        let g = &setup.grid;
        let n = g.n_cells;
        let h = g.h();
        let xs: Vec<f64> = (0..=n).map(|i| -g.extent + i as f64 * h).collect();
        let side = n + 1;
        let nf = setup.model.field_names().len();
        let mut state = vec![(vec![0.0; side * side * side], vec![0.0; side * side * side]); nf];
        for (f, (phi, pi)) in state.iter_mut().enumerate() {
            for i in 1..n {
                for j in 1..n {
                    for k in 1..n {
                        let r = (xs[i] * xs[i] + xs[j] * xs[j] + xs[k] * xs[k]).sqrt();
                        let (v, vt) = setup.data.values(&setup.model, f, g.t0, r);
                        let id = (i * side + j) * side + k;
                        phi[id] = v;
                        pi[id] = vt;
                    }
                }
            }
        }
        let coupled = match &setup.model {
            Model::Coupled { params } => {
                let p: &ModelParams = params;
                Some((p.p_matrix(), p.h_matrix(), p.r_coupling, p.c_mass))
            }
            _ => None,
        };
        Ok(CartStepper {
            n,
            h,
            dt: g.dt(),
            t0: g.t0,
            level: 0,
            xs,
            masses: setup.model.masses(),
            coupled,
            source: setup.prescribed_source(),
            state,
        })
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.level as f64 * self.dt
    }

    fn slice(&self) -> Slice {
        Slice {
            t: self.time(),
            fields: self.state.iter().map(|(v, d)| SliceField { val: v.clone(), dt: d.clone() }).collect(),
        }
    }

    pub fn initial_slice(&self) -> Slice {
        self.slice()
    }

    /// Time derivative of the state, interior points only.
    fn rhs(&self, st: &State, t: f64) -> Result<State> {
        let n = self.n;
        let side = n + 1;
        let plane = side * side;
        let h2 = self.h * self.h;
        let ih = 0.5 / self.h;
        let mut out: State = st.iter().map(|(v, _)| (vec![0.0; v.len()], vec![0.0; v.len()])).collect();
        let strides = [plane, side, 1];
        let lap = |a: &[f64], id: usize| -> f64 {
            strides.iter().map(|&s| a[id + s] + a[id - s]).sum::<f64>() / h2 - 6.0 * a[id] / h2
        };
        let d1 = |a: &[f64], id: usize, m: usize| (a[id + strides[m]] - a[id - strides[m]]) * ih;
        let d2 = |a: &[f64], id: usize, m: usize, l: usize| {
            if m == l {
                (a[id + strides[m]] - 2.0 * a[id] + a[id - strides[m]]) / h2
            } else {
                let (sm, sl) = (strides[m], strides[l]);
                (a[id + sm + sl] - a[id + sm - sl] - a[id - sm + sl] + a[id - sm - sl]) * ih * ih
            }
        };
        match &self.coupled {
            None => {
                for (f, (phi, pi)) in st.iter().enumerate() {
                    let c2 = self.masses[f] * self.masses[f];
                    let (dphi, dpi) = &mut out[f];
                    dphi.copy_from_slice(pi);
                    let src = self.source.as_ref();
                    let sup = src.map_or(0.0, |m| m.support_radius(t));
                    dpi.par_chunks_mut(plane).enumerate().for_each(|(i, chunk)| {
                        if i == 0 || i == n {
                            return;
                        }
                        for j in 1..n {
                            for k in 1..n {
                                let id = i * plane + j * side + k;
                                let mut a = lap(phi, id) - c2 * phi[id];
                                if let Some(m) = src {
                                    let rho = self.xs[i].powi(2) + self.xs[j].powi(2) + self.xs[k].powi(2);
                                    if rho <= sup * sup {
                                        a -= m.source(t, rho);
                                    }
                                }
                                chunk[j * side + k] = a;
                            }
                        }
                    });
                    zero_boundary(dphi, n);
                }
            }
            Some((pm, hm, rc, c)) => {
                let (u, pu) = (&st[0].0, &st[0].1);
                let (v, pv) = (&st[1].0, &st[1].1);
                let c2 = c * c;
                let mut acc_u = vec![0.0; u.len()];
                let mut acc_v = vec![0.0; u.len()];
                let failed = std::sync::atomic::AtomicBool::new(false);
                acc_u.par_chunks_mut(plane).zip(acc_v.par_chunks_mut(plane)).enumerate().for_each(|(i, (cu, cv))| {
                    if i == 0 || i == n {
                        return;
                    }
                    for j in 1..n {
                        for k in 1..n {
                            let id = i * plane + j * side + k;
                            let dv = [pv[id], d1(v, id, 0), d1(v, id, 1), d1(v, id, 2)];
                            let mut q = rc * v[id] * v[id];
                            for a in 0..4 {
                                for b in 0..4 {
                                    q += pm[a][b] * dv[a] * dv[b];
                                }
                            }
                            cu[j * side + k] = lap(u, id) + q;
                            let mut hv = 0.0;
                            for m in 0..3 {
                                hv += 2.0 * hm[0][m + 1] * d1(pv, id, m);
                                for l in 0..3 {
                                    hv += hm[m + 1][l + 1] * d2(v, id, m, l);
                                }
                            }
                            let lead = 1.0 - u[id] * hm[0][0];
                            if lead < 0.1 {
                                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                            }
                            cv[j * side + k] = (lap(v, id) - c2 * v[id] + u[id] * hv) / lead;
                        }
                    }
                });
                if failed.into_inner() {
                    return Err(Error::Degenerate("coupled system lost hyperbolicity"));
                }
                let mut du = pu.clone();
                let mut dv = pv.clone();
                zero_boundary(&mut du, n);
                zero_boundary(&mut dv, n);
                out = vec![(du, acc_u), (dv, acc_v)];
            }
        }
        Ok(out)
    }

    fn check(&self, t: f64) -> Result<()> {
        let side = self.n + 1;
        for (phi, _) in &self.state {
            if let Some(cell) = phi.iter().position(|x| !x.is_finite()) {
                return Err(Error::NotFinite { t, cell });
            }
            let peak = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let near = |i: usize| i <= EDGE_CELLS || i + EDGE_CELLS >= self.n;
            let mut edge = 0.0f64;
            for (id, x) in phi.iter().enumerate() {
                let (i, j, k) = (id / (side * side), (id / side) % side, id % side);
                if near(i) || near(j) || near(k) {
                    edge = edge.max(x.abs());
                }
            }
            if peak > 0.0 && edge > EDGE_REL * peak {
                return Err(Error::SupportEscape { t });
            }
        }
        Ok(())
    }

    pub fn advance(&mut self) -> Result<Option<Slice>> {
        let (t, dt) = (self.time(), self.dt);
        let axpy = |base: &State, k: &State, c: f64| -> State {
            base.iter()
                .zip(k)
                .map(|((a, b), (ka, kb))| {
                    (
                        a.iter().zip(ka).map(|(x, y)| x + c * y).collect(),
                        b.iter().zip(kb).map(|(x, y)| x + c * y).collect(),
                    )
                })
                .collect()
        };
        let s0 = &self.state;
        let k1 = self.rhs(s0, t)?;
        let k2 = self.rhs(&axpy(s0, &k1, 0.5 * dt), t + 0.5 * dt)?;
        let k3 = self.rhs(&axpy(s0, &k2, 0.5 * dt), t + 0.5 * dt)?;
        let k4 = self.rhs(&axpy(s0, &k3, dt), t + dt)?;
        let mut next = s0.clone();
        for (f, (a, b)) in next.iter_mut().enumerate() {
            for (x, comp) in [(a, 0usize), (b, 1)] {
                let (g1, g2, g3, g4) = if comp == 0 {
                    (&k1[f].0, &k2[f].0, &k3[f].0, &k4[f].0)
                } else {
                    (&k1[f].1, &k2[f].1, &k3[f].1, &k4[f].1)
                };
                for i in 0..x.len() {
                    x[i] += dt / 6.0 * (g1[i] + 2.0 * g2[i] + 2.0 * g3[i] + g4[i]);
                }
            }
        }
        self.state = next;
        self.level += 1;
        self.check(self.time())?;
        Ok(Some(self.slice()))
    }
}

fn zero_boundary(a: &mut [f64], n: usize) {
    let side = n + 1;
    for (id, x) in a.iter_mut().enumerate() {
        let (i, j, k) = (id / (side * side), (id / side) % side, id % side);
        if i == 0 || j == 0 || k == 0 || i == n || j == n || k == n {
            *x = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::manufactured::ManufacturedKind;
    use super::super::tests::radial_setup;
    use super::super::Mode;
    use super::*;

    fn err_at(n: usize) -> f64 {
        let mut setup = radial_setup(n, 3.0, ManufacturedKind::KgModulatedBump, 2.2);
        setup.grid.mode = Mode::Cartesian3d;
        setup.grid.cfl = 0.4;
        let mut st = CartStepper::new(&setup).unwrap();
        while st.time() < 2.6 {
            st.advance().unwrap();
        }
        let m = setup.data.manufactured(&setup.model);
        let side = n + 1;
        let mut e = 0.0f64;
        for (id, v) in st.state[0].0.iter().enumerate() {
            let (i, j, k) = (id / (side * side), (id / side) % side, id % side);
            let r2 = st.xs[i].powi(2) + st.xs[j].powi(2) + st.xs[k].powi(2);
            e = e.max((v - m.data(st.time(), r2.sqrt()).0).abs());
        }
        e
    }

    #[test]
    fn kg_manufactured_converges() {
        let (e1, e2) = (err_at(30), err_at(60));
        let rate = (e1 / e2).log2();
        assert!(rate > 1.7, "errors {e1} {e2}");
    }
}
