//! Sliding window of recent time slices and reconstruction of node tables from it.

use super::{Mode, Setup};
use crate::error::{Error, Result};
use crate::taylor::{Taylor, Vars, MAX_ORDER};
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq)]
pub struct SliceField {
    pub val: Vec<f64>,
    pub dt: Vec<f64>,
}

/// Field values and time derivatives on every grid point at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub t: f64,
    pub fields: Vec<SliceField>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeIndex {
    Radial(usize),
    Cart(usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldBand {
    pub mode: Mode,
    pub n_cells: usize,
    pub h: f64,
    dt: f64,
    depth: usize,
    slices: VecDeque<Slice>,
}

// Central stencils on offsets -2..=2.
const D1_4: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2_4: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
const D3_2: [f64; 5] = [-0.5, 1.0, 0.0, -1.0, 0.5];
const D0: [f64; 5] = [0.0, 0.0, 1.0, 0.0, 0.0];
const D1_2: [f64; 5] = [0.0, -0.5, 0.0, 0.5, 0.0];
const D2_2: [f64; 5] = [0.0, 1.0, -2.0, 1.0, 0.0];

/// Lagrange weights on nodes 0..3 at `x` and their first two derivatives.
pub fn lagrange4(x: f64) -> [[f64; 4]; 3] {
    let mut w = [[0.0; 4]; 3];
    for k in 0..4 {
        let others: Vec<f64> = (0..4).filter(|&m| m != k).map(|m| m as f64).collect();
        let den: f64 = others.iter().map(|&m| k as f64 - m).product();
        let d = [x - others[0], x - others[1], x - others[2]];
        w[0][k] = d[0] * d[1] * d[2] / den;
        w[1][k] = (d[1] * d[2] + d[0] * d[2] + d[0] * d[1]) / den;
        w[2][k] = 2.0 * (d[0] + d[1] + d[2]) / den;
    }
    w
}

impl FieldBand {
    pub fn new(setup: &Setup, dt: f64, depth: usize) -> Self {
        FieldBand {
            mode: setup.grid.mode,
            n_cells: setup.grid.n_cells,
            h: setup.grid.h(),
            dt,
            depth: depth.max(4),
            slices: VecDeque::new(),
        }
    }

    pub fn from_parts(mode: Mode, n_cells: usize, h: f64, dt: f64, depth: usize, slices: Vec<Slice>) -> Self {
        FieldBand { mode, n_cells, h, dt, depth: depth.max(4), slices: slices.into() }
    }

    pub fn push(&mut self, s: Slice) {
        self.slices.push_back(s);
        while self.slices.len() > self.depth {
            self.slices.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn slices(&self) -> impl Iterator<Item = &Slice> {
        self.slices.iter()
    }

    pub fn t_first(&self) -> f64 {
        self.slices.front().map_or(f64::NAN, |s| s.t)
    }

    pub fn t_last(&self) -> f64 {
        self.slices.back().map_or(f64::NAN, |s| s.t)
    }

    pub fn points(&self) -> usize {
        match self.mode {
            Mode::Radial => self.n_cells + 1,
            Mode::Cartesian3d => (self.n_cells + 1).pow(3),
        }
    }

    /// Start of the four-slice window around `t`, clamped to the band.
    fn window(&self, t: f64) -> Result<usize> {
        let n = self.slices.len();
        if n < 4 {
            return Err(Error::StencilOutOfBand);
        }
        let (lo, hi) = (self.t_first(), self.t_last());
        let tol = 1e-9 * self.dt;
        if t < lo - tol || t > hi + tol {
            return Err(Error::BandCoverage { t, t_lo: lo, t_hi: hi });
        }
        let m = ((t - lo) / self.dt).floor() as isize;
        Ok((m - 1).clamp(0, n as isize - 4) as usize)
    }

    fn radial_deriv(&self, a: &[f64], j: usize, q: usize) -> f64 {
        let n = self.n_cells;
        let at = |k: isize| -> f64 {
            let k = k.unsigned_abs();
            if k > n { 0.0 } else { a[k] }
        };
        let st = match q {
            0 => return a[j],
            1 => &D1_4,
            2 => &D2_4,
            _ => &D3_2,
        };
        let mut acc = 0.0;
        for (o, c) in st.iter().enumerate() {
            if *c != 0.0 {
                acc += c * at(j as isize + o as isize - 2);
            }
        }
        acc / self.h.powi(q as i32)
    }

    fn cart_deriv(&self, a: &[f64], ijk: [usize; 3], beta: [u8; 3]) -> f64 {
        let n = self.n_cells as isize;
        let stencil = |q: u8| match q {
            0 => &D0,
            1 => &D1_2,
            2 => &D2_2,
            _ => &D3_2,
        };
        let s = [stencil(beta[0]), stencil(beta[1]), stencil(beta[2])];
        let span = |q: u8| if q >= 3 { -2..=2isize } else if q == 0 { 0..=0 } else { -1..=1 };
        let side = (self.n_cells + 1) as isize;
        let mut acc = 0.0;
        for a0 in span(beta[0]) {
            let i = ijk[0] as isize + a0;
            let c0 = s[0][(a0 + 2) as usize];
            if c0 == 0.0 || i < 0 || i > n {
                continue;
            }
            for a1 in span(beta[1]) {
                let j = ijk[1] as isize + a1;
                let c1 = s[1][(a1 + 2) as usize];
                if c1 == 0.0 || j < 0 || j > n {
                    continue;
                }
                for a2 in span(beta[2]) {
                    let k = ijk[2] as isize + a2;
                    let c2 = s[2][(a2 + 2) as usize];
                    if c2 == 0.0 || k < 0 || k > n {
                        continue;
                    }
                    acc += c0 * c1 * c2 * a[((i * side + j) * side + k) as usize];
                }
            }
        }
        acc / self.h.powi((beta[0] + beta[1] + beta[2]) as i32)
    }

    fn spatial(&self, a: &[f64], node: NodeIndex, alpha: [u8; 4]) -> f64 {
        match node {
            NodeIndex::Radial(j) => self.radial_deriv(a, j, alpha[1] as usize),
            NodeIndex::Cart(i, j, k) => self.cart_deriv(a, [i, j, k], [alpha[1], alpha[2], alpha[3]]),
        }
    }

    /// Partials of field `f` up to third order at the grid node, at time `t`.
    pub fn node_table(&self, f: usize, node: NodeIndex, t: f64, vars: Vars) -> Result<Taylor> {
        let k0 = self.window(t)?;
        let x = (t - self.slices[k0].t) / self.dt;
        let w = lagrange4(x);
        let mut tab = Taylor::zeros(vars, MAX_ORDER);
        for alpha in vars.alphas() {
            let p = alpha[0] as usize;
            let mut space = alpha;
            space[0] = 0;
            let mut acc = 0.0;
            for k in 0..4 {
                let sl = &self.slices[k0 + k].fields[f];
                acc += if p == 0 {
                    w[0][k] * self.spatial(&sl.val, node, space)
                } else {
                    w[p - 1][k] * self.spatial(&sl.dt, node, space)
                };
            }
            tab.set(alpha, acc / self.dt.powi(p.saturating_sub(1) as i32));
        }
        Ok(tab)
    }
}
