//! Tables of mixed partials at a point and polynomial-coefficient differential operators acting on them.

use std::collections::BTreeMap;

pub type Alpha = [u8; 4];
pub const MAX_ORDER: usize = 3;

/// Number of coordinates a table is indexed by: `(t, r)` or `(t, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vars {
    Radial,
    Cartesian,
}

impl Vars {
    pub fn count(self) -> usize {
        match self {
            Vars::Radial => 2,
            Vars::Cartesian => 4,
        }
    }

    /// Multi-indices of total order at most `MAX_ORDER`, graded then lexicographic.
    pub fn alphas(self) -> Vec<Alpha> {
        let nv = self.count();
        let mut out = Vec::new();
        for order in 0..=MAX_ORDER as u8 {
            let mut all = Vec::new();
            for a in 0..=order {
                for b in 0..=order - a {
                    for c in 0..=order - a - b {
                        let d = order - a - b - c;
                        let al = [a, b, c, d];
                        if al[nv..].iter().all(|x| *x == 0) {
                            all.push(al);
                        }
                    }
                }
            }
            all.sort_by(|x, y| y.cmp(x));
            out.extend(all);
        }
        out
    }

    pub fn len(self) -> usize {
        match self {
            Vars::Radial => 10,
            Vars::Cartesian => 35,
        }
    }

    pub fn index(self, a: Alpha) -> Option<usize> {
        let lut = match self {
            Vars::Radial => radial_lut(),
            Vars::Cartesian => cartesian_lut(),
        };
        if a.iter().any(|x| *x > MAX_ORDER as u8) {
            return None;
        }
        let k = lut[(a[0] as usize) << 6 | (a[1] as usize) << 4 | (a[2] as usize) << 2 | a[3] as usize];
        (k != u8::MAX).then_some(k as usize)
    }
}

fn build_lut(v: Vars) -> [u8; 256] {
    let mut lut = [u8::MAX; 256];
    for (k, a) in v.alphas().into_iter().enumerate() {
        lut[(a[0] as usize) << 6 | (a[1] as usize) << 4 | (a[2] as usize) << 2 | a[3] as usize] = k as u8;
    }
    lut
}

fn radial_lut() -> &'static [u8; 256] {
    static L: std::sync::OnceLock<[u8; 256]> = std::sync::OnceLock::new();
    L.get_or_init(|| build_lut(Vars::Radial))
}

fn cartesian_lut() -> &'static [u8; 256] {
    static L: std::sync::OnceLock<[u8; 256]> = std::sync::OnceLock::new();
    L.get_or_init(|| build_lut(Vars::Cartesian))
}

/// Mixed partials of one field at one point, up to `MAX_ORDER`. Entries above `order` are unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct Taylor {
    pub vars: Vars,
    pub order: usize,
    pub vals: Vec<f64>,
}

impl Taylor {
    pub fn zeros(vars: Vars, order: usize) -> Self {
        Taylor { vars, order, vals: vec![0.0; vars.len()] }
    }

    pub fn get(&self, a: Alpha) -> f64 {
        self.vars.index(a).map_or(0.0, |k| self.vals[k])
    }

    pub fn set(&mut self, a: Alpha, v: f64) {
        let k = self.vars.index(a).expect("multi-index within table");
        self.vals[k] = v;
    }

    pub fn value(&self) -> f64 {
        self.vals[0]
    }

    /// `(d_t, d_1, d_2, d_3)` in the table's own variables (radial: `(d_t, d_r, 0, 0)`).
    pub fn gradient(&self) -> [f64; 4] {
        [self.get([1, 0, 0, 0]), self.get([0, 1, 0, 0]), self.get([0, 0, 1, 0]), self.get([0, 0, 0, 1])]
    }
}

fn bump(a: Alpha, k: usize) -> Alpha {
    let mut b = a;
    b[k] += 1;
    b
}

/// Polynomial in `(t, x1, x2, x3)` keyed by exponent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly(pub BTreeMap<Alpha, f64>);

impl Poly {
    pub fn one() -> Self {
        let mut m = BTreeMap::new();
        m.insert([0; 4], 1.0);
        Poly(m)
    }

    fn add_term(&mut self, e: Alpha, c: f64) {
        let v = self.0.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.0.remove(&e);
        }
    }

    pub fn deriv(&self, k: usize) -> Poly {
        let mut out = Poly::default();
        for (e, c) in &self.0 {
            if e[k] > 0 {
                let mut f = *e;
                f[k] -= 1;
                out.add_term(f, c * e[k] as f64);
            }
        }
        out
    }

    pub fn times_var(&self, k: usize) -> Poly {
        let mut out = Poly::default();
        for (e, c) in &self.0 {
            out.add_term(bump(*e, k), *c);
        }
        out
    }

    pub fn eval(&self, p: [f64; 4]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.0 {
            let mut m = *c;
            for k in 0..4 {
                m *= p[k].powi(e[k] as i32);
            }
            acc += m;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

/// `sum_alpha c_alpha(point) d^alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp(pub BTreeMap<Alpha, Poly>);

impl DiffOp {
    pub fn identity() -> Self {
        let mut m = BTreeMap::new();
        m.insert([0; 4], Poly::one());
        DiffOp(m)
    }

    fn add(&mut self, a: Alpha, p: Poly) {
        if p.is_zero() {
            return;
        }
        let e = self.0.entry(a).or_default();
        for (k, c) in p.0 {
            e.add_term(k, c);
        }
        if e.is_zero() {
            self.0.remove(&a);
        }
    }

    pub fn order(&self) -> usize {
        self.0.keys().map(|a| a.iter().map(|x| *x as usize).sum()).max().unwrap_or(0)
    }

    /// `d_k o self`.
    pub fn then_partial(&self, k: usize) -> DiffOp {
        let mut out = DiffOp(BTreeMap::new());
        for (a, c) in &self.0 {
            out.add(*a, c.deriv(k));
            out.add(bump(*a, k), c.clone());
        }
        out
    }

    /// `L_i o self` with `L_i = x_0 d_i + x_i d_0`; in `(t, r)` variables `i = 1` gives the radial boost.
    pub fn then_boost(&self, i: usize) -> DiffOp {
        let mut out = DiffOp(BTreeMap::new());
        for (a, c) in &self.0 {
            out.add(*a, c.deriv(i).times_var(0));
            out.add(bump(*a, i), c.times_var(0));
            out.add(*a, c.deriv(0).times_var(i));
            out.add(bump(*a, 0), c.times_var(i));
        }
        out
    }

    pub fn apply(&self, point: [f64; 4], table: &Taylor) -> f64 {
        let mut acc = 0.0;
        for (a, c) in &self.0 {
            acc += c.eval(point) * table.get(*a);
        }
        acc
    }
}

/// One commuted field `d^I L^J` with its label columns.
#[derive(Clone, Debug)]
pub struct Member {
    pub i_label: String,
    pub j_label: String,
    pub op: DiffOp,
    /// `d_k o op` for each coordinate of the table.
    pub grad_ops: Vec<DiffOp>,
    pub order: usize,
}

impl Member {
    fn new(i_label: String, j_label: String, op: DiffOp, vars: Vars) -> Self {
        let grad_ops = (0..vars.count()).map(|k| op.then_partial(k)).collect();
        let order = op.order();
        Member { i_label, j_label, op, grad_ops, order }
    }

    /// `(value, d_t, d_1, d_2, d_3)` of the commuted field.
    pub fn eval(&self, point: [f64; 4], table: &Taylor) -> [f64; 5] {
        let mut out = [0.0; 5];
        out[0] = self.op.apply(point, table);
        for (k, g) in self.grad_ops.iter().enumerate() {
            out[k + 1] = g.apply(point, table);
        }
        out
    }

    pub fn is_base(&self) -> bool {
        self.order == 0
    }
}

/// Radial family `d_t^i L_r^j`, `i + j <= k_max`; labels are the counts.
pub fn radial_family(k_max: usize) -> Vec<Member> {
    let mut out = Vec::new();
    for k in 0..=k_max {
        for j in 0..=k {
            let i = k - j;
            let mut op = DiffOp::identity();
            for _ in 0..j {
                op = op.then_boost(1);
            }
            for _ in 0..i {
                op = op.then_partial(0);
            }
            out.push(Member::new(i.to_string(), j.to_string(), op, Vars::Radial));
        }
    }
    out
}

/// Cartesian family `d^I L^J` with `L^J = L_1^{J_1} L_2^{J_2} L_3^{J_3}`; labels are the index vectors.
pub fn cartesian_family(k_max: usize) -> Vec<Member> {
    let mut out = Vec::new();
    let mut is = Vec::new();
    let mut js = Vec::new();
    for a in 0..=k_max {
        for b in 0..=k_max - a {
            for c in 0..=k_max - a - b {
                for d in 0..=k_max - a - b - c {
                    is.push([a, b, c, d]);
                }
                js.push([a, b, c]);
            }
        }
    }
    let deg = |v: &[usize]| v.iter().sum::<usize>();
    is.sort_by_key(|i| (deg(i), std::cmp::Reverse(*i)));
    js.sort_by_key(|j| (deg(j), std::cmp::Reverse(*j)));
    for k in 0..=k_max {
        for i in &is {
            for j in &js {
                if deg(i) + deg(j) != k {
                    continue;
                }
                let mut op = DiffOp::identity();
                for (axis, n) in j.iter().enumerate().rev() {
                    for _ in 0..*n {
                        op = op.then_boost(axis + 1);
                    }
                }
                for (axis, n) in i.iter().enumerate() {
                    for _ in 0..*n {
                        op = op.then_partial(axis);
                    }
                }
                let il: String = i.iter().map(|x| x.to_string()).collect();
                let jl: String = j.iter().map(|x| x.to_string()).collect();
                out.push(Member::new(il, jl, op, Vars::Cartesian));
            }
        }
    }
    out
}

pub fn family(vars: Vars, k_max: usize) -> Vec<Member> {
    match vars {
        Vars::Radial => radial_family(k_max),
        Vars::Cartesian => cartesian_family(k_max),
    }
}
