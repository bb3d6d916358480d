//! Truncated multivariate Taylor arithmetic over the `2n` coordinates of the
//! tangent bundle (`x^1..x^n`, `y^1..y^n`).
//!
//! A [`Taylor`] holds the Taylor coefficients of a scalar function around a
//! fixed point, truncated to `x`-degree `<= order_x` and `y`-degree
//! `<= order_y`. Every jet also carries its own *valid* orders: taking a
//! `y`-derivative lowers the valid `y`-order by one, products keep the
//! minimum of both operands. Coefficients outside the valid box are never
//! read.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Maximum manifold dimension supported by the jet engine.
pub const MAX_DIM: usize = 4;

type Mono = [u8; 2 * MAX_DIM];

/// Monomial layout and product tables for one `(n, order_x, order_y)`.
pub struct TaylorBasis {
    n: usize,
    order_x: usize,
    order_y: usize,
    monos: Vec<Mono>,
    degrees: Vec<(u8, u8)>,
    lookup: HashMap<Mono, u32>,
    /// Products `(a, b, a*b)` bucketed by the degrees of the result.
    buckets: Vec<Vec<(u32, u32, u32)>>,
    /// `lower[v][m]` = index of `m - e_v`, when `m[v] > 0`.
    lower: Vec<Vec<Option<u32>>>,
}

impl fmt::Debug for TaylorBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaylorBasis")
            .field("n", &self.n)
            .field("order_x", &self.order_x)
            .field("order_y", &self.order_y)
            .field("len", &self.monos.len())
            .finish()
    }
}

fn monos_up_to(n: usize, max_deg: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; n]];
    let mut frontier = out.clone();
    for _ in 0..max_deg {
        let mut next = Vec::new();
        for m in &frontier {
            // non-decreasing last-touched variable avoids duplicates
            let start = m.iter().rposition(|&e| e > 0).unwrap_or(0);
            for v in start..n {
                let mut mm = m.clone();
                mm[v] += 1;
                next.push(mm);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

impl TaylorBasis {
    fn build(n: usize, order_x: usize, order_y: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} unsupported");
        let xs = monos_up_to(n, order_x);
        let ys = monos_up_to(n, order_y);
        let mut monos: Vec<Mono> = Vec::with_capacity(xs.len() * ys.len());
        for xm in &xs {
            for ym in &ys {
                let mut m = [0u8; 2 * MAX_DIM];
                m[..n].copy_from_slice(xm);
                m[n..2 * n].copy_from_slice(ym);
                monos.push(m);
            }
        }
        let deg = |m: &Mono| -> (u8, u8) {
            (m[..n].iter().sum::<u8>(), m[n..2 * n].iter().sum::<u8>())
        };
        monos.sort_by_key(|m| {
            let (dx, dy) = deg(m);
            (dx + dy, dx, std::cmp::Reverse(*m))
        });
        let degrees: Vec<(u8, u8)> = monos.iter().map(deg).collect();
        let lookup: HashMap<Mono, u32> = monos
            .iter()
            .enumerate()
            .map(|(i, m)| (*m, i as u32))
            .collect();

        let nb = (order_x + 1) * (order_y + 1);
        let mut buckets = vec![Vec::new(); nb];
        for (a, ma) in monos.iter().enumerate() {
            let (ax, ay) = degrees[a];
            for (b, mb) in monos.iter().enumerate() {
                let (bx, by) = degrees[b];
                let (rx, ry) = ((ax + bx) as usize, (ay + by) as usize);
                if rx > order_x || ry > order_y {
                    continue;
                }
                let mut r = [0u8; 2 * MAX_DIM];
                for k in 0..2 * n {
                    r[k] = ma[k] + mb[k];
                }
                let ri = lookup[&r];
                buckets[rx * (order_y + 1) + ry].push((a as u32, b as u32, ri));
            }
        }

        let lower = (0..2 * n)
            .map(|v| {
                monos
                    .iter()
                    .map(|m| {
                        if m[v] == 0 {
                            None
                        } else {
                            let mut mm = *m;
                            mm[v] -= 1;
                            Some(lookup[&mm])
                        }
                    })
                    .collect()
            })
            .collect();

        TaylorBasis {
            n,
            order_x,
            order_y,
            monos,
            degrees,
            lookup,
            buckets,
            lower,
        }
    }

    /// Shared basis for `(n, order_x, order_y)`; built once per process.
    pub fn get(n: usize, order_x: usize, order_y: usize) -> Arc<TaylorBasis> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<TaylorBasis>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (n, order_x, order_y);
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(&key) {
            return b.clone();
        }
        let built = Arc::new(TaylorBasis::build(n, order_x, order_y));
        cache
            .lock()
            .expect("basis cache poisoned")
            .entry(key)
            .or_insert(built)
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.order_x, self.order_y)
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    /// Index of the monomial `x^alpha y^beta`, exponents given per coordinate.
    pub fn index_of(&self, x_exp: &[u8], y_exp: &[u8]) -> Option<usize> {
        let mut m = [0u8; 2 * MAX_DIM];
        m[..self.n].copy_from_slice(x_exp);
        m[self.n..2 * self.n].copy_from_slice(y_exp);
        self.lookup.get(&m).map(|&i| i as usize)
    }

    fn exps(&self, idx: usize) -> &Mono {
        &self.monos[idx]
    }
}

/// Scalar types the closed-form metric expressions are evaluated over.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant_like(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn recip(self) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn constant_like(&self, v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// Truncated multivariate Taylor polynomial (coefficients, not derivatives).
#[derive(Clone)]
pub struct Taylor {
    basis: Arc<TaylorBasis>,
    valid: (i8, i8),
    c: Vec<f64>,
}

impl fmt::Debug for Taylor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Taylor")
            .field("value", &self.c.first())
            .field("valid", &self.valid)
            .finish()
    }
}

impl Taylor {
    pub fn constant(basis: &Arc<TaylorBasis>, v: f64) -> Self {
        let mut c = vec![0.0; basis.len()];
        c[0] = v;
        Taylor {
            basis: basis.clone(),
            valid: (basis.order_x as i8, basis.order_y as i8),
            c,
        }
    }

    /// Coordinate variable `x^i` (`i < n`) or `y^(i-n)` (`i >= n`) at `value`.
    pub fn variable(basis: &Arc<TaylorBasis>, var: usize, value: f64) -> Self {
        let mut t = Taylor::constant(basis, value);
        let n = basis.n;
        let is_x = var < n;
        if (is_x && basis.order_x > 0) || (!is_x && basis.order_y > 0) {
            let mut m = [0u8; 2 * MAX_DIM];
            m[var] = 1;
            t.c[basis.lookup[&m] as usize] = 1.0;
        }
        t
    }

    /// Seeds `(x, y)` as independent variables of the given basis.
    pub fn seed(basis: &Arc<TaylorBasis>, x: &[f64], y: &[f64]) -> (Vec<Taylor>, Vec<Taylor>) {
        let n = basis.n;
        let xs = (0..n).map(|i| Taylor::variable(basis, i, x[i])).collect();
        let ys = (0..n).map(|i| Taylor::variable(basis, n + i, y[i])).collect();
        (xs, ys)
    }

    pub fn basis(&self) -> &Arc<TaylorBasis> {
        &self.basis
    }

    pub fn valid(&self) -> (i8, i8) {
        self.valid
    }

    pub fn is_valid(&self) -> bool {
        self.valid.0 >= 0 && self.valid.1 >= 0
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Constant term. Panics if the jet lost all valid orders.
    pub fn val(&self) -> f64 {
        assert!(self.is_valid(), "jet has no valid coefficients left");
        self.c[0]
    }

    /// Taylor coefficient of `x^a y^b` (exponent vectors).
    pub fn coeff(&self, x_exp: &[u8], y_exp: &[u8]) -> Option<f64> {
        let dx: u8 = x_exp.iter().sum();
        let dy: u8 = y_exp.iter().sum();
        if dx as i8 > self.valid.0 || dy as i8 > self.valid.1 {
            return None;
        }
        self.basis.index_of(x_exp, y_exp).map(|i| self.c[i])
    }

    fn same_basis(&self, other: &Taylor) {
        debug_assert!(
            Arc::ptr_eq(&self.basis, &other.basis),
            "mixing jets from different bases"
        );
    }

    fn min_valid(&self, other: &Taylor) -> (i8, i8) {
        (self.valid.0.min(other.valid.0), self.valid.1.min(other.valid.1))
    }

    fn invalid(&self) -> Taylor {
        Taylor {
            basis: self.basis.clone(),
            valid: (-1, -1),
            c: vec![0.0; self.c.len()],
        }
    }

    /// Partial derivative with respect to coordinate `var` (same layout as
    /// [`Taylor::variable`]).
    pub fn d(&self, var: usize) -> Taylor {
        let n = self.basis.n;
        let mut valid = self.valid;
        if var < n {
            valid.0 -= 1;
        } else {
            valid.1 -= 1;
        }
        if valid.0 < 0 || valid.1 < 0 {
            let mut t = self.invalid();
            t.valid = valid;
            return t;
        }
        let mut c = vec![0.0; self.c.len()];
        let lower = &self.basis.lower[var];
        for (m, coef) in self.c.iter().enumerate() {
            if let Some(t) = lower[m] {
                let (dx, dy) = self.basis.degrees[m];
                if dx as i8 <= self.valid.0 && dy as i8 <= self.valid.1 {
                    let e = self.basis.monos[m][var] as f64;
                    c[t as usize] += coef * e;
                }
            }
        }
        Taylor {
            basis: self.basis.clone(),
            valid,
            c,
        }
    }

    pub fn dx(&self, i: usize) -> Taylor {
        self.d(i)
    }

    pub fn dy(&self, i: usize) -> Taylor {
        self.d(self.basis.n + i)
    }

    fn mul_jet(&self, other: &Taylor) -> Taylor {
        self.same_basis(other);
        let valid = self.min_valid(other);
        if valid.0 < 0 || valid.1 < 0 {
            let mut t = self.invalid();
            t.valid = valid;
            return t;
        }
        let oy = self.basis.order_y + 1;
        let mut c = vec![0.0; self.c.len()];
        for rx in 0..=valid.0 as usize {
            for ry in 0..=valid.1 as usize {
                for &(a, b, r) in &self.basis.buckets[rx * oy + ry] {
                    c[r as usize] += self.c[a as usize] * other.c[b as usize];
                }
            }
        }
        Taylor {
            basis: self.basis.clone(),
            valid,
            c,
        }
    }

    /// Applies a univariate function given its Taylor coefficients
    /// `f_k = f^(k)(c0)/k!` at the constant term.
    fn compose(&self, coeffs: impl Fn(f64, usize) -> f64) -> Taylor {
        if !self.is_valid() {
            return self.clone();
        }
        let depth = (self.valid.0 + self.valid.1) as usize;
        let c0 = self.c[0];
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut acc = Taylor::constant(&self.basis, coeffs(c0, depth));
        acc.valid = self.valid;
        for k in (0..depth).rev() {
            acc = acc.mul_jet(&h);
            acc.c[0] += coeffs(c0, k);
        }
        acc
    }

    /// Embeds a jet from a smaller basis (same `n`) into `target`.
    /// Valid orders are clipped to what both bases can represent. When the
    /// function is known not to depend on `y` (e.g. a density on `M`), its
    /// vanishing `y`-coefficients are exact and the full `y`-order is kept.
    pub fn embed(&self, target: &Arc<TaylorBasis>, y_independent: bool) -> Taylor {
        assert_eq!(self.basis.n, target.n);
        let vy = if y_independent {
            target.order_y as i8
        } else {
            self.valid.1.min(target.order_y as i8)
        };
        let valid = (self.valid.0.min(target.order_x as i8), vy);
        let mut c = vec![0.0; target.len()];
        for (i, m) in self.basis.monos.iter().enumerate() {
            let (dx, dy) = self.basis.degrees[i];
            if dx as i8 > valid.0 || dy as i8 > valid.1 {
                continue;
            }
            if let Some(&t) = target.lookup.get(m) {
                c[t as usize] = self.c[i];
            }
        }
        Taylor {
            basis: target.clone(),
            valid,
            c,
        }
    }

    /// Derivative `D^alpha_x D^beta_y` at the expansion point.
    /// `x_exp`, `y_exp` are exponent vectors.
    pub fn partial(&self, x_exp: &[u8], y_exp: &[u8]) -> Option<f64> {
        let fact = |e: &[u8]| -> f64 {
            e.iter()
                .map(|&k| (1..=k as u64).product::<u64>() as f64)
                .product()
        };
        self.coeff(x_exp, y_exp)
            .map(|c| c * fact(x_exp) * fact(y_exp))
    }

    /// All `(x_exp, y_exp, partial)` entries inside the valid box.
    pub fn partials(&self) -> Vec<(Vec<u8>, Vec<u8>, f64)> {
        let n = self.basis.n;
        let mut out = Vec::new();
        for (i, m) in self.basis.monos.iter().enumerate() {
            let (dx, dy) = self.basis.degrees[i];
            if dx as i8 > self.valid.0 || dy as i8 > self.valid.1 {
                continue;
            }
            let xe = m[..n].to_vec();
            let ye = m[n..2 * n].to_vec();
            let p = self.partial(&xe, &ye).expect("monomial inside basis");
            out.push((xe, ye, p));
        }
        out
    }

    /// Exponents of monomial `idx` in the basis.
    pub fn monomial(&self, idx: usize) -> (Vec<u8>, Vec<u8>) {
        let n = self.basis.n;
        let m = self.basis.exps(idx);
        (m[..n].to_vec(), m[n..2 * n].to_vec())
    }

    /// Adds `w * other` in place; used for quadrature sums.
    pub fn add_scaled(&mut self, other: &Taylor, w: f64) {
        self.same_basis(other);
        self.valid = self.min_valid(other);
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += w * b;
        }
    }
}

impl Scalar for Taylor {
    fn constant_like(&self, v: f64) -> Self {
        Taylor::constant(&self.basis, v)
    }
    fn value(&self) -> f64 {
        self.val()
    }
    fn sqrt(self) -> Self {
        self.powf(0.5)
    }
    fn ln(self) -> Self {
        self.compose(|c0, k| {
            if k == 0 {
                c0.ln()
            } else {
                let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                s / (k as f64 * c0.powi(k as i32))
            }
        })
    }
    fn exp(self) -> Self {
        self.compose(|c0, k| c0.exp() / (1..=k).map(|i| i as f64).product::<f64>())
    }
    fn recip(self) -> Self {
        self.powf(-1.0)
    }
    fn powf(self, p: f64) -> Self {
        self.compose(|c0, k| {
            // binom(p, k) c0^(p-k)
            let mut b = 1.0;
            for i in 0..k {
                b *= (p - i as f64) / (i as f64 + 1.0);
            }
            b * c0.powf(p - k as f64)
        })
    }
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(mut self, rhs: Taylor) -> Taylor {
        self.same_basis(&rhs);
        self.valid = self.min_valid(&rhs);
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
        self
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(mut self, rhs: Taylor) -> Taylor {
        self.same_basis(&rhs);
        self.valid = self.min_valid(&rhs);
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
        self
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        self.mul_jet(&rhs)
    }
}

impl<'a> Mul<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        self.mul_jet(rhs)
    }
}

impl Div for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        self.mul_jet(&rhs.recip())
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(mut self) -> Taylor {
        for a in self.c.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Add<f64> for Taylor {
    type Output = Taylor;
    fn add(mut self, rhs: f64) -> Taylor {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Taylor {
    type Output = Taylor;
    fn sub(mut self, rhs: f64) -> Taylor {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(mut self, rhs: f64) -> Taylor {
        for a in self.c.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl Div<f64> for Taylor {
    type Output = Taylor;
    fn div(self, rhs: f64) -> Taylor {
        self * (1.0 / rhs)
    }
}

/// Sum of a non-empty iterator of scalars.
pub fn sum<T: Scalar>(mut it: impl Iterator<Item = T>) -> T {
    let first = it.next().expect("sum over empty iterator");
    it.fold(first, |a, b| a + b)
}
