//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Taylor`] value carries the Taylor coefficients of a smooth function of
//! `nvars` variables around a fixed point, truncated at total degree `order`
//! (at most 3). Evaluating a chart or a sphere family on seeded variables
//! yields exact partial derivatives up to that order, which is how analytic
//! jets are produced throughout the crate.
//!
//! Coefficients are stored per monomial; the derivative for a multi-index
//! `alpha` is `alpha! * coefficient`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 3;

/// Monomial bookkeeping shared by all values with the same `(nvars, order)`.
pub struct Layout {
    nvars: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    // (lhs, rhs, product) triples for truncated multiplication
    products: Vec<(u16, u16, u16)>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.exponents.len())
            .finish()
    }
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        for degree in 0..=order {
            let mut current = vec![0u8; nvars];
            push_with_degree(&mut exponents, &mut current, 0, degree);
        }
        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (a, ea) in exponents.iter().enumerate() {
            for (b, eb) in exponents.iter().enumerate() {
                let deg: usize = ea.iter().chain(eb.iter()).map(|&x| x as usize).sum();
                if deg > order {
                    continue;
                }
                let prod: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                products.push((a as u16, b as u16, index[&prod] as u16));
            }
        }
        Layout {
            nvars,
            order,
            exponents,
            index,
            products,
        }
    }

    /// Shared layout for `nvars` variables truncated at `order`.
    pub fn get(nvars: usize, order: usize) -> &'static Layout {
        assert!(order <= MAX_ORDER, "Taylor order {order} exceeds {MAX_ORDER}");
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static Layout>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("layout cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Box::leak(Box::new(Layout::build(nvars, order))))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }
}

// Degree-1 monomials come out in variable order, so x_i sits at index 1 + i.
fn push_with_degree(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, var: usize, remaining: usize) {
    if var == current.len() {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k as u8;
        push_with_degree(out, current, var + 1, remaining - k);
    }
    current[var] = 0;
}

/// Truncated Taylor expansion of a scalar function.
#[derive(Clone)]
pub struct Taylor {
    layout: &'static Layout,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Taylor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Taylor")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Taylor {
    /// A plain number (no variables).
    pub fn scalar(value: f64) -> Taylor {
        Taylor::constant_in(Layout::get(0, 0), value)
    }

    pub fn constant_in(layout: &'static Layout, value: f64) -> Taylor {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Taylor { layout, coeffs }
    }

    /// Seed independent variables `x_i = point[i] + dx_i`.
    pub fn seed(point: &[f64], order: usize) -> Vec<Taylor> {
        let layout = Layout::get(point.len(), order);
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut t = Taylor::constant_in(layout, v);
                if order >= 1 {
                    t.coeffs[1 + i] = 1.0;
                }
                t
            })
            .collect()
    }

    /// Constants as plain scalars (order 0, no variables).
    pub fn constants(point: &[f64]) -> Vec<Taylor> {
        point.iter().map(|&v| Taylor::scalar(v)).collect()
    }

    /// A constant sharing this value's layout.
    pub fn cst(&self, value: f64) -> Taylor {
        Taylor::constant_in(self.layout, value)
    }

    pub fn zero_like(&self) -> Taylor {
        self.cst(0.0)
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial derivative along the listed variables (repetition allowed).
    /// Returns 0 beyond the truncation order.
    pub fn derivative(&self, vars: &[usize]) -> f64 {
        if vars.len() > self.layout.order {
            return 0.0;
        }
        let mut exps = vec![0u8; self.layout.nvars];
        for &v in vars {
            exps[v] += 1;
        }
        let factorial: f64 = exps
            .iter()
            .map(|&k| (1..=k as u32).product::<u32>() as f64)
            .product();
        self.coeffs[self.layout.index[&exps]] * factorial
    }

    /// Exact partial derivative as a function, one order lower.
    pub fn partial(&self, var: usize) -> Taylor {
        let src = self.layout;
        // constants, and values truncated to order 0, differentiate to zero
        if src.nvars == 0 || src.order == 0 {
            return self.zero_like();
        }
        assert!(var < src.nvars, "variable {var} out of range");
        let layout = Layout::get(src.nvars, src.order - 1);
        let mut coeffs = vec![0.0; layout.len()];
        for (i, e) in layout.exponents.iter().enumerate() {
            let mut up = e.clone();
            up[var] += 1;
            coeffs[i] = (up[var] as f64) * self.coeffs[src.index[&up]];
        }
        Taylor { layout, coeffs }
    }

    /// Drops terms above `order`.
    pub fn truncate(&self, order: usize) -> Taylor {
        let src = self.layout;
        if order >= src.order {
            return self.clone();
        }
        let layout = Layout::get(src.nvars, order);
        let coeffs = layout.exponents.iter().map(|e| self.coeffs[src.index[e]]).collect();
        Taylor { layout, coeffs }
    }

    fn promote(&self, layout: &'static Layout) -> Taylor {
        debug_assert_eq!(self.coeffs.len(), 1);
        Taylor::constant_in(layout, self.coeffs[0])
    }

    // Brings a pair onto a common layout; constants promote to the other side.
    fn aligned<'a>(a: &'a Taylor, b: &'a Taylor) -> (std::borrow::Cow<'a, Taylor>, std::borrow::Cow<'a, Taylor>) {
        use std::borrow::Cow;
        if std::ptr::eq(a.layout, b.layout) {
            (Cow::Borrowed(a), Cow::Borrowed(b))
        } else if b.coeffs.len() == 1 {
            (Cow::Borrowed(a), Cow::Owned(b.promote(a.layout)))
        } else if a.coeffs.len() == 1 {
            (Cow::Owned(a.promote(b.layout)), Cow::Borrowed(b))
        } else {
            panic!(
                "mixing Taylor layouts ({}, {}) and ({}, {})",
                a.layout.nvars, a.layout.order, b.layout.nvars, b.layout.order
            );
        }
    }

    fn mul_ref(&self, rhs: &Taylor) -> Taylor {
        let (a, b) = Taylor::aligned(self, rhs);
        let layout = a.layout;
        let mut coeffs = vec![0.0; layout.len()];
        for &(i, j, k) in &layout.products {
            coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
        Taylor { layout, coeffs }
    }

    /// `f(self)` from the scaled derivatives `f^(k)(a) / k!` at `a = self.value()`.
    fn compose(&self, scaled: [f64; 4]) -> Taylor {
        let order = self.layout.order;
        let mut out = self.cst(scaled[0]);
        if order == 0 || self.layout.nvars == 0 {
            return out;
        }
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut power = delta.clone();
        out += &(&power * scaled[1]);
        for &s in scaled.iter().take(order + 1).skip(2) {
            power = power.mul_ref(&delta);
            out += &(&power * s);
        }
        out
    }

    pub fn sqrt(&self) -> Taylor {
        let s = self.value().sqrt();
        self.compose([
            s,
            0.5 / s,
            -1.0 / (8.0 * s * s * s),
            1.0 / (16.0 * s.powi(5)),
        ])
    }

    pub fn recip(&self) -> Taylor {
        let a = self.value();
        self.compose([1.0 / a, -1.0 / (a * a), 1.0 / a.powi(3), -1.0 / a.powi(4)])
    }

    pub fn sin(&self) -> Taylor {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s / 2.0, -c / 6.0])
    }

    pub fn cos(&self) -> Taylor {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c / 2.0, s / 6.0])
    }

    pub fn exp(&self) -> Taylor {
        let e = self.value().exp();
        self.compose([e, e, e / 2.0, e / 6.0])
    }

    pub fn powi(&self, n: i32) -> Taylor {
        let a = self.value();
        let nf = n as f64;
        self.compose([
            a.powi(n),
            nf * a.powi(n - 1),
            nf * (nf - 1.0) / 2.0 * a.powi(n - 2),
            nf * (nf - 1.0) * (nf - 2.0) / 6.0 * a.powi(n - 3),
        ])
    }

    pub fn square(&self) -> Taylor {
        self.mul_ref(self)
    }
}

/// Euclidean dot product of Taylor-valued vectors.
pub fn dot(a: &[Taylor], b: &[Taylor]) -> Taylor {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = a[0].mul_ref(&b[0]);
    for (x, y) in a.iter().zip(b).skip(1) {
        acc += &x.mul_ref(y);
    }
    acc
}

/// Determinant by cofactor expansion along the first row (small matrices only).
pub fn det(m: &[Vec<Taylor>]) -> Taylor {
    let k = m.len();
    match k {
        0 => Taylor::scalar(1.0),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc = m[0][0].zero_like();
            for col in 0..k {
                let minor: Vec<Vec<Taylor>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != col)
                            .map(|(_, x)| x.clone())
                            .collect()
                    })
                    .collect();
                let term = &m[0][col] * &det(&minor);
                if col % 2 == 0 {
                    acc += &term;
                } else {
                    acc -= &term;
                }
            }
            acc
        }
    }
}

/// Solves `A X = B` by Gaussian elimination, pivoting on the values.
/// `b` holds the right-hand sides as rows of `A`'s height. Returns `None`
/// when a pivot value vanishes.
pub fn solve(mut a: Vec<Vec<Taylor>>, mut b: Vec<Vec<Taylor>>) -> Option<Vec<Vec<Taylor>>> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| {
            a[x][col].value().abs().total_cmp(&a[y][col].value().abs())
        })?;
        if a[piv][col].value() == 0.0 || !a[piv][col].value().is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for row in col + 1..k {
            let f = &a[row][col] * &inv;
            for c in col..k {
                let t = &f * &a[col][c];
                a[row][c] -= &t;
            }
            for c in 0..b[row].len() {
                let t = &f * &b[col][c];
                b[row][c] -= &t;
            }
        }
    }
    for col in (0..k).rev() {
        let inv = a[col][col].recip();
        for c in 0..b[col].len() {
            let mut v = b[col][c].clone();
            for j in col + 1..k {
                v -= &(&a[col][j] * &b[j][c]);
            }
            b[col][c] = v * &inv;
        }
    }
    Some(b)
}

/// Values of a Taylor vector.
pub fn values(v: &[Taylor]) -> Vec<f64> {
    v.iter().map(Taylor::value).collect()
}

impl AddAssign<&Taylor> for Taylor {
    fn add_assign(&mut self, rhs: &Taylor) {
        if std::ptr::eq(self.layout, rhs.layout) {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a += b;
            }
        } else {
            *self = &*self + rhs;
        }
    }
}

impl AddAssign<Taylor> for Taylor {
    fn add_assign(&mut self, rhs: Taylor) {
        *self += &rhs;
    }
}

impl SubAssign<&Taylor> for Taylor {
    fn sub_assign(&mut self, rhs: &Taylor) {
        if std::ptr::eq(self.layout, rhs.layout) {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a -= b;
            }
        } else {
            *self = &*self - rhs;
        }
    }
}

impl SubAssign<Taylor> for Taylor {
    fn sub_assign(&mut self, rhs: Taylor) {
        *self -= &rhs;
    }
}

impl MulAssign<f64> for Taylor {
    fn mul_assign(&mut self, rhs: f64) {
        for a in &mut self.coeffs {
            *a *= rhs;
        }
    }
}

impl Add<&Taylor> for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        let (a, b) = Taylor::aligned(self, rhs);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect();
        Taylor {
            layout: a.layout,
            coeffs,
        }
    }
}

impl Sub<&Taylor> for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        let (a, b) = Taylor::aligned(self, rhs);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
        Taylor {
            layout: a.layout,
            coeffs,
        }
    }
}

impl Mul<&Taylor> for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        self.mul_ref(rhs)
    }
}

impl Div<&Taylor> for &Taylor {
    type Output = Taylor;
    fn div(self, rhs: &Taylor) -> Taylor {
        self.mul_ref(&rhs.recip())
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        Taylor {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|x| -x).collect(),
        }
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(mut self) -> Taylor {
        for a in &mut self.coeffs {
            *a = -*a;
        }
        self
    }
}

impl Add<f64> for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: f64) -> Taylor {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Sub<f64> for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: f64) -> Taylor {
        let mut out = self.clone();
        out.coeffs[0] -= rhs;
        out
    }
}

impl Mul<f64> for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: f64) -> Taylor {
        Taylor {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|x| x * rhs).collect(),
        }
    }
}

impl Div<f64> for &Taylor {
    type Output = Taylor;
    fn div(self, rhs: f64) -> Taylor {
        self * (1.0 / rhs)
    }
}

impl Mul<&Taylor> for f64 {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        rhs * self
    }
}

impl Add<&Taylor> for f64 {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        rhs + self
    }
}

impl Sub<&Taylor> for f64 {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        &(-rhs) + self
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr<Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor { (&self).$m(&rhs) }
        }
        impl $tr<&Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: &Taylor) -> Taylor { (&self).$m(rhs) }
        }
        impl $tr<Taylor> for &Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor { self.$m(&rhs) }
        }
        impl $tr<f64> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: f64) -> Taylor { (&self).$m(rhs) }
        }
        impl $tr<Taylor> for f64 {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor { self.$m(&rhs) }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul);

impl Div<Taylor> for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        &self / &rhs
    }
}

impl Div<&Taylor> for Taylor {
    type Output = Taylor;
    fn div(self, rhs: &Taylor) -> Taylor {
        &self / rhs
    }
}

impl Div<Taylor> for &Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        self / &rhs
    }
}

impl Div<f64> for Taylor {
    type Output = Taylor;
    fn div(self, rhs: f64) -> Taylor {
        &self / rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // f(x, y) = sin(x) * exp(y) / (1 + x^2 y)
    fn sample(v: &[Taylor]) -> Taylor {
        let (x, y) = (&v[0], &v[1]);
        let num = x.sin() * y.exp();
        let den = (x.square() * y) + 1.0;
        num / den
    }

    fn sample_f64(x: f64, y: f64) -> f64 {
        x.sin() * y.exp() / (1.0 + x * x * y)
    }

    #[test]
    fn layout_sizes() {
        assert_eq!(Layout::get(2, 3).len(), 10);
        assert_eq!(Layout::get(3, 3).len(), 20);
        assert_eq!(Layout::get(4, 2).len(), 15);
        assert_eq!(Layout::get(0, 3).len(), 1);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (x0, y0) = (0.4, -0.3);
        let f = sample(&Taylor::seed(&[x0, y0], 3));
        assert!((f.value() - sample_f64(x0, y0)).abs() < 1e-15);
        let h = 1e-4;
        let fx = (sample_f64(x0 + h, y0) - sample_f64(x0 - h, y0)) / (2.0 * h);
        assert!((f.derivative(&[0]) - fx).abs() < 1e-7);
        let fxy = (sample_f64(x0 + h, y0 + h) - sample_f64(x0 + h, y0 - h)
            - sample_f64(x0 - h, y0 + h)
            + sample_f64(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert!((f.derivative(&[0, 1]) - fxy).abs() < 1e-6);
        assert!((f.derivative(&[1, 0]) - f.derivative(&[0, 1])).abs() < 1e-14);
        // third mixed derivative by differencing the exact second derivative
        let g = |y: f64| sample(&Taylor::seed(&[x0, y], 3)).derivative(&[0, 0]);
        let fxxy = (g(y0 + h) - g(y0 - h)) / (2.0 * h);
        assert!((f.derivative(&[0, 0, 1]) - fxxy).abs() < 1e-7);
    }

    #[test]
    fn elementary_functions_univariate() {
        let x = &Taylor::seed(&[0.7], 3)[0];
        let s = x.sqrt();
        assert!((s.derivative(&[0, 0, 0]) - 3.0 / 8.0 * 0.7f64.powf(-2.5)).abs() < 1e-12);
        let c = x.cos();
        assert!((c.derivative(&[0, 0, 0]) - 0.7f64.sin()).abs() < 1e-14);
        let p = x.powi(3);
        assert!((p.derivative(&[0, 0, 0]) - 6.0).abs() < 1e-13);
        let r = x.recip();
        assert!((r.derivative(&[0, 0]) - 2.0 / 0.7f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn constants_promote() {
        let v = Taylor::seed(&[1.0, 2.0], 2);
        let k = Taylor::scalar(3.0);
        let s = &v[0] * &k + &k;
        assert_eq!(s.value(), 6.0);
        assert_eq!(s.derivative(&[0]), 3.0);
        assert_eq!(s.derivative(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn partial_and_truncate() {
        let (x0, y0) = (0.4, -0.3);
        let f = sample(&Taylor::seed(&[x0, y0], 3));
        let fx = f.partial(0);
        assert_eq!(fx.layout().order(), 2);
        assert!((fx.value() - f.derivative(&[0])).abs() < 1e-15);
        assert!((fx.derivative(&[1, 1]) - f.derivative(&[0, 1, 1])).abs() < 1e-13);
        assert!((fx.partial(0).derivative(&[1]) - f.derivative(&[0, 0, 1])).abs() < 1e-13);
        let t = f.truncate(1);
        assert_eq!(t.layout().len(), 3);
        assert_eq!(t.derivative(&[1]), f.derivative(&[1]));
    }

    #[test]
    fn determinant_and_solve() {
        let x = Taylor::seed(&[0.5, 2.0], 2);
        let m = vec![
            vec![x[0].clone(), x[1].cst(1.0), x[1].clone()],
            vec![x[1].cst(2.0), x[0].square(), x[1].cst(0.0)],
            vec![x[1].cst(1.0), x[1].cst(3.0), x[0].clone()],
        ];
        let d = det(&m);
        let d_f = |a: f64, b: f64| a * (a * a * a) - (2.0 * a) + b * (6.0 - a * a);
        assert!((d.value() - d_f(0.5, 2.0)).abs() < 1e-14);
        let h = 1e-6;
        let dx = (d_f(0.5 + h, 2.0) - d_f(0.5 - h, 2.0)) / (2.0 * h);
        assert!((d.derivative(&[0]) - dx).abs() < 1e-7);
        // A (A^{-1} e) = e, derivatives included
        let rhs = vec![vec![x[0].cst(1.0)], vec![x[0].cst(0.0)], vec![x[0].cst(0.0)]];
        let sol = solve(m.clone(), rhs).unwrap();
        for (r, row) in m.iter().enumerate() {
            let mut acc = row[0].zero_like();
            for c in 0..3 {
                acc += &(&row[c] * &sol[c][0]);
            }
            let want = if r == 0 { 1.0 } else { 0.0 };
            assert!((acc.value() - want).abs() < 1e-13);
            assert!(acc.derivative(&[0]).abs() < 1e-12);
            assert!(acc.derivative(&[0, 1]).abs() < 1e-11);
        }
    }
}
