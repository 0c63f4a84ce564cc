//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] is the Taylor expansion of a scalar function about a base point,
//! truncated at total degree `order`. Coefficients are stored densely in
//! graded-lexicographic order, so the coefficients of a lower-order
//! truncation are a prefix of the full vector. Internally the coefficient of
//! multi-index `α` is the normalized Taylor coefficient `∂^α f / α!`;
//! [`Jet::partial`] converts back to the plain derivative.
//!
//! Binary operations between jets of different orders truncate to the
//! smaller order, which lets derivative-consuming pipelines mix quantities of
//! different residual orders without bookkeeping at every call site.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Values with magnitude below this are treated as poles for division and tan.
pub const POLE_THRESHOLD: f64 = 1e-12;

const NONE: u32 = u32::MAX;

/// Multi-index bookkeeping shared by every jet with the same
/// `(nvars, order)`.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    degree_start: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
    product_end: Vec<usize>,
    raise: Vec<Vec<u32>>,
    factorial: Vec<f64>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Self {
        let mut indices: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for deg in 0..=order {
            degree_start.push(indices.len());
            let mut level = Vec::new();
            compositions(nvars, deg, &mut vec![0u8; nvars], 0, &mut level);
            // lexicographically descending so that x0 comes before x1 in each degree
            level.sort_by(|a, b| b.cmp(a));
            indices.extend(level);
        }
        degree_start.push(indices.len());

        let lookup: HashMap<Vec<u8>, usize> =
            indices.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();
        let degree = |a: &[u8]| a.iter().map(|&x| x as usize).sum::<usize>();

        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degree(a) + degree(b) > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, lookup[&sum] as u32));
            }
        }
        products.sort_by_key(|&(_, _, k)| degree(&indices[k as usize]));
        let mut product_end = vec![0; order + 1];
        for (d, end) in product_end.iter_mut().enumerate() {
            *end = products
                .iter()
                .take_while(|&&(_, _, k)| degree(&indices[k as usize]) <= d)
                .count();
        }

        let raise = (0..nvars)
            .map(|v| {
                indices
                    .iter()
                    .map(|a| {
                        let mut up = a.clone();
                        up[v] += 1;
                        lookup.get(&up).map_or(NONE, |&k| k as u32)
                    })
                    .collect()
            })
            .collect();

        let factorial = indices
            .iter()
            .map(|a| a.iter().map(|&x| fact(x as usize)).product())
            .collect();

        Layout {
            nvars,
            order,
            indices,
            degree_start,
            lookup,
            products,
            product_end,
            raise,
            factorial,
        }
    }

    /// Number of coefficients of a jet truncated at `order`.
    pub fn count(&self, order: usize) -> usize {
        self.degree_start[order + 1]
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub fn multi_index(&self, k: usize) -> &[u8] {
        &self.indices[k]
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.order
    }
}

fn compositions(nvars: usize, remaining: usize, cur: &mut Vec<u8>, pos: usize, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == nvars {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        return;
    }
    if nvars == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in 0..=remaining {
        cur[pos] = k as u8;
        compositions(nvars, remaining - k, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("layout cache poisoned");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
        .clone()
}

/// The base point and maximal order shared by a family of jets.
#[derive(Debug)]
pub struct JetSpace {
    point: Vec<f64>,
    layout: Arc<Layout>,
}

impl JetSpace {
    pub fn new(point: &[f64], order: usize) -> Arc<Self> {
        Arc::new(JetSpace {
            point: point.to_vec(),
            layout: layout(point.len(), order),
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn constant(self: &Arc<Self>, c: f64) -> Jet {
        let order = self.order();
        let mut coeffs = vec![0.0; self.layout.count(order)];
        coeffs[0] = c;
        Jet { space: self.clone(), order, coeffs }
    }

    pub fn zero(self: &Arc<Self>) -> Jet {
        self.constant(0.0)
    }

    /// Jet of the coordinate function `q^i`.
    pub fn variable(self: &Arc<Self>, i: usize) -> Result<Jet> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim() });
        }
        let mut jet = self.constant(self.point[i]);
        if self.order() >= 1 {
            let mut alpha = vec![0u8; self.dim()];
            alpha[i] = 1;
            let k = self.layout.index_of(&alpha).expect("first-order index");
            jet.coeffs[k] = 1.0;
        }
        Ok(jet)
    }
}

/// Jet of the coordinate function `q^i` about `point`, truncated at `order`.
pub fn lift_variable(i: usize, point: &[f64], order: usize) -> Result<Jet> {
    JetSpace::new(point, order).variable(i)
}

/// Elementary functions available to [`Jet::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Neg,
    Recip,
    PowInt(i32),
}

#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("point", &self.space.point)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Normalized Taylor coefficients in graded-lexicographic order.
    pub fn taylor_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn same_space(&self, other: &Jet) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            || (self.space.point == other.space.point
                && self.space.layout.nvars == other.space.layout.nvars)
    }

    pub fn constant_like(&self, c: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = c;
        Jet { space: self.space.clone(), order: self.order, coeffs }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        let n = self.space.layout.count(order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: self.coeffs[..n].to_vec(),
        }
    }

    /// The partial derivative `∂^α f` at the base point.
    pub fn partial(&self, alpha: &[u8]) -> Result<f64> {
        if alpha.len() != self.space.dim() {
            return Err(Error::IndexOutOfRange { index: alpha.len(), dim: self.space.dim() });
        }
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > self.order {
            return Err(Error::OrderExceeded { requested: deg, order: self.order });
        }
        let k = self.space.layout.index_of(alpha).expect("multi-index within layout");
        Ok(self.coeffs[k] * self.space.layout.factorial[k])
    }

    /// Partial derivative `∂f/∂q^var` as a jet of one lower order.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        let lay = &self.space.layout;
        if var >= lay.nvars {
            return Err(Error::IndexOutOfRange { index: var, dim: lay.nvars });
        }
        if self.order == 0 {
            return Err(Error::OrderExceeded { requested: 1, order: 0 });
        }
        let order = self.order - 1;
        let coeffs = (0..lay.count(order))
            .map(|k| {
                let up = lay.raise[var][k] as usize;
                (lay.indices[k][var] as f64 + 1.0) * self.coeffs[up]
            })
            .collect();
        Ok(Jet { space: self.space.clone(), order, coeffs })
    }

    pub fn gradient_values(&self) -> Result<Vec<f64>> {
        (0..self.space.dim())
            .map(|v| {
                let mut alpha = vec![0u8; self.space.dim()];
                alpha[v] = 1;
                self.partial(&alpha)
            })
            .collect()
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        debug_assert!(self.same_space(other), "jet spaces differ");
        let order = self.order.min(other.order);
        let lay = &self.space.layout;
        let mut coeffs = vec![0.0; lay.count(order)];
        for &(i, j, k) in &lay.products[..lay.product_end[order]] {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet { space: self.space.clone(), order, coeffs }
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert!(self.same_space(other), "jet spaces differ");
        let order = self.order.min(other.order);
        let n = self.space.layout.count(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(&a, &b)| f(a, b))
            .collect();
        Jet { space: self.space.clone(), order, coeffs }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            space: self.space.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    /// `Σ_k c[k] (f − f(q₀))^k`, i.e. composition with a univariate
    /// function whose normalized Taylor coefficients at `f(q₀)` are `c`.
    fn compose(&self, c: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let top = c.len() - 1;
        let mut acc = self.constant_like(c[top]);
        for k in (0..top).rev() {
            acc = acc.mul_jet(&h);
            acc.coeffs[0] += c[k];
        }
        acc
    }

    pub fn sin(&self) -> Jet {
        let x = self.value();
        let c: Vec<f64> = (0..=self.order)
            .map(|k| (x + k as f64 * std::f64::consts::FRAC_PI_2).sin() / fact(k))
            .collect();
        self.compose(&c)
    }

    pub fn cos(&self) -> Jet {
        let x = self.value();
        let c: Vec<f64> = (0..=self.order)
            .map(|k| (x + k as f64 * std::f64::consts::FRAC_PI_2).cos() / fact(k))
            .collect();
        self.compose(&c)
    }

    pub fn recip(&self) -> Result<Jet> {
        let x = self.value();
        if !(x.abs() >= POLE_THRESHOLD) {
            return Err(Error::DivisionByZero { value: x });
        }
        let inv = 1.0 / x;
        let mut c = Vec::with_capacity(self.order + 1);
        let mut term = inv;
        for _ in 0..=self.order {
            c.push(term);
            term *= -inv;
        }
        Ok(self.compose(&c))
    }

    pub fn tan(&self) -> Result<Jet> {
        let cos = self.cos();
        if cos.value().abs() < POLE_THRESHOLD {
            return Err(Error::Domain { func: "tan", value: self.value() });
        }
        Ok(self.sin().mul_jet(&cos.recip()?))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::Domain { func: "sqrt", value: x });
        }
        // binomial series of (x + h)^(1/2)
        let mut c = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            c.push(binom * x.powf(0.5 - k as f64));
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
        }
        Ok(self.compose(&c))
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }

    pub fn apply(&self, func: Elementary) -> Result<Jet> {
        match func {
            Elementary::Sin => Ok(self.sin()),
            Elementary::Cos => Ok(self.cos()),
            Elementary::Tan => self.tan(),
            Elementary::Sqrt => self.sqrt(),
            Elementary::Neg => Ok(-self),
            Elementary::Recip => self.recip(),
            Elementary::PowInt(n) => self.powi(n),
        }
    }

    /// True when every stored coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `self += a * b` without allocating; the result order is the minimum of
    /// the three orders.
    pub fn add_product(&mut self, a: &Jet, b: &Jet) {
        debug_assert!(self.same_space(a) && self.same_space(b), "jet spaces differ");
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            *self = self.truncate(order);
        }
        let lay = &self.space.layout;
        for &(i, j, k) in &lay.products[..lay.product_end[order]] {
            self.coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
    }

    /// `self −= a * b`, the subtracting counterpart of [`Jet::add_product`].
    pub fn sub_product(&mut self, a: &Jet, b: &Jet) {
        debug_assert!(self.same_space(a) && self.same_space(b), "jet spaces differ");
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            *self = self.truncate(order);
        }
        let lay = &self.space.layout;
        for &(i, j, k) in &lay.products[..lay.product_end[order]] {
            self.coeffs[k as usize] -= a.coeffs[i as usize] * b.coeffs[j as usize];
        }
    }

    /// All first partial derivatives, each one order lower.
    pub fn gradient(&self) -> Result<Vec<Jet>> {
        (0..self.space.dim()).map(|v| self.derivative(v)).collect()
    }

    /// Largest coefficient magnitude of `self − other`.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        self.zip_with(other, |a, b| (a - b).abs())
            .coeffs
            .into_iter()
            .fold(0.0, f64::max)
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.mul_jet(b));

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let f: fn(&Jet, f64) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
    };
}

scalar_binop!(Add, add, |a, s| {
    let mut out = a.clone();
    out.coeffs[0] += s;
    out
});
scalar_binop!(Sub, sub, |a, s| {
    let mut out = a.clone();
    out.coeffs[0] -= s;
    out
});
scalar_binop!(Mul, mul, |a, s| a.map(|c| c * s));

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs * self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Sub<&Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        -rhs + self
    }
}

impl Add<&Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        rhs + self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|c| -c)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c += r;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c -= r;
        }
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(items: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| acc + j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn layout_counts_and_prefix() {
        let lay = layout(5, 4);
        assert_eq!(lay.count(4), 126);
        assert_eq!(lay.count(0), 1);
        assert_eq!(lay.count(1), 6);
        assert_eq!(lay.multi_index(1), &[1, 0, 0, 0, 0]);
    }

    #[test]
    fn coordinate_jet() {
        let x = lift_variable(0, &[2.0, 3.0], 2).unwrap();
        assert_eq!(x.value(), 2.0);
        assert_eq!(x.partial(&[1, 0]).unwrap(), 1.0);
        assert_eq!(x.partial(&[0, 1]).unwrap(), 0.0);
        assert_eq!(x.partial(&[2, 0]).unwrap(), 0.0);
        assert_eq!(x.partial(&[1, 1]).unwrap(), 0.0);

        let y = lift_variable(1, &[0.0, 0.0], 1).unwrap();
        assert_eq!(y.value(), 0.0);
        assert_eq!(y.partial(&[0, 1]).unwrap(), 1.0);
    }

    #[test]
    fn mixed_partial_of_product() {
        let space = JetSpace::new(&[1.0, 1.0], 2);
        let f = space.variable(0).unwrap() * space.variable(1).unwrap();
        assert_eq!(f.partial(&[1, 1]).unwrap(), 1.0);
        assert_eq!(f.partial(&[2, 0]).unwrap(), 0.0);
        assert_eq!(f.value(), 1.0);
    }

    #[test]
    fn variable_index_out_of_range() {
        assert!(matches!(
            lift_variable(2, &[0.0, 0.0], 1),
            Err(Error::IndexOutOfRange { index: 2, dim: 2 })
        ));
    }

    #[test]
    fn sin_maclaurin() {
        let x = lift_variable(0, &[0.0], 3).unwrap();
        let s = x.sin();
        let d: Vec<f64> = (0..=3u8).map(|k| s.partial(&[k]).unwrap()).collect();
        for (got, want) in d.iter().zip([0.0, 1.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-15, "{d:?}");
        }
    }

    #[test]
    fn recip_of_zero_fails() {
        let space = JetSpace::new(&[0.0], 2);
        let err = space.zero().recip().unwrap_err();
        assert!(err.to_string().contains("division by zero in jet"));
        let err = space.constant(5e-13).recip().unwrap_err();
        assert!(matches!(err, Error::DivisionByZero { .. }));
    }

    #[test]
    fn tan_at_quarter_pi() {
        let x = lift_variable(0, &[PI / 4.0], 1).unwrap();
        let t = x.tan().unwrap();
        assert!((t.value() - 1.0).abs() < 1e-15);
        assert!((t.partial(&[1]).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tan_pole_and_sqrt_branch() {
        let x = lift_variable(0, &[PI / 2.0], 1).unwrap();
        assert!(matches!(x.tan(), Err(Error::Domain { func: "tan", .. })));
        let x = lift_variable(0, &[-1.0], 1).unwrap();
        assert!(matches!(x.sqrt(), Err(Error::Domain { func: "sqrt", .. })));
    }

    #[test]
    fn partial_beyond_order() {
        let c = JetSpace::new(&[0.5, 0.5], 1).constant(3.0);
        assert_eq!(c.partial(&[1, 0]).unwrap(), 0.0);
        assert!(matches!(
            c.partial(&[1, 1]),
            Err(Error::OrderExceeded { requested: 2, order: 1 })
        ));
    }

    #[test]
    fn sqrt_and_powers() {
        let x = lift_variable(0, &[4.0], 3).unwrap();
        let s = x.sqrt().unwrap();
        assert!((s.value() - 2.0).abs() < 1e-15);
        assert!((s.partial(&[1]).unwrap() - 0.25).abs() < 1e-15);
        assert!((s.partial(&[2]).unwrap() + 1.0 / 32.0).abs() < 1e-15);
        let cube = x.powi(3).unwrap();
        assert!((cube.partial(&[1]).unwrap() - 48.0).abs() < 1e-12);
        assert!((cube.partial(&[3]).unwrap() - 6.0).abs() < 1e-12);
        let inv2 = x.powi(-2).unwrap();
        assert!((inv2.partial(&[1]).unwrap() + 2.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_lowers_order() {
        let space = JetSpace::new(&[0.3, 0.7], 3);
        let x = space.variable(0).unwrap();
        let y = space.variable(1).unwrap();
        let f = x.sin() * &y * &y;
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 0.3f64.cos() * 0.49).abs() < 1e-15);
        assert!((fx.partial(&[0, 1]).unwrap() - f.partial(&[1, 1]).unwrap()).abs() < 1e-14);
        assert!((fx.partial(&[1, 1]).unwrap() - f.partial(&[2, 1]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn mixed_order_truncates() {
        let a = lift_variable(0, &[1.0], 3).unwrap();
        let b = a.derivative(0).unwrap();
        let c = &a * &b;
        assert_eq!(c.order(), 2);
        let d = &a + &b.truncate(1);
        assert_eq!(d.order(), 1);
    }
}
