//! Forward-mode automatic differentiation by truncated multivariate Taylor
//! arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a function of `D` variables
//! around a point, for every monomial of total degree up to the jet's order.
//! Arithmetic on jets is exact polynomial arithmetic truncated at that order,
//! so value, gradient, Hessian and higher derivatives all come out exact up to
//! floating-point rounding.
//!
//! Jets can also be differentiated symbolically with [`Jet::partial`], which
//! drops one order. The barrier chain relies on this: `hᵢ` is built from
//! `∂hᵢ₋₁/∂x`, so a chain of `n` levels needs `h₁` to order `n`.
//!
//! Coefficients are laid out in graded order (all degree-0 monomials, then
//! degree 1, …), so a jet of order `r` is a prefix of a jet of order `K ≥ r`
//! in the same [`JetSpace`]. Degree-1 monomial `j` sits at index `1 + j`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::{Error, Result};

/// Monomial tables for `vars` variables up to total degree `max_order`.
pub struct JetSpace {
    vars: usize,
    max_order: usize,
    /// Number of monomials of degree `≤ r`, indexed by `r`.
    count: Vec<usize>,
    /// Exponent of variable `j` in monomial `k`, row-major `k * vars + j`.
    exps: Vec<u8>,
    /// Product table `(i, j, k)`: monomial `i` times monomial `j` is `k`,
    /// sorted by the degree of `k`.
    mul: Vec<(u32, u32, u32)>,
    /// Number of product entries whose result has degree `≤ r`.
    mul_end: Vec<usize>,
    /// For variable `j` and monomial `β` (degree `< max_order`): index of
    /// `β + e_j` and the factor `β_j + 1`.
    deriv: Vec<Vec<(u32, f64)>>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("vars", &self.vars)
            .field("max_order", &self.max_order)
            .field("monomials", &self.len(self.max_order))
            .finish()
    }
}

impl JetSpace {
    pub fn new(vars: usize, max_order: usize) -> Arc<Self> {
        let mut exps_list: Vec<Vec<u8>> = Vec::new();
        let mut count = Vec::with_capacity(max_order + 1);
        for degree in 0..=max_order {
            let mut cur = vec![0u8; vars];
            push_monomials(&mut exps_list, &mut cur, 0, degree);
            count.push(exps_list.len());
        }
        let index: BTreeMap<Vec<u8>, usize> = exps_list
            .iter()
            .enumerate()
            .map(|(k, e)| (e.clone(), k))
            .collect();
        let degree = |e: &[u8]| e.iter().map(|&p| p as usize).sum::<usize>();

        let mut mul = Vec::new();
        for (i, a) in exps_list.iter().enumerate() {
            for (j, b) in exps_list.iter().enumerate() {
                if degree(a) + degree(b) > max_order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                mul.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree(&exps_list[k as usize]));
        let mul_end = (0..=max_order)
            .map(|r| {
                mul.iter()
                    .take_while(|&&(_, _, k)| degree(&exps_list[k as usize]) <= r)
                    .count()
            })
            .collect();

        let lower = if max_order == 0 {
            0
        } else {
            count[max_order - 1]
        };
        let deriv = (0..vars)
            .map(|j| {
                exps_list[..lower]
                    .iter()
                    .map(|b| {
                        let mut up = b.clone();
                        up[j] += 1;
                        (index[&up] as u32, f64::from(up[j]))
                    })
                    .collect()
            })
            .collect();

        let exps = exps_list.concat();
        Arc::new(Self {
            vars,
            max_order,
            count,
            exps,
            mul,
            mul_end,
            deriv,
        })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of coefficients of a jet of order `order`.
    pub fn len(&self, order: usize) -> usize {
        self.count[order]
    }

    /// Exponents of monomial `k`.
    pub fn exponents(&self, k: usize) -> &[u8] {
        &self.exps[k * self.vars..(k + 1) * self.vars]
    }
}

fn push_monomials(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, var: usize, remaining: usize) {
    if var + 1 == cur.len() {
        cur[var] = remaining as u8;
        out.push(cur.clone());
        cur[var] = 0;
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for p in (0..=remaining).rev() {
        cur[var] = p as u8;
        push_monomials(out, cur, var + 1, remaining - p);
    }
    cur[var] = 0;
}

/// Truncated Taylor expansion of a scalar function around a point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, order: usize, value: f64) -> Self {
        assert!(order <= space.max_order, "jet order exceeds its space");
        let mut coeffs = vec![0.0; space.len(order)];
        coeffs[0] = value;
        Self {
            space: space.clone(),
            order,
            coeffs,
        }
    }

    /// The independent variable `j`, expanded around `value`.
    pub fn variable(space: &Arc<JetSpace>, order: usize, j: usize, value: f64) -> Self {
        assert!(j < space.vars, "variable index out of range");
        let mut out = Self::constant(space, order, value);
        if order >= 1 {
            out.coeffs[1 + j] = 1.0;
        }
        out
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// First partial derivative with respect to variable `j`, evaluated at the
    /// expansion point.
    pub fn d(&self, j: usize) -> f64 {
        if self.order == 0 {
            0.0
        } else {
            self.coeffs[1 + j]
        }
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.space.vars).map(|j| self.d(j)).collect()
    }

    /// Dense Hessian, row-major. Zero when the order is below 2.
    pub fn hessian(&self) -> Vec<f64> {
        let n = self.space.vars;
        let mut h = vec![0.0; n * n];
        if self.order < 2 {
            return h;
        }
        for k in self.space.len(1)..self.space.len(2) {
            let e = self.space.exponents(k);
            let mut idx = e.iter().enumerate().filter(|(_, &p)| p > 0).map(|(j, _)| j);
            let a = idx.next().unwrap();
            match idx.next() {
                None => h[a * n + a] = 2.0 * self.coeffs[k],
                Some(b) => {
                    h[a * n + b] = self.coeffs[k];
                    h[b * n + a] = self.coeffs[k];
                }
            }
        }
        h
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            space: self.space.clone(),
            order,
            coeffs: self.coeffs[..self.space.len(order)].to_vec(),
        }
    }

    /// `∂/∂x_j` as a jet of one order less. Exact: the derivative of the
    /// truncated polynomial agrees with the true derivative up to that order.
    pub fn partial(&self, j: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let coeffs = self.space.deriv[j][..self.space.len(order)]
            .iter()
            .map(|&(src, f)| f * self.coeffs[src as usize])
            .collect();
        Self {
            space: self.space.clone(),
            order,
            coeffs,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn mul_jet(&self, rhs: &Jet) -> Jet {
        debug_assert!(
            Arc::ptr_eq(&self.space, &rhs.space),
            "jets from different spaces"
        );
        let order = self.order.min(rhs.order);
        let mut coeffs = vec![0.0; self.space.len(order)];
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        for &(i, j, k) in &self.space.mul[..self.space.mul_end[order]] {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            space: self.space.clone(),
            order,
            coeffs,
        }
    }

    fn zip_with(&self, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert!(
            Arc::ptr_eq(&self.space, &rhs.space),
            "jets from different spaces"
        );
        let order = self.order.min(rhs.order);
        let len = self.space.len(order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: self.coeffs[..len]
                .iter()
                .zip(&rhs.coeffs[..len])
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    fn map_coeffs(mut self, f: impl Fn(f64) -> f64) -> Jet {
        for c in &mut self.coeffs {
            *c = f(*c);
        }
        self
    }

    /// `f(self)` given the derivatives `f^(k)(a₀)` for `k = 0..=order`:
    /// `Σ f^(k)(a₀)/k! · (a − a₀)^k`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = Jet::constant(&self.space, self.order, derivs[0]);
        let mut power = Jet::constant(&self.space, self.order, 1.0);
        let mut factorial = 1.0;
        for (k, dk) in derivs.iter().enumerate().skip(1).take(self.order) {
            power = power.mul_jet(&delta);
            factorial *= k as f64;
            let scale = dk / factorial;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += scale * p;
            }
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = libm::exp(self.value());
        self.compose(&vec![e; self.order + 1])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (libm::sin(self.value()), libm::cos(self.value()));
        let cycle = [s, c, -s, -c];
        let derivs: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (libm::sin(self.value()), libm::cos(self.value()));
        let cycle = [c, -s, -c, s];
        let derivs: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    /// Natural logarithm; the value must be positive.
    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::ArithmeticDomain("logarithm of a non-positive value"));
        }
        let mut derivs = vec![libm::log(a)];
        let mut term = 1.0 / a;
        for k in 1..=self.order {
            derivs.push(term);
            term *= -(k as f64) / a;
        }
        Ok(self.compose(&derivs))
    }

    /// `1 / self`; the value must be nonzero.
    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 {
            return Err(Error::ArithmeticDomain("division by zero"));
        }
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut term = 1.0 / a;
        for k in 0..=self.order {
            derivs.push(term);
            term *= -((k + 1) as f64) / a;
        }
        Ok(self.compose(&derivs))
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet> {
        Ok(self * &rhs.recip()?)
    }

    /// Integer power by repeated multiplication; valid for any base.
    pub fn powi(&self, p: u32) -> Jet {
        let mut out = Jet::constant(&self.space, self.order, 1.0);
        for _ in 0..p {
            out = out.mul_jet(self);
        }
        out
    }

    /// Real power `self^p`. Non-integer exponents need a positive base.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        if p == 1.0 {
            return Ok(self.clone());
        }
        if p >= 0.0 && p == libm::trunc(p) && p <= 64.0 {
            return Ok(self.powi(p as u32));
        }
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::ArithmeticDomain(
                "fractional power of a non-positive value",
            ));
        }
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut coef = 1.0;
        for k in 0..=self.order {
            derivs.push(coef * libm::pow(a, p - k as f64));
            coef *= p - k as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    /// `Σ xᵢ²`.
    pub fn norm_squared(xs: &[Jet]) -> Option<Jet> {
        let mut it = xs.iter();
        let first = it.next()?;
        let mut acc = first * first;
        for x in it {
            acc += &(x * x);
        }
        Some(acc)
    }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map_coeffs(|c| -c)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.clone().map_coeffs(|c| -c)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.clone() + rhs
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.clone() - rhs
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.map_coeffs(|c| c * rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.clone() * rhs
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.clone() * self
    }
}

/// Value, gradient and dense Hessian of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderNumber {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major, `dim × dim`, symmetric.
    pub hessian: Vec<f64>,
}

impl SecondOrderNumber {
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.dim() + j]
    }

    fn from_jet(jet: &Jet) -> Self {
        Self {
            value: jet.value(),
            gradient: jet.gradient(),
            hessian: jet.hessian(),
        }
    }
}

/// Lifts `x` into second-order jets: component `i` has value `xᵢ`, gradient
/// `eᵢ` and zero Hessian.
pub fn lift(x: &[f64]) -> Vec<Jet> {
    let space = JetSpace::new(x.len(), 2);
    x.iter()
        .enumerate()
        .map(|(j, &v)| Jet::variable(&space, 2, j, v))
        .collect()
}

/// Exact value, gradient and Hessian of `f` at `x`.
pub fn grad_hess<F>(f: F, x: &[f64]) -> Result<SecondOrderNumber>
where
    F: FnOnce(&[Jet]) -> Result<Jet>,
{
    let lifted = lift(x);
    let out = f(&lifted)?;
    if !out.is_finite() {
        return Err(Error::ArithmeticDomain("non-finite derivative"));
    }
    Ok(SecondOrderNumber::from_jet(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_layout() {
        let s = JetSpace::new(3, 3);
        assert_eq!(s.len(0), 1);
        assert_eq!(s.len(1), 4);
        assert_eq!(s.len(2), 10);
        assert_eq!(s.len(3), 20);
        for j in 0..3 {
            let e = s.exponents(1 + j);
            assert_eq!(e.iter().map(|&p| p as usize).sum::<usize>(), 1);
            assert_eq!(e[j], 1);
        }
    }

    #[test]
    fn lift_basics() {
        let l = lift(&[3.0]);
        assert_eq!(l[0].value(), 3.0);
        assert_eq!(l[0].gradient(), vec![1.0]);
        assert_eq!(l[0].hessian(), vec![0.0]);
        let l = lift(&[1.0, 2.0]);
        assert_eq!(l[0].gradient(), vec![1.0, 0.0]);
        assert_eq!(l[1].gradient(), vec![0.0, 1.0]);
        assert!(lift(&[]).is_empty());
    }

    #[test]
    fn cubic_monomial() {
        let r = grad_hess(|x| Ok(&(&x[0] * &x[0]) * &x[1]), &[1.0, 2.0]).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.gradient, vec![4.0, 1.0]);
        assert_eq!(r.hessian, vec![4.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn constant_function() {
        let r = grad_hess(|x| Ok(Jet::constant(x[0].space(), 2, 7.5)), &[1.0, -3.0]).unwrap();
        assert_eq!(r.value, 7.5);
        assert_eq!(r.gradient, vec![0.0, 0.0]);
        assert_eq!(r.hessian, vec![0.0; 4]);
    }

    #[test]
    fn half_norm_squared() {
        let r = grad_hess(|x| Ok(Jet::norm_squared(x).unwrap() * 0.5), &[3.0, 4.0]).unwrap();
        assert_eq!(r.value, 12.5);
        assert_eq!(r.gradient, vec![3.0, 4.0]);
        assert_eq!(r.hessian, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            grad_hess(|x| x[0].ln(), &[0.0]),
            Err(Error::ArithmeticDomain(_))
        ));
        assert!(matches!(
            grad_hess(|x| x[0].try_div(&x[1]), &[1.0, 0.0]),
            Err(Error::ArithmeticDomain(_))
        ));
        assert!(grad_hess(|x| x[0].powf(0.5), &[-1.0]).is_err());
    }

    #[test]
    fn transcendental_derivatives() {
        let x0 = 0.7;
        let r = grad_hess(|x| Ok(x[0].sin()), &[x0]).unwrap();
        assert_relative_eq!(r.gradient[0], libm::cos(x0), epsilon = 1e-15);
        assert_relative_eq!(r.hessian[0], -libm::sin(x0), epsilon = 1e-15);
        let r = grad_hess(|x| x[0].ln(), &[x0]).unwrap();
        assert_relative_eq!(r.gradient[0], 1.0 / x0, epsilon = 1e-14);
        assert_relative_eq!(r.hessian[0], -1.0 / (x0 * x0), epsilon = 1e-14);
        let r = grad_hess(|x| x[0].powf(2.5), &[x0]).unwrap();
        assert_relative_eq!(
            r.hessian[0],
            2.5 * 1.5 * libm::pow(x0, 0.5),
            epsilon = 1e-14
        );
        let r = grad_hess(|x| x[0].recip(), &[x0]).unwrap();
        assert_relative_eq!(r.hessian[0], 2.0 / (x0 * x0 * x0), epsilon = 1e-13);
    }

    #[test]
    fn higher_order_partials() {
        // f = x³y at (2, 3); ∂³f/∂x³ = 6y = 18.
        let s = JetSpace::new(2, 3);
        let x = Jet::variable(&s, 3, 0, 2.0);
        let y = Jet::variable(&s, 3, 1, 3.0);
        let f = &x.powi(3) * &y;
        let fxxx = f.partial(0).partial(0).partial(0);
        assert_eq!(fxxx.order(), 0);
        assert_relative_eq!(fxxx.value(), 18.0);
        let fxy = f.partial(0).partial(1);
        assert_relative_eq!(fxy.value(), 12.0);
        assert_relative_eq!(fxy.d(0), 12.0);
    }
}
