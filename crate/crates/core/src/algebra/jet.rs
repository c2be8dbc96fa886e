use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Truncated bivariate Taylor expansion at 0, dense up to total order `K`.
///
/// Coefficients are stored by total degree `d = i + j`, with the entry for
/// `z^i w^j` at offset `d(d+1)/2 + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<Complex64>,
}

#[inline]
fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

fn len_for(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet { order, coeffs: vec![Complex64::default(); len_for(order)] }
    }

    pub fn constant(order: usize, c: Complex64) -> Self {
        let mut j = Jet::zero(order);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate `z` (index 0) or `w` (index 1).
    pub fn var(order: usize, index: usize) -> Self {
        let mut j = Jet::zero(order);
        if order >= 1 {
            match index {
                0 => j.set(1, 0, Complex64::new(1.0, 0.0)),
                1 => j.set(0, 1, Complex64::new(1.0, 0.0)),
                _ => panic!("bivariate jet has no variable {index}"),
            }
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Taylor coefficient of `z^i w^j`; zero beyond the stored order.
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        if i + j > self.order {
            Complex64::default()
        } else {
            self.coeffs[index(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, c: Complex64) {
        assert!(i + j <= self.order, "exponent ({i}, {j}) beyond jet order {}", self.order);
        self.coeffs[index(i, j)] = c;
    }

    /// Iterates `(i, j, coefficient)` over all stored slots.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..=self.order).flat_map(move |d| (0..=d).map(move |j| (d - j, j, self.coeffs[index(d - j, j)])))
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::zero(order);
        for k in 0..out.coeffs.len() {
            out.coeffs[k] = self.coeffs[k] + other.coeffs[k];
        }
        out
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::zero(order);
        for k in 0..out.coeffs.len() {
            out.coeffs[k] = self.coeffs[k] - other.coeffs[k];
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet { order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Truncated product.
    pub fn mul(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::zero(order);
        for da in 0..=order {
            for ja in 0..=da {
                let a = self.coeffs[index(da - ja, ja)];
                if a == Complex64::default() {
                    continue;
                }
                for db in 0..=(order - da) {
                    for jb in 0..=db {
                        let b = other.coeffs[index(db - jb, jb)];
                        out.coeffs[index(da - ja + db - jb, ja + jb)] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Multiplicative inverse `c0^{-1} (1 - d)^{-1}` as a finite geometric
    /// series, where `d = 1 - self / c0` has no constant term.
    pub fn recip(&self) -> Result<Jet> {
        let c0 = self.coeffs[0];
        if c0 == Complex64::default() {
            return Err(Error::DenominatorVanishes);
        }
        let inv0 = c0.inv();
        let mut d = self.scale(-inv0);
        d.coeffs[0] = Complex64::default();
        let mut term = Jet::constant(self.order, Complex64::new(1.0, 0.0));
        let mut sum = term.clone();
        for _ in 0..self.order {
            term = term.mul(&d);
            sum = sum.add(&term);
        }
        Ok(sum.scale(inv0))
    }

    pub fn div(&self, den: &Jet) -> Result<Jet> {
        Ok(self.mul(&den.recip()?))
    }

    /// Keeps only terms of total degree `<= order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet { order, coeffs: self.coeffs[..len_for(order)].to_vec() }
    }

    pub fn conj_coeffs(&self) -> Jet {
        Jet { order: self.order, coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    /// Evaluates the Taylor polynomial at `(z, w)`.
    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.iter().fold(Complex64::default(), |acc, (i, j, c)| {
            acc + c * z.powu(i as u32) * w.powu(j as u32)
        })
    }

    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Substitutes jets without constant terms into this jet's Taylor
    /// polynomial; exact to the common order.
    pub fn compose_at_origin(&self, z: &Jet, w: &Jet) -> Jet {
        debug_assert!(z.coeff(0, 0) == Complex64::default() && w.coeff(0, 0) == Complex64::default());
        let order = self.order.min(z.order).min(w.order);
        let mut zp = vec![Jet::constant(order, Complex64::new(1.0, 0.0))];
        let mut wp = zp.clone();
        for k in 1..=order {
            let nz = zp[k - 1].mul(z);
            zp.push(nz);
            let nw = wp[k - 1].mul(w);
            wp.push(nw);
        }
        let mut out = Jet::zero(order);
        for (i, j, c) in self.iter() {
            if i + j > order || c == Complex64::default() {
                continue;
            }
            out = out.add(&zp[i].mul(&wp[j]).scale(c));
        }
        out
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Partial derivative `h_{z^i w^k}(0) = i! k! coeff(i, k)`.
pub fn jet_derivative(j: &Jet, i: usize, k: usize) -> Result<Complex64> {
    if i + k > j.order() {
        return Err(Error::OrderExceeded { requested: i + k, order: j.order() });
    }
    Ok(j.coeff(i, k) * (factorial(i) * factorial(k)))
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Componentwise jets of a map `(C^2, 0) -> C^m`.
pub type MapJet = Vec<Jet>;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn recip_of_one_minus_w() {
        let mut d = Jet::constant(4, c(1.0));
        d.set(0, 1, c(-1.0));
        let inv = d.recip().unwrap();
        for k in 0..=4 {
            assert_eq!(inv.coeff(0, k), c(1.0));
        }
        assert_eq!(inv.coeff(1, 0), c(0.0));
    }

    #[test]
    fn recip_zero_constant_fails() {
        let z = Jet::var(3, 0);
        assert_eq!(z.recip(), Err(Error::DenominatorVanishes));
    }

    #[test]
    fn derivative_of_zero_jet() {
        let j = Jet::zero(4);
        assert_eq!(jet_derivative(&j, 2, 1).unwrap(), c(0.0));
        assert!(matches!(jet_derivative(&j, 3, 2), Err(Error::OrderExceeded { .. })));
    }

    #[test]
    fn mul_truncates() {
        let z = Jet::var(2, 0);
        let w = Jet::var(2, 1);
        let zw = z.mul(&w);
        assert_eq!(zw.coeff(1, 1), c(1.0));
        let zzw = zw.mul(&z);
        assert!(zzw.iter().all(|(_, _, v)| v == c(0.0)));
    }
}
