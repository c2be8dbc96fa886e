use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::jet::Jet;
use crate::error::{Error, Result};

/// Largest number of variables a [`Poly`] may carry (C^3 is the biggest space here).
pub const MAX_VARS: usize = 3;

/// Exponent vector; slots past `nvars` stay zero.
pub type Exponent = [u32; MAX_VARS];

/// Sparse polynomial with complex coefficients in up to three variables.
///
/// Canonical form: no stored coefficient is exactly zero. Bivariate
/// polynomials use the variable order `(z, w)`; trivariate ones
/// `(z1, z2, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponent, Complex64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        assert!((1..=MAX_VARS).contains(&nvars), "unsupported variable count {nvars}");
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term([0; MAX_VARS], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Complex64::new(1.0, 0.0))
    }

    /// The coordinate function `x_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars);
        let mut e = [0; MAX_VARS];
        e[index] = 1;
        Poly::monomial(nvars, e, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(nvars: usize, exp: Exponent, c: Complex64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(exp, c);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, Complex64)>,
    {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Bivariate shorthand: `terms` are `(i, j, coefficient)` for `z^i w^j`.
    pub fn bivariate<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, Complex64)>,
    {
        Poly::from_terms(2, terms.into_iter().map(|(i, j, c)| ([i, j, 0], c)))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: &Exponent) -> Complex64 {
        self.terms.get(exp).copied().unwrap_or_default()
    }

    /// Adds `c * x^exp` in place, keeping the canonical form.
    pub fn add_term(&mut self, exp: Exponent, c: Complex64) {
        debug_assert!(exp[self.nvars..].iter().all(|&e| e == 0));
        if c == Complex64::default() {
            return;
        }
        let entry = self.terms.entry(exp).or_default();
        *entry += c;
        if *entry == Complex64::default() {
            self.terms.remove(&exp);
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeff(&[0; MAX_VARS])
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Complex64::default();
        for (e, c) in &self.terms {
            let mut m = *c;
            for (x, &k) in point.iter().zip(e.iter()) {
                if k > 0 {
                    m *= x.powu(k);
                }
            }
            acc += m;
        }
        acc
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (*e, c * s)))
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one(self.nvars);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Product truncated to total degree `max_degree`.
    pub fn mul_truncated(&self, other: &Poly, max_degree: u32) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            let da: u32 = ea.iter().sum();
            if da > max_degree {
                continue;
            }
            for (eb, cb) in &other.terms {
                let db: u32 = eb.iter().sum();
                if da + db > max_degree {
                    continue;
                }
                out.add_term(add_exp(ea, eb), ca * cb);
            }
        }
        out
    }

    /// Drops all terms of total degree above `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= max_degree)
                .map(|(e, c)| (*e, *c))
                .collect(),
        }
    }

    /// Substitutes one polynomial per variable (all sharing a variable count).
    pub fn substitute(&self, args: &[Poly]) -> Result<Poly> {
        if args.len() != self.nvars {
            return Err(Error::ArityMismatch { expected: self.nvars, found: args.len() });
        }
        let n_out = args.first().map(Poly::nvars).unwrap_or(1);
        let powers: Vec<Vec<Poly>> = args
            .iter()
            .enumerate()
            .map(|(v, a)| power_table(a, self.degree_in(v)))
            .collect();
        let mut out = Poly::zero(n_out);
        for (e, c) in &self.terms {
            let mut m = Poly::constant(n_out, *c);
            for v in 0..self.nvars {
                if e[v] > 0 {
                    m = &m * &powers[v][e[v] as usize];
                }
            }
            out = &out + &m;
        }
        Ok(out)
    }

    /// Evaluates the polynomial on bivariate jets, truncating at the jets' order.
    pub fn eval_jets(&self, args: &[Jet]) -> Result<Jet> {
        if args.len() != self.nvars {
            return Err(Error::ArityMismatch { expected: self.nvars, found: args.len() });
        }
        let order = args[0].order();
        let powers: Vec<Vec<Jet>> = args
            .iter()
            .enumerate()
            .map(|(v, a)| {
                let mut table = vec![Jet::constant(order, Complex64::new(1.0, 0.0))];
                for k in 1..=self.degree_in(v) as usize {
                    let next = table[k - 1].mul(a);
                    table.push(next);
                }
                table
            })
            .collect();
        let mut out = Jet::zero(order);
        for (e, c) in &self.terms {
            let mut m = Jet::constant(order, *c);
            for v in 0..self.nvars {
                if e[v] > 0 {
                    m = m.mul(&powers[v][e[v] as usize]);
                }
            }
            out = out.add(&m);
        }
        Ok(out)
    }

    /// Complex conjugate of every coefficient.
    pub fn conj(&self) -> Poly {
        Poly::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (*e, c.conj())))
    }

    /// Re-embeds the polynomial with more variables (new ones unused).
    pub fn with_nvars(&self, nvars: usize) -> Poly {
        assert!(nvars >= self.nvars && nvars <= MAX_VARS);
        Poly { nvars, terms: self.terms.clone() }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn add_exp(a: &Exponent, b: &Exponent) -> Exponent {
    let mut e = [0; MAX_VARS];
    for k in 0..MAX_VARS {
        e[k] = a[k] + b[k];
    }
    e
}

pub(crate) fn power_table(p: &Poly, max: u32) -> Vec<Poly> {
    let mut table = vec![Poly::one(p.nvars)];
    for k in 1..=max as usize {
        let next = &table[k - 1] * p;
        table.push(next);
    }
    table
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(add_exp(ea, eb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Value of the bivariate polynomial `p` at `(z, w)`.
pub fn poly_eval(p: &Poly, z: Complex64, w: Complex64) -> Complex64 {
    p.eval(&[z, w])
}

/// Exact product in canonical sparse form.
pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    a * b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let p = Poly::bivariate([(2, 0, c(1.0, 0.0)), (0, 1, c(1.0, 0.0))]);
        assert_eq!(poly_eval(&p, c(0.0, 0.0), c(0.0, 0.0)), c(0.0, 0.0));

        let q = Poly::bivariate([(0, 0, c(4.0, 0.0)), (0, 2, c(-1.0, 0.0))]);
        assert_eq!(poly_eval(&q, c(0.0, 0.0), c(0.0, 0.0)), c(4.0, 0.0));

        // 1 - 2i conj(c) z + (r - i|c|^2) w with c = 1, r = 0
        let d = Poly::bivariate([(0, 0, c(1.0, 0.0)), (1, 0, c(0.0, -2.0)), (0, 1, c(0.0, -1.0))]);
        assert_eq!(poly_eval(&d, c(1.0, 0.0), c(1.0, 0.0)), c(1.0, -3.0));
    }

    #[test]
    fn mul_examples() {
        let z = Poly::var(2, 0);
        let w = Poly::var(2, 1);
        assert_eq!(poly_mul(&z, &w), Poly::bivariate([(1, 1, c(1.0, 0.0))]));

        let a = Poly::bivariate([(0, 0, c(1.0, 0.0)), (0, 1, c(1.0, 0.0))]);
        let expect =
            Poly::bivariate([(0, 0, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (0, 2, c(1.0, 0.0))]);
        assert_eq!(poly_mul(&a, &a), expect);

        let fz = Poly::bivariate([(1, 0, c(4.0, 0.0))]);
        let den = Poly::bivariate([(0, 0, c(4.0, 0.0)), (0, 2, c(-1.0, 0.0))]);
        let expect = Poly::bivariate([(1, 0, c(16.0, 0.0)), (1, 2, c(-4.0, 0.0))]);
        assert_eq!(poly_mul(&fz, &den), expect);
    }

    #[test]
    fn cancellation_prunes_terms() {
        let z = Poly::var(2, 0);
        let diff = &z - &z;
        assert!(diff.is_zero());
        assert_eq!(diff.len(), 0);
    }

    #[test]
    fn substitute_matches_eval() {
        let p = Poly::bivariate([(2, 1, c(1.0, 2.0)), (0, 1, c(-3.0, 0.0)), (1, 0, c(0.0, 1.0))]);
        let a = Poly::bivariate([(1, 0, c(1.0, 0.0)), (0, 1, c(2.0, 0.0))]);
        let b = Poly::bivariate([(1, 1, c(1.0, -1.0)), (0, 0, c(0.5, 0.0))]);
        let s = p.substitute(&[a.clone(), b.clone()]).unwrap();
        let (z, w) = (c(0.3, -0.2), c(0.1, 0.7));
        let direct = p.eval(&[a.eval(&[z, w]), b.eval(&[z, w])]);
        assert!((s.eval(&[z, w]) - direct).norm() < 1e-13);
    }
}
