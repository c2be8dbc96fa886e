use alloc::vec::Vec;

use num_complex::Complex64;

use super::jet::{Jet, MapJet};
use super::poly::{power_table, Poly};
use crate::error::{Error, Result};

/// Relative size below which a denominator value at a base point counts as zero.
const DEN_ZERO_REL: f64 = 1e-13;

/// Ratio of two polynomials in the same variables.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalGerm {
    pub num: Poly,
    pub den: Poly,
}

impl RationalGerm {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert_eq!(num.nvars(), den.nvars());
        RationalGerm { num, den }
    }

    pub fn polynomial(num: Poly) -> Self {
        let n = num.nvars();
        RationalGerm { num, den: Poly::one(n) }
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn eval(&self, point: &[Complex64]) -> Result<Complex64> {
        let d = self.den.eval(point);
        if den_is_zero(d, &self.den) {
            return Err(Error::DenominatorVanishes);
        }
        Ok(self.num.eval(point) / d)
    }

    /// True when the germ is holomorphic at the origin.
    pub fn is_regular_at_origin(&self) -> bool {
        !den_is_zero(self.den.constant_term(), &self.den)
    }

    /// Taylor expansion at 0 to total order `order` (bivariate germs only).
    pub fn expand(&self, order: usize) -> Result<Jet> {
        if self.nvars() != 2 {
            return Err(Error::ArityMismatch { expected: 2, found: self.nvars() });
        }
        if !self.is_regular_at_origin() {
            return Err(Error::DenominatorVanishes);
        }
        let z = Jet::var(order, 0);
        let w = Jet::var(order, 1);
        let num = self.num.eval_jets(&[z.clone(), w.clone()])?;
        let den = self.den.eval_jets(&[z, w])?;
        num.div(&den)
    }

    /// Evaluates on jet arguments (the arguments may have nonzero constants).
    pub fn eval_jets(&self, args: &[Jet]) -> Result<Jet> {
        let num = self.num.eval_jets(args)?;
        let den = self.den.eval_jets(args)?;
        if den_is_zero(den.coeff(0, 0), &self.den) {
            return Err(Error::DenominatorVanishes);
        }
        num.div(&den)
    }

    pub fn conj_coeffs(&self) -> RationalGerm {
        RationalGerm { num: self.num.conj(), den: self.den.conj() }
    }

    /// Taylor polynomial at 0 up to total degree `order`, in any number of
    /// variables.
    pub fn taylor(&self, order: u32) -> Result<Poly> {
        let d0 = self.den.constant_term();
        if den_is_zero(d0, &self.den) {
            return Err(Error::DenominatorVanishes);
        }
        let n = self.nvars();
        let inv0 = d0.inv();
        let mut d = self.den.scale(-inv0);
        d.add_term([0; super::poly::MAX_VARS], Complex64::new(1.0, 0.0));
        let mut term = Poly::one(n);
        let mut sum = Poly::one(n);
        for _ in 0..order {
            term = term.mul_truncated(&d, order);
            sum = &sum + &term;
        }
        Ok(self.num.mul_truncated(&sum, order).scale(inv0))
    }
}

fn den_is_zero(value: Complex64, den: &Poly) -> bool {
    let scale = den.max_abs_coeff().max(1.0);
    value.norm() <= DEN_ZERO_REL * scale
}

/// Tuple of rational components sharing one set of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    pub components: Vec<RationalGerm>,
}

impl RationalMap {
    pub fn new(components: Vec<RationalGerm>) -> Self {
        assert!(!components.is_empty());
        let n = components[0].nvars();
        assert!(components.iter().all(|c| c.nvars() == n), "components disagree on variables");
        RationalMap { components }
    }

    /// Map given by numerators over one shared denominator.
    pub fn with_common_den(nums: Vec<Poly>, den: Poly) -> Self {
        RationalMap::new(nums.into_iter().map(|n| RationalGerm::new(n, den.clone())).collect())
    }

    pub fn identity(nvars: usize) -> Self {
        RationalMap::new((0..nvars).map(|k| RationalGerm::polynomial(Poly::var(nvars, k))).collect())
    }

    pub fn nvars(&self) -> usize {
        self.components[0].nvars()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eval(&self, point: &[Complex64]) -> Result<Vec<Complex64>> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    pub fn is_regular_at_origin(&self) -> bool {
        self.components.iter().all(RationalGerm::is_regular_at_origin)
    }

    pub fn expand(&self, order: usize) -> Result<MapJet> {
        self.components.iter().map(|c| c.expand(order)).collect()
    }

    pub fn eval_jets(&self, args: &[Jet]) -> Result<MapJet> {
        self.components.iter().map(|c| c.eval_jets(args)).collect()
    }

    /// Exact composition `self ∘ inner`, each component cleared to a single
    /// numerator over a single denominator.
    pub fn compose(&self, inner: &RationalMap) -> Result<RationalMap> {
        if inner.len() != self.nvars() {
            return Err(Error::ArityMismatch { expected: self.nvars(), found: inner.len() });
        }
        let shared_den = inner.components.iter().all(|c| c.den == inner.components[0].den);
        let mut out = Vec::with_capacity(self.len());
        for comp in &self.components {
            let (num, den) = if shared_den {
                compose_shared(comp, inner)
            } else {
                compose_separate(comp, inner)
            };
            out.push(RationalGerm::new(num, den));
        }
        Ok(RationalMap::new(out))
    }

    /// [`compose`](Self::compose) for germs at the origin: rejects results
    /// whose denominators vanish at 0.
    pub fn compose_germ(&self, inner: &RationalMap) -> Result<RationalMap> {
        let out = self.compose(inner)?;
        if !out.is_regular_at_origin() {
            return Err(Error::DenominatorVanishes);
        }
        Ok(out)
    }

    pub fn conj_coeffs(&self) -> RationalMap {
        RationalMap::new(self.components.iter().map(RationalGerm::conj_coeffs).collect())
    }
}

/// Homogenizes with respect to total degree when every inner component has
/// the same denominator `D`: `P(N/D) = (sum c_a N^a D^{d-|a|}) / D^d`.
fn compose_shared(comp: &RationalGerm, inner: &RationalMap) -> (Poly, Poly) {
    let d = comp.num.degree().max(comp.den.degree());
    let inner_den = &inner.components[0].den;
    let den_pows = power_table(inner_den, d);
    let num_pows: Vec<Vec<Poly>> = inner
        .components
        .iter()
        .enumerate()
        .map(|(v, c)| power_table(&c.num, comp.num.degree_in(v).max(comp.den.degree_in(v))))
        .collect();
    let lift = |p: &Poly| {
        let mut acc = Poly::zero(inner.nvars());
        for (e, c) in p.terms() {
            let total: u32 = e.iter().sum();
            let mut m = den_pows[(d - total) as usize].scale(*c);
            for v in 0..p.nvars() {
                if e[v] > 0 {
                    m = &m * &num_pows[v][e[v] as usize];
                }
            }
            acc = &acc + &m;
        }
        acc
    };
    (lift(&comp.num), lift(&comp.den))
}

/// General case: clear each variable's denominator to its own maximal power.
fn compose_separate(comp: &RationalGerm, inner: &RationalMap) -> (Poly, Poly) {
    let nv = comp.nvars();
    let degs: Vec<u32> =
        (0..nv).map(|v| comp.num.degree_in(v).max(comp.den.degree_in(v))).collect();
    let num_pows: Vec<Vec<Poly>> =
        inner.components.iter().zip(&degs).map(|(c, &d)| power_table(&c.num, d)).collect();
    let den_pows: Vec<Vec<Poly>> =
        inner.components.iter().zip(&degs).map(|(c, &d)| power_table(&c.den, d)).collect();
    let lift = |p: &Poly| {
        let mut acc = Poly::zero(inner.nvars());
        for (e, c) in p.terms() {
            let mut m = Poly::constant(inner.nvars(), *c);
            for v in 0..nv {
                m = &m * &num_pows[v][e[v] as usize];
                m = &m * &den_pows[v][(degs[v] - e[v]) as usize];
            }
            acc = &acc + &m;
        }
        acc
    };
    (lift(&comp.num), lift(&comp.den))
}

/// Exact composition of rational map germs, `outer ∘ inner`.
pub fn rational_compose(outer: &RationalMap, inner: &RationalMap) -> Result<RationalMap> {
    outer.compose_germ(inner)
}

/// Taylor expansion of a rational germ to total order `order`.
pub fn expand(r: &RationalGerm, order: usize) -> Result<Jet> {
    r.expand(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expand_geometric_series() {
        // 4w / (4 - w^2) = w + w^3/4 + ...
        let r = RationalGerm::new(
            Poly::bivariate([(0, 1, c(4.0, 0.0))]),
            Poly::bivariate([(0, 0, c(4.0, 0.0)), (0, 2, c(-1.0, 0.0))]),
        );
        let j = expand(&r, 3).unwrap();
        assert_eq!(j.coeff(0, 1), c(1.0, 0.0));
        assert!((j.coeff(0, 3) - c(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(j.coeff(0, 2), c(0.0, 0.0));
    }

    #[test]
    fn expand_polynomial_is_itself() {
        let r = RationalGerm::polynomial(Poly::var(2, 0));
        let j = expand(&r, 4).unwrap();
        for (i, k, v) in j.iter() {
            let expect = if (i, k) == (1, 0) { c(1.0, 0.0) } else { c(0.0, 0.0) };
            assert_eq!(v, expect);
        }
    }

    #[test]
    fn expand_rejects_singular_germ() {
        let r = RationalGerm::new(Poly::one(2), Poly::var(2, 0));
        assert_eq!(expand(&r, 2), Err(Error::DenominatorVanishes));
    }

    #[test]
    fn compose_with_identity() {
        let f = RationalMap::with_common_den(
            alloc::vec![
                Poly::bivariate([(1, 0, c(1.0, 0.0)), (1, 1, c(0.0, 2.0))]),
                Poly::bivariate([(2, 0, c(3.0, 0.0))]),
            ],
            Poly::bivariate([(0, 0, c(1.0, 0.0)), (0, 1, c(0.5, -1.0))]),
        );
        let id = RationalMap::identity(2);
        let a = rational_compose(&f, &id).unwrap();
        let b = rational_compose(&id, &f).unwrap();
        let p = [c(0.1, 0.2), c(-0.3, 0.05)];
        for (x, y) in a.eval(&p).unwrap().iter().zip(f.eval(&p).unwrap()) {
            assert!((x - y).norm() < 1e-14);
        }
        for (x, y) in b.eval(&p).unwrap().iter().zip(f.eval(&p).unwrap()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn compose_pointwise_separate_denominators() {
        let outer = RationalMap::new(alloc::vec![RationalGerm::new(
            Poly::bivariate([(1, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0))]),
            Poly::bivariate([(0, 0, c(1.0, 0.0)), (1, 0, c(0.0, 1.0))]),
        )]);
        let inner = RationalMap::new(alloc::vec![
            RationalGerm::new(Poly::var(2, 0), Poly::bivariate([(0, 0, c(1.0, 0.0)), (0, 1, c(1.0, 0.0))])),
            RationalGerm::new(Poly::var(2, 1), Poly::bivariate([(0, 0, c(2.0, 0.0)), (1, 0, c(-1.0, 0.0))])),
        ]);
        let comp = rational_compose(&outer, &inner).unwrap();
        let p = [c(0.2, -0.1), c(0.05, 0.3)];
        let direct = outer.eval(&inner.eval(&p).unwrap()).unwrap();
        assert!((comp.eval(&p).unwrap()[0] - direct[0]).norm() < 1e-14);
    }
}
