//! Source and target hypersurface models, membership residuals, the Cayley
//! transforms to the sphere models and the F² membership test.
//!
//! Source: `H² = { Im w = |z|² } ⊂ C²`. Target:
//! `H³_ε = { Im w' = |z1'|² + ε|z2'|² } ⊂ C³`. The sphere models are
//! `S³ = { |z|² + |w|² = 1 }` and `Q_ε = { |z1|² + |z2|² + ε|z3|² = 1 }`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Jet, MapJet, Poly, RationalMap};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const TOL_NONDEGENERATE: f64 = 1e-9;
pub const TOL_TRANSVERSAL: f64 = 1e-9;
const TOL_FIXES_ORIGIN: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Signature ε of the target hyperquadric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "i32", try_from = "i32"))]
pub enum Signature {
    Plus,
    Minus,
}

impl Signature {
    pub fn value(self) -> f64 {
        match self {
            Signature::Plus => 1.0,
            Signature::Minus => -1.0,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Signature::Plus => 1,
            Signature::Minus => -1,
        }
    }

    pub fn from_i32(v: i32) -> Option<Self> {
        match v {
            1 => Some(Signature::Plus),
            -1 => Some(Signature::Minus),
            _ => None,
        }
    }

    pub fn complex(self) -> Complex64 {
        Complex64::new(self.value(), 0.0)
    }

    pub fn both() -> [Signature; 2] {
        [Signature::Plus, Signature::Minus]
    }
}

impl From<Signature> for i32 {
    fn from(e: Signature) -> i32 {
        e.as_i32()
    }
}

impl TryFrom<i32> for Signature {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        Signature::from_i32(v).ok_or_else(|| Error::InvalidInput(alloc::format!("signature {v} is not +1 or -1")))
    }
}

/// Point `(z, u + i|z|²)` of `H²`; on the hypersurface by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourcePoint {
    pub z: Complex64,
    pub u: f64,
}

impl SourcePoint {
    pub const ORIGIN: SourcePoint = SourcePoint { z: Complex64::new(0.0, 0.0), u: 0.0 };

    pub fn new(z: Complex64, u: f64) -> Self {
        SourcePoint { z, u }
    }

    pub fn w(&self) -> Complex64 {
        Complex64::new(self.u, self.z.norm_sqr())
    }

    pub fn coords(&self) -> [Complex64; 2] {
        [self.z, self.w()]
    }
}

/// `Im w - |z|²`.
pub fn source_residual(z: Complex64, w: Complex64) -> f64 {
    w.im - z.norm_sqr()
}

/// `Im w - |z1|² - ε|z2|²`.
pub fn target_residual(eps: Signature, z1: Complex64, z2: Complex64, w: Complex64) -> f64 {
    w.im - z1.norm_sqr() - eps.value() * z2.norm_sqr()
}

/// `|z1|² + |z2|² + ε|z3|² - 1` for the target sphere model.
pub fn quadric_residual(eps: Signature, p: &[Complex64]) -> f64 {
    p[0].norm_sqr() + p[1].norm_sqr() + eps.value() * p[2].norm_sqr() - 1.0
}

/// Seeded generator used by every sampling routine.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Source point with `|z| <= radius` (uniform in the disc) and `|u| <= radius`.
pub fn sample_source_point(rng: &mut ChaCha8Rng, radius: f64) -> SourcePoint {
    let r = radius * libm::sqrt(rng.random::<f64>());
    let theta = rng.random_range(0.0..core::f64::consts::TAU);
    let u = rng.random_range(-radius..=radius);
    SourcePoint::new(Complex64::from_polar(r, theta), u)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MembershipReport {
    pub max_residual: f64,
    pub pass: bool,
    pub samples: usize,
    /// Sample points where a denominator vanished; skipped, not fatal.
    pub failures: Vec<SourcePoint>,
}

/// Samples `n` points of `H²` near 0 and reports the largest target residual
/// of their images under `h`.
pub fn maps_hypersurface(
    h: &RationalMap,
    eps: Signature,
    n: usize,
    radius: f64,
    tol: f64,
    seed: u64,
) -> Result<MembershipReport> {
    if h.nvars() != 2 || h.len() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: h.len() });
    }
    let mut rng = seeded_rng(seed);
    let mut max_residual: f64 = 0.0;
    let mut failures = Vec::new();
    let mut used = 0;
    for _ in 0..n {
        let p = sample_source_point(&mut rng, radius);
        match h.eval(&p.coords()) {
            Ok(v) => {
                used += 1;
                max_residual = max_residual.max(target_residual(eps, v[0], v[1], v[2]).abs());
            }
            Err(Error::DenominatorVanishes) => failures.push(p),
            Err(e) => return Err(e),
        }
    }
    Ok(MembershipReport { max_residual, pass: used > 0 && max_residual <= tol, samples: used, failures })
}

/// Quantities entering the F² test.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct F2Diagnostics {
    pub origin_value: f64,
    /// `f1_z f2_{z²} - f2_z f1_{z²}` at 0.
    pub nondegeneracy: Complex64,
    pub g_w: Complex64,
    pub membership: Option<MembershipReport>,
    pub in_f2: bool,
}

/// Jet-level part of the F² test (fixes 0, 2-nondegenerate, transversal).
pub fn f2_jet_diagnostics(jets: &[Jet]) -> F2Diagnostics {
    let origin_value = jets.iter().map(|j| j.coeff(0, 0).norm()).fold(0.0, f64::max);
    let (f1, f2, g) = (&jets[0], &jets[1], &jets[2]);
    // second derivatives carry a factor 2 over the stored coefficients
    let nondegeneracy =
        f1.coeff(1, 0) * f2.coeff(2, 0) * 2.0 - f2.coeff(1, 0) * f1.coeff(2, 0) * 2.0;
    let g_w = g.coeff(0, 1);
    let in_f2 = origin_value <= TOL_FIXES_ORIGIN
        && nondegeneracy.norm() > TOL_NONDEGENERATE
        && g_w.re > TOL_TRANSVERSAL
        && g_w.im.abs() < TOL_NONDEGENERATE;
    F2Diagnostics { origin_value, nondegeneracy, g_w, membership: None, in_f2 }
}

/// F² membership: fixes 0, 2-nondegenerate, transversal, and maps `H²` into `H³_ε`.
pub fn is_in_f2(h: &RationalMap, eps: Signature) -> Result<F2Diagnostics> {
    if !h.is_regular_at_origin() {
        return Err(Error::DenominatorVanishes);
    }
    let jets = h.expand(2)?;
    let mut diag = f2_jet_diagnostics(&jets);
    let report = maps_hypersurface(h, eps, 1000, 0.1, 1e-10, DEFAULT_SEED)?;
    diag.in_f2 &= report.pass;
    diag.membership = Some(report);
    Ok(diag)
}

/// Formal check of the mapping equation up to total order `order` in
/// `(z, z̄, u)`: substitutes `w = u + i z z̄` into `Im g - |f1|² - ε|f2|²` and
/// returns the largest surviving coefficient.
pub fn formal_membership_residual(h: &RationalMap, eps: Signature, order: usize) -> Result<f64> {
    Ok(formal_membership_residual_jets(&h.expand(order)?, eps))
}

/// [`formal_membership_residual`] for map jets vanishing at 0, at the jets' order.
pub fn formal_membership_residual_jets(jets: &[Jet], eps: Signature) -> f64 {
    let k = jets.iter().map(Jet::order).min().unwrap_or(0) as u32;
    // variables: (zeta, eta, u) with eta standing for conj(z)
    let zeta = Poly::var(3, 0);
    let eta = Poly::var(3, 1);
    let u = Poly::var(3, 2);
    let zeta_eta = &zeta * &eta;
    let w = &u + &zeta_eta.scale(I);
    let w_bar = &u - &zeta_eta.scale(I);
    let lift = |j: &Jet, x: &Poly, y: &Poly, conj: bool| {
        let xp = pow_table(x, k);
        let yp = pow_table(y, k);
        let mut acc = Poly::zero(3);
        for (i, jj, c) in j.iter() {
            let c = if conj { c.conj() } else { c };
            if c == Complex64::default() {
                continue;
            }
            let m = xp[i].mul_truncated(&yp[jj], k).scale(c);
            acc = &acc + &m;
        }
        acc
    };
    let holo: Vec<Poly> = jets.iter().map(|j| lift(j, &zeta, &w, false)).collect();
    let anti: Vec<Poly> = jets.iter().map(|j| lift(j, &eta, &w_bar, true)).collect();
    let im_g = (&holo[2] - &anti[2]).scale(Complex64::new(0.0, -0.5));
    let f1 = holo[0].mul_truncated(&anti[0], k);
    let f2 = holo[1].mul_truncated(&anti[1], k).scale(eps.complex());
    let r = &(&im_g - &f1) - &f2;
    r.truncate(k).max_abs_coeff()
}

fn pow_table(p: &Poly, k: u32) -> Vec<Poly> {
    let mut t = vec![Poly::one(p.nvars())];
    for n in 1..=k as usize {
        let next = t[n - 1].mul_truncated(p, k);
        t.push(next);
    }
    t
}

/// A biholomorphism between a sphere model and a Heisenberg model, with its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct Cayley {
    /// Sphere model to Heisenberg model.
    pub forward: RationalMap,
    /// Heisenberg model to sphere model.
    pub inverse: RationalMap,
    pub max_self_check_residual: f64,
}

const CAYLEY_CHECK_SAMPLES: usize = 500;
const CAYLEY_CHECK_TOL: f64 = 1e-10;

/// `(z, w) ↦ (z/(1+w), i(1-w)/(1+w))`, sending the sphere point `(0, 1)` to 0.
pub fn cayley_source() -> Result<Cayley> {
    let one_plus_w = Poly::bivariate([(0, 0, ONE), (0, 1, ONE)]);
    let forward = RationalMap::with_common_den(
        vec![Poly::var(2, 0), Poly::bivariate([(0, 0, I), (0, 1, -I)])],
        one_plus_w,
    );
    // w = (i - W)/(i + W), z = 2iZ/(i + W)
    let i_plus_w = Poly::bivariate([(0, 0, I), (0, 1, ONE)]);
    let inverse = RationalMap::with_common_den(
        vec![Poly::bivariate([(1, 0, I * 2.0)]), Poly::bivariate([(0, 0, I), (0, 1, -ONE)])],
        i_plus_w,
    );
    let mut rng = seeded_rng(DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..CAYLEY_CHECK_SAMPLES {
        let p = sample_sphere_point(&mut rng, 2, None, 0.0);
        if (p[1] + ONE).norm() < 0.25 {
            continue;
        }
        let q = forward.eval(&p)?;
        worst = worst.max(source_residual(q[0], q[1]).abs());
    }
    if worst >= CAYLEY_CHECK_TOL {
        return Err(Error::SelfCheckFailed { max_residual: worst });
    }
    Ok(Cayley { forward, inverse, max_self_check_residual: worst })
}

/// `(z1, z2, z3) ↦ (z1/(1+z2), z3/(1+z2), i(1-z2)/(1+z2))`, sending `(0, 1, 0)` to 0.
pub fn cayley_target(eps: Signature) -> Result<Cayley> {
    let den = Poly::from_terms(3, [([0, 0, 0], ONE), ([0, 1, 0], ONE)]);
    let forward = RationalMap::with_common_den(
        vec![
            Poly::var(3, 0),
            Poly::var(3, 2),
            Poly::from_terms(3, [([0, 0, 0], I), ([0, 1, 0], -I)]),
        ],
        den,
    );
    let i_plus_w = Poly::from_terms(3, [([0, 0, 0], I), ([0, 0, 1], ONE)]);
    let inverse = RationalMap::with_common_den(
        vec![
            Poly::from_terms(3, [([1, 0, 0], I * 2.0)]),
            Poly::from_terms(3, [([0, 0, 0], I), ([0, 0, 1], -ONE)]),
            Poly::from_terms(3, [([0, 1, 0], I * 2.0)]),
        ],
        i_plus_w,
    );
    let mut rng = seeded_rng(DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..CAYLEY_CHECK_SAMPLES {
        let p = sample_quadric_point(&mut rng, eps);
        if (p[1] + ONE).norm() < 0.25 {
            continue;
        }
        let q = forward.eval(&p)?;
        worst = worst.max(target_residual(eps, q[0], q[1], q[2]).abs());
    }
    if worst >= CAYLEY_CHECK_TOL {
        return Err(Error::SelfCheckFailed { max_residual: worst });
    }
    Ok(Cayley { forward, inverse, max_self_check_residual: worst })
}

/// Random point of the unit sphere in `C^n`; with `near = Some(p)` the
/// point is `p` plus a perturbation of size `spread`, renormalized.
pub fn sample_sphere_point(
    rng: &mut ChaCha8Rng,
    n: usize,
    near: Option<&[Complex64]>,
    spread: f64,
) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|k| {
                let d = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                match near {
                    Some(p) => p[k] + d * spread,
                    None => d,
                }
            })
            .collect();
        let norm = libm::sqrt(v.iter().map(Complex64::norm_sqr).sum::<f64>());
        if norm > 1e-3 && (near.is_some() || norm <= 1.0) {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Random point of `Q_ε`, built from a random direction in the first two
/// coordinates and a bounded third coordinate.
pub fn sample_quadric_point(rng: &mut ChaCha8Rng, eps: Signature) -> Vec<Complex64> {
    let z3 = Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let rest = 1.0 - eps.value() * z3.norm_sqr();
    let dir = sample_sphere_point(rng, 2, None, 0.0);
    let s = libm::sqrt(rest);
    vec![dir[0] * s, dir[1] * s, z3]
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SphereReport {
    pub max_residual: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Residual `|H1|² + |H2|² + ε|H3|² - 1` over sphere points within `spread`
/// of `base`; points where `h` is singular are skipped.
pub fn sphere_map_residual(
    h: &RationalMap,
    eps: Signature,
    base: [Complex64; 2],
    n: usize,
    spread: f64,
    seed: u64,
) -> Result<SphereReport> {
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for _ in 0..n {
        let p = sample_sphere_point(&mut rng, 2, Some(&base), spread);
        match h.eval(&p) {
            Ok(v) => worst = worst.max(quadric_residual(eps, &v).abs()),
            Err(Error::DenominatorVanishes) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SphereReport { max_residual: worst, samples: n - skipped, skipped })
}

/// Sphere-model map carried to the Heisenberg models: `C_t ∘ h ∘ C_s⁻¹`.
pub fn heisenberg_model(h: &RationalMap, eps: Signature) -> Result<RationalMap> {
    let cs = cayley_source()?;
    let ct = cayley_target(eps)?;
    let inner = h.compose(&cs.inverse)?;
    ct.forward.compose(&inner)
}

/// Target isotropy `(z1, z2, w) ↦ (z2, z1, -w)` of `H³_-` (the `σ = -1`
/// component); flips the sign of `g_w(0)`.
pub fn swap_sheet_jets(jets: &MapJet) -> MapJet {
    vec![jets[1].clone(), jets[0].clone(), jets[2].scale(-ONE)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::RationalGerm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn residual_examples() {
        assert_eq!(source_residual(c(0.0, 0.0), c(0.0, 0.0)), 0.0);
        assert_eq!(source_residual(c(1.0, 0.0), c(0.0, 2.0)), 1.0);
        assert_eq!(target_residual(Signature::Minus, c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)), 0.0);
        assert_eq!(target_residual(Signature::Plus, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn source_points_lie_on_hypersurface_exactly() {
        let mut rng = seeded_rng(7);
        for _ in 0..200 {
            let p = sample_source_point(&mut rng, 0.7);
            let [z, w] = p.coords();
            assert_eq!(source_residual(z, w), 0.0);
        }
    }

    fn linear_embedding() -> RationalMap {
        RationalMap::new(vec![
            RationalGerm::polynomial(Poly::var(2, 0)),
            RationalGerm::polynomial(Poly::zero(2)),
            RationalGerm::polynomial(Poly::var(2, 1)),
        ])
    }

    #[test]
    fn linear_embedding_maps_but_is_degenerate() {
        let h = linear_embedding();
        for eps in Signature::both() {
            let r = maps_hypersurface(&h, eps, 1000, 0.1, 1e-14, DEFAULT_SEED).unwrap();
            assert!(r.pass, "{r:?}");
            let d = is_in_f2(&h, eps).unwrap();
            assert!(!d.in_f2);
            assert_eq!(d.nondegeneracy, c(0.0, 0.0));
        }
    }

    #[test]
    fn duplicated_w_fails_membership() {
        let h = RationalMap::new(vec![
            RationalGerm::polynomial(Poly::var(2, 0)),
            RationalGerm::polynomial(Poly::var(2, 1)),
            RationalGerm::polynomial(Poly::var(2, 1)),
        ]);
        let r = maps_hypersurface(&h, Signature::Plus, 1000, 0.1, 1e-10, DEFAULT_SEED).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn cayley_round_trip_is_identity_to_order_four() {
        let cs = cayley_source().unwrap();
        let id = cs.forward.compose(&cs.inverse).unwrap();
        let jets = id.expand(4).unwrap();
        let expect = RationalMap::identity(2).expand(4).unwrap();
        for (a, b) in jets.iter().zip(&expect) {
            assert!(a.max_abs_diff(b) < 1e-10);
        }
        // sphere base point goes to the Heisenberg origin
        let o = cs.forward.eval(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(o.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn target_cayley_round_trip() {
        for eps in Signature::both() {
            let ct = cayley_target(eps).unwrap();
            assert!(ct.max_self_check_residual < 1e-10);
            let p = [c(0.1, 0.2), c(-0.3, 0.1), c(0.05, 0.4)];
            let back = ct.forward.eval(&ct.inverse.eval(&p).unwrap()).unwrap();
            for (a, b) in back.iter().zip(p.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
            let o = ct.forward.eval(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
            assert!(o.iter().all(|v| v.norm() < 1e-15));
        }
    }

    #[test]
    fn formal_residual_of_linear_embedding_vanishes() {
        let h = linear_embedding();
        assert!(formal_membership_residual(&h, Signature::Plus, 5).unwrap() < 1e-15);
        let bad = RationalMap::new(vec![
            RationalGerm::polynomial(Poly::var(2, 0)),
            RationalGerm::polynomial(Poly::var(2, 1)),
            RationalGerm::polynomial(Poly::var(2, 1)),
        ]);
        assert!(formal_membership_residual(&bad, Signature::Plus, 4).unwrap() > 0.5);
    }
}
