//! Algebraic laws of the map kernel as measurable defects: each function
//! returns the largest coefficient discrepancy of a law that holds exactly.

use alloc::vec::Vec;

use crate::algebra::{Poly, RationalMap, MAX_VARS};
use crate::catalog::{jet_coordinates, jet_distance, normal_form_map, NormalFormId};
use crate::error::{Error, Result};
use crate::hypersurfaces::Signature;
use crate::isotropies::{invert_gamma, invert_gamma_prime, sigma_map, sigma_prime_map, IsotropyPair};

/// Taylor order at which composition laws are compared.
pub const LAW_ORDER: u32 = 4;

fn taylor(m: &RationalMap, order: u32) -> Result<Vec<Poly>> {
    m.components.iter().map(|c| c.taylor(order)).collect()
}

fn taylor_diff(a: &RationalMap, b: &RationalMap, order: u32) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ArityMismatch { expected: a.len(), found: b.len() });
    }
    let (ta, tb) = (taylor(a, order)?, taylor(b, order)?);
    Ok(ta.iter().zip(&tb).map(|(x, y)| (x - y).max_abs_coeff()).fold(0.0, f64::max))
}

/// `(a ∘ b) ∘ c` against `a ∘ (b ∘ c)` at Taylor order 4.
pub fn associativity_defect(a: &RationalMap, b: &RationalMap, c: &RationalMap) -> Result<f64> {
    taylor_diff(&a.compose(b)?.compose(c)?, &a.compose(&b.compose(c)?)?, LAW_ORDER)
}

fn linear_part(m: &RationalMap) -> Result<Vec<Vec<num_complex::Complex64>>> {
    let n = m.nvars();
    taylor(m, 1)?
        .iter()
        .map(|p| {
            Ok((0..n)
                .map(|j| {
                    let mut e = [0; MAX_VARS];
                    e[j] = 1;
                    p.coeff(&e)
                })
                .collect())
        })
        .collect()
}

/// First-order jet of `outer ∘ inner` against the product of first-order
/// jets. Both maps must fix the origin.
pub fn chain_rule_defect(outer: &RationalMap, inner: &RationalMap) -> Result<f64> {
    if inner.len() != outer.nvars() {
        return Err(Error::ArityMismatch { expected: outer.nvars(), found: inner.len() });
    }
    let composed = linear_part(&outer.compose(inner)?)?;
    let (a, b) = (linear_part(outer)?, linear_part(inner)?);
    let mut worst = 0.0f64;
    for (i, row) in composed.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let product: num_complex::Complex64 = (0..b.len()).map(|k| a[i][k] * b[k][j]).sum();
            worst = worst.max((v - product).norm());
        }
    }
    Ok(worst)
}

/// Largest deviation from the identity of `σ ∘ σ⁻¹`, `σ⁻¹ ∘ σ` and the same
/// for `σ′`, at Taylor order 4.
pub fn inverse_defect(pair: &IsotropyPair, eps: Signature) -> Result<f64> {
    let s = sigma_map(&pair.gamma);
    let si = sigma_map(&invert_gamma(&pair.gamma));
    let t = sigma_prime_map(&pair.gamma_p, eps)?;
    let ti = sigma_prime_map(&invert_gamma_prime(&pair.gamma_p, eps), eps)?;
    let (id2, id3) = (RationalMap::identity(2), RationalMap::identity(3));
    let d = [
        taylor_diff(&s.compose(&si)?, &id2, LAW_ORDER)?,
        taylor_diff(&si.compose(&s)?, &id2, LAW_ORDER)?,
        taylor_diff(&t.compose(&ti)?, &id3, LAW_ORDER)?,
        taylor_diff(&ti.compose(&t)?, &id3, LAW_ORDER)?,
    ];
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// Jet distance between two catalog members.
pub fn catalog_separation(a: &NormalFormId, b: &NormalFormId) -> Result<f64> {
    jet_distance(&jet_coordinates(&normal_form_map(a)?)?, &jet_coordinates(&normal_form_map(b)?)?)
}

/// The injectivity grid `{G1} ∪ {G_{k,s}: k ∈ {2,3}, s = 0, step, ..., s_max}`.
pub fn injectivity_grid(eps: Signature, step: f64, s_max: f64) -> Result<Vec<NormalFormId>> {
    let n = libm::round(s_max / step) as usize;
    let mut out = alloc::vec![NormalFormId::g1(eps)];
    for family in [2u8, 3] {
        for k in 0..=n {
            out.push(NormalFormId::new(family, libm::round(k as f64 * step * 1e12) / 1e12, eps)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurfaces::seeded_rng;
    use crate::isotropies::random_pair;

    #[test]
    fn laws_hold_on_samples() {
        let mut rng = seeded_rng(1);
        for eps in Signature::both() {
            let p: Vec<IsotropyPair> = (0..3).map(|_| random_pair(&mut rng, eps)).collect();
            let m: Vec<RationalMap> = p.iter().map(|x| sigma_map(&x.gamma)).collect();
            assert!(associativity_defect(&m[0], &m[1], &m[2]).unwrap() < 1e-10);
            let g = normal_form_map(&NormalFormId::new(3, 0.7, eps).unwrap()).unwrap();
            assert!(chain_rule_defect(&g, &m[0]).unwrap() < 1e-10);
            assert!(inverse_defect(&p[0], eps).unwrap() < 1e-10);
        }
    }

    #[test]
    fn grid_members_are_separated() {
        for eps in Signature::both() {
            let grid = injectivity_grid(eps, 0.1, 2.0).unwrap();
            assert_eq!(grid.len(), 43);
            for (i, a) in grid.iter().enumerate() {
                for b in &grid[i + 1..] {
                    let d = catalog_separation(a, b).unwrap();
                    if a.same_map(b) {
                        assert!(d < 1e-14, "{a} {b} {d}");
                    } else {
                        assert!(d > 1e-6, "{a} {b} {d}");
                    }
                }
            }
        }
    }
}
