//! Normalization of maps in F² by isotropies and classification onto the
//! normal forms.
//!
//! A map is normalized when `H_z = (1,0,0)`, `H_w = (0,0,1)`, `f2_{z²} = 2`,
//! `f2_{zw} = 0`, `f1_{w²} ≥ 0`, `Re g_{w²} = 0` and `Re f2_{z²w} = 0` at 0.
//! [`normalize`] first eliminates these conditions in closed form, order by
//! order, then polishes all fifteen isotropy parameters by least squares.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{jet_derivative, Jet, MapJet, RationalMap};
use crate::catalog::{jet_coordinates_from_jets, jet_distance, normal_form_map, JetCoords, NormalFormId};
use crate::error::{Error, Result};
use crate::hypersurfaces::{f2_jet_diagnostics, formal_membership_residual_jets, is_in_f2, Signature};
use crate::isotropies::{
    act, act_jets, circle_element, invert_gamma, GammaParams, GammaPrimeParams, IsotropyPair, PAIR_CHART_DIM,
};
use crate::optimize::{levenberg_marquardt, LmOptions};

/// Jet order used throughout normalization.
pub const NORMALIZE_ORDER: usize = 4;
/// Largest accepted condition residual.
pub const ACCEPT_TOL: f64 = 1e-8;
/// Largest accepted classification certificate.
pub const CERTIFICATE_TOL: f64 = 1e-6;
/// Below this, `|f1_{w²}(0)|` counts as zero and the rotation gauge is fixed to `u = 1`.
pub const S_ZERO_TOL: f64 = 1e-7;
/// Largest formal membership residual accepted from jets.
const FORMAL_TOL: f64 = 1e-8;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Residuals of the seven normalization conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalResiduals {
    /// `|H_z - (1,0,0)|, |H_w - (0,0,1)|, |f2_{z²} - 2|, |f2_{zw}|, |Im f1_{w²}|, |Re g_{w²}|, |Re f2_{z²w}|`.
    pub values: [f64; 7],
    /// `Re f1_{w²}(0) ≥ -1e-12`.
    pub sign_ok: bool,
}

impl NormalResiduals {
    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.sign_ok && self.max() <= tol
    }
}

fn d(j: &Jet, i: usize, k: usize) -> Complex64 {
    jet_derivative(j, i, k).unwrap_or(ZERO)
}

fn norm3(v: [Complex64; 3]) -> f64 {
    libm::sqrt(v.iter().map(Complex64::norm_sqr).sum::<f64>())
}

/// The 19 real condition residuals: `H_z - (1,0,0)` and `H_w - (0,0,1)`
/// (six each), `f2_{z²} - 2` and `f2_{zw}` (two each), then `Im f1_{w²}`,
/// `Re g_{w²}`, `Re f2_{z²w}`.
pub fn condition_vector(jets: &[Jet]) -> Vec<f64> {
    let hz = [d(&jets[0], 1, 0) - ONE, d(&jets[1], 1, 0), d(&jets[2], 1, 0)];
    let hw = [d(&jets[0], 0, 1), d(&jets[1], 0, 1), d(&jets[2], 0, 1) - ONE];
    let a = d(&jets[1], 2, 0) - 2.0;
    let b = d(&jets[1], 1, 1);
    let mut out = Vec::with_capacity(19);
    for v in hz.iter().chain(hw.iter()) {
        out.push(v.re);
        out.push(v.im);
    }
    out.extend([a.re, a.im, b.re, b.im]);
    out.push(d(&jets[0], 0, 2).im);
    out.push(d(&jets[2], 0, 2).re);
    out.push(d(&jets[1], 2, 1).re);
    out
}

/// Condition residuals from jets of order at least 3.
pub fn normal_residuals_from_jets(jets: &[Jet]) -> NormalResiduals {
    let hz = [d(&jets[0], 1, 0) - ONE, d(&jets[1], 1, 0), d(&jets[2], 1, 0)];
    let hw = [d(&jets[0], 0, 1), d(&jets[1], 0, 1), d(&jets[2], 0, 1) - ONE];
    let f1ww = d(&jets[0], 0, 2);
    NormalResiduals {
        values: [
            norm3(hz),
            norm3(hw),
            (d(&jets[1], 2, 0) - 2.0).norm(),
            d(&jets[1], 1, 1).norm(),
            f1ww.im.abs(),
            d(&jets[2], 0, 2).re.abs(),
            d(&jets[1], 2, 1).re.abs(),
        ],
        sign_ok: f1ww.re >= -1e-12,
    }
}

/// Residuals of the seven normalization conditions for `h`.
pub fn verify_normal_conditions(h: &RationalMap, _eps: Signature) -> Result<NormalResiduals> {
    Ok(normal_residuals_from_jets(&h.expand(3)?))
}

/// Whether the normalizing isotropies are unique.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GaugeNote {
    /// `s > 0`: trivial stabilizer, unique normalizing pair.
    Unique,
    /// `s = 0`: the pair is determined up to the stabilizer. The rotation
    /// is fixed by `u = 1`, or by `f2_{w²}(0) ∈ -ε·[0, ∞)` when that
    /// coefficient does not vanish.
    FixedAtZero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationResult {
    /// Exact normalized map, present when normalizing a rational map.
    pub normalized: Option<RationalMap>,
    pub normalized_jets: MapJet,
    pub pair: IsotropyPair,
    pub residuals: NormalResiduals,
    pub gauge: GaugeNote,
    pub iterations: usize,
}

impl NormalizationResult {
    pub fn gamma(&self) -> &GammaParams {
        &self.pair.gamma
    }

    pub fn gamma_p(&self) -> &GammaPrimeParams {
        &self.pair.gamma_p
    }
}

/// Checks 2-nondegeneracy, transversality and the formal mapping equation
/// on jets.
pub fn check_f2_jets(jets: &[Jet], eps: Signature) -> Result<()> {
    let diag = f2_jet_diagnostics(jets);
    if !diag.in_f2 {
        return Err(Error::NotInF2(alloc::format!(
            "jet test failed: H(0) = {:?}, nondegeneracy = {}, g_w(0) = {}",
            diag.origin_value,
            diag.nondegeneracy.norm(),
            diag.g_w
        )));
    }
    let formal = formal_membership_residual_jets(jets, eps);
    let scale = jets.iter().flat_map(|j| j.coeffs().iter()).fold(1.0f64, |m, c| m.max(c.norm()));
    if formal > FORMAL_TOL * scale * scale {
        return Err(Error::NotInF2(alloc::format!("mapping equation residual {formal} at the jet level")));
    }
    Ok(())
}

fn apply(pair: &IsotropyPair, jets: &[Jet], eps: Signature) -> Result<MapJet> {
    act_jets(pair, jets, eps)
}

/// Closed-form staged elimination; returns the pair and the transformed jets.
fn stage_a(jets: &[Jet], eps: Signature) -> Result<(IsotropyPair, MapJet)> {
    let mut total = IsotropyPair::TRIVIAL;
    let mut cur = jets.to_vec();
    let push = |p: IsotropyPair, cur: &mut MapJet, total: &mut IsotropyPair| -> Result<()> {
        *cur = apply(&p, cur, eps)?;
        *total = p.compose(total, eps)?;
        Ok(())
    };

    // first order: target parameters only
    let g_w = d(&cur[2], 0, 1).re;
    let fw = [d(&cur[0], 0, 1), d(&cur[1], 0, 1)];
    let lp = 1.0 / libm::sqrt(g_w);
    let v = [d(&cur[0], 1, 0) * lp, d(&cur[1], 1, 0) * lp];
    let q = v[0].norm_sqr() + eps.value() * v[1].norm_sqr();
    let v = [v[0] / libm::sqrt(q), v[1] / libm::sqrt(q)];
    let p1 = IsotropyPair::new(
        GammaParams::TRIVIAL,
        GammaPrimeParams {
            lambda: lp,
            a: [v[0].conj(), -v[1].conj()],
            c: [-fw[0] / g_w, -fw[1] / g_w],
            ..GammaPrimeParams::TRIVIAL
        },
    );
    push(p1, &mut cur, &mut total)?;

    // scale and phase of f2_{z²}
    let f = d(&cur[1], 2, 0);
    if f.norm() < 1e-300 {
        return Err(Error::NotInF2("f2_{z²}(0) vanishes after first-order normalization".into()));
    }
    let l = 2.0 / f.norm();
    let ph = f / f.norm();
    let p2 = IsotropyPair::new(
        GammaParams { lambda: 1.0 / l, ..GammaParams::TRIVIAL },
        GammaPrimeParams { lambda: 1.0 / l, u: ph.conj(), a: [ph, ZERO], ..GammaPrimeParams::TRIVIAL },
    );
    push(p2, &mut cur, &mut total)?;

    // second order: c and c′
    let c = -d(&cur[1], 1, 1) / 2.0;
    let psi = GammaParams { c, ..GammaParams::TRIVIAL };
    let p3 = IsotropyPair::new(
        invert_gamma(&psi),
        GammaPrimeParams { c: [-c, ZERO], ..GammaPrimeParams::TRIVIAL },
    );
    push(p3, &mut cur, &mut total)?;

    // third order: r and r′
    let g02 = cur[2].coeff(0, 2).re;
    let b21 = cur[1].coeff(2, 1).re;
    let psi = GammaParams { r: b21 - g02, ..GammaParams::TRIVIAL };
    let p4 = IsotropyPair::new(
        invert_gamma(&psi),
        GammaPrimeParams { r: 2.0 * g02 - b21, ..GammaPrimeParams::TRIVIAL },
    );
    push(p4, &mut cur, &mut total)?;

    // rotate f1_{w²} onto the nonnegative axis
    let a = d(&cur[0], 0, 2);
    if a.norm() > S_ZERO_TOL {
        push(circle_element(a / a.norm()), &mut cur, &mut total)?;
    }
    Ok((total, cur))
}

fn chart_residual(x: &[f64], base: &[Jet], eps: Signature) -> Result<Vec<f64>> {
    let q = IsotropyPair::from_chart(x, eps)?;
    Ok(condition_vector(&act_jets(&q, base, eps)?))
}

/// Normalizes map jets (order ≥ 3, vanishing at 0).
pub fn normalize_jets(jets: &[Jet], eps: Signature, opts: &LmOptions) -> Result<NormalizationResult> {
    check_f2_jets(jets, eps)?;
    let (pair_a, cur) = stage_a(jets, eps)?;
    let x0 = IsotropyPair::TRIVIAL.to_chart();
    let mut pair = pair_a;
    let mut normalized = cur;
    let mut iterations = 0;
    if condition_vector(&normalized).iter().fold(0.0f64, |m, v| m.max(v.abs())) >= opts.target {
        let rep = levenberg_marquardt(|x| chart_residual(x, &normalized, eps), &x0, opts)?;
        iterations = rep.iterations;
        let q = IsotropyPair::from_chart(&rep.x, eps)?;
        normalized = act_jets(&q, &normalized, eps)?;
        pair = q.compose(&pair_a, eps)?;
    }
    // a polish step may flip the sign of f1_{w²}; restore the gauge
    let a = d(&normalized[0], 0, 2);
    if a.norm() > S_ZERO_TOL && a.re < 0.0 {
        let r = circle_element(a / a.norm());
        normalized = act_jets(&r, &normalized, eps)?;
        pair = r.compose(&pair, eps)?;
    }
    // at s = 0 the conditions leave a rotation free; fix it by making
    // f2_{w²}(0) real with the sign of -ε when it does not vanish
    let x = d(&normalized[1], 0, 2);
    if a.norm() <= S_ZERO_TOL && x.norm() > S_ZERO_TOL {
        let u = (x * (-eps.value()) / x.norm()).sqrt();
        let r = circle_element(u);
        normalized = act_jets(&r, &normalized, eps)?;
        pair = r.compose(&pair, eps)?;
    }
    let residuals = normal_residuals_from_jets(&normalized);
    if !residuals.holds(ACCEPT_TOL) {
        return Err(Error::NoConvergence { max_residual: residuals.max() });
    }
    let gauge = if a.norm() > S_ZERO_TOL { GaugeNote::Unique } else { GaugeNote::FixedAtZero };
    debug_assert_eq!(pair.to_chart().len(), PAIR_CHART_DIM);
    Ok(NormalizationResult { normalized: None, normalized_jets: normalized, pair, residuals, gauge, iterations })
}

/// Normalizes a map germ in F²; also returns the exact normalized map.
pub fn normalize(h: &RationalMap, eps: Signature) -> Result<NormalizationResult> {
    let diag = is_in_f2(h, eps)?;
    if !diag.in_f2 {
        return Err(Error::NotInF2(alloc::format!(
            "nondegeneracy = {}, g_w(0) = {}, membership residual = {:?}",
            diag.nondegeneracy.norm(),
            diag.g_w,
            diag.membership.map(|m| m.max_residual)
        )));
    }
    let jets = h.expand(NORMALIZE_ORDER)?;
    let mut res = normalize_jets(&jets, eps, &LmOptions::default())?;
    res.normalized = Some(act(&res.pair, h, eps)?);
    Ok(res)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub id: NormalFormId,
    /// Jet distance from the normalized map to the chosen normal form.
    pub certificate: f64,
    /// Jet distances to `G1`, `G2(s)`, `G3(s)` at the recovered `s`.
    pub distances: [f64; 3],
    pub normalization: NormalizationResult,
    pub coords: JetCoords,
}

/// Jet coordinates of `G_{k,s,ε}`.
pub fn catalog_coords(id: &NormalFormId) -> Result<JetCoords> {
    crate::catalog::jet_coordinates(&normal_form_map(id)?)
}

/// Decides the normal form of normalized jet coordinates.
pub fn classify_coords(coords: &JetCoords, eps: Signature) -> Result<(NormalFormId, f64, [f64; 3])> {
    let s = coords.s_value();
    let ids = [
        NormalFormId::g1(eps),
        NormalFormId { family: 2, s, eps },
        NormalFormId { family: 3, s, eps },
    ];
    let mut distances = [0.0; 3];
    for (k, id) in ids.iter().enumerate() {
        distances[k] = jet_distance(coords, &catalog_coords(id)?)?;
    }
    let best = (0..3).min_by(|&a, &b| distances[a].total_cmp(&distances[b])).unwrap_or(1);
    let id = ids[best];
    let certificate = distances[best];
    if certificate >= CERTIFICATE_TOL {
        return Err(Error::Unclassifiable { certificate });
    }
    Ok((id, certificate, distances))
}

/// Classifies map jets (order ≥ 3, vanishing at 0).
pub fn classify_jets(jets: &[Jet], eps: Signature, opts: &LmOptions) -> Result<Classification> {
    let normalization = normalize_jets(jets, eps, opts)?;
    let coords = jet_coordinates_from_jets(&normalization.normalized_jets)?;
    let (id, certificate, distances) = classify_coords(&coords, eps)?;
    Ok(Classification { id, certificate, distances, normalization, coords })
}

/// Normalizes `h` and identifies its normal form.
pub fn classify(h: &RationalMap, eps: Signature) -> Result<Classification> {
    let normalization = normalize(h, eps)?;
    let coords = jet_coordinates_from_jets(&normalization.normalized_jets)?;
    let (id, certificate, distances) = classify_coords(&coords, eps)?;
    Ok(Classification { id, certificate, distances, normalization, coords })
}

/// Chart distance of a normalizing pair from the inverse of the applied one:
/// `|recovered ∘ applied - id|` in the isotropy chart.
pub fn inversion_error(recovered: &IsotropyPair, applied: &IsotropyPair, eps: Signature) -> Result<f64> {
    Ok(recovered.compose(applied, eps)?.distance_to_trivial())
}

/// Convenience: the trivial pair together with identity jets of `G`.
pub fn trivial_result(id: &NormalFormId) -> Result<NormalizationResult> {
    let h = normal_form_map(id)?;
    let jets = h.expand(NORMALIZE_ORDER)?;
    let residuals = normal_residuals_from_jets(&jets);
    let gauge = if id.s > 0.0 { GaugeNote::Unique } else { GaugeNote::FixedAtZero };
    Ok(NormalizationResult {
        normalized: Some(h),
        normalized_jets: jets,
        pair: IsotropyPair::TRIVIAL,
        residuals,
        gauge,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::jet_coordinates;
    use crate::hypersurfaces::seeded_rng;
    use crate::isotropies::random_pair;

    fn g(k: u8, s: f64, eps: Signature) -> RationalMap {
        normal_form_map(&NormalFormId::new(k, s, eps).unwrap()).unwrap()
    }

    #[test]
    fn catalog_satisfies_conditions() {
        for eps in Signature::both() {
            for k in 1..=3u8 {
                for s in [0.0, 0.25, 0.5, 1.0, 2.0] {
                    if k == 1 && s > 0.0 {
                        continue;
                    }
                    let r = verify_normal_conditions(&g(k, s, eps), eps).unwrap();
                    assert!(r.holds(1e-12), "{k} {s} {eps:?}: {:?}", r.values);
                }
            }
        }
    }

    #[test]
    fn acted_map_violates_conditions() {
        let mut rng = seeded_rng(5);
        for eps in Signature::both() {
            let p = random_pair(&mut rng, eps);
            let h = act(&p, &g(2, 1.0, eps), eps).unwrap();
            assert!(verify_normal_conditions(&h, eps).unwrap().max() > 1e-3);
        }
    }

    #[test]
    fn normal_form_is_fixed_point() {
        let r = normalize(&g(3, 1.0, Signature::Plus), Signature::Plus).unwrap();
        assert!(r.pair.distance_to_trivial() < 1e-12);
        let c = classify(&g(3, 1.0, Signature::Plus), Signature::Plus).unwrap();
        assert_eq!(c.id.family, 3);
        assert!((c.id.s - 1.0).abs() < 1e-12 && c.certificate < 1e-12);
        let c = classify(&g(1, 0.0, Signature::Minus), Signature::Minus).unwrap();
        assert_eq!(c.id, NormalFormId::g1(Signature::Minus));
    }

    #[test]
    fn round_trip_recovers_applied_pair() {
        let mut rng = seeded_rng(42);
        for eps in Signature::both() {
            for k in [2u8, 3] {
                let p = random_pair(&mut rng, eps);
                let h = act(&p, &g(k, 0.7, eps), eps).unwrap();
                let c = classify(&h, eps).unwrap();
                assert_eq!(c.id.family, k);
                assert!((c.id.s - 0.7).abs() < 1e-6);
                let target = jet_coordinates(&g(k, 0.7, eps)).unwrap();
                assert!(jet_distance(&c.coords, &target).unwrap() < 1e-8);
                assert!(inversion_error(&c.normalization.pair, &p, eps).unwrap() < 1e-6);
            }
        }
    }

    #[test]
    fn round_trip_at_zero_recovers_map() {
        let mut rng = seeded_rng(9);
        for eps in Signature::both() {
            for k in 1..=3u8 {
                let p = random_pair(&mut rng, eps);
                let h = act(&p, &g(k, 0.0, eps), eps).unwrap();
                let c = classify(&h, eps).unwrap();
                assert_eq!(c.id.family, k);
                assert!(c.id.s < 1e-6);
                assert_eq!(c.normalization.gauge, GaugeNote::FixedAtZero);
            }
        }
    }

    #[test]
    fn idempotent() {
        let mut rng = seeded_rng(1);
        let eps = Signature::Minus;
        let p = random_pair(&mut rng, eps);
        let h = act(&p, &g(3, 1.3, eps), eps).unwrap();
        let once = normalize(&h, eps).unwrap();
        let twice = normalize(once.normalized.as_ref().unwrap(), eps).unwrap();
        assert!(twice.pair.distance_to_trivial() < 1e-8);
    }

    #[test]
    fn rejects_degenerate_map() {
        let h = crate::catalog::sphere_model_map(1, Signature::Plus).unwrap();
        let lin = RationalMap::new(alloc::vec![h.components[0].clone(), crate::algebra::RationalGerm::polynomial(crate::algebra::Poly::zero(2)), h.components[1].clone()]);
        assert!(matches!(normalize(&lin, Signature::Plus), Err(Error::NotInF2(_))));
    }
}
