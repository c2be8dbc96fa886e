//! The orbit map `Ψ(ξ) = j₀(σ′_{γ′} ∘ G_{k,s,ε} ∘ σ_γ⁻¹)`, its Jacobian rank,
//! stabilizer classification, and convergence experiments for the action.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{real_jacobian, MapJet, DEFAULT_STEP};
use crate::catalog::{jet_coordinates_from_jets, jet_distance, normal_form_map, JetCoords, NormalFormId};
use crate::error::{Error, Result};
use crate::hypersurfaces::{f2_jet_diagnostics, seeded_rng, Signature};
use crate::isotropies::{
    act_jets, circle_element, random_pair, reflection_element, GammaParams, IsotropyPair, PAIR_CHART_DIM,
};
use crate::normalization::{normalize_jets, NORMALIZE_ORDER};
use crate::optimize::{levenberg_marquardt, LmOptions};

/// Real dimension of the orbit chart.
pub const ORBIT_CHART_DIM: usize = PAIR_CHART_DIM + 1;

/// A point `ξ` of `Γ × Γ′ × ℝ⁺` in the chart `(λ, r, θ_u, Re c, Im c, λ′, r′,
/// θ_u′, α, Re a2′, Im a2′, Re c1′, Im c1′, Re c2′, Im c2′, s)`.
///
/// The base point `ξ₀` is the trivial pair with `s = s₀`. The reference
/// listing of `ξ₀` also carries four conjugate slots; this real chart has none.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitParams {
    pub pair: IsotropyPair,
    pub s: f64,
}

impl OrbitParams {
    pub fn base(s0: f64) -> Self {
        OrbitParams { pair: IsotropyPair::TRIVIAL, s: s0 }
    }

    pub fn to_chart(&self) -> [f64; ORBIT_CHART_DIM] {
        let mut out = [0.0; ORBIT_CHART_DIM];
        out[..PAIR_CHART_DIM].copy_from_slice(&self.pair.to_chart());
        out[PAIR_CHART_DIM] = self.s;
        out
    }

    pub fn from_chart(x: &[f64], eps: Signature) -> Result<Self> {
        if x.len() != ORBIT_CHART_DIM {
            return Err(Error::ArityMismatch { expected: ORBIT_CHART_DIM, found: x.len() });
        }
        let s = x[PAIR_CHART_DIM];
        if !(s > 0.0) {
            return Err(Error::ConstraintViolated(alloc::format!("s = {s} must be positive")));
        }
        Ok(OrbitParams { pair: IsotropyPair::from_chart(&x[..PAIR_CHART_DIM], eps)?, s })
    }
}

fn check_family(k: u8) -> Result<()> {
    if k == 2 || k == 3 {
        Ok(())
    } else {
        Err(Error::InvalidInput(alloc::format!("orbit map needs family 2 or 3, got {k}")))
    }
}

/// `Ψ(ξ)` for family `k ∈ {2, 3}`.
pub fn orbit_map(xi: &OrbitParams, k: u8, eps: Signature) -> Result<JetCoords> {
    check_family(k)?;
    let g = normal_form_map(&NormalFormId::new(k, xi.s, eps)?)?.expand(3)?;
    jet_coordinates_from_jets(&act_jets(&xi.pair, &g, eps)?)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankReport {
    pub rank: usize,
    /// Singular values in decreasing order.
    pub singular_values: Vec<f64>,
    pub rel_tol: f64,
}

fn rank_of(j: DMatrix<f64>, rel_tol: f64) -> RankReport {
    let mut sv: Vec<f64> = j.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&v| v >= rel_tol * top).count();
    RankReport { rank, singular_values: sv, rel_tol }
}

/// The real `34 × 16` Jacobian of `Ψ` at `ξ₀ = (trivial pair, s0)`.
pub fn orbit_jacobian(k: u8, eps: Signature, s0: f64, step: f64) -> Result<DMatrix<f64>> {
    check_family(k)?;
    if !(s0 > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("s0 = {s0} must be positive")));
    }
    let x0 = OrbitParams::base(s0).to_chart();
    real_jacobian(
        |x: &[f64]| OrbitParams::from_chart(x, eps).and_then(|xi| orbit_map(&xi, k, eps)).map(|c| c.to_real()),
        &x0,
        step,
        true,
    )
}

/// Numerical rank of `Ψ` at `ξ₀`; `freeze_s` drops the `s` column.
pub fn rank_at_base(k: u8, eps: Signature, s0: f64, step: f64, rel_tol: f64, freeze_s: bool) -> Result<RankReport> {
    let j = orbit_jacobian(k, eps, s0, step)?;
    let j = if freeze_s { j.columns(0, PAIR_CHART_DIM).into_owned() } else { j };
    Ok(rank_of(j, rel_tol))
}

/// [`rank_at_base`] with the default step `1e-6` and relative threshold `1e-8`.
pub fn rank_at_base_default(k: u8, eps: Signature, s0: f64) -> Result<RankReport> {
    rank_at_base(k, eps, s0, DEFAULT_STEP, 1e-8, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StabilizerKind {
    Trivial,
    Circle,
    TwoElement,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilizerReport {
    pub kind: StabilizerKind,
    /// Residuals of the circle elements at `u = e^{2πik/16}`.
    pub circle_residuals: Vec<f64>,
    /// Residual of the `δ = -1` reflection element.
    pub reflection_residual: f64,
    /// Smallest residual found away from the trivial pair (distance > `1e-4`)
    /// by the random search and its local refinements.
    pub search_min_nontrivial: f64,
    /// Smallest chart distance to trivial among search points with residual below `1e-8`.
    pub search_max_distance_below_tol: f64,
    pub search_candidates: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizerOptions {
    pub candidates: usize,
    pub refinements: usize,
    pub seed: u64,
    /// Residual below which a candidate counts as stabilizing.
    pub tol: f64,
    /// Witness threshold for the explicit families.
    pub witness_tol: f64,
}

impl Default for StabilizerOptions {
    fn default() -> Self {
        StabilizerOptions { candidates: 10_000, refinements: 16, seed: 42, tol: 1e-8, witness_tol: 1e-12 }
    }
}

/// Number of circle elements tested.
pub const CIRCLE_SAMPLES: usize = 16;
const NONTRIVIAL_DIST: f64 = 1e-4;

fn act_residual(pair: &IsotropyPair, jets: &[crate::algebra::Jet], base: &JetCoords, eps: Signature) -> Result<f64> {
    jet_distance(&jet_coordinates_from_jets(&act_jets(pair, jets, eps)?)?, base)
}

/// Stabilizer of a normalized map: explicit circle and reflection families
/// plus a seeded random search with local least-squares refinement.
pub fn stabilizer_classify(jets: &MapJet, eps: Signature, opts: &StabilizerOptions) -> Result<StabilizerReport> {
    let base = jet_coordinates_from_jets(jets)?;
    let circle_residuals: Vec<f64> = (0..CIRCLE_SAMPLES)
        .map(|k| {
            let u = Complex64::from_polar(1.0, core::f64::consts::TAU * k as f64 / CIRCLE_SAMPLES as f64);
            act_residual(&circle_element(u), jets, &base, eps)
        })
        .collect::<Result<_>>()?;
    let reflection_residual = act_residual(&reflection_element(-1.0), jets, &base, eps)?;

    let mut rng = seeded_rng(opts.seed);
    let mut scored: Vec<(f64, IsotropyPair)> = Vec::with_capacity(opts.candidates);
    for _ in 0..opts.candidates {
        let p = random_pair(&mut rng, eps);
        let r = act_residual(&p, jets, &base, eps).unwrap_or(f64::INFINITY);
        scored.push((r, p));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut min_nontrivial = f64::INFINITY;
    let mut max_dist_below = 0.0f64;
    let mut consider = |r: f64, p: &IsotropyPair| {
        let dist = p.distance_to_trivial();
        if dist > NONTRIVIAL_DIST {
            min_nontrivial = min_nontrivial.min(r);
        }
        if r < opts.tol {
            max_dist_below = max_dist_below.max(dist);
        }
    };
    for (r, p) in &scored {
        consider(*r, p);
    }
    let lm = LmOptions { target: 1e-13, max_iter: 60, ..LmOptions::default() };
    for (_, p) in scored.iter().take(opts.refinements) {
        let f = |x: &[f64]| -> Result<Vec<f64>> {
            let q = IsotropyPair::from_chart(x, eps)?;
            let c = jet_coordinates_from_jets(&act_jets(&q, jets, eps)?)?;
            Ok(c.values.iter().zip(&base.values).flat_map(|(a, b)| [(a - b).re, (a - b).im]).collect())
        };
        let rep = levenberg_marquardt(f, &p.to_chart(), &lm)?;
        let q = IsotropyPair::from_chart(&rep.x, eps)?;
        let r = act_residual(&q, jets, &base, eps)?;
        consider(r, &q);
    }

    let circle_max = circle_residuals.iter().fold(0.0f64, |m, v| m.max(*v));
    let kind = if circle_max < opts.witness_tol {
        StabilizerKind::Circle
    } else if reflection_residual < opts.witness_tol {
        StabilizerKind::TwoElement
    } else {
        StabilizerKind::Trivial
    };
    if kind == StabilizerKind::Trivial && max_dist_below > NONTRIVIAL_DIST {
        return Err(Error::Inconsistent(alloc::format!(
            "search found a stabilizing pair at distance {max_dist_below} from trivial"
        )));
    }
    Ok(StabilizerReport {
        kind,
        circle_residuals,
        reflection_residual,
        search_min_nontrivial: min_nontrivial,
        search_max_distance_below_tol: max_dist_below,
        search_candidates: opts.candidates,
    })
}

/// [`stabilizer_classify`] for a catalog member, cross-checked against the
/// rule: trivial for `s > 0`, circle for `G1` and `G2(0)`, two elements for `G3(0)`.
pub fn stabilizer_of_normal_form(id: &NormalFormId, opts: &StabilizerOptions) -> Result<StabilizerReport> {
    let jets = normal_form_map(id)?.expand(NORMALIZE_ORDER)?;
    let rep = stabilizer_classify(&jets, id.eps, opts)?;
    let expected = match (id.family, id.s > 0.0) {
        (_, true) => StabilizerKind::Trivial,
        (3, false) => StabilizerKind::TwoElement,
        _ => StabilizerKind::Circle,
    };
    if rep.kind != expected {
        return Err(Error::Inconsistent(alloc::format!("{id}: found {:?}, expected {expected:?}", rep.kind)));
    }
    Ok(rep)
}

/// Parameter sequences `(φ_n, id)` acting on a fixed normal form.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SequenceKind {
    /// `φ_n = id` for all `n`.
    Constant,
    /// `φ_n = σ_γ` with `c = 1/n`, other parameters trivial.
    ShrinkingC,
    /// `φ_n = σ_γ` with `λ = n`, other parameters trivial.
    GrowingLambda,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SequenceSpec {
    pub base: NormalFormId,
    pub kind: SequenceKind,
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub n: Vec<usize>,
    /// Chart distance of `(φ_n, id)` to the trivial pair.
    pub parameter_distance: Vec<f64>,
    /// Jet distance from `N(φ_n, id, H)` to `H`.
    pub jet_distance: Vec<f64>,
    /// Jet distance from the normalized image to `H`.
    pub normalized_distance: Vec<f64>,
    /// `min(Re g_w(0), |f1_z f2_{z²} - f2_z f1_{z²}|(0))` of the acted map:
    /// how far it stays from the boundary of `F²`.
    pub class_margin: Vec<f64>,
    /// Least-squares slope of `log(parameter distance)` against `log n`
    /// over the second half of the sequence, when defined.
    pub parameter_decay_slope: Option<f64>,
    /// Set when the acted maps leave every compact subset of `F²`: their
    /// jets grow without bound or they approach the boundary of the class.
    pub diverges: bool,
}

fn loglog_slope(n: &[usize], v: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = n
        .iter()
        .zip(v)
        .skip(n.len() / 2)
        .filter(|(_, y)| **y > 0.0)
        .map(|(x, y)| (libm::log(*x as f64), libm::log(*y)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Log-log slope magnitude above which a trend counts as divergent.
pub const DIVERGENCE_SLOPE: f64 = 0.5;

/// Acts with `(φ_n, id)` on the base map for `n = 1..=terms` and records
/// parameter and jet distances.
pub fn convergence_experiment(spec: &SequenceSpec) -> Result<ConvergenceReport> {
    let eps = spec.base.eps;
    let jets = normal_form_map(&spec.base)?.expand(NORMALIZE_ORDER)?;
    let base = jet_coordinates_from_jets(&jets)?;
    let mut report = ConvergenceReport {
        n: Vec::new(),
        parameter_distance: Vec::new(),
        jet_distance: Vec::new(),
        normalized_distance: Vec::new(),
        class_margin: Vec::new(),
        parameter_decay_slope: None,
        diverges: false,
    };
    for n in 1..=spec.terms {
        let gamma = match spec.kind {
            SequenceKind::Constant => GammaParams::TRIVIAL,
            SequenceKind::ShrinkingC => GammaParams { c: Complex64::new(1.0 / n as f64, 0.0), ..GammaParams::TRIVIAL },
            SequenceKind::GrowingLambda => GammaParams { lambda: n as f64, ..GammaParams::TRIVIAL },
        };
        let pair = IsotropyPair { gamma, ..IsotropyPair::TRIVIAL };
        let acted = act_jets(&pair, &jets, eps)?;
        let coords = jet_coordinates_from_jets(&acted)?;
        let diag = f2_jet_diagnostics(&acted);
        report.class_margin.push(diag.g_w.re.min(diag.nondegeneracy.norm()));
        let normalized = normalize_jets(&acted, eps, &LmOptions::default())?;
        let ncoords = jet_coordinates_from_jets(&normalized.normalized_jets)?;
        report.n.push(n);
        report.parameter_distance.push(pair.distance_to_trivial());
        report.jet_distance.push(jet_distance(&coords, &base)?);
        report.normalized_distance.push(jet_distance(&ncoords, &base)?);
    }
    report.parameter_decay_slope = loglog_slope(&report.n, &report.parameter_distance);
    // Power-law trends over the second half: growth of the jets, or decay of
    // the class margin to zero.
    let grows = loglog_slope(&report.n, &report.jet_distance).is_some_and(|k| k > DIVERGENCE_SLOPE);
    let degenerates = loglog_slope(&report.n, &report.class_margin).is_some_and(|k| k < -DIVERGENCE_SLOPE);
    report.diverges = grows || degenerates;
    Ok(report)
}

/// Random perturbation of the given norm in the orbit chart.
pub fn random_chart_perturbation(rng: &mut rand_chacha::ChaCha8Rng, norm: f64) -> [f64; ORBIT_CHART_DIM] {
    let mut v = [0.0; ORBIT_CHART_DIM];
    for x in v.iter_mut() {
        *x = rng.random_range(-1.0..1.0);
    }
    let len = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    for x in v.iter_mut() {
        *x *= norm / len;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_point_reproduces_catalog() {
        for eps in Signature::both() {
            for k in [2u8, 3] {
                let c = orbit_map(&OrbitParams::base(0.7), k, eps).unwrap();
                let g = crate::catalog::jet_coordinates(&normal_form_map(&NormalFormId::new(k, 0.7, eps).unwrap()).unwrap())
                    .unwrap();
                assert!(jet_distance(&c, &g).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn varying_s_moves_f1ww() {
        let a = orbit_map(&OrbitParams::base(0.5), 2, Signature::Minus).unwrap();
        let b = orbit_map(&OrbitParams::base(0.6), 2, Signature::Minus).unwrap();
        assert!(((b.values[12] - a.values[12]).re - 0.05).abs() < 1e-14);
    }

    #[test]
    fn full_rank_at_base() {
        let r = rank_at_base_default(2, Signature::Minus, 0.5).unwrap();
        assert_eq!(r.rank, 16, "{:?}", r.singular_values);
        let r = rank_at_base(3, Signature::Plus, 1.0, DEFAULT_STEP, 1e-8, true).unwrap();
        assert_eq!(r.rank, 15);
    }

    #[test]
    fn stabilizers_of_small_catalog() {
        let opts = StabilizerOptions { candidates: 300, refinements: 4, ..StabilizerOptions::default() };
        for eps in Signature::both() {
            let r = stabilizer_of_normal_form(&NormalFormId::new(2, 0.0, eps).unwrap(), &opts).unwrap();
            assert!(r.circle_residuals.iter().all(|v| *v < 1e-12));
            let r = stabilizer_of_normal_form(&NormalFormId::new(3, 0.0, eps).unwrap(), &opts).unwrap();
            assert!(r.reflection_residual < 1e-12);
            let r = stabilizer_of_normal_form(&NormalFormId::new(2, 0.5, eps).unwrap(), &opts).unwrap();
            assert!(r.search_min_nontrivial > 1e-8);
        }
    }

    #[test]
    fn convergence_sequences() {
        let base = NormalFormId::new(2, 0.5, Signature::Minus).unwrap();
        let r = convergence_experiment(&SequenceSpec { base, kind: SequenceKind::Constant, terms: 5 }).unwrap();
        assert!(r.parameter_distance.iter().chain(&r.jet_distance).all(|v| *v == 0.0));
        let r = convergence_experiment(&SequenceSpec { base, kind: SequenceKind::ShrinkingC, terms: 20 }).unwrap();
        assert!((r.parameter_decay_slope.unwrap() + 1.0).abs() < 0.05);
        assert!(!r.diverges);
        assert!(r.normalized_distance.iter().all(|v| *v < 1e-8));
        let r = convergence_experiment(&SequenceSpec { base, kind: SequenceKind::GrowingLambda, terms: 20 }).unwrap();
        assert!(r.diverges, "{:?} {:?}", r.jet_distance, r.class_margin);
    }

    #[test]
    fn locally_injective_near_base() {
        let eps = Signature::Minus;
        let x0 = OrbitParams::base(0.5).to_chart();
        let mut rng = seeded_rng(42);
        let shifted = |d: &[f64; ORBIT_CHART_DIM]| {
            let x: Vec<f64> = x0.iter().zip(d).map(|(a, b)| a + b).collect();
            orbit_map(&OrbitParams::from_chart(&x, eps).unwrap(), 3, eps).unwrap()
        };
        for _ in 0..50 {
            let d1 = random_chart_perturbation(&mut rng, 1e-3);
            let d2 = random_chart_perturbation(&mut rng, 1e-3);
            assert!(jet_distance(&shifted(&d1), &shifted(&d2)).unwrap() > 1e-10);
        }
    }
}
