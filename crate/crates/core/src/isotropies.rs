//! Isotropy groups of `H²` and `H³_ε` at 0 in standard parameters, their
//! group operations, Heisenberg translations, and the action
//! `(γ, γ′, H) ↦ σ′_{γ′} ∘ H ∘ σ_γ⁻¹`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Jet, MapJet, Poly, RationalGerm, RationalMap};
use crate::error::{Error, Result};
use crate::hypersurfaces::{
    sample_source_point, seeded_rng, source_residual, target_residual, Signature, SourcePoint,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

const UNIT_TOL: f64 = 1e-12;
/// Relative to `|a1|² + |a2|²`; for `ε = -1` the constraint cancels.
const SPHERE_TOL: f64 = 1e-12;
const TRANSLATION_CHECK_SAMPLES: usize = 200;
const TRANSLATION_CHECK_TOL: f64 = 1e-12;

/// Standard parameters `γ = (λ, r, u, c)` of an isotropy of `H²`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GammaParams {
    pub lambda: f64,
    pub r: f64,
    pub u: Complex64,
    pub c: Complex64,
}

impl GammaParams {
    pub const TRIVIAL: GammaParams = GammaParams { lambda: 1.0, r: 0.0, u: ONE, c: ZERO };

    pub fn new(lambda: f64, r: f64, u: Complex64, c: Complex64) -> Self {
        GammaParams { lambda, r, u, c }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::ConstraintViolated(format!("lambda = {} must be positive", self.lambda)));
        }
        if (self.u.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::ConstraintViolated(format!("|u| = {} must be 1", self.u.norm())));
        }
        Ok(())
    }
}

/// Standard parameters `γ′ = (λ′, r′, u′, a′, c′)` with sign `σ` of an
/// isotropy of `H³_ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GammaPrimeParams {
    pub lambda: f64,
    pub r: f64,
    pub u: Complex64,
    pub a: [Complex64; 2],
    pub c: [Complex64; 2],
    pub sigma_sign: i8,
}

impl GammaPrimeParams {
    pub const TRIVIAL: GammaPrimeParams =
        GammaPrimeParams { lambda: 1.0, r: 0.0, u: ONE, a: [ONE, ZERO], c: [ZERO, ZERO], sigma_sign: 1 };

    pub fn sigma(&self) -> f64 {
        f64::from(self.sigma_sign)
    }

    pub fn validate(&self, eps: Signature) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::ConstraintViolated(format!("lambda' = {} must be positive", self.lambda)));
        }
        if (self.u.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::ConstraintViolated(format!("|u'| = {} must be 1", self.u.norm())));
        }
        if self.sigma_sign != 1 && self.sigma_sign != -1 {
            return Err(Error::ConstraintViolated(format!("sigma = {} must be +1 or -1", self.sigma_sign)));
        }
        if eps == Signature::Plus && self.sigma_sign != 1 {
            return Err(Error::ConstraintViolated("sigma = -1 requires eps = -1".into()));
        }
        let q = hermitian(eps, &self.a, &self.a).re;
        let scale = self.a[0].norm_sqr() + self.a[1].norm_sqr();
        if (q - self.sigma()).abs() > SPHERE_TOL * scale {
            return Err(Error::ConstraintViolated(format!(
                "|a1|^2 + eps|a2|^2 = {q} differs from sigma = {}",
                self.sigma_sign
            )));
        }
        Ok(())
    }

    /// The unitary-type matrix `U′ = [[u′a1, -εu′a2], [ā2, ā1]]`.
    pub fn u_matrix(&self, eps: Signature) -> [[Complex64; 2]; 2] {
        let e = eps.value();
        let [a1, a2] = self.a;
        [[self.u * a1, -self.u * a2 * e], [a2.conj(), a1.conj()]]
    }
}

/// `⟨x, y⟩_ε = x1 ȳ1 + ε x2 ȳ2`.
pub fn hermitian(eps: Signature, x: &[Complex64; 2], y: &[Complex64; 2]) -> Complex64 {
    x[0] * y[0].conj() + x[1] * y[1].conj() * eps.value()
}

fn mat_vec(m: &[[Complex64; 2]; 2], v: &[Complex64; 2]) -> [Complex64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// `σ_γ(z, w) = (λu(z + cw), λ²w) / (1 - 2ic̄z + (r - i|c|²)w)`.
pub fn sigma_map(g: &GammaParams) -> RationalMap {
    let lu = g.u * g.lambda;
    let f = Poly::bivariate([(1, 0, lu), (0, 1, lu * g.c)]);
    let gg = Poly::bivariate([(0, 1, Complex64::new(g.lambda * g.lambda, 0.0))]);
    let den = Poly::bivariate([
        (0, 0, ONE),
        (1, 0, -I * 2.0 * g.c.conj()),
        (0, 1, Complex64::new(g.r, -g.c.norm_sqr())),
    ]);
    RationalMap::with_common_den(vec![f, gg], den)
}

/// `σ′_{γ′}(z′, w′) = (λ′U′(z′ + c′w′), σλ′²w′) / (1 - 2i⟨z′, c′⟩_ε + (r′ - i⟨c′, c′⟩_ε)w′)`.
pub fn sigma_prime_map(g: &GammaPrimeParams, eps: Signature) -> Result<RationalMap> {
    g.validate(eps)?;
    let m = g.u_matrix(eps);
    let e = eps.value();
    let l = g.lambda;
    let uc = mat_vec(&m, &g.c);
    let row = |k: usize| {
        Poly::from_terms(3, [([1, 0, 0], m[k][0] * l), ([0, 1, 0], m[k][1] * l), ([0, 0, 1], uc[k] * l)])
    };
    let gg = Poly::from_terms(3, [([0, 0, 1], Complex64::new(g.sigma() * l * l, 0.0))]);
    let cc = hermitian(eps, &g.c, &g.c).re;
    let den = Poly::from_terms(
        3,
        [
            ([0, 0, 0], ONE),
            ([1, 0, 0], -I * 2.0 * g.c[0].conj()),
            ([0, 1, 0], -I * 2.0 * e * g.c[1].conj()),
            ([0, 0, 1], Complex64::new(g.r, -cc)),
        ],
    );
    Ok(RationalMap::with_common_den(vec![row(0), row(1), gg], den))
}

/// Closed-form parameters of `σ_γ⁻¹`.
pub fn invert_gamma(g: &GammaParams) -> GammaParams {
    GammaParams {
        lambda: 1.0 / g.lambda,
        r: -g.r / (g.lambda * g.lambda),
        u: g.u.conj(),
        c: -g.c * g.u / g.lambda,
    }
}

/// Closed-form parameters of `σ′_{γ′}⁻¹`.
pub fn invert_gamma_prime(g: &GammaPrimeParams, eps: Signature) -> GammaPrimeParams {
    let s = g.sigma();
    let m = g.u_matrix(eps);
    let uc = mat_vec(&m, &g.c);
    GammaPrimeParams {
        lambda: 1.0 / g.lambda,
        r: -s * g.r / (g.lambda * g.lambda),
        u: g.u.conj(),
        a: [g.a[0].conj() * s, -g.u * g.a[1] * s],
        c: [-uc[0] * (s / g.lambda), -uc[1] * (s / g.lambda)],
        sigma_sign: g.sigma_sign,
    }
}

/// Reads `γ` off the 2-jet of a source isotropy.
pub fn gamma_from_jets(jets: &[Jet]) -> Result<GammaParams> {
    if jets.len() != 2 {
        return Err(Error::ArityMismatch { expected: 2, found: jets.len() });
    }
    if jets[0].order() < 2 {
        return Err(Error::OrderExceeded { requested: 2, order: jets[0].order() });
    }
    let g_w = jets[1].coeff(0, 1);
    if !(g_w.re > 0.0) {
        return Err(Error::Inconsistent(format!("g_w(0) = {g_w} is not positive")));
    }
    let lambda = libm::sqrt(g_w.re);
    let lu = jets[0].coeff(1, 0);
    let u = lu / lu.norm();
    let c = jets[0].coeff(0, 1) / lu;
    let r = -jets[1].coeff(0, 2).re / (lambda * lambda);
    Ok(GammaParams { lambda, r, u, c })
}

/// Reads `γ′` off the degree-2 Taylor data of a target isotropy.
pub fn gamma_prime_from_map(map: &RationalMap, eps: Signature) -> Result<GammaPrimeParams> {
    if map.nvars() != 3 || map.len() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: map.len() });
    }
    let t: Vec<Poly> = map.components.iter().map(|c| c.taylor(2)).collect::<Result<_>>()?;
    let g_w = t[2].coeff(&[0, 0, 1]);
    let sigma_sign: i8 = if g_w.re > 0.0 { 1 } else { -1 };
    let s = f64::from(sigma_sign);
    let lambda = libm::sqrt(g_w.re.abs());
    let j = [
        [t[0].coeff(&[1, 0, 0]) / lambda, t[0].coeff(&[0, 1, 0]) / lambda],
        [t[1].coeff(&[1, 0, 0]) / lambda, t[1].coeff(&[0, 1, 0]) / lambda],
    ];
    let a1 = j[1][1].conj();
    let a2 = j[1][0].conj();
    let u = if a1.norm() >= a2.norm() { j[0][0] / a1 } else { -j[0][1] / (a2 * eps.value()) };
    let u = u / u.norm();
    // c′ = U′⁻¹ f_w / λ′ with U′⁻¹ = σ [[ū ā1, ε a2], [-ū ā2, a1]]
    let fw = [t[0].coeff(&[0, 0, 1]) / lambda, t[1].coeff(&[0, 0, 1]) / lambda];
    let inv = [[u.conj() * a1.conj() * s, a2 * (eps.value() * s)], [-u.conj() * a2.conj() * s, a1 * s]];
    let c = mat_vec(&inv, &fw);
    let r = -t[2].coeff(&[0, 0, 2]).re / (s * lambda * lambda);
    Ok(GammaPrimeParams { lambda, r, u, a: [a1, a2], c, sigma_sign })
}

/// Parameters of `σ_a ∘ σ_b`, read off the composite.
pub fn compose_gamma(a: &GammaParams, b: &GammaParams) -> Result<GammaParams> {
    let m = sigma_map(a).compose(&sigma_map(b))?;
    gamma_from_jets(&m.expand(2)?)
}

/// Parameters of `σ′_a ∘ σ′_b`, read off the composite.
pub fn compose_gamma_prime(a: &GammaPrimeParams, b: &GammaPrimeParams, eps: Signature) -> Result<GammaPrimeParams> {
    let m = sigma_prime_map(a, eps)?.compose(&sigma_prime_map(b, eps)?)?;
    gamma_prime_from_map(&m, eps)
}

/// A source and a target isotropy acting together on maps.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IsotropyPair {
    pub gamma: GammaParams,
    pub gamma_p: GammaPrimeParams,
}

/// Number of real chart coordinates of an [`IsotropyPair`] with `σ = +1`.
pub const PAIR_CHART_DIM: usize = 15;

impl IsotropyPair {
    pub const TRIVIAL: IsotropyPair =
        IsotropyPair { gamma: GammaParams::TRIVIAL, gamma_p: GammaPrimeParams::TRIVIAL };

    pub fn new(gamma: GammaParams, gamma_p: GammaPrimeParams) -> Self {
        IsotropyPair { gamma, gamma_p }
    }

    /// Chart `(λ, r, θ_u, Re c, Im c, λ′, r′, θ_u′, α, Re a2′, Im a2′, Re c1′,
    /// Im c1′, Re c2′, Im c2′)` with `a1′ = e^{iα}·√(1 - ε|a2′|²)`.
    pub fn to_chart(&self) -> [f64; PAIR_CHART_DIM] {
        let g = &self.gamma;
        let p = &self.gamma_p;
        [
            g.lambda,
            g.r,
            g.u.arg(),
            g.c.re,
            g.c.im,
            p.lambda,
            p.r,
            p.u.arg(),
            p.a[0].arg(),
            p.a[1].re,
            p.a[1].im,
            p.c[0].re,
            p.c[0].im,
            p.c[1].re,
            p.c[1].im,
        ]
    }

    pub fn from_chart(x: &[f64], eps: Signature) -> Result<Self> {
        if x.len() < PAIR_CHART_DIM {
            return Err(Error::ArityMismatch { expected: PAIR_CHART_DIM, found: x.len() });
        }
        let a2 = Complex64::new(x[9], x[10]);
        let m = 1.0 - eps.value() * a2.norm_sqr();
        if !(m > 0.0) {
            return Err(Error::ConstraintViolated(format!("|a2'| = {} outside the chart", a2.norm())));
        }
        if !(x[0] > 0.0) || !(x[5] > 0.0) {
            return Err(Error::ConstraintViolated("chart dilation must be positive".into()));
        }
        let gamma = GammaParams {
            lambda: x[0],
            r: x[1],
            u: Complex64::from_polar(1.0, x[2]),
            c: Complex64::new(x[3], x[4]),
        };
        let gamma_p = GammaPrimeParams {
            lambda: x[5],
            r: x[6],
            u: Complex64::from_polar(1.0, x[7]),
            a: [Complex64::from_polar(libm::sqrt(m), x[8]), a2],
            c: [Complex64::new(x[11], x[12]), Complex64::new(x[13], x[14])],
            sigma_sign: 1,
        };
        Ok(IsotropyPair { gamma, gamma_p })
    }

    /// Pair acting as the inverse: `(γ⁻¹, γ′⁻¹)`.
    pub fn inverse(&self, eps: Signature) -> Self {
        IsotropyPair { gamma: invert_gamma(&self.gamma), gamma_p: invert_gamma_prime(&self.gamma_p, eps) }
    }

    /// Pair acting as `self` after `other`.
    pub fn compose(&self, other: &IsotropyPair, eps: Signature) -> Result<Self> {
        Ok(IsotropyPair {
            gamma: compose_gamma(&self.gamma, &other.gamma)?,
            gamma_p: compose_gamma_prime(&self.gamma_p, &other.gamma_p, eps)?,
        })
    }

    /// Euclidean chart distance to `other`, angles compared modulo 2π.
    pub fn chart_distance(&self, other: &IsotropyPair) -> f64 {
        let a = self.to_chart();
        let b = other.to_chart();
        let mut sum = 0.0;
        for k in 0..PAIR_CHART_DIM {
            let mut d = a[k] - b[k];
            if matches!(k, 2 | 7 | 8) {
                d = wrap_angle(d);
            }
            sum += d * d;
        }
        libm::sqrt(sum)
    }

    pub fn distance_to_trivial(&self) -> f64 {
        self.chart_distance(&IsotropyPair::TRIVIAL)
    }
}

/// Representative of `x` in `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x - TAU * libm::floor(x / TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Random pair from the sampling box `λ, λ′ ∈ [0.5, 2]`, `|r|, |r′| ≤ 1`,
/// `|c|, |c′| ≤ 0.5`, `|a2′| ≤ 0.5`, uniform phases, `σ = +1`.
pub fn random_pair(rng: &mut ChaCha8Rng, eps: Signature) -> IsotropyPair {
    let disc = |rng: &mut ChaCha8Rng, radius: f64| {
        let r = radius * libm::sqrt(rng.random::<f64>());
        Complex64::from_polar(r, rng.random_range(0.0..TAU))
    };
    let phase = |rng: &mut ChaCha8Rng| Complex64::from_polar(1.0, rng.random_range(0.0..TAU));
    let gamma = GammaParams {
        lambda: rng.random_range(0.5..=2.0),
        r: rng.random_range(-1.0..=1.0),
        u: phase(rng),
        c: disc(rng, 0.5),
    };
    let a2 = disc(rng, 0.5);
    let a1 = phase(rng) * libm::sqrt(1.0 - eps.value() * a2.norm_sqr());
    // uniform in the ball of radius 0.5 in C²
    let c = loop {
        let v = [disc(rng, 0.5), disc(rng, 0.5)];
        if v[0].norm_sqr() + v[1].norm_sqr() <= 0.25 {
            break v;
        }
    };
    let gamma_p = GammaPrimeParams {
        lambda: rng.random_range(0.5..=2.0),
        r: rng.random_range(-1.0..=1.0),
        u: phase(rng),
        a: [a1, a2],
        c,
        sigma_sign: 1,
    };
    IsotropyPair { gamma, gamma_p }
}

fn require_positive_sheet(pair: &IsotropyPair, eps: Signature) -> Result<()> {
    pair.gamma.validate()?;
    pair.gamma_p.validate(eps)?;
    if pair.gamma_p.sigma_sign != 1 {
        return Err(Error::ConstraintViolated("the action uses sigma = +1 only".into()));
    }
    Ok(())
}

/// Exact `σ′_{γ′} ∘ H ∘ σ_γ⁻¹`.
pub fn act(pair: &IsotropyPair, h: &RationalMap, eps: Signature) -> Result<RationalMap> {
    require_positive_sheet(pair, eps)?;
    let inner = h.compose(&sigma_map(&invert_gamma(&pair.gamma)))?;
    let out = sigma_prime_map(&pair.gamma_p, eps)?.compose(&inner)?;
    if !out.is_regular_at_origin() {
        return Err(Error::DenominatorVanishes);
    }
    Ok(out)
}

/// Jets of `σ′_{γ′} ∘ H ∘ σ_γ⁻¹` from the jets of `H` (which must vanish at 0).
pub fn act_jets(pair: &IsotropyPair, h: &[Jet], eps: Signature) -> Result<MapJet> {
    require_positive_sheet(pair, eps)?;
    if h.len() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: h.len() });
    }
    let order = h[0].order();
    let psi = sigma_map(&invert_gamma(&pair.gamma)).expand(order)?;
    let inner: MapJet = h.iter().map(|j| j.compose_at_origin(&psi[0], &psi[1])).collect();
    sigma_prime_map(&pair.gamma_p, eps)?.eval_jets(&inner)
}

/// `T_p(z, w) = (z + z0, w + w0 + 2i z̄0 z)`, the Heisenberg translation
/// taking 0 to `p`.
pub fn source_translation(p: SourcePoint) -> Result<RationalMap> {
    let [z0, w0] = p.coords();
    let map = RationalMap::new(vec![
        RationalGerm::polynomial(Poly::bivariate([(0, 0, z0), (1, 0, ONE)])),
        RationalGerm::polynomial(Poly::bivariate([
            (0, 0, w0),
            (0, 1, ONE),
            (1, 0, I * 2.0 * z0.conj()),
        ])),
    ]);
    let mut rng = seeded_rng(crate::hypersurfaces::DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..TRANSLATION_CHECK_SAMPLES {
        let x = sample_source_point(&mut rng, 1.0);
        let y = map.eval(&x.coords())?;
        worst = worst.max(source_residual(y[0], y[1]).abs());
    }
    if worst >= TRANSLATION_CHECK_TOL * (1.0 + p.z.norm_sqr() + p.u.abs()) {
        return Err(Error::SelfCheckFailed { max_residual: worst });
    }
    Ok(map)
}

/// `T_q(z1, z2, w) = (z1 + q1, z2 + q2, w + qw + 2i(q̄1 z1 + ε q̄2 z2))`,
/// taking 0 to `q ∈ H³_ε`.
pub fn target_translation(q: [Complex64; 3], eps: Signature) -> Result<RationalMap> {
    let res = target_residual(eps, q[0], q[1], q[2]);
    if res.abs() > TRANSLATION_CHECK_TOL * (1.0 + q.iter().map(|c| c.norm_sqr()).sum::<f64>()) {
        return Err(Error::NotOnHypersurface { residual: res });
    }
    let e = eps.value();
    let poly = |p: Poly| RationalGerm::polynomial(p);
    let map = RationalMap::new(vec![
        poly(Poly::from_terms(3, [([0, 0, 0], q[0]), ([1, 0, 0], ONE)])),
        poly(Poly::from_terms(3, [([0, 0, 0], q[1]), ([0, 1, 0], ONE)])),
        poly(Poly::from_terms(
            3,
            [([0, 0, 0], q[2]), ([0, 0, 1], ONE), ([1, 0, 0], I * 2.0 * q[0].conj()), ([0, 1, 0], I * 2.0 * e * q[1].conj())],
        )),
    ]);
    let mut rng = seeded_rng(crate::hypersurfaces::DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    let scale = 1.0 + q.iter().map(|c| c.norm_sqr()).sum::<f64>();
    for _ in 0..TRANSLATION_CHECK_SAMPLES {
        let z1 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let z2 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let u = rng.random_range(-1.0..1.0);
        let w = Complex64::new(u, z1.norm_sqr() + e * z2.norm_sqr());
        let y = map.eval(&[z1, z2, w])?;
        worst = worst.max(target_residual(eps, y[0], y[1], y[2]).abs());
    }
    if worst >= TRANSLATION_CHECK_TOL * scale {
        return Err(Error::SelfCheckFailed { max_residual: worst });
    }
    Ok(map)
}

/// The inverse translation `T_q⁻¹ = T_{(-q1, -q2, -q̄w)}`, taking `q` to 0.
pub fn target_translation_inverse(q: [Complex64; 3], eps: Signature) -> Result<RationalMap> {
    target_translation([-q[0], -q[1], -q[2].conj()], eps)
}

/// Exact recentered germ `T_{H(p)}⁻¹ ∘ H ∘ T_p`, fixing 0.
pub fn recenter(h: &RationalMap, p: SourcePoint, eps: Signature) -> Result<RationalMap> {
    let q = h.eval(&p.coords())?;
    let inner = h.compose(&source_translation(p)?)?;
    let out = target_translation_inverse([q[0], q[1], q[2]], eps)?.compose(&inner)?;
    if !out.is_regular_at_origin() {
        return Err(Error::DenominatorVanishes);
    }
    Ok(out)
}

/// Jets of the recentered germ `T_{H(p)}⁻¹ ∘ H ∘ T_p` at 0, computed by
/// evaluating `H` on translated jet arguments.
pub fn recenter_jets(h: &RationalMap, p: SourcePoint, eps: Signature, order: usize) -> Result<MapJet> {
    let [z0, w0] = p.coords();
    let mut zj = Jet::var(order, 0);
    zj.set(0, 0, z0);
    let mut wj = Jet::var(order, 1);
    wj.set(0, 0, w0);
    if order >= 1 {
        wj.set(1, 0, I * 2.0 * z0.conj());
    }
    let v = h.eval_jets(&[zj, wj])?;
    let q = [v[0].coeff(0, 0), v[1].coeff(0, 0), v[2].coeff(0, 0)];
    let res = target_residual(eps, q[0], q[1], q[2]);
    if res.abs() > 1e-9 * (1.0 + q.iter().map(|c| c.norm_sqr()).sum::<f64>()) {
        return Err(Error::NotOnHypersurface { residual: res });
    }
    let strip = |j: &Jet| {
        let mut j = j.clone();
        j.set(0, 0, ZERO);
        j
    };
    let f1 = strip(&v[0]);
    let f2 = strip(&v[1]);
    // W - q̄w - 2i(q̄1 Z1 + ε q̄2 Z2) with Z = q + (f1, f2), using Im qw = ⟨q, q⟩_ε
    let g = strip(&v[2])
        .sub(&f1.scale(I * 2.0 * q[0].conj()))
        .sub(&f2.scale(I * 2.0 * eps.value() * q[1].conj()));
    Ok(vec![f1, f2, g])
}

/// Circle stabilizer element: `H ↦ (z1′/u, z2′/u², w′) ∘ H ∘ (uz, w)`, so the
/// source parameter is `σ_γ = (ūz, w)`.
pub fn circle_element(u: Complex64) -> IsotropyPair {
    let u = u / u.norm();
    IsotropyPair {
        gamma: GammaParams { u: u.conj(), ..GammaParams::TRIVIAL },
        gamma_p: GammaPrimeParams { u: u.conj().powu(3), a: [u * u, ZERO], ..GammaPrimeParams::TRIVIAL },
    }
}

/// Reflection element `H ↦ (δz1′, z2′, w′) ∘ H ∘ (δz, w)` for `δ = ±1`.
pub fn reflection_element(delta: f64) -> IsotropyPair {
    let d = Complex64::new(delta.signum(), 0.0);
    IsotropyPair {
        gamma: GammaParams { u: d, ..GammaParams::TRIVIAL },
        gamma_p: GammaPrimeParams { u: d, ..GammaPrimeParams::TRIVIAL },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_jet_diff(a: &[Jet], b: &[Jet]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
    }

    fn identity_jets(n: usize, order: usize) -> MapJet {
        (0..n).map(|k| if n == 2 { Jet::var(order, k) } else { Jet::zero(order) }).collect()
    }

    #[test]
    fn trivial_sigma_is_identity() {
        let m = sigma_map(&GammaParams::TRIVIAL);
        assert_eq!(m.expand(4).unwrap(), identity_jets(2, 4));
        let mp = sigma_prime_map(&GammaPrimeParams::TRIVIAL, Signature::Plus).unwrap();
        let p = [c(0.3, 0.1), c(-0.2, 0.4), c(0.5, -0.7)];
        let v = mp.eval(&p).unwrap();
        for k in 0..3 {
            assert!((v[k] - p[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn sigma_examples() {
        let m = sigma_map(&GammaParams::new(2.0, 0.0, ONE, ZERO));
        let v = m.eval(&[c(0.3, 0.2), c(0.1, -0.5)]).unwrap();
        assert!((v[0] - c(0.6, 0.4)).norm() < 1e-15 && (v[1] - c(0.4, -2.0)).norm() < 1e-15);
        let m = sigma_map(&GammaParams::new(1.0, 0.0, ONE, ONE));
        let (z, w) = (c(0.3, 0.2), c(0.1, -0.5));
        let v = m.eval(&[z, w]).unwrap();
        let d = ONE - I * 2.0 * z - I * w;
        assert!((v[0] - (z + w) / d).norm() < 1e-15 && (v[1] - w / d).norm() < 1e-15);
    }

    #[test]
    fn sigma_prime_examples() {
        let g = GammaPrimeParams { u: -ONE, ..GammaPrimeParams::TRIVIAL };
        let m = sigma_prime_map(&g, Signature::Plus).unwrap();
        let v = m.eval(&[c(0.3, 0.1), c(0.2, 0.0), c(0.0, 0.5)]).unwrap();
        assert!((v[0] + c(0.3, 0.1)).norm() < 1e-15 && (v[1] - c(0.2, 0.0)).norm() < 1e-15);
        let g = GammaPrimeParams { a: [ZERO, ONE], sigma_sign: -1, ..GammaPrimeParams::TRIVIAL };
        let m = sigma_prime_map(&g, Signature::Minus).unwrap();
        let v = m.eval(&[c(0.3, 0.0), c(0.2, 0.0), c(0.0, 0.5)]).unwrap();
        assert!((v[0].norm() - 0.2).abs() < 1e-15 && (v[1].norm() - 0.3).abs() < 1e-15);
        assert!((v[2] + c(0.0, 0.5)).norm() < 1e-15);
        let bad = GammaPrimeParams { a: [c(0.5, 0.0), ZERO], ..GammaPrimeParams::TRIVIAL };
        assert!(matches!(sigma_prime_map(&bad, Signature::Plus), Err(Error::ConstraintViolated(_))));
    }

    #[test]
    fn inverses_compose_to_identity() {
        for eps in Signature::both() {
            let mut rng = seeded_rng(7);
            for _ in 0..20 {
                let p = random_pair(&mut rng, eps);
                let g = sigma_map(&p.gamma).compose(&sigma_map(&invert_gamma(&p.gamma))).unwrap();
                assert!(max_jet_diff(&g.expand(4).unwrap(), &identity_jets(2, 4)) < 1e-10);
                let inv = invert_gamma_prime(&p.gamma_p, eps);
                let gp = sigma_prime_map(&p.gamma_p, eps).unwrap().compose(&sigma_prime_map(&inv, eps).unwrap()).unwrap();
                let pt = [c(0.01, 0.02), c(-0.03, 0.01), c(0.02, 0.005)];
                let v = gp.eval(&pt).unwrap();
                for k in 0..3 {
                    assert!((v[k] - pt[k]).norm() < 1e-12);
                }
            }
        }
        let d = GammaParams::new(3.0, 0.0, ONE, ZERO);
        assert_eq!(invert_gamma(&d), GammaParams::new(1.0 / 3.0, 0.0, ONE, ZERO));
        assert_eq!(invert_gamma(&GammaParams::TRIVIAL), GammaParams::TRIVIAL);
    }

    #[test]
    fn negative_sheet_inverse() {
        let a2 = c(0.6, 0.8) * 1.5;
        let a1 = c(0.0, 1.0) * (a2.norm_sqr() - 1.0).sqrt();
        let g = GammaPrimeParams {
            lambda: 1.3,
            r: 0.4,
            u: c(0.6, -0.8),
            a: [a1, a2],
            c: [c(0.1, 0.2), c(-0.3, 0.1)],
            sigma_sign: -1,
        };
        let eps = Signature::Minus;
        let inv = invert_gamma_prime(&g, eps);
        let m = sigma_prime_map(&inv, eps).unwrap().compose(&sigma_prime_map(&g, eps).unwrap()).unwrap();
        let pt = [c(0.01, 0.02), c(-0.03, 0.01), c(0.02, 0.005)];
        let v = m.eval(&pt).unwrap();
        for k in 0..3 {
            assert!((v[k] - pt[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn extraction_round_trips() {
        for eps in Signature::both() {
            let mut rng = seeded_rng(11);
            for _ in 0..10 {
                let p = random_pair(&mut rng, eps);
                let g = gamma_from_jets(&sigma_map(&p.gamma).expand(2).unwrap()).unwrap();
                let gp = gamma_prime_from_map(&sigma_prime_map(&p.gamma_p, eps).unwrap(), eps).unwrap();
                assert!(IsotropyPair::new(g, gp).chart_distance(&p) < 1e-12);
            }
        }
    }

    #[test]
    fn chart_round_trips() {
        let mut rng = seeded_rng(3);
        for eps in Signature::both() {
            let p = random_pair(&mut rng, eps);
            let q = IsotropyPair::from_chart(&p.to_chart(), eps).unwrap();
            assert!(q.chart_distance(&p) < 1e-14);
            assert!((q.gamma_p.a[0] - p.gamma_p.a[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn translations_move_origin() {
        let p = SourcePoint::new(c(0.3, -0.2), 0.4);
        let t = source_translation(p).unwrap();
        let v = t.eval(&[ZERO, ZERO]).unwrap();
        assert_eq!(v, p.coords().to_vec());
        assert_eq!(source_translation(SourcePoint::ORIGIN).unwrap(), RationalMap::identity(2));
        let q = [c(0.2, 0.1), c(0.3, 0.0), c(0.7, 0.05 - 0.09)];
        assert!(matches!(target_translation(q, Signature::Plus), Err(Error::NotOnHypersurface { .. })));
        let q = [c(0.2, 0.1), c(0.3, 0.0), c(0.7, 0.05 - 0.09)];
        let t = target_translation(q, Signature::Minus).unwrap();
        let ti = target_translation_inverse(q, Signature::Minus).unwrap();
        let back = ti.eval(&t.eval(&[ZERO; 3]).unwrap()).unwrap();
        assert!(back.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn trivial_action_is_identity() {
        let g = crate::catalog::normal_form_map(&crate::catalog::NormalFormId::new(2, 0.5, Signature::Minus).unwrap())
            .unwrap();
        let jets = g.expand(4).unwrap();
        let acted = act_jets(&IsotropyPair::TRIVIAL, &jets, Signature::Minus).unwrap();
        assert!(max_jet_diff(&acted, &jets) < 1e-15);
    }

    #[test]
    fn action_is_a_left_action() {
        for eps in Signature::both() {
            let g = crate::catalog::normal_form_map(&crate::catalog::NormalFormId::new(3, 0.3, eps).unwrap()).unwrap();
            let jets = g.expand(4).unwrap();
            let mut rng = seeded_rng(5);
            for _ in 0..5 {
                let a = random_pair(&mut rng, eps);
                let b = random_pair(&mut rng, eps);
                let lhs = act_jets(&a, &act_jets(&b, &jets, eps).unwrap(), eps).unwrap();
                let rhs = act_jets(&a.compose(&b, eps).unwrap(), &jets, eps).unwrap();
                assert!(max_jet_diff(&lhs, &rhs) < 1e-9);
                let exact = act(&a, &g, eps).unwrap().expand(4).unwrap();
                assert!(max_jet_diff(&exact, &act_jets(&a, &jets, eps).unwrap()) < 1e-10);
            }
        }
    }

    #[test]
    fn stabilizer_elements_fix_their_maps() {
        use crate::catalog::{normal_form_map, NormalFormId};
        for eps in Signature::both() {
            let g1 = normal_form_map(&NormalFormId::g1(eps)).unwrap().expand(4).unwrap();
            let g20 = normal_form_map(&NormalFormId::new(2, 0.0, eps).unwrap()).unwrap().expand(4).unwrap();
            let g30 = normal_form_map(&NormalFormId::new(3, 0.0, eps).unwrap()).unwrap().expand(4).unwrap();
            for k in 0..16 {
                let u = Complex64::from_polar(1.0, core::f64::consts::TAU * k as f64 / 16.0);
                for jets in [&g1, &g20] {
                    let acted = act_jets(&circle_element(u), jets, eps).unwrap();
                    assert!(max_jet_diff(&acted, jets) < 1e-12);
                }
            }
            let acted = act_jets(&reflection_element(-1.0), &g30, eps).unwrap();
            assert!(max_jet_diff(&acted, &g30) < 1e-12);
        }
    }
}
