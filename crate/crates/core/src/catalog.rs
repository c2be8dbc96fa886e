//! Exact constructors for the normal forms `G_{1,ε}`, `G_{2,s,ε}`,
//! `G_{3,s,ε}` and the sphere-model maps `H_1, …, H_7`, plus the 17
//! determining jet coordinates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{jet_derivative, Jet, Poly, RationalGerm, RationalMap};
use crate::error::{Error, Result};
use crate::hypersurfaces::Signature;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Label of a normal form: family `k`, parameter `s ≥ 0` (zero for `k = 1`) and signature.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalFormId {
    pub family: u8,
    pub s: f64,
    pub eps: Signature,
}

impl NormalFormId {
    pub fn new(family: u8, s: f64, eps: Signature) -> Result<Self> {
        let id = NormalFormId { family, s, eps };
        id.validate()?;
        Ok(id)
    }

    pub fn g1(eps: Signature) -> Self {
        NormalFormId { family: 1, s: 0.0, eps }
    }

    /// Whether `self` and `other` label the same map. The only coincidence
    /// between distinct labels is `G3(s=1/2)[-] = G2(s=1/2)[-]`, where the
    /// family 2 and 3 curves cross.
    pub fn same_map(&self, other: &NormalFormId) -> bool {
        self == other || (self.is_crossing() && other.is_crossing())
    }

    /// `(2 or 3, 1/2, -1)`: the member shared by families 2 and 3.
    pub fn is_crossing(&self) -> bool {
        self.eps == Signature::Minus && self.s == 0.5 && (self.family == 2 || self.family == 3)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.family) {
            return Err(Error::InvalidInput(format!("family {} is not 1, 2 or 3", self.family)));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(Error::InvalidInput(format!("s = {} must be finite and >= 0", self.s)));
        }
        if self.family == 1 && self.s != 0.0 {
            return Err(Error::InvalidInput("family 1 carries no parameter".into()));
        }
        Ok(())
    }
}

impl core::fmt::Display for NormalFormId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let e = if self.eps == Signature::Plus { '+' } else { '-' };
        match self.family {
            1 => write!(f, "G1[{e}]"),
            k => write!(f, "G{k}(s={})[{e}]", self.s),
        }
    }
}

/// The rational map of the normal form `id`.
pub fn normal_form_map(id: &NormalFormId) -> Result<RationalMap> {
    id.validate()?;
    let e = id.eps.value();
    let s = id.s;
    let map = match id.family {
        1 => {
            let den = Poly::bivariate([(0, 0, re(4.0)), (0, 2, re(-1.0))]);
            RationalMap::with_common_den(
                vec![
                    Poly::bivariate([(1, 0, re(4.0)), (1, 1, I * (2.0 * e))]),
                    Poly::bivariate([(2, 0, re(4.0))]),
                    Poly::bivariate([(0, 1, re(4.0))]),
                ],
                den,
            )
        }
        2 => {
            let den = Poly::bivariate([
                (0, 0, re(4.0)),
                (1, 0, re(-4.0 * e * s)),
                (0, 1, -I * (e + s * s)),
                (1, 1, -I * (2.0 * s)),
                (0, 2, re(-e * s * s)),
            ]);
            RationalMap::with_common_den(
                vec![
                    Poly::bivariate([
                        (1, 0, re(4.0)),
                        (2, 0, re(-4.0 * e * s)),
                        (1, 1, I * (e - s * s)),
                        (0, 2, re(s)),
                    ]),
                    Poly::bivariate([(2, 0, re(4.0)), (0, 2, re(s * s))]),
                    Poly::bivariate([(0, 1, re(4.0)), (1, 1, re(-4.0 * e * s)), (0, 2, -I * (e + s * s))]),
                ],
                den,
            )
        }
        _ => {
            let den = Poly::bivariate([
                (0, 0, re(256.0 * e)),
                (0, 1, I * -32.0),
                (2, 0, re(64.0)),
                (1, 1, I * (-192.0 * e * s)),
                (0, 2, re(-(17.0 * e + 144.0 * s * s))),
                (2, 1, I * (32.0 * e)),
                (1, 2, re(24.0 * s)),
                (0, 3, I),
            ]);
            RationalMap::with_common_den(
                vec![
                    Poly::bivariate([
                        (1, 0, re(256.0 * e)),
                        (1, 1, I * 96.0),
                        (0, 2, re(64.0 * e * s)),
                        (3, 0, re(64.0)),
                        (2, 1, I * (64.0 * e * s)),
                        (1, 2, re(-3.0 * (3.0 * e - 16.0 * s * s))),
                        (0, 3, I * (4.0 * s)),
                    ]),
                    Poly::bivariate([
                        (2, 0, re(256.0 * e)),
                        (0, 2, re(-16.0)),
                        (3, 0, re(256.0 * s)),
                        (2, 1, I * 16.0),
                        (1, 2, re(-16.0 * e * s)),
                        (0, 3, I * -e),
                    ]),
                    Poly::bivariate([
                        (0, 1, re(256.0 * e)),
                        (0, 2, I * -32.0),
                        (2, 1, re(64.0)),
                        (1, 2, I * (-64.0 * e * s)),
                        (0, 3, re(-(e + 16.0 * s * s))),
                    ]),
                ],
                den,
            )
        }
    };
    Ok(map)
}

/// Number of sphere-model maps in the classification list.
pub const SPHERE_MAP_COUNT: u8 = 7;

/// Sphere-model maps `S³ → Q_ε` numbered 1 to 7. Maps 5 to 7 exist for
/// `ε = -1` only; map 7 uses the representative `h(z, w) = w`, which is
/// degenerate and not in F².
pub fn sphere_model_map(index: u8, eps: Signature) -> Result<RationalMap> {
    if (5..=SPHERE_MAP_COUNT).contains(&index) && eps == Signature::Plus {
        return Err(Error::InvalidSignature { index: usize::from(index) });
    }
    let e = eps.value();
    let one = Poly::one(2);
    let map = match index {
        1 => RationalMap::with_common_den(vec![Poly::var(2, 0), Poly::var(2, 1), Poly::zero(2)], one),
        2 => RationalMap::with_common_den(
            vec![
                Poly::bivariate([(2, 0, re(1.0))]),
                Poly::bivariate([(0, 1, re((1.0 - e) / libm::sqrt(2.0))), (1, 1, re((1.0 + e) / libm::sqrt(2.0)))]),
                Poly::bivariate([(0, 2, re(1.0))]),
            ],
            one,
        ),
        3 => {
            let z = Poly::bivariate([(1, 0, re(1.0))]);
            RationalMap::new(vec![
                RationalGerm::polynomial(z.clone()),
                RationalGerm::new(
                    Poly::bivariate([(0, 1, re(1.0 - e)), (2, 1, re(1.0 + e))]),
                    z.scale(re(2.0)),
                ),
                RationalGerm::new(Poly::bivariate([(0, 2, re(1.0 - e)), (1, 2, re(1.0 + e))]), z.scale(re(2.0))),
            ])
        }
        4 => {
            let r3 = libm::sqrt(3.0);
            RationalMap::with_common_den(
                vec![
                    Poly::bivariate([(3, 0, re(4.0))]),
                    Poly::bivariate([(0, 1, re(3.0 * (1.0 - e))), (0, 3, re(1.0 + 3.0 * e))]),
                    Poly::bivariate([
                        (1, 0, re(r3 * (1.0 - e))),
                        (1, 1, re(2.0 * r3 * (1.0 + e))),
                        (1, 2, re(r3 * (1.0 - e))),
                    ]),
                ],
                Poly::bivariate([(0, 0, re(1.0 + 3.0 * e)), (0, 2, re(3.0 * (1.0 - e)))]),
            )
        }
        5 => {
            let r2 = libm::sqrt(2.0);
            let den = Poly::bivariate([(0, 0, re(1.0)), (1, 0, re(r2)), (0, 1, re(1.0))]);
            RationalMap::new(vec![
                RationalGerm::new(Poly::bivariate([(1, 0, re(2.0)), (2, 0, re(r2))]), den.clone()),
                RationalGerm::polynomial(Poly::var(2, 1)),
                RationalGerm::new(Poly::bivariate([(1, 0, re(1.0)), (2, 0, re(r2)), (1, 1, re(-1.0))]), den),
            ])
        }
        6 => RationalMap::with_common_den(
            vec![
                Poly::bivariate([(1, 0, re(1.0)), (1, 1, re(-1.0))]),
                Poly::bivariate([(0, 0, re(1.0)), (0, 1, re(1.0)), (0, 2, re(-1.0))]),
                Poly::bivariate([(1, 0, re(1.0)), (1, 1, re(1.0))]),
            ],
            Poly::bivariate([(0, 0, re(1.0)), (0, 1, re(-1.0)), (0, 2, re(-1.0))]),
        ),
        7 => RationalMap::with_common_den(vec![Poly::one(2), Poly::var(2, 1), Poly::var(2, 1)], one),
        _ => return Err(Error::InvalidInput(format!("sphere map index {index} is not in 1..=7"))),
    };
    Ok(map)
}

/// Highest derivative order read into [`JetCoords`].
pub const JET_COORD_ORDER: usize = 3;

/// Number of complex entries in [`JetCoords`].
pub const JET_COORD_LEN: usize = 17;

/// Determining jet coordinates: `H_z, H_w, H_{z²}, H_{zw}, H_{w²}` at 0 (three
/// entries each) followed by `f1_{z²w}(0), f2_{z²w}(0)`, all as derivative values.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JetCoords {
    pub values: Vec<Complex64>,
    pub order: usize,
}

const SECOND_ORDER: [(usize, usize); 5] = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

impl JetCoords {
    /// Derivative `∂_z^i ∂_w^j` of component `comp` at 0, for the stored slots.
    pub fn get(&self, i: usize, j: usize, comp: usize) -> Option<Complex64> {
        if let Some(k) = SECOND_ORDER.iter().position(|&p| p == (i, j)) {
            return (comp < 3).then(|| self.values[3 * k + comp]);
        }
        ((i, j) == (2, 1) && comp < 2).then(|| self.values[15 + comp])
    }

    /// The 34 real numbers `(Re v0, Im v0, Re v1, …)`.
    pub fn to_real(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.re, v.im]).collect()
    }

    /// `s = 2|f1_{w²}(0)|`.
    pub fn s_value(&self) -> f64 {
        2.0 * self.values[12].norm()
    }

    /// `x = f2_{w²}(0)`.
    pub fn x_value(&self) -> Complex64 {
        self.values[13]
    }

    /// `y = Im f2_{z²w}(0)`.
    pub fn y_value(&self) -> f64 {
        self.values[16].im
    }
}

/// Reads the 17 coordinates from map jets of order at least 3.
pub fn jet_coordinates_from_jets(jets: &[Jet]) -> Result<JetCoords> {
    if jets.len() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: jets.len() });
    }
    let order = jets.iter().map(Jet::order).min().unwrap_or(0);
    if order < JET_COORD_ORDER {
        return Err(Error::OrderExceeded { requested: JET_COORD_ORDER, order });
    }
    let mut values = Vec::with_capacity(JET_COORD_LEN);
    for (i, j) in SECOND_ORDER {
        for comp in jets {
            values.push(jet_derivative(comp, i, j)?);
        }
    }
    for comp in &jets[..2] {
        values.push(jet_derivative(comp, 2, 1)?);
    }
    Ok(JetCoords { values, order: JET_COORD_ORDER })
}

/// Jet coordinates of `h`, expanded to order 3.
pub fn jet_coordinates(h: &RationalMap) -> Result<JetCoords> {
    jet_coordinates_from_jets(&h.expand(3)?)
}

/// Euclidean distance between derivative vectors.
pub fn jet_distance(a: &JetCoords, b: &JetCoords) -> Result<f64> {
    if a.order != b.order {
        return Err(Error::OrderMismatch { left: a.order, right: b.order });
    }
    Ok(libm::sqrt(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>()))
}

/// The s-grid `0, step, 2 step, …, max`.
pub fn s_grid(step: f64, max: f64) -> Vec<f64> {
    let n = libm::floor(max / step + 1e-9) as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurfaces::{maps_hypersurface, DEFAULT_SEED};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn coords(k: u8, s: f64, eps: Signature) -> JetCoords {
        jet_coordinates(&normal_form_map(&NormalFormId::new(k, s, eps).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn family_two_at_zero_matches_substitution() {
        for eps in Signature::both() {
            let e = eps.value();
            let m = normal_form_map(&NormalFormId::new(2, 0.0, eps).unwrap()).unwrap();
            let (z, w) = (c(0.13, -0.07), c(0.05, 0.02));
            let d = c(4.0, 0.0) - I * e * w;
            let expect = [(z * 4.0 + I * e * z * w) / d, z * z * 4.0 / d, w * (c(4.0, 0.0) - I * e * w) / d];
            let v = m.eval(&[z, w]).unwrap();
            for k in 0..3 {
                assert!((v[k] - expect[k]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn forced_jet_values() {
        for eps in Signature::both() {
            for k in 1..=3u8 {
                for s in [0.0, 0.25, 0.5, 1.0, 2.0] {
                    if k == 1 && s > 0.0 {
                        continue;
                    }
                    let j = coords(k, s, eps);
                    let want = [
                        (1, 0, [1.0, 0.0, 0.0]),
                        (0, 1, [0.0, 0.0, 1.0]),
                        (2, 0, [0.0, 2.0, 0.0]),
                    ];
                    for (a, b, v) in want {
                        for (comp, x) in v.into_iter().enumerate() {
                            assert!((j.get(a, b, comp).unwrap() - c(x, 0.0)).norm() < 1e-12);
                        }
                    }
                    assert!((j.get(1, 1, 0).unwrap() - c(0.0, eps.value() / 2.0)).norm() < 1e-12);
                    assert!((j.s_value() - s).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn family_specific_jets() {
        let g1 = coords(1, 0.0, Signature::Minus);
        assert!(g1.get(0, 2, 0).unwrap().norm() < 1e-15 && g1.x_value().norm() < 1e-15 && g1.y_value() == 0.0);
        let g2 = coords(2, 0.6, Signature::Plus);
        assert!((g2.get(0, 2, 0).unwrap() - c(0.3, 0.0)).norm() < 1e-14);
        assert!((g2.x_value() - c(0.18, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn separation_examples() {
        for eps in Signature::both() {
            assert!(jet_distance(&coords(2, 0.3, eps), &coords(2, 0.4, eps)).unwrap() > 1e-3);
        }
        let d = jet_distance(&coords(2, 0.0, Signature::Plus), &coords(3, 0.0, Signature::Plus)).unwrap();
        assert!(d > 0.1);
        let a = coords(2, 0.5, Signature::Minus);
        assert_eq!(jet_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn normal_forms_map_into_target() {
        for eps in Signature::both() {
            for k in 1..=3u8 {
                let s = if k == 1 { 0.0 } else { 0.7 };
                let m = normal_form_map(&NormalFormId::new(k, s, eps).unwrap()).unwrap();
                let r = maps_hypersurface(&m, eps, 200, 0.1, 1e-10, DEFAULT_SEED).unwrap();
                assert!(r.pass, "{k} {eps:?}: {}", r.max_residual);
            }
        }
    }

    #[test]
    fn sphere_map_examples() {
        assert!(matches!(sphere_model_map(5, Signature::Plus), Err(Error::InvalidSignature { index: 5 })));
        let m = sphere_model_map(2, Signature::Plus).unwrap();
        let (z, w) = (c(0.3, 0.1), c(-0.2, 0.4));
        let v = m.eval(&[z, w]).unwrap();
        assert!((v[1] - z * w * libm::sqrt(2.0)).norm() < 1e-15);
        let m = sphere_model_map(6, Signature::Minus).unwrap();
        let v = m.eval(&[z, w]).unwrap();
        let d = c(1.0, 0.0) - w - w * w;
        assert!((v[1] - (c(1.0, 0.0) + w - w * w) / d).norm() < 1e-15);
    }

    #[test]
    fn invalid_ids_rejected() {
        assert!(NormalFormId::new(1, 0.5, Signature::Plus).is_err());
        assert!(NormalFormId::new(4, 0.0, Signature::Plus).is_err());
        assert!(NormalFormId::new(2, -0.1, Signature::Plus).is_err());
    }
}
