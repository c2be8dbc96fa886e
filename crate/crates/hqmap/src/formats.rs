//! JSON encodings of polynomials, rational maps, jets and isotropy
//! parameters, and CSV writers for sweeps and search traces.

use std::io::Write;

use hqmap_core::algebra::{Jet, Poly, RationalGerm, RationalMap, MAX_VARS};
use hqmap_core::catalog::JetCoords;
use hqmap_core::isotropies::{GammaParams, GammaPrimeParams, IsotropyPair};
use hqmap_core::topology_lab::{SearchReport, SweepRecord};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One polynomial term: `[i, j, re, im]` in `(z, w)`, or `[i, j, k, re, im]`
/// for maps of three variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermJson {
    Two(u32, u32, f64, f64),
    Three(u32, u32, u32, f64, f64),
}

impl TermJson {
    fn nvars(&self) -> usize {
        match self {
            TermJson::Two(..) => 2,
            TermJson::Three(..) => 3,
        }
    }

    fn split(&self) -> ([u32; MAX_VARS], Complex64) {
        match *self {
            TermJson::Two(i, j, re, im) => ([i, j, 0], Complex64::new(re, im)),
            TermJson::Three(i, j, k, re, im) => ([i, j, k], Complex64::new(re, im)),
        }
    }
}

pub type PolyJson = Vec<TermJson>;

pub fn poly_to_json(p: &Poly) -> PolyJson {
    p.terms()
        .map(|(e, c)| match p.nvars() {
            3 => TermJson::Three(e[0], e[1], e[2], c.re, c.im),
            _ => TermJson::Two(e[0], e[1], c.re, c.im),
        })
        .collect()
}

pub fn poly_from_json(terms: &[TermJson], nvars: usize) -> Result<Poly, CliError> {
    let mut p = Poly::zero(nvars);
    for t in terms {
        if t.nvars() != nvars {
            return Err(CliError::Usage(format!("term {t:?} does not have {nvars} variables")));
        }
        let (e, c) = t.split();
        p.add_term(e, c);
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GermJson {
    pub num: PolyJson,
    pub den: PolyJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub components: Vec<GermJson>,
}

pub fn map_to_json(m: &RationalMap) -> MapJson {
    MapJson {
        components: m
            .components
            .iter()
            .map(|g| GermJson { num: poly_to_json(&g.num), den: poly_to_json(&g.den) })
            .collect(),
    }
}

/// Variable count is read off the terms; maps with no terms at all are taken
/// to be in `(z, w)`.
pub fn map_from_json(m: &MapJson) -> Result<RationalMap, CliError> {
    if m.components.is_empty() {
        return Err(CliError::Usage("map has no components".into()));
    }
    let nvars = m
        .components
        .iter()
        .flat_map(|g| g.num.iter().chain(&g.den))
        .map(TermJson::nvars)
        .next()
        .unwrap_or(2);
    let comps = m
        .components
        .iter()
        .map(|g| {
            let den = poly_from_json(&g.den, nvars)?;
            if den.is_zero() {
                return Err(CliError::Usage("zero denominator".into()));
            }
            Ok(RationalGerm::new(poly_from_json(&g.num, nvars)?, den))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RationalMap::new(comps))
}

/// Taylor coefficients `[i, j, re, im]` of each component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetsJson {
    pub order: usize,
    pub components: Vec<PolyJson>,
}

pub fn jets_to_json(jets: &[Jet]) -> JetsJson {
    JetsJson {
        order: jets.first().map_or(0, Jet::order),
        components: jets
            .iter()
            .map(|j| {
                j.iter()
                    .filter(|(_, _, c)| *c != Complex64::new(0.0, 0.0))
                    .map(|(i, k, c)| TermJson::Two(i as u32, k as u32, c.re, c.im))
                    .collect()
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetCoordsJson {
    pub order: usize,
    /// `[re, im]` of the 17 normalized jet coordinates.
    pub values: Vec<[f64; 2]>,
    pub s: f64,
}

pub fn jet_coords_to_json(c: &JetCoords) -> JetCoordsJson {
    JetCoordsJson { order: c.order, values: c.values.iter().map(|v| [v.re, v.im]).collect(), s: c.s_value() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaJson {
    pub lambda: f64,
    pub r: f64,
    pub u: [f64; 2],
    pub c: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrimeJson {
    pub lambda: f64,
    pub r: f64,
    pub u: [f64; 2],
    pub a: [[f64; 2]; 2],
    pub c_p: [[f64; 2]; 2],
    pub sigma_sign: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub gamma: GammaJson,
    pub gamma_p: GammaPrimeJson,
}

fn cx(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn pair_of(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

impl From<&GammaParams> for GammaJson {
    fn from(g: &GammaParams) -> Self {
        GammaJson { lambda: g.lambda, r: g.r, u: pair_of(g.u), c: pair_of(g.c) }
    }
}

impl From<&GammaJson> for GammaParams {
    fn from(g: &GammaJson) -> Self {
        GammaParams { lambda: g.lambda, r: g.r, u: cx(g.u), c: cx(g.c) }
    }
}

impl From<&GammaPrimeParams> for GammaPrimeJson {
    fn from(g: &GammaPrimeParams) -> Self {
        GammaPrimeJson {
            lambda: g.lambda,
            r: g.r,
            u: pair_of(g.u),
            a: [pair_of(g.a[0]), pair_of(g.a[1])],
            c_p: [pair_of(g.c[0]), pair_of(g.c[1])],
            sigma_sign: g.sigma_sign,
        }
    }
}

impl From<&GammaPrimeJson> for GammaPrimeParams {
    fn from(g: &GammaPrimeJson) -> Self {
        GammaPrimeParams {
            lambda: g.lambda,
            r: g.r,
            u: cx(g.u),
            a: [cx(g.a[0]), cx(g.a[1])],
            c: [cx(g.c_p[0]), cx(g.c_p[1])],
            sigma_sign: g.sigma_sign,
        }
    }
}

impl From<&IsotropyPair> for PairJson {
    fn from(p: &IsotropyPair) -> Self {
        PairJson { gamma: (&p.gamma).into(), gamma_p: (&p.gamma_p).into() }
    }
}

impl From<&PairJson> for IsotropyPair {
    fn from(p: &PairJson) -> Self {
        IsotropyPair { gamma: (&p.gamma).into(), gamma_p: (&p.gamma_p).into() }
    }
}

pub const SWEEP_COLUMNS: [&str; 7] = ["p_re", "p_im", "p_u", "family", "s", "certificate", "flags"];

/// Sweep records as CSV; invalid records leave `family` and `s` empty.
pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in records {
        let (family, s) = match r.classified {
            Some(id) => (id.family.to_string(), id.s.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.p.z.re.to_string(),
            r.p.z.im.to_string(),
            r.p.u.to_string(),
            family,
            s,
            r.certificate.to_string(),
            r.flag.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Search trace as CSV: one row per objective evaluation.
pub fn write_trace_csv<W: Write>(out: W, report: &SearchReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "best_distance"])?;
    for (k, d) in report.trace.iter().enumerate() {
        w.write_record([k.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hqmap_core::catalog::{normal_form_map, NormalFormId};
    use hqmap_core::hypersurfaces::{seeded_rng, Signature};
    use hqmap_core::isotropies::{random_pair, sigma_prime_map};

    #[test]
    fn map_json_round_trips() {
        let m = normal_form_map(&NormalFormId::new(3, 0.7, Signature::Minus).unwrap()).unwrap();
        let text = serde_json::to_string(&map_to_json(&m)).unwrap();
        let back = map_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
        let p = random_pair(&mut seeded_rng(4), Signature::Minus);
        let t = sigma_prime_map(&p.gamma_p, Signature::Minus).unwrap();
        let text = serde_json::to_string(&map_to_json(&t)).unwrap();
        assert_eq!(map_from_json(&serde_json::from_str(&text).unwrap()).unwrap(), t);
    }

    #[test]
    fn pair_json_round_trips() {
        let p = random_pair(&mut seeded_rng(9), Signature::Plus);
        let text = serde_json::to_string(&PairJson::from(&p)).unwrap();
        let back: PairJson = serde_json::from_str(&text).unwrap();
        assert_eq!(IsotropyPair::from(&back), p);
        assert!(text.contains("\"sigma_sign\":1") && text.contains("\"c_p\""));
    }

    #[test]
    fn poly_terms_are_quadruples() {
        let p = Poly::bivariate([(1, 2, Complex64::new(0.5, -1.0))]);
        assert_eq!(serde_json::to_string(&poly_to_json(&p)).unwrap(), "[[1,2,0.5,-1.0]]");
        assert!(map_from_json(&MapJson { components: vec![] }).is_err());
    }
}
