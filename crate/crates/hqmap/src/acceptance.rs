//! Acceptance criteria 1–9 at their stated tolerances and runtime budgets.
//! Each criterion yields one pass/fail line.

use std::fmt;
use std::time::Instant;

use hqmap_core::algebra::jet_derivative;
use hqmap_core::catalog::{
    jet_coordinates_from_jets, jet_distance, normal_form_map, sphere_model_map, NormalFormId, SPHERE_MAP_COUNT,
};
use hqmap_core::group_action::{rank_at_base, stabilizer_classify, StabilizerKind, StabilizerOptions};
use hqmap_core::hypersurfaces::{maps_hypersurface, seeded_rng, sphere_map_residual, Signature, DEFAULT_SEED};
use hqmap_core::isotropies::{act, circle_element, random_pair, reflection_element, act_jets, IsotropyPair};
use hqmap_core::laws::{associativity_defect, catalog_separation, chain_rule_defect, injectivity_grid, inverse_defect};
use hqmap_core::normalization::{catalog_coords, classify, inversion_error, NORMALIZE_ORDER};
use hqmap_core::topology_lab::{
    accumulation_search, component_census, s_coverage_gap, CensusOptions, SearchOptions, SweepGrid,
};
use hqmap_core::isotropies::{sigma_map, sigma_prime_map};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};
use serde::Serialize;

use crate::error::CliError;
use crate::parallel_sweep;

pub const CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    /// Tolerances met and runtime within budget.
    pub pass: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {} ({:.2} s of {:.0} s) {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

type Check = Result<(bool, String), CliError>;
type Criterion = (&'static str, f64, fn() -> Check);

fn meta(id: u8) -> Option<Criterion> {
    Some(match id {
        1 => ("catalog membership", 10.0, catalog_membership as fn() -> Check),
        2 => ("normalized jet table", 5.0, normalized_jet_table),
        3 => ("normalization round trip", 120.0, normalization_round_trip),
        4 => ("stabilizers", 60.0, stabilizers),
        5 => ("orbit rank", 30.0, orbit_rank),
        6 => ("topological dichotomy", 600.0, dichotomy),
        7 => ("positive-signature sweeps", 300.0, positive_sweeps),
        8 => ("component census", 60.0, census),
        9 => ("algebra kernel properties", 60.0, kernel_properties),
        _ => return None,
    })
}

/// Runs one criterion. Errors inside a check count as failure, not as an
/// error of this function.
pub fn run(id: u8) -> Result<CriterionOutcome, CliError> {
    let (name, budget, check) = meta(id).ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?;
    let start = Instant::now();
    let (ok, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    Ok(CriterionOutcome { id, name, pass: ok && seconds <= budget, seconds, budget_seconds: budget, detail })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&id| run(id).expect("known criterion")).collect()
}

const S_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];

fn catalog_ids() -> Vec<NormalFormId> {
    let mut ids = Vec::new();
    for eps in Signature::both() {
        ids.push(NormalFormId::g1(eps));
        for k in [2, 3] {
            for s in S_VALUES {
                ids.push(NormalFormId { family: k, s, eps });
            }
        }
    }
    ids
}

fn catalog_membership() -> Check {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for id in catalog_ids() {
        let r = maps_hypersurface(&normal_form_map(&id)?, id.eps, 1000, 0.1, 1e-10, DEFAULT_SEED)?;
        ok &= r.pass && r.failures.is_empty();
        worst = worst.max(r.max_residual);
    }
    let mut sphere_worst: f64 = 0.0;
    let mut sphere_maps = 0;
    for index in 1..SPHERE_MAP_COUNT {
        for eps in Signature::both() {
            let Ok(h) = sphere_model_map(index, eps) else { continue };
            let r = sphere_map_residual(&h, eps, [Complex64::new(0.0, 0.0); 2], 1000, 1.0, DEFAULT_SEED)?;
            ok &= r.samples > 0;
            sphere_worst = sphere_worst.max(r.max_residual);
            sphere_maps += 1;
        }
    }
    ok &= worst < 1e-10 && sphere_worst < 1e-10;
    Ok((ok, format!("catalog max residual {worst:.1e}; {sphere_maps} sphere-model maps, max residual {sphere_worst:.1e}")))
}

fn normalized_jet_table() -> Check {
    let i = Complex64::new(0.0, 1.0);
    let (mut worst, mut s_err) = (0.0f64, 0.0f64);
    for id in catalog_ids() {
        let jets = normal_form_map(&id)?.expand(3)?;
        let e = id.eps.value();
        let expected: [((usize, usize), [Complex64; 3]); 4] = [
            ((1, 0), [1.0.into(), 0.0.into(), 0.0.into()]),
            ((0, 1), [0.0.into(), 0.0.into(), 1.0.into()]),
            ((2, 0), [0.0.into(), 2.0.into(), 0.0.into()]),
            ((1, 1), [i * (e / 2.0), 0.0.into(), 0.0.into()]),
        ];
        for ((a, b), want) in expected {
            for (comp, w) in want.iter().enumerate() {
                worst = worst.max((jet_derivative(&jets[comp], a, b)? - w).norm());
            }
        }
        s_err = s_err.max((2.0 * jet_derivative(&jets[0], 0, 2)?.norm() - id.s).abs());
    }
    Ok((worst < 1e-12 && s_err < 1e-10, format!("max forced-value error {worst:.1e}; max |2|f1_ww| - s| {s_err:.1e}")))
}

fn normalization_round_trip() -> Check {
    let (mut ds, mut dj, mut dinv) = (0.0f64, 0.0f64, 0.0f64);
    let mut wrong_family = 0;
    let mut cases = 0;
    for eps in Signature::both() {
        let mut rng = seeded_rng(DEFAULT_SEED);
        let pairs: Vec<IsotropyPair> = (0..100).map(|_| random_pair(&mut rng, eps)).collect();
        for k in [2u8, 3] {
            for s in [0.3, 0.7, 1.3] {
                let id = NormalFormId::new(k, s, eps)?;
                let g = normal_form_map(&id)?;
                let target = catalog_coords(&id)?;
                for p in &pairs {
                    let c = classify(&act(p, &g, eps)?, eps)?;
                    cases += 1;
                    if c.id.family != k {
                        wrong_family += 1;
                    }
                    ds = ds.max((c.id.s - s).abs());
                    dj = dj.max(jet_distance(&c.coords, &target)?);
                    dinv = dinv.max(inversion_error(&c.normalization.pair, p, eps)?);
                }
            }
        }
    }
    let ok = wrong_family == 0 && ds < 1e-6 && dj < 1e-8 && dinv < 1e-6;
    Ok((ok, format!("{cases} cases, {wrong_family} wrong family, max |ds| {ds:.1e}, jet distance {dj:.1e}, inversion {dinv:.1e}")))
}

fn stabilizers() -> Check {
    let mut witness: f64 = 0.0;
    for eps in Signature::both() {
        for id in [NormalFormId::g1(eps), NormalFormId::new(2, 0.0, eps)?] {
            let jets = normal_form_map(&id)?.expand(NORMALIZE_ORDER)?;
            let base = jet_coordinates_from_jets(&jets)?;
            for k in 0..16 {
                let u = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 16.0);
                let moved = jet_coordinates_from_jets(&act_jets(&circle_element(u), &jets, eps)?)?;
                witness = witness.max(jet_distance(&moved, &base)?);
            }
        }
        let jets = normal_form_map(&NormalFormId::new(3, 0.0, eps)?)?.expand(NORMALIZE_ORDER)?;
        let base = jet_coordinates_from_jets(&jets)?;
        let moved = jet_coordinates_from_jets(&act_jets(&reflection_element(-1.0), &jets, eps)?)?;
        witness = witness.max(jet_distance(&moved, &base)?);
    }
    let mut min_nontrivial = f64::INFINITY;
    let mut all_trivial = true;
    for eps in Signature::both() {
        for k in [2u8, 3] {
            for s in [0.1, 0.5, 1.0] {
                let jets = normal_form_map(&NormalFormId::new(k, s, eps)?)?.expand(NORMALIZE_ORDER)?;
                let r = stabilizer_classify(&jets, eps, &StabilizerOptions::default())?;
                all_trivial &= r.kind == StabilizerKind::Trivial;
                min_nontrivial = min_nontrivial.min(r.search_min_nontrivial);
            }
        }
    }
    let ok = witness < 1e-12 && all_trivial && min_nontrivial > 1e-8;
    Ok((ok, format!("max witness residual {witness:.1e}; smallest nontrivial residual in search {min_nontrivial:.2e}")))
}

fn orbit_rank() -> Check {
    let mut ok = true;
    let mut worst_ratio = f64::INFINITY;
    for k in [2u8, 3] {
        for eps in Signature::both() {
            for s0 in [0.1, 0.5, 1.0, 2.0] {
                let full = rank_at_base(k, eps, s0, 1e-6, 1e-8, false)?;
                let frozen = rank_at_base(k, eps, s0, 1e-6, 1e-8, true)?;
                let sv = &full.singular_values;
                let ratio = sv[15] / sv[0];
                worst_ratio = worst_ratio.min(ratio);
                ok &= full.rank == 16 && ratio >= 1e-6 && frozen.rank == 15;
            }
        }
    }
    Ok((ok, format!("16 cases; smallest sigma16/sigma1 {worst_ratio:.2e}")))
}

fn dichotomy() -> Check {
    let opts = SearchOptions::default();
    let minus = accumulation_search(
        &NormalFormId::new(2, 0.5, Signature::Minus)?,
        &NormalFormId::new(3, 0.0, Signature::Minus)?,
        &opts,
    )?;
    let plus = accumulation_search(
        &NormalFormId::new(2, 0.5, Signature::Plus)?,
        &NormalFormId::new(3, 0.0, Signature::Plus)?,
        &opts,
    )?;
    let ok = minus.best_distance < 1e-2
        && minus.members_stay_in_source_family()
        && minus.family_counts[3] > 0
        && plus.best_distance > 0.05;
    Ok((
        ok,
        format!(
            "eps=-1 best {:.2e} over {} family-3 members ({} infeasible); eps=+1 control {:.3}",
            minus.best_distance, minus.family_counts[3], minus.infeasible, plus.best_distance
        ),
    ))
}

fn positive_sweeps() -> Check {
    let grid = SweepGrid::default().points();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [2u8, 3] {
        let base = NormalFormId::new(k, 0.0, Signature::Plus)?;
        let recs = parallel_sweep(&base, &grid)?;
        let valid = recs.iter().filter(|r| r.is_valid()).count();
        let only_k = recs.iter().all(|r| r.classified.is_none_or(|id| id.family == k));
        let gap = s_coverage_gap(&recs, k, 0.0, 0.5);
        ok &= only_k && gap < 0.1 && valid > 0;
        detail.push(format!("G{k}: {valid}/{} valid, max s-gap {gap:.3}", recs.len()));
    }
    Ok((ok, detail.join("; ")))
}

fn census() -> Check {
    let plus = component_census(Signature::Plus, &CensusOptions::default())?;
    let minus = component_census(Signature::Minus, &CensusOptions::default())?;
    Ok((plus.count == 3 && minus.count == 2, format!("eps=+1: {} components, eps=-1: {}", plus.count, minus.count)))
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: 1000, rng_seed: RngSeed::Fixed(DEFAULT_SEED), failure_persistence: None, ..Config::default() })
}

fn eps_of(plus: bool) -> Signature {
    if plus {
        Signature::Plus
    } else {
        Signature::Minus
    }
}

fn member() -> impl Strategy<Value = NormalFormId> {
    (1u8..=3, 0.0f64..2.0, any::<bool>()).prop_map(|(k, s, plus)| NormalFormId {
        family: k,
        s: if k == 1 { 0.0 } else { s },
        eps: eps_of(plus),
    })
}

fn law<T: std::fmt::Debug>(
    name: &str,
    strategy: impl Strategy<Value = T>,
    test: impl Fn(T) -> Result<f64, hqmap_core::Error>,
    bound: f64,
) -> String {
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner().run(&strategy, |v| {
        let d = test(v).map_err(|e| TestCaseError::fail(e.to_string()))?;
        worst.set(worst.get().max(d));
        if d < bound {
            Ok(())
        } else {
            Err(TestCaseError::fail(format!("defect {d:.2e}")))
        }
    });
    match result {
        Ok(()) => String::new(),
        Err(e) => format!("{name}: {e}"),
    }
}

fn pair(seed: u64, eps: Signature) -> IsotropyPair {
    random_pair(&mut seeded_rng(seed), eps)
}

fn kernel_properties() -> Check {
    let failures: Vec<String> = [
        law(
            "associativity",
            (any::<u64>(), any::<u64>(), member()),
            |(a, c, g)| {
                let outer = sigma_prime_map(&pair(a, g.eps).gamma_p, g.eps)?;
                associativity_defect(&outer, &normal_form_map(&g)?, &sigma_map(&pair(c, g.eps).gamma))
            },
            1e-10,
        ),
        law(
            "chain rule",
            (any::<u64>(), any::<u64>(), member()),
            |(a, c, g)| {
                let map = normal_form_map(&g)?;
                let outer = sigma_prime_map(&pair(a, g.eps).gamma_p, g.eps)?;
                Ok(chain_rule_defect(&map, &sigma_map(&pair(c, g.eps).gamma))?.max(chain_rule_defect(&outer, &map)?))
            },
            1e-10,
        ),
        law("inverse laws", (any::<u64>(), any::<bool>()), |(seed, plus)| inverse_defect(&pair(seed, eps_of(plus)), eps_of(plus)), 1e-10),
        law(
            "grid injectivity",
            (0usize..43, 0usize..43, any::<bool>()),
            |(i, j, plus)| {
                let grid = injectivity_grid(eps_of(plus), 0.1, 2.0)?;
                if i == j {
                    return Ok(0.0);
                }
                let d = catalog_separation(&grid[i], &grid[j])?;
                // Report a defect of 1 when the separation rule is broken.
                let ok = if grid[i].same_map(&grid[j]) { d < 1e-14 } else { d > 1e-6 };
                Ok(if ok { 0.0 } else { 1.0 })
            },
            0.5,
        ),
    ]
    .into_iter()
    .filter(|s| !s.is_empty())
    .collect();
    if failures.is_empty() {
        Ok((true, "associativity, chain rule, inverse laws and grid injectivity hold on 1000 cases each".into()))
    } else {
        Ok((false, failures.join("; ")))
    }
}
