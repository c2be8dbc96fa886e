//! Orbit sweeps through Heisenberg translations, the accumulation search
//! between families 3 and 2, the component census, and quotient-topology probes.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::catalog::{jet_distance, JetCoords, NormalFormId};
use crate::error::{Error, Result};
use crate::hypersurfaces::{SourcePoint, Signature};
use crate::isotropies::{act, random_pair, recenter_jets};
use crate::normalization::{catalog_coords, classify, classify_jets, Classification, NORMALIZE_ORDER};
use crate::optimize::{nelder_mead, LmOptions};
use crate::catalog::normal_form_map;
use crate::hypersurfaces::seeded_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SweepFlag {
    Valid,
    /// The recentered germ is not in `F²` (or normalization failed).
    OutOfClass,
    /// Normalized, but no catalog member lies within the certificate tolerance.
    Unclassifiable,
}

impl SweepFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepFlag::Valid => "valid",
            SweepFlag::OutOfClass => "out_of_class",
            SweepFlag::Unclassifiable => "unclassifiable",
        }
    }
}

/// One point of an orbit curve: the base map recentered at `p` and classified.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRecord {
    pub base: NormalFormId,
    pub p: SourcePoint,
    pub classified: Option<NormalFormId>,
    /// `+∞` unless the record is valid.
    pub certificate: f64,
    /// Jet distance to the nearest catalog member of another family.
    pub other_family_distance: f64,
    pub flag: SweepFlag,
}

impl SweepRecord {
    pub fn is_valid(&self) -> bool {
        self.flag == SweepFlag::Valid
    }
}

/// Polar grid `z = r e^{iθ}` at fixed `u`: `radii` radii up to `max_radius`
/// (excluding 0) times `angles` angles evenly spaced over `[0, angle_span]`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepGrid {
    pub radii: usize,
    pub angles: usize,
    pub max_radius: f64,
    pub angle_span: f64,
    pub u: f64,
}

impl Default for SweepGrid {
    /// 10 radii up to 0.5 times 5 angles over a quarter turn: 50 points.
    fn default() -> Self {
        SweepGrid { radii: 10, angles: 5, max_radius: 0.5, angle_span: core::f64::consts::FRAC_PI_2, u: 0.0 }
    }
}

impl SweepGrid {
    pub fn points(&self) -> Vec<SourcePoint> {
        let mut out = Vec::with_capacity(self.radii * self.angles);
        for i in 1..=self.radii {
            let r = self.max_radius * i as f64 / self.radii as f64;
            for j in 0..self.angles {
                let t = if self.angles > 1 { self.angle_span * j as f64 / (self.angles - 1) as f64 } else { 0.0 };
                out.push(SourcePoint::new(Complex64::from_polar(r, t), self.u));
            }
        }
        out
    }

    /// Halves the radial spacing; every old point is kept.
    pub fn refined(&self) -> Self {
        SweepGrid { radii: 2 * self.radii, ..*self }
    }
}

/// `n` points `t·direction` for `t = max·k/n`, `k = 1..=n`.
pub fn ray(direction: SourcePoint, n: usize, max: f64) -> Vec<SourcePoint> {
    (1..=n)
        .map(|k| {
            let t = max * k as f64 / n as f64;
            SourcePoint::new(direction.z * t, direction.u * t)
        })
        .collect()
}

const SCAN_S_MAX: f64 = 4.0;
const SCAN_STEPS: usize = 80;

/// `min_s jet_distance(coords, G_{k,s})` over `s ∈ [0, 4]`: a scan followed
/// by golden-section refinement around the best scan point.
pub fn nearest_in_family(coords: &JetCoords, family: u8, eps: Signature) -> Result<(f64, f64)> {
    if family == 1 {
        return Ok((0.0, jet_distance(coords, &catalog_coords(&NormalFormId::g1(eps))?)?));
    }
    let d = |s: f64| -> Result<f64> { jet_distance(coords, &catalog_coords(&NormalFormId::new(family, s, eps)?)?) };
    let h = SCAN_S_MAX / SCAN_STEPS as f64;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=SCAN_STEPS {
        let s = h * k as f64;
        let v = d(s)?;
        if v < best.1 {
            best = (s, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(0.0), best.0 + h);
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    for _ in 0..60 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if d(x1)? < d(x2)? {
            b = x2;
        } else {
            a = x1;
        }
    }
    let s = 0.5 * (a + b);
    let v = d(s)?;
    Ok(if v < best.1 { (s, v) } else { best })
}

fn other_family_distance(c: &Classification, eps: Signature) -> Result<f64> {
    let mut best = f64::INFINITY;
    for k in 1..=3u8 {
        if k != c.id.family {
            best = best.min(nearest_in_family(&c.coords, k, eps)?.1);
        }
    }
    Ok(best)
}

/// Recenters `base` at `p`, normalizes and classifies. Per-point failures are
/// recorded in the flag; only invalid input is an error.
pub fn sweep_point(base: &NormalFormId, p: SourcePoint) -> Result<SweepRecord> {
    let eps = base.eps;
    let map = normal_form_map(base)?;
    let mut record = SweepRecord {
        base: *base,
        p,
        classified: None,
        certificate: f64::INFINITY,
        other_family_distance: f64::INFINITY,
        flag: SweepFlag::OutOfClass,
    };
    let jets = match recenter_jets(&map, p, eps, NORMALIZE_ORDER) {
        Ok(j) => j,
        Err(Error::InvalidInput(m)) => return Err(Error::InvalidInput(m)),
        Err(_) => return Ok(record),
    };
    match classify_jets(&jets, eps, &LmOptions::default()) {
        Ok(c) => {
            record.classified = Some(c.id);
            record.certificate = c.certificate;
            record.other_family_distance = other_family_distance(&c, eps)?;
            record.flag = SweepFlag::Valid;
        }
        Err(Error::Unclassifiable { certificate }) => {
            record.certificate = certificate;
            record.flag = SweepFlag::Unclassifiable;
        }
        Err(_) => {}
    }
    Ok(record)
}

/// [`sweep_point`] over a grid, in grid order.
pub fn orbit_sweep(base: &NormalFormId, grid: &[SourcePoint]) -> Result<Vec<SweepRecord>> {
    base.validate()?;
    grid.iter().map(|p| sweep_point(base, *p)).collect()
}

/// Largest gap in the sorted `s`-values of valid records in `family`,
/// measured over `[lo, hi]` (the interval ends count as gaps too).
pub fn s_coverage_gap(records: &[SweepRecord], family: u8, lo: f64, hi: f64) -> f64 {
    let mut s: Vec<f64> = records
        .iter()
        .filter_map(|r| r.classified.filter(|id| r.is_valid() && id.family == family).map(|id| id.s))
        .collect();
    s.push(lo);
    s.push(hi);
    s.sort_by(f64::total_cmp);
    s.windows(2)
        .filter(|w| w[0] < hi && w[1] > lo)
        .map(|w| w[1].min(hi) - w[0].max(lo))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchOptions {
    /// Grid cells per axis over translation modulus and argument.
    pub grid: usize,
    pub max_modulus: f64,
    /// Nelder–Mead iterations over `(Re z, Im z, u)`.
    pub refine_steps: usize,
    /// Initial simplex edge.
    pub refine_scale: f64,
    /// Success threshold for the best distance.
    pub threshold: f64,
    /// Refinement stops once the best distance is below this. Near the
    /// crossing the family 2 and 3 jets at `s = 1/2 - δ` differ by `O(δ)`, so
    /// pushing far below the normalization accuracy would make the family
    /// label of the orbit members meaningless.
    pub stop_below: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { grid: 20, max_modulus: 1.0, refine_steps: 200, refine_scale: 0.1, threshold: 1e-2, stop_below: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchReport {
    pub source: NormalFormId,
    pub target: NormalFormId,
    pub best_distance: f64,
    pub best_point: SourcePoint,
    /// Classification of the orbit member at `best_point`.
    pub best_member: Option<NormalFormId>,
    /// Best distance so far after each grid cell and each refinement step.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// Evaluations that left `F²`; the objective is `+∞` there.
    pub infeasible: usize,
    /// Evaluated orbit members per classified family (index 0: unclassifiable).
    pub family_counts: [usize; 4],
    pub threshold: f64,
}

impl SearchReport {
    /// Whether every classified orbit member lies in the source family.
    pub fn members_stay_in_source_family(&self) -> bool {
        (0..4).all(|k| k == usize::from(self.source.family) || self.family_counts[k] == 0)
    }

    pub fn stalled(&self) -> bool {
        !(self.best_distance < self.threshold)
    }

    pub fn require_found(&self) -> Result<()> {
        if self.stalled() {
            Err(Error::SearchStalled { best_distance: self.best_distance })
        } else {
            Ok(())
        }
    }
}

/// Minimizes the jet distance from the normalized orbit members of `source`
/// to `target`. Orbit members are recentered translates; normalizing them
/// removes the isotropy directions from the search.
pub fn accumulation_search(target: &NormalFormId, source: &NormalFormId, opts: &SearchOptions) -> Result<SearchReport> {
    if target.eps != source.eps {
        return Err(Error::InvalidInput("source and target signatures differ".into()));
    }
    let eps = source.eps;
    let map = normal_form_map(source)?;
    let goal = catalog_coords(target)?;
    let mut report = SearchReport {
        source: *source,
        target: *target,
        best_distance: f64::INFINITY,
        best_point: SourcePoint::ORIGIN,
        best_member: None,
        trace: Vec::new(),
        evaluations: 0,
        infeasible: 0,
        family_counts: [0; 4],
        threshold: opts.threshold,
    };
    let objective = |p: SourcePoint, report: &mut SearchReport| -> f64 {
        report.evaluations += 1;
        let c = recenter_jets(&map, p, eps, NORMALIZE_ORDER).and_then(|j| classify_jets(&j, eps, &LmOptions::default()));
        let value = match c {
            Ok(c) => {
                report.family_counts[usize::from(c.id.family)] += 1;
                match jet_distance(&c.coords, &goal) {
                    Ok(d) => {
                        if d < report.best_distance {
                            report.best_distance = d;
                            report.best_point = p;
                            report.best_member = Some(c.id);
                        }
                        d
                    }
                    Err(_) => f64::INFINITY,
                }
            }
            Err(Error::Unclassifiable { .. }) => {
                report.family_counts[0] += 1;
                f64::INFINITY
            }
            Err(_) => {
                report.infeasible += 1;
                f64::INFINITY
            }
        };
        report.trace.push(report.best_distance);
        value
    };
    let n = opts.grid.max(1);
    for i in 0..n {
        let r = if n > 1 { opts.max_modulus * i as f64 / (n - 1) as f64 } else { 0.0 };
        for j in 0..n {
            let t = core::f64::consts::TAU * j as f64 / n as f64;
            objective(SourcePoint::new(Complex64::from_polar(r, t), 0.0), &mut report);
            if i == 0 {
                break;
            }
        }
    }
    if report.best_distance.is_finite() && report.best_distance >= opts.stop_below && opts.refine_steps > 0 {
        let x0 = [report.best_point.z.re, report.best_point.z.im, report.best_point.u];
        nelder_mead(
            |x: &[f64]| objective(SourcePoint::new(Complex64::new(x[0], x[1]), x[2]), &mut report),
            &x0,
            opts.refine_scale,
            opts.refine_steps,
            1e-12,
            opts.stop_below,
        );
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CensusOptions {
    /// `s` grid for families 2 and 3 is `[0, s_max]` with spacing `step`.
    pub s_max: f64,
    pub step: f64,
    /// Catalog members closer than this are the same map.
    pub join_tol: f64,
    /// Halvings in the continuity study of the `s`-paths.
    pub refinements: usize,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { s_max: 2.0, step: 0.05, join_tol: 1e-10, refinements: 3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CensusReport {
    pub eps: Signature,
    pub count: usize,
    /// Each sampled catalog member with its component index.
    pub members: Vec<(NormalFormId, usize)>,
    /// Largest consecutive jet distance along the family 2 and 3 `s`-paths,
    /// at spacings `step, step/2, ...`.
    pub path_steps: [Vec<f64>; 2],
    /// Whether the path steps shrink under every refinement.
    pub paths_continuous: bool,
    /// `min_s jet_distance(G_{2,s}, G_{3,s})` over the grid, and its argmin.
    pub family_gap: (f64, f64),
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

fn path_max_step(family: u8, eps: Signature, s_max: f64, step: f64) -> Result<f64> {
    let n = libm::round(s_max / step) as usize;
    let mut prev = catalog_coords(&NormalFormId::new(family, 0.0, eps)?)?;
    let mut worst = 0.0f64;
    for k in 1..=n {
        let next = catalog_coords(&NormalFormId::new(family, step * k as f64, eps)?)?;
        worst = worst.max(jet_distance(&prev, &next)?);
        prev = next;
    }
    Ok(worst)
}

/// Counts connected components of the sampled catalog. Nodes are `G1` and
/// `G_{k,s}` on the `s`-grid; edges join consecutive members of an `s`-path
/// (once the refinement study shows the path is continuous) and members that
/// coincide as maps.
pub fn component_census(eps: Signature, opts: &CensusOptions) -> Result<CensusReport> {
    if !(opts.step > 0.0) || !(opts.s_max > 0.0) || !(opts.join_tol > 0.0) {
        return Err(Error::InvalidInput("census step, s_max and join_tol must be positive".into()));
    }
    let n = libm::round(opts.s_max / opts.step) as usize;
    let mut members = alloc::vec![NormalFormId::g1(eps)];
    for family in [2u8, 3] {
        for k in 0..=n {
            members.push(NormalFormId::new(family, opts.step * k as f64, eps)?);
        }
    }
    let coords: Vec<JetCoords> = members.iter().map(catalog_coords).collect::<Result<_>>()?;

    let mut path_steps = [Vec::new(), Vec::new()];
    for (slot, family) in [2u8, 3].into_iter().enumerate() {
        let mut h = opts.step;
        for _ in 0..=opts.refinements {
            path_steps[slot].push(path_max_step(family, eps, opts.s_max, h)?);
            h *= 0.5;
        }
    }
    let paths_continuous = path_steps.iter().all(|v| v.windows(2).all(|w| w[1] < 0.75 * w[0]));

    let mut uf = UnionFind((0..members.len()).collect());
    if paths_continuous {
        for base in [1, 2 + n] {
            for k in 0..n {
                uf.union(base + k, base + k + 1);
            }
        }
    }
    let mut family_gap = (f64::INFINITY, 0.0);
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            if members[a].family == members[b].family {
                continue;
            }
            let d = jet_distance(&coords[a], &coords[b])?;
            if members[a].family == 2 && members[b].family == 3 && members[a].s == members[b].s && d < family_gap.0 {
                family_gap = (d, members[a].s);
            }
            if d < opts.join_tol {
                uf.union(a, b);
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut labelled = Vec::with_capacity(members.len());
    for (i, id) in members.iter().enumerate() {
        let r = uf.find(i);
        let label = match roots.iter().position(|&x| x == r) {
            Some(l) => l,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
        labelled.push((*id, label));
    }
    Ok(CensusReport { eps, count: roots.len(), members: labelled, path_steps, paths_continuous, family_gap })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuotientProbeReport {
    pub eps: Signature,
    /// `s_n = 1/2 + 1/n` in family 2, each moved by a fixed random isotropy.
    pub s_n: Vec<f64>,
    /// Jet distance from the classified normal form of each term to `G_{2,1/2}`.
    pub limit_distance: Vec<f64>,
    /// Whether every term classified back to family 2 and the limit distances decrease to below `1e-2`.
    pub continuous: bool,
    /// `min_s jet_distance(G_{2,s}, G_{3,s})` and its argmin (grid step `1e-3` on `[0, 2]`).
    pub family_gap: (f64, f64),
    /// Best distance from the family-3 orbit through `G_{3,0}` to `G_{2,1/2}`, when supplied.
    pub accumulation_distance: Option<f64>,
    /// Family curves stay at least `0.05` apart and no accumulation was found.
    pub separated: bool,
}

/// Evidence for the quotient topology: continuity of classification along
/// convergent catalog sequences and (for `ε = -1`) the meeting of the family
/// 2 and 3 curves near `s = 1/2`.
pub fn quotient_topology_probe(eps: Signature, terms: usize, accumulation: Option<f64>, seed: u64) -> Result<QuotientProbeReport> {
    let limit = catalog_coords(&NormalFormId::new(2, 0.5, eps)?)?;
    let mut rng = seeded_rng(seed);
    let pair = random_pair(&mut rng, eps);
    let mut s_n = Vec::with_capacity(terms);
    let mut limit_distance = Vec::with_capacity(terms);
    let mut all_family_2 = true;
    for n in 1..=terms {
        let s = 0.5 + 1.0 / n as f64;
        let moved = act(&pair, &normal_form_map(&NormalFormId::new(2, s, eps)?)?, eps)?;
        let c = classify(&moved, eps)?;
        all_family_2 &= c.id.family == 2;
        s_n.push(s);
        limit_distance.push(jet_distance(&c.coords, &limit)?);
    }
    let continuous = all_family_2
        && limit_distance.windows(2).all(|w| w[1] < w[0])
        && limit_distance.last().is_some_and(|d| *d < 1e-2);
    let mut family_gap = (f64::INFINITY, 0.0);
    for k in 0..=2000 {
        let s = k as f64 * 1e-3;
        let d = jet_distance(&catalog_coords(&NormalFormId::new(2, s, eps)?)?, &catalog_coords(&NormalFormId::new(3, s, eps)?)?)?;
        if d < family_gap.0 {
            family_gap = (d, s);
        }
    }
    let separated = family_gap.0 > 0.05 && accumulation.is_none_or(|d| d > 0.05);
    Ok(QuotientProbeReport { eps, s_n, limit_distance, continuous, family_gap, accumulation_distance: accumulation, separated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_reproduces_base() {
        let base = NormalFormId::new(3, 0.4, Signature::Minus).unwrap();
        let r = sweep_point(&base, SourcePoint::ORIGIN).unwrap();
        assert!(r.is_valid() && r.certificate < 1e-12);
        let c = r.classified.unwrap();
        assert_eq!(c.family, 3);
        assert!((c.s - 0.4).abs() < 1e-12);
    }

    #[test]
    fn grid_shapes() {
        let g = SweepGrid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 50);
        assert!(pts.iter().all(|p| p.z.norm() <= 0.5 + 1e-15));
        let fine = g.refined().points();
        assert_eq!(fine.len(), 100);
        assert!(pts.iter().all(|p| fine.iter().any(|q| (q.z - p.z).norm() < 1e-15)));
        assert_eq!(ray(SourcePoint::new(Complex64::new(1.0, 0.0), 0.0), 4, 0.8)[3].z, Complex64::new(0.8, 0.0));
    }

    #[test]
    fn coverage_gap_counts_ends() {
        let base = NormalFormId::new(2, 0.0, Signature::Plus).unwrap();
        let mk = |s: f64| SweepRecord {
            base,
            p: SourcePoint::ORIGIN,
            classified: Some(NormalFormId::new(2, s, Signature::Plus).unwrap()),
            certificate: 0.0,
            other_family_distance: 1.0,
            flag: SweepFlag::Valid,
        };
        let recs = [mk(0.0), mk(0.2), mk(0.45), mk(0.9)];
        assert!((s_coverage_gap(&recs, 2, 0.0, 0.5) - 0.25).abs() < 1e-15);
        assert!((s_coverage_gap(&recs[..2], 2, 0.0, 0.5) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn same_orbit_search_is_immediate() {
        let id = NormalFormId::new(2, 0.5, Signature::Minus).unwrap();
        let r = accumulation_search(&id, &id, &SearchOptions { grid: 2, ..SearchOptions::default() }).unwrap();
        assert!(r.best_distance < 1e-10);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn census_counts() {
        let opts = CensusOptions { s_max: 1.0, step: 0.1, refinements: 2, ..CensusOptions::default() };
        assert_eq!(component_census(Signature::Plus, &opts).unwrap().count, 3);
        let r = component_census(Signature::Minus, &opts).unwrap();
        assert_eq!(r.count, 2);
        assert!(r.family_gap.0 < 1e-12 && (r.family_gap.1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nearest_member_recovers_s() {
        let eps = Signature::Plus;
        let c = catalog_coords(&NormalFormId::new(3, 0.37, eps).unwrap()).unwrap();
        let (s, d) = nearest_in_family(&c, 3, eps).unwrap();
        assert!((s - 0.37).abs() < 1e-6 && d < 1e-6);
    }
}
