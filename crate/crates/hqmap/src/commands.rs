//! Command-line interface: argument definitions and the command bodies.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hqmap_core::catalog::{
    jet_coordinates, normal_form_map, sphere_model_map, NormalFormId, SPHERE_MAP_COUNT,
};
use hqmap_core::group_action::{rank_at_base, stabilizer_classify, StabilizerOptions};
use hqmap_core::hypersurfaces::{is_in_f2, maps_hypersurface, SourcePoint};
use hqmap_core::isotropies::{act, IsotropyPair};
use hqmap_core::algebra::{DEFAULT_STEP, RationalMap};
use hqmap_core::normalization::{classify_jets, normalize_jets, NormalizationResult};
use hqmap_core::topology_lab::{accumulation_search, component_census, CensusOptions, SearchOptions, SweepGrid};
use serde_json::{json, Value};

use crate::acceptance;
use crate::config::{Format, Overrides, RunConfig};
use crate::error::CliError;
use crate::formats::{
    jet_coords_to_json, jets_to_json, map_from_json, map_to_json, write_sweep_csv, write_trace_csv, PairJson,
};
use crate::parallel_sweep;

#[derive(Debug, Parser)]
#[command(name = "hqmap", version, about = "Normal forms and orbit experiments for CR maps from the Heisenberg hypersurface into hyperquadrics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Target signature, 1 or -1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<i32>,
    /// Seed for all sampling [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Jet order for expansions [default: 4].
    #[arg(long, global = true)]
    pub jet_order: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// A map given as a JSON file, a catalog normal form or a sphere-model map.
#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long, conflicts_with_all = ["family", "sphere_index"])]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<u8>,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    /// Sphere-model map 1..=7, taken through the Cayley transforms.
    #[arg(long, conflicts_with = "family")]
    pub sphere_index: Option<u8>,
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// All maps with their labels and class membership.
    List,
    /// A normal form as map JSON.
    Emit {
        #[arg(long)]
        family: u8,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
    },
    /// The jet coordinates of a normal form.
    Jets {
        #[arg(long)]
        family: u8,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum Command {
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Taylor coefficients of a map up to the jet order.
    Expand(MapArgs),
    /// Sampled hypersurface residual of a map.
    CheckMembership {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Normalizing isotropies and residuals.
    Normalize {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Normal form of a map.
    Classify {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Applies an isotropy pair (JSON with "gamma" and "gamma_p") to a map.
    Act {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        params: PathBuf,
    },
    /// Stabilizer of a normal form with witnesses.
    Stabilizer {
        #[arg(long)]
        family: u8,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 10_000)]
        candidates: usize,
    },
    /// Rank of the orbit map at the base point.
    Rank {
        #[arg(long)]
        family: u8,
        #[arg(long)]
        s0: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
        /// Drop the `s` column.
        #[arg(long)]
        freeze_s: bool,
    },
    /// Recenters a normal form over a grid of base points and classifies.
    Sweep {
        #[arg(long)]
        base_family: u8,
        #[arg(long, default_value_t = 0.0)]
        base_s: f64,
        /// Comma-separated `key=value` with keys radii, angles, max, span, u.
        #[arg(long, default_value = "radii=10,angles=5,max=0.5,span=1.5707963267948966,u=0")]
        grid_spec: String,
    },
    /// Searches the orbit of G3(s=0) for maps close to G2(s=1/2).
    Accumulate {
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Connected components of the sampled catalog.
    Census {
        #[arg(long, default_value_t = 2.0)]
        s_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Runs the acceptance suite.
    Verify {
        /// `all` or a criterion number 1..=9.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

/// Output of a command: JSON, or CSV text already rendered.
#[derive(Debug)]
pub enum Output {
    Json(Value),
    Text(String),
}

impl Output {
    pub fn render(&self) -> Result<String, CliError> {
        Ok(match self {
            Output::Json(v) => {
                let mut s = serde_json::to_string_pretty(v)?;
                s.push('\n');
                s
            }
            Output::Text(t) => t.clone(),
        })
    }
}

fn overrides(g: &GlobalArgs) -> Overrides {
    Overrides { eps: g.eps, seed: g.seed, jet_order: g.jet_order, format: g.format, ..Overrides::default() }
}

fn load_map(m: &MapArgs, cfg: &RunConfig) -> Result<(RationalMap, Value), CliError> {
    let eps = cfg.signature()?;
    if let Some(path) = &m.map {
        let map = map_from_json(&serde_json::from_str(&fs::read_to_string(path)?)?)?;
        return Ok((map, json!({ "file": path })));
    }
    if let Some(k) = m.family {
        let id = NormalFormId::new(k, m.s, eps)?;
        return Ok((normal_form_map(&id)?, json!({ "family": k, "s": m.s, "eps": eps })));
    }
    if let Some(i) = m.sphere_index {
        let h = sphere_model_map(i, eps)?;
        let heis = hqmap_core::hypersurfaces::heisenberg_model(&h, eps)?;
        return Ok((heis, json!({ "sphere_index": i, "eps": eps })));
    }
    Err(CliError::Usage("give --map, --family or --sphere-index".into()))
}

fn normalization_json(r: &NormalizationResult) -> Value {
    json!({
        "pair": PairJson::from(&r.pair),
        "residuals": r.residuals.values,
        "sign_ok": r.residuals.sign_ok,
        "gauge": format!("{:?}", r.gauge),
        "iterations": r.iterations,
        "normalized_jets": jets_to_json(&r.normalized_jets),
    })
}

fn parse_grid(spec: &str) -> Result<SweepGrid, CliError> {
    let mut g = SweepGrid::default();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| CliError::Usage(format!("bad grid entry {part:?}")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {v:?}")));
        let count = |v: &str| v.parse::<usize>().map_err(|_| CliError::Usage(format!("bad count {v:?}")));
        match k {
            "radii" => g.radii = count(v)?,
            "angles" => g.angles = count(v)?,
            "max" => g.max_radius = num(v)?,
            "span" => g.angle_span = num(v)?,
            "u" => g.u = num(v)?,
            _ => return Err(CliError::Usage(format!("unknown grid key {k:?}"))),
        }
    }
    if g.radii == 0 || g.angles == 0 {
        return Err(CliError::Usage("grid needs at least one radius and one angle".into()));
    }
    Ok(g)
}

fn catalog_list(cfg: &RunConfig) -> Result<Value, CliError> {
    let eps = cfg.signature()?;
    let mut rows = vec![
        json!({ "label": NormalFormId::g1(eps).to_string(), "family": 1, "s_range": [0.0, 0.0], "eps": eps, "in_f2": true }),
    ];
    for k in [2, 3] {
        rows.push(json!({ "label": format!("G{k}(s)"), "family": k, "s_range": [0.0, null], "eps": eps, "in_f2": true }));
    }
    for i in 1..=SPHERE_MAP_COUNT {
        let Ok(h) = sphere_model_map(i, eps) else { continue };
        let in_f2 = hqmap_core::hypersurfaces::heisenberg_model(&h, eps)
            .and_then(|m| is_in_f2(&m, eps))
            .is_ok_and(|d| d.in_f2);
        let degree = h.components.iter().map(|c| c.num.degree().max(c.den.degree())).max().unwrap_or(0);
        rows.push(json!({ "label": format!("sphere map {i}"), "sphere_index": i, "eps": eps, "degree": degree, "in_f2": in_f2 }));
    }
    Ok(Value::Array(rows))
}

/// Runs a parsed command. CSV-producing commands honor `--format json` by
/// returning a JSON summary instead.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let mut flags = overrides(&cli.global);
    match &cli.command {
        Command::CheckMembership { samples, radius, tol, .. } => {
            flags.samples = *samples;
            flags.radius = *radius;
            flags.tol = *tol;
        }
        Command::Normalize { tol, max_iter, .. } | Command::Classify { tol, max_iter, .. } => {
            flags.solver_tol = *tol;
            flags.max_iter = *max_iter;
        }
        _ => {}
    }
    let cfg = RunConfig::load(cli.global.config.as_deref(), &flags)?;
    let eps = cfg.signature()?;
    let out = match &cli.command {
        Command::Catalog(CatalogCommand::List) => Output::Json(catalog_list(&cfg)?),
        Command::Catalog(CatalogCommand::Emit { family, s }) => {
            Output::Json(serde_json::to_value(map_to_json(&normal_form_map(&NormalFormId::new(*family, *s, eps)?)?))?)
        }
        Command::Catalog(CatalogCommand::Jets { family, s }) => {
            let c = jet_coordinates(&normal_form_map(&NormalFormId::new(*family, *s, eps)?)?)?;
            Output::Json(serde_json::to_value(jet_coords_to_json(&c))?)
        }
        Command::Expand(m) => {
            let (map, source) = load_map(m, &cfg)?;
            Output::Json(json!({ "source": source, "jets": jets_to_json(&map.expand(cfg.jet_order)?) }))
        }
        Command::CheckMembership { map, .. } => {
            let (h, source) = load_map(map, &cfg)?;
            let r = maps_hypersurface(&h, eps, cfg.samples, cfg.radius, cfg.tolerances.membership, cfg.seed)?;
            Output::Json(json!({
                "source": source,
                "max_residual": r.max_residual,
                "pass": r.pass,
                "samples": r.samples,
                "failures": r.failures,
            }))
        }
        Command::Normalize { map, .. } => {
            let (h, source) = load_map(map, &cfg)?;
            is_in_f2(&h, eps)?;
            let r = normalize_jets(&h.expand(cfg.jet_order.max(4))?, eps, &cfg.lm_options())?;
            let mut v = normalization_json(&r);
            v["source"] = source;
            Output::Json(v)
        }
        Command::Classify { map, .. } => {
            let (h, source) = load_map(map, &cfg)?;
            is_in_f2(&h, eps)?;
            let c = classify_jets(&h.expand(cfg.jet_order.max(4))?, eps, &cfg.lm_options())?;
            Output::Json(json!({
                "family": c.id.family,
                "s": c.id.s,
                "eps": eps,
                "certificate": c.certificate,
                "distances": c.distances,
                "source": source,
                "normalization": normalization_json(&c.normalization),
            }))
        }
        Command::Act { map, params } => {
            let (h, _) = load_map(map, &cfg)?;
            let p: PairJson = serde_json::from_str(&fs::read_to_string(params)?)?;
            let moved = act(&IsotropyPair::from(&p), &h, eps)?;
            Output::Json(serde_json::to_value(map_to_json(&moved))?)
        }
        Command::Stabilizer { family, s, candidates } => {
            let id = NormalFormId::new(*family, *s, eps)?;
            let jets = normal_form_map(&id)?.expand(cfg.jet_order.max(4))?;
            let opts = StabilizerOptions { candidates: *candidates, seed: cfg.seed, ..StabilizerOptions::default() };
            let r = stabilizer_classify(&jets, eps, &opts)?;
            Output::Json(json!({ "normal_form": id.to_string(), "report": r }))
        }
        Command::Rank { family, s0, step, rel_tol, freeze_s } => {
            let r = rank_at_base(*family, eps, *s0, *step, *rel_tol, *freeze_s)?;
            let sv: Vec<f64> = r.singular_values.iter().take(20).copied().collect();
            Output::Json(json!({ "rank": r.rank, "singular_values": sv, "rel_tol": r.rel_tol }))
        }
        Command::Sweep { base_family, base_s, grid_spec } => {
            let base = NormalFormId::new(*base_family, *base_s, eps)?;
            let grid = parse_grid(grid_spec)?;
            let mut pts = vec![SourcePoint::ORIGIN];
            pts.extend(grid.points());
            let recs = parallel_sweep(&base, &pts)?;
            match cfg.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&mut buf, &recs)?;
                    Output::Text(String::from_utf8(buf).expect("csv is utf-8"))
                }
                Format::Json => Output::Json(serde_json::to_value(&recs)?),
            }
        }
        Command::Accumulate { grid, steps } => {
            let opts = SearchOptions { grid: *grid, refine_steps: *steps, ..SearchOptions::default() };
            let r = accumulation_search(&NormalFormId::new(2, 0.5, eps)?, &NormalFormId::new(3, 0.0, eps)?, &opts)?;
            match cfg.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_trace_csv(&mut buf, &r)?;
                    Output::Text(String::from_utf8(buf).expect("csv is utf-8"))
                }
                Format::Json => Output::Json(json!({
                    "best_distance": r.best_distance,
                    "best_point": r.best_point,
                    "best_member": r.best_member,
                    "evaluations": r.evaluations,
                    "infeasible": r.infeasible,
                    "family_counts": r.family_counts,
                    "members_stay_in_source_family": r.members_stay_in_source_family(),
                    "stalled": r.stalled(),
                })),
            }
        }
        Command::Census { s_max, step } => {
            let opts = CensusOptions { s_max: *s_max, step: *step, ..CensusOptions::default() };
            Output::Json(serde_json::to_value(component_census(eps, &opts)?)?)
        }
        Command::Verify { suite } => {
            let outcomes = if suite == "all" {
                acceptance::run_all()
            } else {
                let id = suite.parse::<u8>().map_err(|_| CliError::Usage(format!("unknown suite {suite:?}")))?;
                vec![acceptance::run(id)?]
            };
            let text: String = outcomes.iter().map(|o| format!("{o}\n")).collect();
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            let rendered = match cfg.format {
                Format::Json => Output::Json(serde_json::to_value(&outcomes)?).render()?,
                Format::Csv => text,
            };
            if failed > 0 {
                print!("{rendered}");
                return Err(CliError::Verification(failed));
            }
            Output::Text(rendered)
        }
    };
    Ok(out)
}

/// Writes `out` to `--out` or stdout.
pub fn emit(cli: &Cli, out: &Output) -> Result<(), CliError> {
    let text = out.render()?;
    match &cli.global.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses() {
        let g = parse_grid("radii=4, angles=2,max=0.3,u=0.1").unwrap();
        assert_eq!((g.radii, g.angles, g.max_radius, g.u), (4, 2, 0.3, 0.1));
        assert!(parse_grid("radii=x").is_err());
        assert!(parse_grid("depth=3").is_err());
        assert!(parse_grid("angles=0").is_err());
    }
}
