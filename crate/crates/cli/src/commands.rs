//! The `entropy`, `coding` and `orders` subcommands. Each returns its JSON
//! report, optional CSV and exit code; writing happens once, in [`finish`].

use std::path::PathBuf;
use std::time::Instant;

use entrograph::coding::{
    codings_count, coding_entropy_bound_check, d_lower_bound_counts, hitting_sets, mutually_singular_probe,
    wandering_check, CodingFamily,
};
use entrograph::entropy::{entropy_profile, AggregateStatus, CompactSelector, CountProfile, ProfileOptions};
use entrograph::growth::{
    classify, compare, default_tail_start, is_linearly_invariant, parse_sequence, project_exp, project_poly, sup,
    Bands, GrowthSeries, ParseOptions,
};
use entrograph::systems::{build, SystemInstance};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::families;
use crate::output::{class_json, emit, num, sig, text_num, timing_json, Csv};

pub struct Outcome {
    pub report: Value,
    pub csv: Option<Csv>,
    pub exit_code: i32,
}

pub fn finish(out: &Outcome, csv: Option<&PathBuf>, json_path: Option<&PathBuf>) -> Result<i32, CliError> {
    let csv = match (csv, &out.csv) {
        (Some(p), Some(c)) => Some((p.as_path(), c)),
        _ => None,
    };
    emit(csv, json_path.map(|p| p.as_path()), &out.report)?;
    Ok(out.exit_code)
}

fn metadata(cfg: &RunConfig, system: &SystemInstance, grid_size: usize, density: Option<u32>) -> Value {
    json!({
        "grid_size": grid_size,
        "density_level": density,
        "horizon": cfg.horizon,
        "entourage_family": system.entourages().describe(),
        "config_hash": cfg.hash(),
        "config": cfg,
    })
}

pub fn entropy_csv(p: &CountProfile) -> Csv {
    let mut csv = Csv::new(&["level", "n", "s", "g", "sandwich_ok"]);
    for l in &p.levels {
        for (i, s) in l.counts.iter().enumerate() {
            let (g, ok) = match &l.sandwich {
                Some(sw) => (sw.g_fine[i].to_string(), sw.holds_at(i + 1).to_string()),
                None => (String::new(), String::new()),
            };
            csv.push(vec![l.k.to_string(), (i + 1).to_string(), s.to_string(), g, ok]);
        }
    }
    csv
}

pub fn entropy_json(cfg: &RunConfig, system: &SystemInstance, p: &CountProfile) -> Value {
    let levels: Vec<Value> = p
        .levels
        .iter()
        .map(|l| {
            json!({
                "k": l.k,
                "class": class_json(&l.class),
                "s_at_horizon": l.counts.last().copied().unwrap_or(0),
                "sandwich_ok": l.sandwich.as_ref().map(|s| s.ok),
            })
        })
        .collect();
    let status = match &p.status {
        AggregateStatus::Stable => json!({ "kind": "stable" }),
        AggregateStatus::SingleLevel => json!({ "kind": "single_level" }),
        AggregateStatus::UnstableAtLevels { coarse, fine } => {
            json!({ "kind": "unstable_at_levels", "coarse": coarse, "fine": fine })
        }
    };
    let variance = p.variance.as_ref().map(|v| {
        json!({
            "seed": v.seed,
            "levels": v.levels.iter().map(|r| json!({
                "k": r.k,
                "class": class_json(&r.class),
                "max_relative_difference": num(r.max_relative_difference),
            })).collect::<Vec<_>>(),
        })
    });
    json!({
        "command": "entropy",
        "system": p.system,
        "compact": p.compact,
        "levels": levels,
        "aggregate": p.aggregate.as_ref().map(class_json),
        "status": status,
        "checks": {
            "level_monotonicity_violations": p.level_monotonicity_violations().len(),
            "sandwich_ok": cfg.generators.then(|| p.sandwich_ok()),
        },
        "variance": variance,
        "metadata": metadata(cfg, system, p.metadata.grid_size, p.metadata.density_level),
    })
}

pub fn cmd_entropy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let system = build(&cfg.system, &cfg.catalog_options())?;
    let compact = CompactSelector::parse(&cfg.compact)?.resolve(&system)?;
    let opts = ProfileOptions {
        bands: cfg.bands,
        generators: cfg.generators,
        variance_seed: cfg.seed,
        agreement_slack: cfg.agreement_slack,
        config_hash: Some(cfg.hash()),
    };
    let profile = entropy_profile(&system, &compact, &cfg.levels, cfg.horizon, &opts)?;
    let mut report = entropy_json(cfg, &system, &profile);
    report["timing"] = timing_json(start.elapsed());
    let exit_code = if matches!(profile.status, AggregateStatus::UnstableAtLevels { .. }) { 2 } else { 0 };
    Ok(Outcome {
        report,
        csv: Some(entropy_csv(&profile)),
        exit_code,
    })
}

fn family_for(cfg: &RunConfig) -> Result<CodingFamily, CliError> {
    let reference = cfg.family.as_deref().ok_or_else(|| CliError::Config("no family given".into()))?;
    let family = families::load(reference)?;
    Ok(match cfg.max_words_per_orbit {
        Some(cap) => family.with_max_words(cap),
        None => family,
    })
}

pub fn cmd_coding(cfg: &RunConfig, bound_levels: bool) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let family = family_for(cfg)?;
    let system = build(&cfg.system, &cfg.catalog_options())?;
    let base = CompactSelector::parse(&cfg.compact)?.resolve(&system)?;
    let universe = family.augmented_universe(&system, &base)?;
    let validation = family.validate(&system, &universe)?;
    let n = cfg.horizon;
    let c = codings_count(&system, &family, n, &universe)?;
    let members: Vec<Value> = family
        .members()
        .iter()
        .map(|m| {
            let w = wandering_check(&system, m, n, Some(&universe))?;
            Ok(json!({
                "label": m.label,
                "declared_wandering": m.declared_wandering,
                "wandering": w.wandering,
                "first_return": w.first_return,
            }))
        })
        .collect::<Result<_, CliError>>()?;
    let linear = GrowthSeries::from_fn(n, |x| x).map_err(CliError::from)?;
    let relation = compare(&c.series, &linear, default_tail_start(n))?.relation;
    let class = classify(&c.series, &cfg.bands)?;

    let mut d: Option<Vec<u64>> = None;
    let mut hitting = Vec::new();
    let mut singularity = Value::Null;
    if family.len() >= 2 {
        let h = hitting_sets(&system, &family, n, &universe)?;
        d = Some(d_lower_bound_counts(&h[0], n)?);
        hitting = h
            .iter()
            .map(|x| json!({ "from": x.from, "to": x.to, "bound": x.bound, "hits": x.hits, "exact": x.exact }))
            .collect();
        if validation.disjoint {
            let r = mutually_singular_probe(&system, &family, cfg.n0_max, cfg.search_bound, &base)?;
            singularity = json!({
                "singular": r.singular,
                "n0_max": r.n0_max,
                "search_bound": r.search_bound,
                "first_failure": r.first_failure,
                "max_sampled_gap": r.max_sampled_gap,
                "certified_bound": r.certified_bound,
                "witnesses": r.witnesses.iter().map(|w| json!({
                    "n0": w.n0,
                    "point": w.point.to_string(),
                    "times": w.times,
                })).collect::<Vec<_>>(),
            });
        }
    }
    let bound = if bound_levels {
        let r = coding_entropy_bound_check(&system, &family, &cfg.levels, n, &base)?;
        json!({
            "level": r.level,
            "count_level": r.count_level,
            "factor": r.factor,
            "ok": r.ok,
            "first_violation": r.first_violation,
        })
    } else {
        Value::Null
    };

    let mut csv = Csv::new(&["n", "c", "d_lower"]);
    for (i, v) in c.counts.iter().enumerate() {
        let dl = d.as_ref().map_or(String::new(), |d| d[i].to_string());
        csv.push(vec![(i + 1).to_string(), v.to_string(), dl]);
    }
    let report = json!({
        "command": "coding",
        "system": system.display_name(),
        "members": members,
        "disjoint": validation.disjoint,
        "exact": c.exact,
        "samples": c.samples,
        "overflowed_orbits": c.overflowed,
        "c_at_horizon": c.counts.last().copied().unwrap_or(0),
        "class": class_json(&class),
        "compare_with_n": relation.to_string(),
        "d_lower_at_horizon": d.as_ref().and_then(|d| d.last().copied()),
        "hitting": hitting,
        "singularity": singularity,
        "entropy_bound": bound,
        "metadata": metadata(cfg, &system, universe.len(), universe.density_level()),
        "timing": timing_json(start.elapsed()),
    });
    Ok(Outcome {
        report,
        csv: Some(csv),
        exit_code: 0,
    })
}

/// Parses `src` at `horizon`, rendering errors with a caret.
pub fn series(src: &str, horizon: usize) -> Result<GrowthSeries, CliError> {
    parse_sequence(src, horizon, ParseOptions::default()).map_err(|e| match e {
        entrograph::growth::GrowthError::Parse(p) => CliError::Parse(p.render(src)),
        e => CliError::Config(format!("{src}: {e}")),
    })
}

pub enum OrdersQuery {
    Compare { a: String, b: String, horizon: usize, tail_start: Option<usize> },
    Project { p: String, horizon: usize, tail_fraction: f64 },
    Sup { exprs: Vec<String>, horizon: usize },
    Invariance { a: String, m: usize, horizon: usize },
}

/// Text lines and a JSON value for an `orders` query.
pub fn cmd_orders(q: &OrdersQuery) -> Result<(String, Value), CliError> {
    match q {
        OrdersQuery::Compare { a, b, horizon, tail_start } => {
            let (sa, sb) = (series(a, *horizon)?, series(b, *horizon)?);
            let v = compare(&sa, &sb, tail_start.unwrap_or(default_tail_start(*horizon)))?;
            let text = format!("{}\n", v.relation);
            Ok((
                text,
                json!({
                    "command": "orders compare",
                    "a": a,
                    "b": b,
                    "horizon": horizon,
                    "relation": v.relation.to_string(),
                    "witness_constant": v.witness_constant.map(num),
                    "reverse_witness_constant": v.reverse_witness_constant.map(num),
                }),
            ))
        }
        OrdersQuery::Project { p, horizon, tail_fraction } => {
            let s = series(p, *horizon)?;
            let (poly, exp) = (project_poly(&s, *tail_fraction)?, project_exp(&s, *tail_fraction)?);
            let class = classify(&s, &Bands { tail_fraction: *tail_fraction, ..Bands::default() })?;
            Ok((
                format!("{}\n", text_num(poly)),
                json!({
                    "command": "orders project",
                    "p": p,
                    "horizon": horizon,
                    "degree": num(poly),
                    "rate": num(exp),
                    "class": class_json(&class),
                }),
            ))
        }
        OrdersQuery::Sup { exprs, horizon } => {
            if exprs.is_empty() {
                return Err(CliError::Config("sup needs at least one expression".into()));
            }
            let list = exprs.iter().map(|e| series(e, *horizon)).collect::<Result<Vec<_>, _>>()?;
            let s = sup(&list)?;
            let values: Vec<String> = s.values().iter().map(|&v| sig(v)).collect();
            let class = classify(&s, &Bands::default())?;
            Ok((
                format!("{}\n{}\n", class, values.join(",")),
                json!({
                    "command": "orders sup",
                    "exprs": exprs,
                    "horizon": horizon,
                    "values": s.values().iter().map(|&v| num(v)).collect::<Vec<_>>(),
                    "class": class_json(&class),
                }),
            ))
        }
        OrdersQuery::Invariance { a, m, horizon } => {
            let s = series(a, *horizon)?;
            let v = is_linearly_invariant(&s, *m)?;
            Ok((
                format!("{}\n", v.invariant),
                json!({
                    "command": "orders invariance",
                    "a": a,
                    "m": m,
                    "horizon": horizon,
                    "invariant": v.invariant,
                    "relation": v.verdict.relation.to_string(),
                }),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_orders_examples() {
        let q = OrdersQuery::Compare { a: "2*n+5".into(), b: "n".into(), horizon: 128, tail_start: None };
        assert_eq!(cmd_orders(&q).unwrap().0, "equivalent\n");
        let q = OrdersQuery::Project { p: "n^2".into(), horizon: 256, tail_fraction: 0.5 };
        assert_eq!(cmd_orders(&q).unwrap().0, "2.0\n");
        let q = OrdersQuery::Invariance { a: "2^n".into(), m: 2, horizon: 256 };
        assert_eq!(cmd_orders(&q).unwrap().0, "false\n");
    }

    #[test]
    fn parse_errors_point_at_the_column() {
        let q = OrdersQuery::Project { p: "n^^2".into(), horizon: 64, tail_fraction: 0.5 };
        let Err(e) = cmd_orders(&q) else { panic!("accepted") };
        assert_eq!(e.exit_code(), 4);
        let text = e.to_string();
        let caret = text.lines().nth(1).unwrap();
        assert!(caret.starts_with("  ^"), "{text}");
    }
}
