use std::path::PathBuf;
use std::time::Instant;

use jacobi_hyperbolic::analysis::{
    asymptotic_constant, cancellation_scan, lower_bound_experiment, meanvalue_check,
    MeanValueVariant, SeqKind, ZRule,
};
use jacobi_hyperbolic::perron::{even_sample, perron_error_scan, PerronConfig};
use jacobi_hyperbolic::report::SumRecord;
use jacobi_hyperbolic::sieve::{build_sieve, SieveTable};
use jacobi_hyperbolic::sums::{
    cover_direct_sum, cover_recomposition_sum, hyperbola_method_sum, hyperbolic_sum,
    square_n_main_term, SumResult,
};
use jacobi_hyperbolic::{
    BoundedSequence, EqualWidthCover, Error, HyperbolicRegion, Interval, Restriction, Result,
};
use serde_json::{json, Value};

use crate::config::*;

const SEGMENT: u64 = 1 << 18;

pub struct Guard {
    pub name: &'static str,
    pub passed: bool,
}

/// What a subcommand produced.
pub struct Outcome {
    pub json: Value,
    /// An object (one CSV row) or an array of objects.
    pub rows: Value,
    pub guards: Vec<Guard>,
    pub extra_files: Vec<(PathBuf, String)>,
}

impl Outcome {
    fn single(json: Value, guards: Vec<Guard>) -> Self {
        Outcome {
            rows: json.clone(),
            json,
            guards,
            extra_files: Vec::new(),
        }
    }
}

fn table_for(limit: u64) -> Result<SieveTable> {
    build_sieve(limit.max(1), SEGMENT)
}

fn t_floor(t: f64) -> Result<u64> {
    if !(t >= 1.0) {
        return Err(Error::InvalidArgument(format!("T must be ≥ 1, got {t}")));
    }
    Ok(t.floor() as u64)
}

fn value_json(r: &SumResult) -> Value {
    serde_json::to_value(SumRecord::new("", 0.0, 0.0, 0.0, None, vec![], r, 0.0))
        .expect("plain data")
}

fn seeds_of(seqs: &[&BoundedSequence]) -> Vec<u64> {
    seqs.iter()
        .filter_map(|s| match s {
            BoundedSequence::Rademacher { seed } => Some(*seed),
            _ => None,
        })
        .collect()
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn run(cmd: &Command, common: &Common) -> Result<Outcome> {
    match cmd {
        Command::Sum(a) => sum(a),
        Command::CoverCheck(a) => cover_check(a),
        Command::Asymptotic(a) => asymptotic(a),
        Command::PerronScan(a) => perron(a),
        Command::Meanvalue(a) => meanvalue(a),
        Command::LowerBound(a) => lower_bound(a),
        Command::CancellationScan(a) => scan(a, common),
    }
}

fn sum(args: &SumArgs) -> Result<Outcome> {
    let start = Instant::now();
    let restriction: Restriction = args.restriction.parse()?;
    let region = HyperbolicRegion::new(args.t, args.z, restriction)?;
    let a = BoundedSequence::from_descriptor(&args.seq_a)?;
    let b = BoundedSequence::from_descriptor(&args.seq_b)?;
    let table = table_for(region.block().max_index())?;
    let r = hyperbolic_sum(&region, &a, &b, args.c, &table)?;
    let rec = SumRecord::new(
        "sum",
        args.t,
        args.z,
        args.c,
        None,
        seeds_of(&[&a, &b]),
        &r,
        elapsed_ms(start),
    );
    let mut json = serde_json::to_value(rec).expect("plain data");
    json["escalated"] = json!(r.escalated);
    Ok(Outcome::single(json, vec![]))
}

fn cover_check(args: &CoverArgs) -> Result<Outcome> {
    let start = Instant::now();
    let restriction: Restriction = args.restriction.parse()?;
    let cover = EqualWidthCover::new(args.t, args.z, args.delta)?;
    let a = BoundedSequence::from_descriptor(&args.seq_a)?;
    let b = BoundedSequence::from_descriptor(&args.seq_b)?;
    let table = table_for(cover.region_block().max_index())?;
    let parts = cover_recomposition_sum(&cover, restriction, &a, &b, args.c, &table)?;
    let direct = cover_direct_sum(&cover, restriction, &a, &b, args.c, &table)?;
    let total = parts.total();
    let matched = match (total.exact(), direct.exact()) {
        (Some(x), Some(y)) => x == y,
        _ => (total.to_complex() - direct.to_complex()).norm() <= 1e-9 * direct.abs().max(1.0),
    };
    let json = json!({
        "experiment": "cover-check",
        "T": args.t,
        "z": args.z,
        "delta": args.delta,
        "c": args.c,
        "seeds": seeds_of(&[&a, &b]),
        "strips": cover.strips.len(),
        "rectangles": value_json(&parts.rectangles),
        "slivers": value_json(&parts.slivers),
        "leftover": value_json(&parts.leftover),
        "total": value_json(&total),
        "direct": value_json(&direct),
        "exact_match": matched,
        "wall_time_ms": elapsed_ms(start),
    });
    Ok(Outcome::single(
        json,
        vec![Guard {
            name: "exact-match",
            passed: matched,
        }],
    ))
}

fn asymptotic(args: &AsymptoticArgs) -> Result<Outcome> {
    let start = Instant::now();
    let tf = t_floor(args.t)?;
    let table = table_for(tf)?;
    let h = hyperbola_method_sum(args.t, &table)?;
    let total = h.total.to_complex().re;
    let c = asymptotic_constant();
    let main = square_n_main_term(args.t, &table)?;
    let dev = (total - c * args.t).abs();
    let scale = args.t.powf(0.75);
    let ratio = dev / (scale * args.t.ln().max(1.0));
    let passed = ratio <= args.guard;
    let json = json!({
        "experiment": "asymptotic",
        "T": args.t,
        "T_floor": tf,
        "N1": value_json(&h.n1)["value_re"],
        "N2": value_json(&h.n2)["value_re"],
        "N3": value_json(&h.n3)["value_re"],
        "total": value_json(&h.total)["value_re"],
        "terms": h.total.terms,
        "C": c,
        "C_T": c * args.t,
        "square_main_term": main,
        "series_partial": 2.0 * main / args.t,
        "deviation_over_T34": dev / scale,
        "deviation_over_T34_logT": ratio,
        "guard": args.guard,
        "wall_time_ms": elapsed_ms(start),
    });
    Ok(Outcome::single(
        json,
        vec![Guard {
            name: "asymptotic",
            passed,
        }],
    ))
}

fn perron(args: &PerronArgs) -> Result<Outcome> {
    if args.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be positive".into()));
    }
    let hi = (2.0 * args.t).floor() as u64;
    let sample = even_sample(2, hi.max(2), args.samples);
    let cfg = PerronConfig {
        tolerance: args.tolerance,
        ..PerronConfig::new(2.5, 1.0)
    };
    let scan = perron_error_scan(args.t, &args.r, &sample, &cfg)?;
    let flagged = scan.flagged().count();
    let max_errors: Vec<Value> = args
        .r
        .iter()
        .map(|&r| json!({"R": r, "max_error": scan.max_error(r)}))
        .collect();
    let json = json!({
        "experiment": "perron-scan",
        "T": args.t,
        "tau": scan.tau,
        "theta": scan.theta,
        "max_errors": max_errors,
        "flagged": flagged,
        "rows": scan.rows,
    });
    let rows = serde_json::to_value(&scan.rows).expect("plain data");
    Ok(Outcome {
        json,
        rows,
        guards: vec![Guard {
            name: "perron-bound",
            passed: flagged == 0,
        }],
        extra_files: vec![],
    })
}

fn meanvalue(args: &MeanValueArgs) -> Result<Outcome> {
    let len = args.len.unwrap_or(args.n);
    if len == 0 || len > args.n {
        return Err(Error::InvalidArgument("--len must be in [1, N]".into()));
    }
    let interval = Interval::new(args.n - len, args.n);
    let variant = match args.variant {
        Variant::Elliot => MeanValueVariant::Elliot,
        Variant::Hb1 => MeanValueVariant::Hb1,
    };
    let table = table_for(args.m.max(args.n))?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &seed in &args.seeds {
        let rep = meanvalue_check(
            args.m,
            interval,
            &BoundedSequence::rademacher(seed),
            &table,
            variant,
        )?;
        worst = worst.max(rep.ratio);
        let mut row = serde_json::to_value(&rep).expect("plain data");
        row["seed"] = json!(seed);
        rows.push(row);
    }
    let passed = worst <= args.guard;
    let json = json!({
        "experiment": "meanvalue",
        "variant": variant,
        "M": args.m,
        "N": args.n,
        "max_ratio": worst,
        "guard": args.guard,
        "reports": rows,
    });
    Ok(Outcome {
        json,
        rows: Value::Array(rows),
        guards: vec![Guard {
            name: "meanvalue",
            passed,
        }],
        extra_files: vec![],
    })
}

fn lower_bound(args: &LowerBoundArgs) -> Result<Outcome> {
    let tf = t_floor(args.t)?;
    let table = table_for(tf)?;
    let rep = lower_bound_experiment(args.t, args.z, &table)?;
    let passed = rep.passes();
    let mut json = serde_json::to_value(&rep).expect("plain data");
    json["experiment"] = json!("lower-bound");
    Ok(Outcome::single(
        json,
        vec![Guard {
            name: "lower-bound",
            passed,
        }],
    ))
}

fn parse_z_rule(s: &str) -> Result<ZRule> {
    let bad = || Error::InvalidArgument(format!("bad --z-rule {s:?}"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    match kind {
        "power" => Ok(ZRule::Power(num(rest)?)),
        "powers" => Ok(ZRule::Powers(
            rest.split(',').map(num).collect::<Result<_>>()?,
        )),
        "log" => Ok(ZRule::LogPower(num(rest)?)),
        _ => Err(bad()),
    }
}

fn scan(args: &ScanArgs, common: &Common) -> Result<Outcome> {
    let rule = parse_z_rule(&args.z_rule)?;
    let kind: SeqKind = args.kind.parse()?;
    let t_max = args.t.iter().copied().fold(0.0, f64::max);
    let table = table_for(t_floor(t_max)?)?;
    let scan = cancellation_scan(&args.t, &rule, kind, &args.seeds, &table)?;
    let svg_path = args
        .svg
        .clone()
        .or_else(|| common.output.as_ref().map(|p| p.with_extension("svg")));
    let json = json!({
        "experiment": "cancellation-scan",
        "kind": scan.kind,
        "max_guard_ratio": scan.max_guard_ratio(),
        "guard": scan.guard,
        "fit": scan.fit,
        "points": scan.points,
        "svg": svg_path,
    });
    let rows = serde_json::to_value(&scan.points).expect("plain data");
    let extra_files = svg_path.into_iter().map(|p| (p, scan.to_svg())).collect();
    Ok(Outcome {
        json,
        rows,
        guards: vec![Guard {
            name: "cancellation",
            passed: scan.passes(),
        }],
        extra_files,
    })
}
