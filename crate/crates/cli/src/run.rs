//! Subcommand execution and artifact emission.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use bachflow::flow::{
    integrate_full, integrate_metric, integrate_normalized, integrate_reduced, sweep_reduced, FlowMeta, FlowSample,
    FlowTrajectory, InvariantReport,
};
use bachflow::grid::slice_points;
use bachflow::soliton::{solve_soliton, CertificationReport};
use bachflow::verify::verify;
use bachflow::{bachforms::printed, TriBracket};
use serde::Serialize;

use crate::config::{Initial, Mode, RunConfig};
use crate::Failure;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(format!("serialize: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn prepare(cfg: &RunConfig) -> Result<std::path::PathBuf, Failure> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("config.echo.json"), cfg)?;
    Ok(dir)
}

fn check(inv: &InvariantReport) -> Result<(), Failure> {
    if inv.ok {
        Ok(())
    } else {
        Err(Failure::Invariant(inv.violations.join("; ")))
    }
}

#[derive(Serialize)]
struct FlowReport<'a> {
    meta: &'a FlowMeta,
    invariants: &'a InvariantReport,
    initial: &'a FlowSample,
    #[serde(rename = "final")]
    last: &'a FlowSample,
    /// `sqrt(6 / t_final)`; the final `norm2` of an un-normalized flow stays below it.
    decay_bound_at_end: f64,
}

fn emit_trajectory(dir: &Path, tr: &FlowTrajectory) -> Result<InvariantReport, Failure> {
    let file = fs::File::create(dir.join("trajectory.csv"))?;
    let mut w = BufWriter::new(file);
    tr.write_csv(&mut w)?;
    w.flush()?;
    let invariants = tr.invariants();
    let last = tr.last();
    write_json(
        &dir.join("report.json"),
        &FlowReport {
            meta: &tr.meta,
            invariants: &invariants,
            initial: &tr.samples[0],
            last,
            decay_bound_at_end: (6.0 / last.t).sqrt(),
        },
    )?;
    Ok(invariants)
}

fn run_flow(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let tr = match cfg.initial.as_ref().expect("validated") {
        Initial::Tri(p) if !cfg.full => integrate_reduced(p, cfg.t_end, &cfg.options)?,
        Initial::Tri(p) => integrate_full(&p.embed(), cfg.t_end, &cfg.options)?,
        Initial::Bracket(mu) => integrate_full(mu, cfg.t_end, &cfg.options)?,
        Initial::Metric { bracket, metric } => integrate_metric(bracket, metric, cfg.t_end, &cfg.options)?,
    };
    let inv = emit_trajectory(dir, &tr)?;
    let last = tr.last();
    println!(
        "flow: t = {} norm2 = {} scalar_curv = {} steps = {}",
        num(last.t),
        num(last.monitors.norm2),
        num(last.monitors.scalar_curv),
        tr.meta.accepted_steps
    );
    check(&inv)
}

#[derive(Serialize)]
struct NormalizedReport<'a> {
    #[serde(flatten)]
    flow: FlowReport<'a>,
    /// `|a - sqrt2| + |c - sqrt2| + |b|` at the final sample.
    distance_to_fixed_point: f64,
    fixed_point: [f64; 3],
    printed_limit: &'static str,
}

fn run_normalized(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let Some(Initial::Tri(p)) = cfg.initial.as_ref() else { unreachable!("validated") };
    let tr = integrate_normalized(p, cfg.t_end, &cfg.options)?;
    let inv = emit_trajectory(dir, &tr)?;
    let samples = tr.output_samples();
    let mut w = csv::Writer::from_path(dir.join("normalization.csv")).map_err(|e| Failure::Config(e.to_string()))?;
    let csv_err = |e: csv::Error| Failure::Config(e.to_string());
    w.write_record(["t", "lambda_scale", "tau", "r"]).map_err(csv_err)?;
    for s in &samples {
        let m = &s.monitors;
        w.write_record([num(s.t), num(m.lambda_scale), num(m.tau), num(m.r)]).map_err(csv_err)?;
    }
    w.flush()?;
    let s2 = 2f64.sqrt();
    let last = tr.last();
    let m = last.monitors;
    let dist = (m.a - s2).abs() + (m.c - s2).abs() + m.b.abs();
    write_json(
        &dir.join("report.json"),
        &NormalizedReport {
            flow: FlowReport {
                meta: &tr.meta,
                invariants: &inv,
                initial: &tr.samples[0],
                last,
                decay_bound_at_end: (6.0 / last.t).sqrt(),
            },
            distance_to_fixed_point: dist,
            fixed_point: [s2, 0.0, s2],
            printed_limit: printed::NORMALIZED_LIMIT_TEXT,
        },
    )?;
    println!(
        "normalized: t = {} (a, b, c) = ({}, {}, {}) distance to fixed point {} converged_at {:?}",
        num(last.t),
        num(m.a),
        num(m.b),
        num(m.c),
        num(dist),
        tr.meta.converged_at
    );
    check(&inv)
}

fn print_soliton_table(rep: &CertificationReport) {
    println!("{:>4} {:>20} {:>20} {:>20} {:>20} {:>20} {:>10} {:>6}", "root", "a", "c", "alpha", "beta", "lambda", "residual", "basin");
    for (i, s) in rep.solutions.iter().enumerate() {
        println!(
            "{:>4} {:>20.15} {:>20.15} {:>20.15} {:>20.15} {:>20.15} {:>10.1e} {:>6}",
            i, s.a, s.c, s.alpha, s.beta, s.lambda, s.residual, rep.grid_stats.basin_sizes[i]
        );
    }
    let g = &rep.grid_stats;
    println!("starts {} converged {} singular {} diverged {}", g.starts, g.converged, g.singular_discarded, g.diverged);
    if let Some(c) = &rep.paper_comparison {
        println!(
            "lambda derived {:.15} printed {} ({})",
            c.derived_lambda,
            c.printed_lambda,
            if c.lambda_matches { "agree" } else { "DISCREPANCY" }
        );
    }
    if let Some(c) = &rep.classification {
        println!("classification: {}", c.kind);
    }
}

fn run_soliton(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let rep = solve_soliton(&cfg.region, cfg.starts)?;
    write_json(&dir.join("report.json"), &rep)?;
    print_soliton_table(&rep);
    if rep.solutions.is_empty() {
        return Err(Failure::Invariant("no soliton root found".into()));
    }
    Ok(())
}

fn run_verify(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let rep = verify(cfg.grid, cfg.seed)?;
    write_json(&dir.join("report.json"), &rep)?;
    let max_dev = rep.coefficient_max_deviation.iter().copied().fold(0.0, f64::max);
    println!("verify: {} points, max oracle deviation {max_dev:.3e}", rep.points);
    println!(
        "trace {:.3e} scaling {:.3e} scalar {:.3e} weyl constant [{:.15}, {:.15}]",
        rep.max_trace, rep.max_scaling_deviation, rep.scalar_max_deviation, rep.weyl_constant.min, rep.weyl_constant.max
    );
    for t in &rep.suspected_typos {
        println!("suspected typo {}: printed {} vs derived {} (max diff {:.3e})", t.name, t.printed, t.derived, t.max_difference);
    }
    if rep.pass {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("oracle agreement failed (max deviation {max_dev:e})")))
    }
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    a0: String,
    b0: String,
    c0: String,
    status: String,
    t_final: String,
    a: String,
    b: String,
    c: String,
    norm2: String,
    steps: usize,
    invariants_ok: bool,
}

#[derive(Serialize)]
struct SweepReport {
    count: usize,
    t_end: f64,
    ok: usize,
    invariant_failures: usize,
    numerical_failures: usize,
    violations: Vec<(usize, String)>,
}

fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let points: Vec<TriBracket> = if cfg.points.is_empty() { slice_points(cfg.count, cfg.seed) } else { cfg.points.clone() };
    let results = sweep_reduced(&points, cfg.t_end, &cfg.options);
    let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(|e| Failure::Config(e.to_string()))?;
    let mut report = SweepReport {
        count: points.len(),
        t_end: cfg.t_end,
        ok: 0,
        invariant_failures: 0,
        numerical_failures: 0,
        violations: Vec::new(),
    };
    for (index, (p, res)) in points.iter().zip(&results).enumerate() {
        let nan = || num(f64::NAN);
        let mut row = SweepRow {
            index,
            a0: num(p.a),
            b0: num(p.b),
            c0: num(p.c),
            status: "ok".into(),
            t_final: nan(),
            a: nan(),
            b: nan(),
            c: nan(),
            norm2: nan(),
            steps: 0,
            invariants_ok: false,
        };
        match res {
            Ok(tr) => {
                let m = tr.last().monitors;
                let inv = tr.invariants();
                row.t_final = num(tr.last().t);
                (row.a, row.b, row.c, row.norm2) = (num(m.a), num(m.b), num(m.c), num(m.norm2));
                row.steps = tr.meta.accepted_steps;
                row.invariants_ok = inv.ok;
                if inv.ok {
                    report.ok += 1;
                } else {
                    row.status = "invariant".into();
                    report.invariant_failures += 1;
                    report.violations.push((index, inv.violations.join("; ")));
                }
            }
            Err(e) => {
                let f = Failure::from(e.clone());
                row.status = e.to_string();
                match f {
                    Failure::Numerical(_) => report.numerical_failures += 1,
                    _ => report.invariant_failures += 1,
                }
                report.violations.push((index, f.to_string()));
            }
        }
        w.serialize(&row).map_err(|e| Failure::Config(e.to_string()))?;
    }
    w.flush()?;
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "sweep: {} runs, {} ok, {} invariant failures, {} numerical failures",
        report.count, report.ok, report.invariant_failures, report.numerical_failures
    );
    if report.numerical_failures > 0 {
        Err(Failure::Numerical(format!("{} runs failed numerically", report.numerical_failures)))
    } else if report.invariant_failures > 0 {
        Err(Failure::Invariant(report.violations.iter().map(|(i, v)| format!("run {i}: {v}")).collect::<Vec<_>>().join("; ")))
    } else {
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let mode = cfg.mode()?;
    let dir = prepare(cfg)?;
    match mode {
        Mode::Flow => run_flow(cfg, &dir),
        Mode::Normalized => run_normalized(cfg, &dir),
        Mode::Soliton => run_soliton(cfg, &dir),
        Mode::Verify => run_verify(cfg, &dir),
        Mode::Sweep => run_sweep(cfg, &dir),
    }
}
