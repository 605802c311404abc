use std::time::Instant;

use anyhow::{Context, Result};
use robust_coreset::coreset::finish_solve;
use robust_coreset::datagen::{generate, GroundTruth};
use robust_coreset::io::{read_matrix, read_points, write_coreset, write_json, write_point_set};
use robust_coreset::metric::out_z;
use robust_coreset::verify::{verify_approximate_coreset, verify_centroid_set, verify_proxy_bound, OptCache};
use robust_coreset::{mr_coreset, Exec, PointSet, Variant};

use crate::args::{default_truth_path, AuditKind, GenCommand, PipelineArgs, RunArgs, Source, SweepArgs, VerifyArgs};
use crate::report::{
    append_csv, emit_json, write_rows, Audits, ConfigEcho, PlantedRecovery, Report, RunResult, SummaryRow, Timings,
};

fn load(source: &Source) -> Result<(PointSet, Option<GroundTruth>)> {
    Ok(match source {
        Source::Points { path } => {
            (read_points(path).with_context(|| format!("reading {}", path.display()))?, None)
        }
        Source::Matrix { path } => {
            (read_matrix(path).with_context(|| format!("reading {}", path.display()))?, None)
        }
        Source::Generated { spec } => {
            let (ps, truth) = generate(spec)?;
            (ps, Some(truth))
        }
    })
}

struct Run {
    report: Report,
    solution: robust_coreset::coreset::Solution,
    ps: PointSet,
}

fn execute(source: Source, ps: PointSet, truth: Option<GroundTruth>, p: &PipelineArgs) -> Result<Run> {
    let cfg = p.coreset_config();
    let final_solver = p.final_solver();
    let started = Instant::now();
    let coreset = mr_coreset(&ps, &cfg)?;
    let coreset_secs = started.elapsed().as_secs_f64();
    let t = Instant::now();
    let solution = finish_solve(&ps, &cfg, coreset, &final_solver)?;
    let final_secs = t.elapsed().as_secs_f64();

    let planted = match &truth {
        Some(truth) => {
            let discarded = out_z(&ps, &solution.solution.centers, solution.full_outliers)?;
            let hit = truth.outliers.iter().filter(|&&o| discarded.contains(o)).count();
            Some(PlantedRecovery {
                planted: truth.outliers.len(),
                discarded: hit,
                recall: if truth.outliers.is_empty() { 1.0 } else { hit as f64 / truth.outliers.len() as f64 },
            })
        }
        None => None,
    };
    let report = Report {
        schema_version: crate::report::SCHEMA_VERSION,
        command: "run",
        config: ConfigEcho {
            source,
            coreset: cfg.clone(),
            final_solver,
            exec: cfg.exec,
            parallel_available: Exec::Parallel.is_parallel(),
        },
        seed: cfg.seed,
        n: ps.len(),
        within_guarantee_range: cfg.within_guarantee_range(),
        result: RunResult::new(&solution, ps.len()),
        rounds: solution.traces.clone(),
        planted,
        audits: None,
        timings: Some(Timings {
            coreset_secs,
            final_secs,
            audit_secs: 0.0,
            total_secs: coreset_secs + final_secs,
        }),
    };
    Ok(Run { report, solution, ps })
}

fn start(args: &RunArgs) -> Result<Run> {
    let source = args.input.source()?;
    let (ps, truth) = load(&source)?;
    execute(source, ps, truth, &args.pipeline)
}

fn finish(mut run: Run, args: &RunArgs) -> Result<()> {
    let out = &args.output;
    if let Some(path) = &out.coreset_out {
        write_coreset(path, &run.solution.coreset.coreset)?;
    }
    if let Some(path) = &out.csv {
        append_csv(path, &[SummaryRow::new(&run.report)])?;
    }
    if out.no_timings {
        run.report.timings = None;
    }
    emit_json(&run.report, out.out.as_deref())
}

pub fn run(args: RunArgs) -> Result<()> {
    let run = start(&args)?;
    finish(run, &args)
}

/// Returns whether every requested audit passed.
pub fn verify(args: VerifyArgs) -> Result<bool> {
    let mut run = start(&args.run)?;
    let cfg = &run.report.config.coreset;
    let (k, z, gamma) = (cfg.k, cfg.z, cfg.gamma);
    let p = &args.run.pipeline;
    // proxy-cost constants per variant, and the coreset error they imply
    let (proxy_c, centroid_c) = match cfg.variant {
        Variant::Basic => (4.0, 27.0),
        Variant::Improved => (11.0, 47.0),
    };
    let delta = proxy_c * gamma * gamma;
    let coreset_target = delta + 2.0 * delta.sqrt();
    let k_prime = cfg.k_prime();

    let started = Instant::now();
    let mut audits = Audits::default();
    let mut cache = OptCache::new(p.budget(), p.exec());
    let t = &run.solution.coreset.coreset;
    for kind in args.audits() {
        match kind {
            AuditKind::ApproxCoreset => {
                audits.approx_coreset = Some(verify_approximate_coreset(
                    &run.ps,
                    t,
                    k,
                    z,
                    coreset_target,
                    args.mode(),
                    p.exec(),
                )?)
            }
            AuditKind::CentroidSet => {
                audits.centroid_set =
                    Some(verify_centroid_set(&run.ps, &t.members, k, z, 1.0 + centroid_c * gamma, &mut cache)?)
            }
            AuditKind::ProxyBound => {
                audits.proxy_bound = Some(verify_proxy_bound(&run.ps, &t.proxy, delta, k_prime, 0, &mut cache)?)
            }
        }
    }
    audits.passed = audits.approx_coreset.as_ref().is_none_or(|a| a.passed)
        && audits.centroid_set.as_ref().is_none_or(|a| a.passed)
        && audits.proxy_bound.as_ref().is_none_or(|a| a.passed);
    let passed = audits.passed;
    if let Some(timings) = run.report.timings.as_mut() {
        timings.audit_secs = started.elapsed().as_secs_f64();
        timings.total_secs += timings.audit_secs;
    }
    run.report.command = "verify";
    run.report.audits = Some(audits);
    finish(run, &args.run)?;
    Ok(passed)
}

pub fn gen(args: GenCommand) -> Result<()> {
    let spec = args.spec.spec(args.spec.n);
    let (ps, truth) = generate(&spec)?;
    write_point_set(&args.out, &ps)?;
    let truth_path = match args.truth {
        Some(p) => p,
        None => default_truth_path(&args.out)?,
    };
    write_json(&truth_path, &truth)?;
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let mut rows = Vec::with_capacity(args.sizes.len());
    for &n in &args.sizes {
        let spec = args.spec.spec(n);
        let (ps, truth) = generate(&spec)?;
        let run = execute(Source::Generated { spec }, ps, Some(truth), &args.pipeline)
            .with_context(|| format!("n = {n}"))?;
        rows.push(SummaryRow::new(&run.report));
    }
    match &args.csv {
        Some(path) => append_csv(path, &rows),
        None => write_rows(csv::Writer::from_writer(std::io::stdout()), &rows),
    }
}
