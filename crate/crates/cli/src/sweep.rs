//! Parameter sweeps: a cartesian grid over model parameters, one `verify`
//! (plus a short Lyapunov run) per point, one summary row per point.

use std::path::Path;

use oregonator::config::RunConfig;
use oregonator::dynamics::simulate;
use oregonator::error::Error;
use oregonator::model::derive_constants;
use oregonator::spectral::SineBasis;
use oregonator::tangent::{lyapunov_spectrum, LyapunovOptions};
use rayon::prelude::*;

use crate::manifest::Manifest;
use crate::{Outcome, RunDir};

/// One swept axis: a model-parameter name and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

const SWEEPABLE: &[&str] = &[
    "d1", "d2", "d3", "a1", "b1", "b2", "c2", "a3", "c3", "F", "G1", "G2",
];

/// Parse `"F=1,2;b2=0.5,1"` into grid axes.
pub fn parse_grid(spec: &str) -> Result<Vec<GridAxis>, Error> {
    let mut axes = Vec::new();
    for part in spec.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((name, values)) = part.split_once('=') else {
            return Err(Error::ConfigParse(format!(
                "grid axis `{part}`: expected name=v1,v2,..."
            )));
        };
        let name = name.trim();
        if !SWEEPABLE.contains(&name) {
            return Err(Error::ConfigParse(format!(
                "grid axis `{name}`: not a sweepable model parameter"
            )));
        }
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::ConfigParse(format!("grid value `{v}`: not a number")))
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        if values.is_empty() {
            return Err(Error::ConfigParse(format!("grid axis `{name}`: no values")));
        }
        axes.push(GridAxis {
            name: name.to_string(),
            values,
        });
    }
    if axes.is_empty() {
        return Err(Error::ConfigParse("empty sweep grid".into()));
    }
    Ok(axes)
}

fn apply(cfg: &mut RunConfig, name: &str, value: f64) {
    let p = &mut cfg.params;
    match name {
        "d1" => p.d1 = value,
        "d2" => p.d2 = value,
        "d3" => p.d3 = value,
        "a1" => p.a1 = value,
        "b1" => p.b1 = value,
        "b2" => p.b2 = value,
        "c2" => p.c2 = value,
        "a3" => p.a3 = value,
        "c3" => p.c3 = value,
        "F" => p.f = value,
        "G1" => p.g1 = value,
        "G2" => p.g2 = value,
        _ => unreachable!("validated in parse_grid"),
    }
}

/// Summary of one grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub assignment: Vec<(String, f64)>,
    pub k1: f64,
    pub entry_time: Option<f64>,
    pub violations: usize,
    pub m_star: Option<usize>,
    pub status: String,
}

fn run_point(cfg: &RunConfig) -> Result<(f64, Option<f64>, usize, Option<usize>), Error> {
    let dom = cfg.domain()?;
    let basis = SineBasis::new(&dom);
    let consts = derive_constants(&cfg.params, &dom, &cfg.embedding)?;
    let (_, rep) = crate::verify_point(&basis, cfg, &consts)?;
    let violations = rep.violation_count();
    let entry = rep.entry_time;

    // Short Benettin run for the numerical m*.
    let g0 = crate::seeded_state(&basis, cfg)?;
    let transient = simulate(
        &basis,
        &cfg.params,
        &cfg.integrator,
        &g0,
        entry.map(|e| e + 1.0).unwrap_or(1.0),
        usize::MAX,
    )?;
    let opts = LyapunovOptions {
        m: cfg.dim_opts.m_max.clamp(1, 3 * dom.modes_total()),
        t_warmup: cfg.dim_opts.lyap_warmup,
        t_span: cfg.dim_opts.lyap_span,
        cadence: cfg.dim_opts.lyap_cadence,
        seed: cfg.run.seed,
        drift_tol: f64::INFINITY,
        pinned_base: false,
    };
    let run = lyapunov_spectrum(
        &basis,
        &cfg.params,
        &cfg.integrator,
        &transient.last().state,
        &opts,
    )?;
    Ok((consts.k1, entry, violations, run.m_star))
}

/// Run every grid point (cartesian product, row order = nested loops over
/// the axes as given) and write `sweep.csv`. Per-point failures are recorded
/// in their row; the sweep continues.
pub fn run_sweep(
    cfg: &RunConfig,
    echo: &str,
    out: &Path,
    grid: &[GridAxis],
    jobs: usize,
) -> Result<Outcome, Error> {
    let mut assignments: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for axis in grid {
        let mut next = Vec::with_capacity(assignments.len() * axis.values.len());
        for base in &assignments {
            for &v in &axis.values {
                let mut a = base.clone();
                a.push((axis.name.clone(), v));
                next.push(a);
            }
        }
        assignments = next;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::ConfigParse(format!("thread pool: {e}")))?;

    let rows: Vec<SweepRow> = pool.install(|| {
        assignments
            .par_iter()
            .map(|assignment| {
                let mut point_cfg = cfg.clone();
                for (name, value) in assignment {
                    apply(&mut point_cfg, name, *value);
                }
                match point_cfg
                    .params
                    .validate()
                    .and_then(|_| run_point(&point_cfg))
                {
                    Ok((k1, entry_time, violations, m_star)) => SweepRow {
                        assignment: assignment.clone(),
                        k1,
                        entry_time,
                        violations,
                        m_star,
                        status: "ok".to_string(),
                    },
                    Err(e) => SweepRow {
                        assignment: assignment.clone(),
                        k1: f64::NAN,
                        entry_time: None,
                        violations: 0,
                        m_star: None,
                        status: format!("error: {e}"),
                    },
                }
            })
            .collect()
    });

    let mut csv = String::new();
    for axis in grid {
        csv.push_str(&axis.name);
        csv.push(',');
    }
    csv.push_str("k1,entry_time,violations,m_star,status\n");
    let mut total_violations = 0usize;
    for row in &rows {
        for (_, v) in &row.assignment {
            csv.push_str(&v.to_string());
            csv.push(',');
        }
        csv.push_str(&format!(
            "{},{},{},{},\"{}\"\n",
            row.k1,
            row.entry_time.map_or_else(|| "n/a".into(), |t| t.to_string()),
            row.violations,
            row.m_star.map_or_else(|| "n/a".into(), |m| m.to_string()),
            row.status
        ));
        total_violations += row.violations;
        if row.status != "ok" {
            total_violations += 1;
        }
    }

    let mut rd = RunDir::create(out)?;
    let mut m = Manifest::start("sweep", echo);
    rd.write("sweep.csv", csv.as_bytes())?;
    println!("sweep: {} points, {} total violations", rows.len(), total_violations);
    m.finish_ok();
    rd.finish(m)?;
    Ok(Outcome {
        violations: total_violations,
    })
}
