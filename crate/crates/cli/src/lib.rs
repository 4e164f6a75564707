//! Command implementations behind the `oregonator` binary: reproducible run
//! directories with digest manifests, certificate reports, and parameter
//! sweeps.
//!
//! Every command writes into one output directory: the primary CSV outputs,
//! a text summary, and `manifest.json` listing each produced file with its
//! SHA-256 digest. Identical configuration and seed produce byte-identical
//! primary outputs; the manifest records wall-clock times and so differs
//! between runs.

pub mod manifest;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};

use oregonator::bounds::{BoundsReport, EnvelopeOptions};
use oregonator::config::{parse_config, RunConfig};
use oregonator::dynamics::{simulate, SpectralState, Trajectory};
use oregonator::error::Error;
use oregonator::init::nonneg_state;
use oregonator::model::{derive_constants, DerivedConstants};
use oregonator::report;
use oregonator::spectral::SineBasis;
use oregonator::tangent::{
    check_gamma_growth, dimension_report, state_difference, LyapunovOptions, Tangent,
};

use manifest::{Manifest, OutputFile};

/// Flag overrides applied on top of the configuration file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub modes: Option<usize>,
    pub m_max: Option<usize>,
    pub corrected_gamma: Option<bool>,
}

/// Read and parse the configuration, applying flag overrides. Returns the
/// parsed config together with the verbatim file text (echoed into the
/// manifest).
pub fn load_config(path: &Path, ov: &Overrides) -> Result<(RunConfig, String), Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = ov.seed {
        cfg.run.seed = seed;
    }
    if let Some(dt) = ov.dt {
        cfg.integrator.dt = dt;
        cfg.integrator.validate()?;
    }
    if let Some(horizon) = ov.horizon {
        cfg.run.horizon = horizon;
    }
    if let Some(modes) = ov.modes {
        cfg.modes = modes;
        cfg.grid_points = 2 * modes;
        cfg.domain()?;
    }
    if let Some(m_max) = ov.m_max {
        cfg.dim_opts.m_max = m_max;
    }
    if let Some(corrected) = ov.corrected_gamma {
        cfg.embedding.corrected_poincare_direction = corrected;
    }
    Ok((cfg, text))
}

/// Exit code policy: 0 success, 1 verification failure, 2 configuration
/// error, 3 numerical failure.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ConfigParse(_) | Error::NonPositiveParameter(_) | Error::InvalidDomain(_) => 2,
        _ => 3,
    }
}

/// Outcome of a command, for the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub violations: usize,
}

impl Outcome {
    pub fn clean() -> Self {
        Self { violations: 0 }
    }

    pub fn exit_code(&self) -> i32 {
        if self.violations == 0 {
            0
        } else {
            1
        }
    }
}

pub(crate) struct RunDir {
    dir: PathBuf,
    outputs: Vec<OutputFile>,
}

impl RunDir {
    pub(crate) fn create(dir: &Path) -> Result<Self, Error> {
        fs::create_dir_all(dir)
            .map_err(|e| Error::ConfigParse(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub(crate) fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| Error::ConfigParse(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(OutputFile::new(name, bytes));
        Ok(())
    }

    pub(crate) fn finish(self, mut m: Manifest) -> Result<(), Error> {
        m.outputs = self.outputs;
        m.write(&self.dir)
    }
}

fn initial_state(basis: &SineBasis, cfg: &RunConfig, seed: u64) -> Result<SpectralState, Error> {
    let mut g0 = nonneg_state(basis, &cfg.params, seed, cfg.run.init_band, cfg.run.init_energy)?;
    if cfg.run.init_negate {
        for c in [&mut g0.u, &mut g0.v, &mut g0.w] {
            for x in c.iter_mut() {
                *x = -*x;
            }
        }
    }
    Ok(g0)
}

/// `constants`: print the derived-constant table and write `constants.csv`.
/// Includes the sampled lower bound for the embedding constant `eta` on the
/// configured domain, for comparison with the configured value.
pub fn run_constants(cfg: &RunConfig, echo: &str, out: &Path) -> Result<Outcome, Error> {
    let dom = cfg.domain()?;
    let basis = SineBasis::new(&dom);
    let consts = derive_constants(&cfg.params, &dom, &cfg.embedding)?;
    let eta_lower = oregonator::bounds::calibrate_eta(&basis, 200, cfg.run.seed)?;
    let mut rd = RunDir::create(out)?;
    let mut m = Manifest::start("constants", echo);
    let mut csv = report::constants_csv(&consts, &dom, &cfg.embedding, &cfg.params);
    csv.push_str(&format!(
        "eta_lower_bound,{eta_lower},\"sampled max of |phi|_L4 / |grad phi| (lower bound for eta)\"\n"
    ));
    rd.write("constants.csv", csv.as_bytes())?;
    print!(
        "{}",
        report::constants_table(&consts, &dom, &cfg.embedding, &cfg.params)
    );
    println!("  eta_lower_bound    {eta_lower} (sampled; configured eta = {})", cfg.embedding.eta);
    m.finish_ok();
    rd.finish(m)?;
    Ok(Outcome::clean())
}

/// `simulate`: one trajectory from the seeded initial data; writes
/// `trajectory.csv` and the binary coefficient sidecar `coeffs.bin`. On
/// numerical failure the manifest records the failure time.
pub fn run_simulate(cfg: &RunConfig, echo: &str, out: &Path) -> Result<Outcome, Error> {
    let dom = cfg.domain()?;
    let basis = SineBasis::new(&dom);
    let mut rd = RunDir::create(out)?;
    let mut m = Manifest::start("simulate", echo);

    let g0 = initial_state(&basis, cfg, cfg.run.seed)?;
    match simulate(
        &basis,
        &cfg.params,
        &cfg.integrator,
        &g0,
        cfg.run.horizon,
        cfg.run.sample_every,
    ) {
        Ok(traj) => {
            rd.write("trajectory.csv", report::trajectory_csv(&traj).as_bytes())?;
            if cfg.run.dump_coeffs {
                rd.write("coeffs.bin", &report::coefficient_dump(&dom, &traj))?;
            }
            println!(
                "simulate: {} samples to t = {}, min grid value {}",
                traj.samples.len(),
                traj.last().state.t,
                traj.min_grid_overall()
            );
            m.finish_ok();
            rd.finish(m)?;
            Ok(Outcome::clean())
        }
        Err(Error::NonFiniteState { t }) => {
            m.finish_failed(t);
            rd.finish(m)?;
            Err(Error::NonFiniteState { t })
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn seeded_state(basis: &SineBasis, cfg: &RunConfig) -> Result<SpectralState, Error> {
    initial_state(basis, cfg, cfg.run.seed)
}

pub(crate) fn verify_point(
    basis: &SineBasis,
    cfg: &RunConfig,
    consts: &DerivedConstants,
) -> Result<(Trajectory, BoundsReport), Error> {
    verify_one(basis, cfg, consts, cfg.run.seed)
}

fn verify_one(
    basis: &SineBasis,
    cfg: &RunConfig,
    consts: &DerivedConstants,
    seed: u64,
) -> Result<(Trajectory, BoundsReport), Error> {
    let dom = cfg.domain()?;
    let g0 = initial_state(basis, cfg, seed)?;
    let traj = simulate(
        basis,
        &cfg.params,
        &cfg.integrator,
        &g0,
        cfg.run.horizon,
        cfg.run.sample_every,
    )?;
    let opts = EnvelopeOptions {
        rel_slack: cfg.verify.rel_slack,
        dt: cfg.integrator.dt,
    };
    let rep = BoundsReport::compute(
        basis,
        &traj,
        &cfg.params,
        &dom,
        consts,
        &opts,
        cfg.integrator.pos_tol,
        cfg.verify.l6_rate,
    )?;
    Ok((traj, rep))
}

/// `verify`: simulate the configured ensemble and run every envelope and
/// bound check; exit 0 iff zero violations.
pub fn run_verify(cfg: &RunConfig, echo: &str, out: &Path) -> Result<Outcome, Error> {
    let dom = cfg.domain()?;
    let basis = SineBasis::new(&dom);
    let consts = derive_constants(&cfg.params, &dom, &cfg.embedding)?;
    let mut rd = RunDir::create(out)?;
    let mut m = Manifest::start("verify", echo);

    let mut total_violations = 0usize;
    let mut summary = String::new();
    for member in 0..cfg.run.ensemble.max(1) {
        let seed = cfg.run.seed.wrapping_add(member as u64);
        match verify_one(&basis, cfg, &consts, seed) {
            Ok((traj, rep)) => {
                if member == 0 {
                    rd.write("trajectory.csv", report::trajectory_csv(&traj).as_bytes())?;
                }
                rd.write(
                    &format!("bounds_report_{member}.csv"),
                    report::bounds_csv(&rep).as_bytes(),
                )?;
                total_violations += rep.violation_count();
                summary.push_str(&format!("member {member} (seed {seed}):\n"));
                summary.push_str(&report::bounds_summary(&rep, &consts));
            }
            Err(Error::NonFiniteState { t }) => {
                total_violations += 1;
                summary.push_str(&format!(
                    "member {member} (seed {seed}): NUMERICAL FAILURE at t = {t}\n"
                ));
            }
            Err(e) => return Err(e),
        }
    }
    summary.push_str(&format!("total violations: {total_violations}\n"));
    rd.write("summary.txt", summary.as_bytes())?;
    print!("{summary}");
    m.finish_ok();
    rd.finish(m)?;
    Ok(Outcome {
        violations: total_violations,
    })
}

/// Post-entry base states for the dimension estimate: simulate, find the
/// absorbing entry, and take evenly spaced samples past `entry + 1`.
fn collect_base_points(
    basis: &SineBasis,
    cfg: &RunConfig,
    consts: &DerivedConstants,
    count: usize,
) -> Result<Vec<SpectralState>, Error> {
    let g0 = initial_state(basis, cfg, cfg.run.seed)?;
    let traj = simulate(
        basis,
        &cfg.params,
        &cfg.integrator,
        &g0,
        cfg.run.horizon,
        cfg.run.sample_every,
    )?;
    let entry = oregonator::bounds::absorbing_entry_time_l2(&traj, &cfg.params, consts.k1 * 1.001);
    let cutoff = entry.map(|e| e + 1.0).unwrap_or(0.0);
    let post: Vec<&SpectralState> = traj
        .samples
        .iter()
        .map(|s| &s.state)
        .filter(|s| s.t >= cutoff)
        .collect();
    let pool: Vec<&SpectralState> = if post.is_empty() {
        traj.samples.iter().map(|s| &s.state).collect()
    } else {
        post
    };
    let count = count.max(1).min(pool.len());
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let idx = i * (pool.len() - 1) / count.max(1);
        points.push(pool[idx].clone());
    }
    Ok(points)
}

/// Outcome details of `dimension`, for callers that need the report.
pub struct DimensionOutcome {
    pub outcome: Outcome,
    pub report: oregonator::tangent::DimensionReport,
}

/// `dimension`: Lyapunov spectrum, trace table, numerical m*, theoretical
/// dimension bound, and the norm-quotient growth certificate.
pub fn run_dimension(cfg: &RunConfig, echo: &str, out: &Path) -> Result<DimensionOutcome, Error> {
    let dom = cfg.domain()?;
    let basis = SineBasis::new(&dom);
    let consts = derive_constants(&cfg.params, &dom, &cfg.embedding)?;
    let mut rd = RunDir::create(out)?;
    let mut m = Manifest::start("dimension", echo);

    let m_req = cfg.dim_opts.m_max.clamp(1, 3 * dom.modes_total());
    let opts = LyapunovOptions {
        m: m_req,
        t_warmup: cfg.dim_opts.lyap_warmup,
        t_span: cfg.dim_opts.lyap_span,
        cadence: cfg.dim_opts.lyap_cadence,
        seed: cfg.run.seed.wrapping_mul(0x9e3779b9).wrapping_add(1),
        drift_tol: f64::INFINITY,
        pinned_base: cfg.dim_opts.pinned_base,
    };

    let base_points = if cfg.dim_opts.pinned_base {
        vec![SpectralState::zero(&basis)]
    } else {
        collect_base_points(&basis, cfg, &consts, cfg.dim_opts.base_points)?
    };
    let mut rep = dimension_report(
        &basis,
        &cfg.params,
        &cfg.integrator,
        &consts,
        &base_points,
        cfg.dim_opts.frames,
        &opts,
    )?;

    // Norm-quotient growth certificate along perturbed pairs.
    let mut gamma_margin = f64::NEG_INFINITY;
    let mut gamma_violations = 0usize;
    if cfg.gamma.pairs > 0 && !base_points.is_empty() {
        for i in 0..cfg.gamma.pairs {
            let base = &base_points[i % base_points.len()];
            let mut other = base.clone();
            let dir = perturbation_direction(&basis, cfg.run.seed.wrapping_add(7919 + i as u64));
            let scale = cfg.gamma.perturbation / dir.norm();
            for (c, d) in [
                (&mut other.u, &dir.u),
                (&mut other.v, &dir.v),
                (&mut other.w, &dir.w),
            ] {
                for (x, y) in c.iter_mut().zip(d.iter()) {
                    *x += scale * y;
                }
            }
            let t1 = simulate(
                &basis,
                &cfg.params,
                &cfg.integrator,
                base,
                cfg.gamma.horizon,
                cfg.run.sample_every,
            )?;
            let t2 = simulate(
                &basis,
                &cfg.params,
                &cfg.integrator,
                &other,
                cfg.gamma.horizon,
                cfg.run.sample_every,
            )?;
            let g = check_gamma_growth(&basis, &consts, &t1, &t2, cfg.verify.rel_slack)?;
            gamma_margin = gamma_margin.max(g.max_fd_minus_bound);
            gamma_violations += g.violations.len();
        }
        rep.gamma_margin = Some(gamma_margin);
    }

    rd.write("dimension_report.csv", report::dimension_csv(&rep).as_bytes())?;
    let mut summary = report::dimension_summary(&rep);
    summary.push_str(&format!("  gamma violations: {gamma_violations}\n"));
    rd.write("summary.txt", summary.as_bytes())?;
    print!("{summary}");

    if rep.drift > cfg.dim_opts.drift_tol {
        m.finish_failed(f64::NAN);
        rd.finish(m)?;
        return Err(Error::NotConverged {
            drift: rep.drift,
            tol: cfg.dim_opts.drift_tol,
        });
    }
    m.finish_ok();
    rd.finish(m)?;
    Ok(DimensionOutcome {
        outcome: Outcome {
            violations: gamma_violations,
        },
        report: rep,
    })
}

fn perturbation_direction(basis: &SineBasis, seed: u64) -> Tangent {
    use oregonator::dynamics::SpectralState as S;
    let a = oregonator::init::signed_state(basis, seed, 6, 1.0);
    let b = S::zero(basis);
    state_difference(&a, &b)
}
