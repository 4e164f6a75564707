//! Flat key-value run configuration.
//!
//! One file configures everything: model parameters, domain, embedding
//! constants, integrator, and per-command options. Lines are `key = value`;
//! `#` starts a comment; `[section]` headers are allowed for grouping but
//! keys are globally unique. Unknown keys, unknown sections, and duplicate
//! keys are hard errors.
//!
//! ```text
//! [model]
//! d1 = 1.0
//! d2 = 1.0
//! d3 = 1.0
//! a1 = 1.0
//! b1 = 1.0
//! b2 = 1.0
//! c2 = 1.0
//! a3 = 1.0
//! c3 = 1.0
//! F  = 1.0
//! G1 = 1.0
//! G2 = 1.0
//!
//! [domain]
//! L1    = 1.0
//! modes = 128
//!
//! [run]
//! horizon = 20.0
//! seed    = 7
//! ```

use std::collections::BTreeMap;

use crate::bounds::L6Rate;
use crate::dynamics::{IntegratorConfig, Scheme};
use crate::error::{Error, Result};
use crate::model::{DomainSpec, EmbeddingConstants, OregonatorParams};

/// Simulation-run options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub horizon: f64,
    pub sample_every: usize,
    pub seed: u64,
    /// Target weighted L² energy of the random nonnegative initial data.
    pub init_energy: f64,
    /// Band limit of the random initial data (modes per axis before squaring).
    pub init_band: usize,
    /// Flip the sign of the initial data (testing hook for the blow-up path).
    pub init_negate: bool,
    /// Number of ensemble members processed by `verify`.
    pub ensemble: usize,
    /// Write the binary coefficient sidecar next to the trajectory CSV.
    pub dump_coeffs: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            sample_every: 10,
            seed: 0,
            init_energy: 4.0,
            init_band: 8,
            init_negate: false,
            ensemble: 1,
            dump_coeffs: true,
        }
    }
}

/// Envelope-check options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub rel_slack: f64,
    pub l6_rate: L6Rate,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            rel_slack: 1e-6,
            l6_rate: L6Rate::Corrected,
        }
    }
}

/// Dimension-command options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionOptions {
    pub m_max: usize,
    pub lyap_cadence: usize,
    pub lyap_warmup: f64,
    pub lyap_span: f64,
    /// Post-entry base points sampled for the q_m supremum estimate.
    pub base_points: usize,
    /// Random initial frames per base point.
    pub frames: usize,
    pub pinned_base: bool,
    pub drift_tol: f64,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self {
            m_max: 6,
            lyap_cadence: 10,
            lyap_warmup: 1.0,
            lyap_span: 5.0,
            base_points: 10,
            frames: 3,
            pinned_base: false,
            drift_tol: 0.05,
        }
    }
}

/// Norm-quotient certificate options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaOptions {
    pub pairs: usize,
    pub horizon: f64,
    pub perturbation: f64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        Self {
            pairs: 5,
            horizon: 5.0,
            perturbation: 1e-4,
        }
    }
}

/// Everything a command needs, parsed from one configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: OregonatorParams,
    pub dimension: usize,
    pub l1: f64,
    pub l2: Option<f64>,
    pub modes: usize,
    pub grid_points: usize,
    pub embedding: EmbeddingConstants,
    pub integrator: IntegratorConfig,
    pub run: RunOptions,
    pub verify: VerifyOptions,
    pub dim_opts: DimensionOptions,
    pub gamma: GammaOptions,
}

impl RunConfig {
    pub fn domain(&self) -> Result<DomainSpec> {
        match self.dimension {
            1 => DomainSpec::interval(self.l1, self.modes, self.grid_points),
            2 => DomainSpec::rectangle(
                self.l1,
                self.l2.expect("validated: L2 present when dimension = 2"),
                self.modes,
                self.grid_points,
            ),
            _ => unreachable!("validated at parse time"),
        }
    }
}

const SECTIONS: &[&str] = &[
    "model",
    "domain",
    "embedding",
    "integrator",
    "run",
    "verify",
    "dimension",
    "gamma",
];

const KEYS: &[&str] = &[
    "d1", "d2", "d3", "a1", "b1", "b2", "c2", "a3", "c3", "F", "G1", "G2",
    "dimension", "L1", "L2", "modes", "grid_points",
    "eta", "gn_C", "lt_Psi", "reg_C2", "N0", "N1", "corrected_gamma",
    "dt", "scheme", "pos_tol", "clip_negatives", "reaction",
    "horizon", "sample_every", "seed", "init_energy", "init_band", "init_negate", "ensemble",
    "dump_coeffs",
    "rel_slack", "l6_rate",
    "m_max", "lyap_cadence", "lyap_warmup", "lyap_span", "base_points", "frames",
    "pinned_base", "drift_tol",
    "gamma_pairs", "gamma_horizon", "gamma_perturbation",
];

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::ConfigParse(format!("key `{key}`: not a number: `{v}`"))),
        }
    }

    fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| Error::ConfigParse(format!("missing required key `{key}`")))
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::ConfigParse(format!("key `{key}`: not an integer: `{v}`"))),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| Error::ConfigParse(format!("key `{key}`: not an integer: `{v}`"))),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.0.get(key).map(|s| s.as_str()) {
            None => Ok(None),
            Some("true") | Some("on") | Some("1") => Ok(Some(true)),
            Some("false") | Some("off") | Some("0") => Ok(Some(false)),
            Some(v) => Err(Error::ConfigParse(format!(
                "key `{key}`: expected on/off/true/false, got `{v}`"
            ))),
        }
    }
}

/// Parse a configuration file. Every key is validated; required keys are the
/// twelve model parameters plus `L1` and `modes`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(section) = line.strip_prefix('[') {
            let name = section
                .strip_suffix(']')
                .ok_or_else(|| {
                    Error::ConfigParse(format!("line {}: malformed section header", lineno + 1))
                })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::ConfigParse(format!(
                    "line {}: unknown section `[{name}]`",
                    lineno + 1
                )));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigParse(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(Error::ConfigParse(format!(
                "line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::ConfigParse(format!(
                "line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
    }
    let raw = Raw(map);

    let params = OregonatorParams {
        d1: raw.require_f64("d1")?,
        d2: raw.require_f64("d2")?,
        d3: raw.require_f64("d3")?,
        a1: raw.require_f64("a1")?,
        b1: raw.require_f64("b1")?,
        b2: raw.require_f64("b2")?,
        c2: raw.require_f64("c2")?,
        a3: raw.require_f64("a3")?,
        c3: raw.require_f64("c3")?,
        f: raw.require_f64("F")?,
        g1: raw.require_f64("G1")?,
        g2: raw.require_f64("G2")?,
    };
    params.validate()?;

    let dimension = raw.usize("dimension")?.unwrap_or(1);
    if dimension != 1 && dimension != 2 {
        return Err(Error::ConfigParse(format!(
            "key `dimension`: must be 1 or 2, got {dimension}"
        )));
    }
    let l1 = raw.require_f64("L1")?;
    let l2 = raw.f64("L2")?;
    match (dimension, l2) {
        (2, None) => {
            return Err(Error::ConfigParse("missing required key `L2` (dimension = 2)".into()))
        }
        (1, Some(_)) => {
            return Err(Error::ConfigParse(
                "key `L2` given but dimension = 1".into(),
            ))
        }
        _ => {}
    }
    let modes = raw
        .usize("modes")?
        .ok_or_else(|| Error::ConfigParse("missing required key `modes`".into()))?;
    let grid_points = raw.usize("grid_points")?.unwrap_or(2 * modes);

    let emb_default = EmbeddingConstants::default();
    let embedding = EmbeddingConstants {
        eta: raw.f64("eta")?.unwrap_or(emb_default.eta),
        gn_c: raw.f64("gn_C")?.unwrap_or(emb_default.gn_c),
        lt_psi: raw.f64("lt_Psi")?.unwrap_or(emb_default.lt_psi),
        reg_c2: raw.f64("reg_C2")?.unwrap_or(emb_default.reg_c2),
        corrected_poincare_direction: raw
            .bool("corrected_gamma")?
            .unwrap_or(emb_default.corrected_poincare_direction),
        n0: raw.f64("N0")?,
        n1: raw.f64("N1")?,
    };
    embedding.validate()?;

    let int_default = IntegratorConfig::default();
    let scheme = match raw.0.get("scheme").map(|s| s.as_str()) {
        None => int_default.scheme,
        Some("imex-euler") => Scheme::ImexEuler,
        Some("imex-rk2") => Scheme::ImexRk2,
        Some(v) => {
            return Err(Error::ConfigParse(format!(
                "key `scheme`: expected imex-euler or imex-rk2, got `{v}`"
            )))
        }
    };
    let integrator = IntegratorConfig {
        dt: raw.f64("dt")?.unwrap_or(int_default.dt),
        scheme,
        pos_tol: raw.f64("pos_tol")?.unwrap_or(int_default.pos_tol),
        clip_negatives: raw
            .bool("clip_negatives")?
            .unwrap_or(int_default.clip_negatives),
        reaction_enabled: raw.bool("reaction")?.unwrap_or(int_default.reaction_enabled),
        blowup_guard: int_default.blowup_guard,
    };
    integrator.validate()?;

    let run_default = RunOptions::default();
    let run = RunOptions {
        horizon: raw.f64("horizon")?.unwrap_or(run_default.horizon),
        sample_every: raw.usize("sample_every")?.unwrap_or(run_default.sample_every),
        seed: raw.u64("seed")?.unwrap_or(run_default.seed),
        init_energy: raw.f64("init_energy")?.unwrap_or(run_default.init_energy),
        init_band: raw.usize("init_band")?.unwrap_or(run_default.init_band),
        init_negate: raw.bool("init_negate")?.unwrap_or(run_default.init_negate),
        ensemble: raw.usize("ensemble")?.unwrap_or(run_default.ensemble),
        dump_coeffs: raw.bool("dump_coeffs")?.unwrap_or(run_default.dump_coeffs),
    };

    let verify_default = VerifyOptions::default();
    let l6_rate = match raw.0.get("l6_rate").map(|s| s.as_str()) {
        None => verify_default.l6_rate,
        Some("literal") => L6Rate::Literal,
        Some("corrected") => L6Rate::Corrected,
        Some(v) => {
            return Err(Error::ConfigParse(format!(
                "key `l6_rate`: expected literal or corrected, got `{v}`"
            )))
        }
    };
    let verify = VerifyOptions {
        rel_slack: raw.f64("rel_slack")?.unwrap_or(verify_default.rel_slack),
        l6_rate,
    };

    let dim_default = DimensionOptions::default();
    let dim_opts = DimensionOptions {
        m_max: raw.usize("m_max")?.unwrap_or(dim_default.m_max),
        lyap_cadence: raw.usize("lyap_cadence")?.unwrap_or(dim_default.lyap_cadence),
        lyap_warmup: raw.f64("lyap_warmup")?.unwrap_or(dim_default.lyap_warmup),
        lyap_span: raw.f64("lyap_span")?.unwrap_or(dim_default.lyap_span),
        base_points: raw.usize("base_points")?.unwrap_or(dim_default.base_points),
        frames: raw.usize("frames")?.unwrap_or(dim_default.frames),
        pinned_base: raw.bool("pinned_base")?.unwrap_or(dim_default.pinned_base),
        drift_tol: raw.f64("drift_tol")?.unwrap_or(dim_default.drift_tol),
    };

    let gamma_default = GammaOptions::default();
    let gamma = GammaOptions {
        pairs: raw.usize("gamma_pairs")?.unwrap_or(gamma_default.pairs),
        horizon: raw.f64("gamma_horizon")?.unwrap_or(gamma_default.horizon),
        perturbation: raw
            .f64("gamma_perturbation")?
            .unwrap_or(gamma_default.perturbation),
    };

    let config = RunConfig {
        params,
        dimension,
        l1,
        l2,
        modes,
        grid_points,
        embedding,
        integrator,
        run,
        verify,
        dim_opts,
        gamma,
    };
    config.domain()?; // validates lengths/resolution early
    Ok(config)
}

/// The all-ones reference configuration text (unit interval, 128 modes).
pub fn all_ones_config() -> String {
    let mut s = String::from("[model]\n");
    for key in ["d1", "d2", "d3", "a1", "b1", "b2", "c2", "a3", "c3", "F", "G1", "G2"] {
        s.push_str(&format!("{key} = 1.0\n"));
    }
    s.push_str("\n[domain]\nL1 = 1.0\nmodes = 128\n");
    s
}
