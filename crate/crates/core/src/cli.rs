//! Command-line front end. Every subcommand writes a `#` comment block with
//! the resolved configuration followed by a CSV table (or a JSON document).
//!
//! Settings come from flags, then from an optional `key = value` file given
//! with `--config`, then from built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::attachment::AttachmentProfile;
use crate::dimensioning::{
    db_to_linear, max_bs_power, rate_density, CoverageModel, SystemConstants,
};
use crate::error::ModelError;
use crate::geometry::{bs_density, build_grid};
use crate::interference::ocif_spatial_distribution;
use crate::iopr::iopr_spatial_stats;
use crate::montecarlo::{empirical_coverage, simulate, Estimate, SimResult, SimSpec};
use crate::numerics::QuadratureSpec;
use crate::verify::{self, VerifySpec};
use crate::{MarginalTerms, NetworkConfig};

/// Environment variable naming the directory for output files when
/// `--output` is not given.
pub const OUTPUT_DIR_ENV: &str = "BESTCELL_OUTPUT_DIR";

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "bestcell",
    version,
    about = "Best-cell downlink coverage and capacity model for hexagonal grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Attachment probability and mobile density versus distance.
    Attach,
    /// Other-cell interference gain versus distance.
    Ocif,
    /// Interference-to-own-power ratio moments versus distance.
    Iopr,
    /// Coverage probability versus SIR threshold.
    Coverage,
    /// Maximum BS power versus cell radius.
    Pmax,
    /// Area power density versus cell radius.
    Powerdensity,
    /// Rate density versus cell size at a coverage target.
    Ratedensity,
    /// Raw grid simulation.
    Simulate,
    /// Analytic-versus-simulation acceptance checks.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Attach => "attach",
            Command::Ocif => "ocif",
            Command::Iopr => "iopr",
            Command::Coverage => "coverage",
            Command::Pmax => "pmax",
            Command::Powerdensity => "powerdensity",
            Command::Ratedensity => "ratedensity",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
        }
    }

    fn uses_simulation(self) -> bool {
        matches!(
            self,
            Command::Attach
                | Command::Ocif
                | Command::Iopr
                | Command::Coverage
                | Command::Simulate
                | Command::Verify
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flag values before merging with the config file. `None` means unset.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// key = value settings file; keys are the long flag names.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Path-loss exponent.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Shadowing standard deviation in dB.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma_db: Option<f64>,
    /// Cell radius in metres.
    #[arg(long, global = true)]
    pub rc: Option<f64>,
    #[arg(long, global = true)]
    pub k0: Option<f64>,
    #[arg(long, global = true)]
    pub r0: Option<f64>,
    /// auto, 2 or 3.
    #[arg(long, global = true)]
    pub marginal_terms: Option<String>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Outer radius of the interfering network: `inf`, `grid` (equivalent
    /// radius of the simulated layout) or metres.
    #[arg(long, global = true)]
    pub r_inf: Option<String>,

    #[arg(long, global = true)]
    pub samples: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulation threads; 0 uses all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(long, global = true)]
    pub tiers: Option<usize>,
    /// Skip the simulation overlay.
    #[arg(long, global = true)]
    pub no_mc: bool,

    #[arg(long, global = true)]
    pub noise_density: Option<f64>,
    #[arg(long, global = true)]
    pub bandwidth: Option<f64>,
    #[arg(long, global = true)]
    pub interference_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub subcarriers: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma_target_db: Option<f64>,
    #[arg(long, global = true)]
    pub orthogonality: Option<f64>,
    #[arg(long, global = true)]
    pub noise_power: Option<f64>,
    #[arg(long, global = true)]
    pub control_power: Option<f64>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma_min_db: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma_max_db: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_step_db: Option<f64>,
    /// Comma-separated cell radii in metres.
    #[arg(long, global = true)]
    pub rc_list: Option<String>,
    #[arg(long, global = true)]
    pub coverage_target: Option<f64>,
    /// Disable the √2 widening of the log-normal outage fit.
    #[arg(long, global = true)]
    pub no_compensation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RInf {
    Infinite,
    Grid,
    Metres(f64),
}

impl RInf {
    fn parse(s: &str) -> Result<Self, ModelError> {
        match s.trim() {
            "inf" | "infinity" => Ok(RInf::Infinite),
            "grid" => Ok(RInf::Grid),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|x| *x > 0.0)
                .map(RInf::Metres)
                .ok_or_else(|| {
                    ModelError::config(
                        "r_inf",
                        format!("'{v}' is not inf, grid or a positive distance"),
                    )
                }),
        }
    }

    fn label(self) -> String {
        match self {
            RInf::Infinite => "inf".into(),
            RInf::Grid => "grid".into(),
            RInf::Metres(v) => fmt(v),
        }
    }
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub cfg: NetworkConfig,
    pub sys: SystemConstants,
    pub sim: SimSpec,
    pub run_mc: bool,
    pub r_inf: RInf,
    pub gamma_grid_db: Vec<f64>,
    pub rc_list: Vec<f64>,
    pub coverage_target: f64,
    pub compensate: bool,
    pub format: Format,
    pub output: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "output",
    "format",
    "eta",
    "sigma_db",
    "rc",
    "k0",
    "r0",
    "marginal_terms",
    "grid_points",
    "rel_tol",
    "r_inf",
    "samples",
    "seed",
    "workers",
    "bins",
    "tiers",
    "no_mc",
    "noise_density",
    "bandwidth",
    "interference_ratio",
    "subcarriers",
    "gamma_target_db",
    "orthogonality",
    "noise_power",
    "control_power",
    "gamma_min_db",
    "gamma_max_db",
    "gamma_step_db",
    "rc_list",
    "coverage_target",
    "no_compensation",
];

/// Parses a `key = value` file. Blank lines and `#` comments are skipped;
/// `-` in keys is read as `_`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ModelError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            ModelError::config("config", format!("line {}: expected key = value", n + 1))
        })?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(ModelError::config(
                &key,
                format!("line {}: unknown key", n + 1),
            ));
        }
        if map.insert(key.clone(), v.trim().to_owned()).is_some() {
            return Err(ModelError::config(
                &key,
                format!("line {}: duplicate key", n + 1),
            ));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ModelError> {
    v.parse()
        .map_err(|_| ModelError::config(key, format!("cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ModelError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ModelError::config(key, format!("'{v}' is not a boolean"))),
    }
}

impl Settings {
    /// Fills unset fields from a parsed config file.
    pub fn merge(&mut self, file: &BTreeMap<String, String>) -> Result<(), ModelError> {
        macro_rules! fill {
            ($($field:ident),*) => {
                $(if let Some(v) = file.get(stringify!($field)) {
                    if self.$field.is_none() {
                        self.$field = Some(parse_value(stringify!($field), v)?);
                    }
                })*
            };
        }
        fill!(
            output,
            eta,
            sigma_db,
            rc,
            k0,
            r0,
            marginal_terms,
            grid_points,
            rel_tol,
            r_inf,
            samples,
            seed,
            workers,
            bins,
            tiers,
            noise_density,
            bandwidth,
            interference_ratio,
            subcarriers,
            gamma_target_db,
            orthogonality,
            noise_power,
            control_power,
            gamma_min_db,
            gamma_max_db,
            gamma_step_db,
            rc_list,
            coverage_target
        );
        if let Some(v) = file.get("format") {
            if self.format.is_none() {
                self.format = Some(Format::from_str(v, true).map_err(|_| {
                    ModelError::config("format", format!("'{v}' is not csv or json"))
                })?);
            }
        }
        if let Some(v) = file.get("no_mc") {
            self.no_mc |= parse_bool("no_mc", v)?;
        }
        if let Some(v) = file.get("no_compensation") {
            self.no_compensation |= parse_bool("no_compensation", v)?;
        }
        Ok(())
    }

    pub fn resolve(&self, command: Command) -> Result<RunConfig, ModelError> {
        let terms = match self.marginal_terms.as_deref().unwrap_or("auto") {
            "auto" => MarginalTerms::Auto,
            "2" => MarginalTerms::Two,
            "3" => MarginalTerms::Three,
            v => {
                return Err(ModelError::config(
                    "marginal_terms",
                    format!("'{v}' is not auto, 2 or 3"),
                ))
            }
        };
        let mut quadrature = QuadratureSpec::default();
        if let Some(t) = self.rel_tol {
            quadrature.rel_tol = t;
        }
        let cfg = NetworkConfig::new(
            self.eta.unwrap_or(3.0),
            self.sigma_db.unwrap_or(8.0),
            self.rc.unwrap_or(1000.0),
        )?
        .with_k0(self.k0.unwrap_or(0.1))?
        .with_r0(self.r0.unwrap_or(1.0))?
        .with_marginal_terms(terms)?
        .with_grid_points(
            self.grid_points
                .unwrap_or(crate::config::DEFAULT_GRID_POINTS),
        )?
        .with_quadrature(quadrature)?;

        let d = SystemConstants::default();
        let sys = SystemConstants {
            noise_density: self.noise_density.unwrap_or(d.noise_density),
            bandwidth: self.bandwidth.unwrap_or(d.bandwidth),
            interference_ratio: self.interference_ratio.unwrap_or(d.interference_ratio),
            subcarriers: self.subcarriers.unwrap_or(d.subcarriers),
            gamma_target: self
                .gamma_target_db
                .map(db_to_linear)
                .unwrap_or(d.gamma_target),
            orthogonality: self.orthogonality.unwrap_or(d.orthogonality),
            noise_power: self.noise_power.unwrap_or(d.noise_power),
            control_power: self.control_power.unwrap_or(d.control_power),
        };
        sys.validate()?;

        let mut sim = SimSpec::new(
            cfg.clone(),
            self.samples.unwrap_or(1_000_000),
            self.seed.unwrap_or(1),
        );
        sim.workers = self.workers.unwrap_or(0);
        sim.bins = self.bins.unwrap_or(40);
        sim.tiers = self.tiers.unwrap_or(3);
        sim.validate()?;
        let run_mc = command.uses_simulation() && !self.no_mc;

        let r_inf = match &self.r_inf {
            Some(s) => RInf::parse(s)?,
            None if run_mc => RInf::Grid,
            None => RInf::Infinite,
        };

        let (lo, hi, step) = (
            self.gamma_min_db.unwrap_or(-10.0),
            self.gamma_max_db.unwrap_or(20.0),
            self.gamma_step_db.unwrap_or(1.0),
        );
        if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ModelError::config(
                "gamma_min_db/gamma_max_db/gamma_step_db",
                "need min ≤ max and step > 0",
            ));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(ModelError::config(
                "gamma_step_db",
                "grid has more than 100000 points",
            ));
        }
        let gamma_grid_db = (0..count).map(|i| lo + i as f64 * step).collect();

        let rc_list = match &self.rc_list {
            Some(s) => {
                let v = s
                    .split(',')
                    .map(|t| parse_value::<f64>("rc_list", t.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(ModelError::config("rc_list", "need positive radii"));
                }
                v
            }
            None => vec![125.0, 250.0, 500.0, 1000.0, 2000.0],
        };
        let coverage_target = self.coverage_target.unwrap_or(0.9);
        if !(coverage_target > 0.0 && coverage_target < 1.0) {
            return Err(ModelError::config("coverage_target", "must lie in (0, 1)"));
        }

        Ok(RunConfig {
            command,
            cfg,
            sys,
            sim,
            run_mc,
            r_inf,
            gamma_grid_db,
            rc_list,
            coverage_target,
            compensate: !self.no_compensation,
            format: self.format.unwrap_or(if command == Command::Simulate {
                Format::Json
            } else {
                Format::Csv
            }),
            output: self.output.clone(),
        })
    }
}

/// Fixed 17-significant-digit float formatting.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl RunConfig {
    fn r_inf_metres(&self) -> Result<f64, ModelError> {
        match self.r_inf {
            RInf::Infinite => Ok(f64::INFINITY),
            RInf::Grid => {
                Ok(build_grid(self.cfg.cell_radius(), self.sim.tiers)?.equivalent_radius())
            }
            RInf::Metres(v) => Ok(v),
        }
    }

    /// Resolved settings as ordered key/value pairs.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.cfg;
        let s = &self.sys;
        let mut e = vec![
            ("command", self.command.name().to_owned()),
            ("eta", fmt(c.eta())),
            ("sigma_db", fmt(c.sigma_db())),
            ("rc", fmt(c.cell_radius())),
            ("k0", fmt(c.k0())),
            ("r0", fmt(c.r0())),
            (
                "marginal_terms",
                format!("{:?} ({} used)", c.marginal_terms(), c.marginal_count()).to_lowercase(),
            ),
            ("grid_points", c.grid_points().to_string()),
            ("rel_tol", fmt(c.quadrature().rel_tol)),
        ];
        if !matches!(self.command, Command::Simulate | Command::Verify) {
            e.push(("r_inf", self.r_inf.label()));
        }
        if self.command.uses_simulation() {
            e.extend([
                ("simulation", self.run_mc.to_string()),
                ("samples", self.sim.samples.to_string()),
                ("seed", self.sim.seed.to_string()),
                ("bins", self.sim.bins.to_string()),
                ("tiers", self.sim.tiers.to_string()),
            ]);
        }
        match self.command {
            Command::Coverage => e.push(("compensation", self.compensate.to_string())),
            Command::Pmax | Command::Powerdensity => e.extend([
                ("noise_density", fmt(s.noise_density)),
                ("bandwidth", fmt(s.bandwidth)),
                ("interference_ratio", fmt(s.interference_ratio)),
            ]),
            Command::Ratedensity => e.push(("coverage_target", fmt(self.coverage_target))),
            _ => {}
        }
        e
    }

    fn header(&self, extra: &[(&str, String)]) -> String {
        let mut h = format!(
            "# bestcell {} {}\n",
            self.command.name(),
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in self
            .entries()
            .iter()
            .map(|(k, v)| (*k, v.clone()))
            .chain(extra.iter().map(|(k, v)| (*k, v.clone())))
        {
            let _ = writeln!(h, "# {k} = {v}");
        }
        for w in self.cfg.warnings() {
            let _ = writeln!(h, "# warning: {w}");
        }
        h
    }

    fn simulate(&self) -> Result<Option<SimResult>, ModelError> {
        if self.run_mc {
            simulate(&self.sim).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// A rendered table before formatting.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
    extra: Vec<(&'static str, String)>,
}

impl Table {
    fn render(&self, rc: &RunConfig) -> String {
        match rc.format {
            Format::Csv => {
                let mut s = rc.header(&self.extra);
                let _ = writeln!(s, "{}", self.columns.join(","));
                for row in &self.rows {
                    let _ = writeln!(
                        s,
                        "{}",
                        row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
                    );
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(|v| json_num(*v)).collect()))
                    .collect();
                let doc = json!({
                    "config": config_json(rc, &self.extra),
                    "columns": self.columns,
                    "rows": rows,
                });
                serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
            }
        }
    }
}

fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(fmt(v))
    }
}

fn config_json(rc: &RunConfig, extra: &[(&str, String)]) -> Value {
    let mut m = serde_json::Map::new();
    for (k, v) in rc
        .entries()
        .into_iter()
        .chain(extra.iter().map(|(k, v)| (*k, v.clone())))
    {
        m.insert(k.to_owned(), Value::String(v));
    }
    Value::Object(m)
}

fn nan_estimate() -> Estimate {
    Estimate {
        mean: f64::NAN,
        se: f64::NAN,
    }
}

/// Simulator estimate for the bin holding `r_b`, or `NaN` without a
/// simulation.
fn mc_at(
    sim: Option<&SimResult>,
    r_b: f64,
    pick: impl Fn(&SimResult, usize) -> Estimate,
) -> Estimate {
    match sim.and_then(|s| s.bin_of(r_b).map(|i| (s, i))) {
        Some((s, i)) => pick(s, i),
        None => nan_estimate(),
    }
}

fn attach_table(rc: &RunConfig) -> Result<Table, ModelError> {
    let profile = AttachmentProfile::build(&rc.cfg);
    let sim = rc.simulate()?;
    let rows = (0..profile.len())
        .map(|i| {
            let r = profile.r_b[i];
            let mc = mc_at(sim.as_ref(), r, |s, b| s.bins[b].attach_freq);
            vec![
                r,
                profile.x[i],
                profile.p_attach[i],
                profile.density[i],
                profile.xi_max[i],
                mc.mean,
                mc.se,
            ]
        })
        .collect();
    let mut extra = vec![("mass", fmt(profile.mass()))];
    if let Some(s) = &sim {
        extra.push(("mc_attached_fraction", fmt(s.attached_fraction)));
    }
    Ok(Table {
        columns: vec![
            "r_b_m",
            "r_over_rc",
            "p_attach",
            "mobile_density_per_m",
            "xi_max_db",
            "mc_attach_freq",
            "mc_attach_freq_se",
        ],
        rows,
        extra,
    })
}

fn ocif_table(rc: &RunConfig) -> Result<Table, ModelError> {
    let curve = ocif_spatial_distribution(&rc.cfg, rc.r_inf_metres()?)?;
    let sim = rc.simulate()?;
    let p = &curve.profile;
    let rows = (0..p.len())
        .map(|i| {
            let r = p.r_b[i];
            let mean = mc_at(sim.as_ref(), r, |s, b| s.bins[b].ocif);
            let dens = mc_at(sim.as_ref(), r, |s, b| s.bin_density(b, s.bins[b].ocif));
            vec![
                r,
                p.x[i],
                p.p_attach[i],
                curve.g1[i],
                curve.g2[i],
                curve.g3_plus[i],
                curve.total[i],
                curve.density[i],
                mean.mean,
                mean.se,
                dens.mean,
                dens.se,
            ]
        })
        .collect();
    Ok(Table {
        columns: vec![
            "r_b_m",
            "r_over_rc",
            "p_attach",
            "g1",
            "g2",
            "g3_plus",
            "g_total",
            "g_density_per_m",
            "mc_g_mean",
            "mc_g_mean_se",
            "mc_g_density_per_m",
            "mc_g_density_se",
        ],
        rows,
        extra: vec![("r_inf_m", fmt(curve.r_inf)), ("mu_g", fmt(curve.mu_g))],
    })
}

fn iopr_table(rc: &RunConfig) -> Result<Table, ModelError> {
    let curve = iopr_spatial_stats(&rc.cfg, rc.r_inf_metres()?)?;
    let sim = rc.simulate()?;
    let p = &curve.profile;
    let rows = (0..p.len())
        .map(|i| {
            let r = p.r_b[i];
            let f = mc_at(sim.as_ref(), r, |s, b| s.bin_density(b, s.bins[b].f));
            let f2 = mc_at(sim.as_ref(), r, |s, b| s.bin_density(b, s.bins[b].f_sq));
            vec![
                r,
                p.x[i],
                curve.mean[i],
                curve.second[i],
                curve.points[i].variance(),
                curve.mean_density[i],
                curve.second_density[i],
                f.mean,
                f.se,
                f2.mean,
                f2.se,
            ]
        })
        .collect();
    let mut extra = vec![
        ("r_inf_m", fmt(curve.r_inf)),
        ("mu_f", fmt(curve.mu_f)),
        ("var_f", fmt(curve.var_f)),
    ];
    if let Some(s) = &sim {
        extra.push(("mc_mu_f", fmt(s.mu_f)));
        extra.push(("mc_var_f", fmt(s.var_f)));
    }
    Ok(Table {
        columns: vec![
            "r_b_m",
            "r_over_rc",
            "f_mean",
            "f_second",
            "f_var",
            "f_density_per_m",
            "f2_density_per_m",
            "mc_f_density_per_m",
            "mc_f_density_se",
            "mc_f2_density_per_m",
            "mc_f2_density_se",
        ],
        rows,
        extra,
    })
}

fn coverage_table(rc: &RunConfig) -> Result<Table, ModelError> {
    let model = CoverageModel::new(&rc.cfg, rc.r_inf_metres()?, rc.compensate)?;
    let analytic = model.coverage_curve(&rc.gamma_grid_db)?;
    let sim = rc.simulate()?;
    let mc = sim
        .as_ref()
        .map(|s| empirical_coverage(s, &rc.gamma_grid_db));
    let rows = analytic
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let (c, se) = mc
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |m| (m[i].coverage, m[i].se));
            vec![a.gamma_db, a.coverage, c, se]
        })
        .collect();
    Ok(Table {
        columns: vec!["gamma_db", "coverage_analytic", "coverage_mc", "mc_stderr"],
        rows,
        extra: vec![],
    })
}

const PER_KM2: f64 = 1e6;

fn pmax_table(rc: &RunConfig) -> Result<Table, ModelError> {
    let rows = rc
        .rc_list
        .iter()
        .map(|&r| {
            let p = max_bs_power(r, &rc.cfg, &rc.sys)?;
            Ok(vec![r, p, p * bs_density(r) * PER_KM2])
        })
        .collect::<Result<_, ModelError>>()?;
    Ok(Table {
        columns: vec!["rc_m", "pmax_w", "power_density_w_per_km2"],
        rows,
        extra: vec![],
    })
}

fn powerdensity_table(rc: &RunConfig) -> Result<Table, ModelError> {
    let rows = rc
        .rc_list
        .iter()
        .map(|&r| {
            let p = max_bs_power(r, &rc.cfg, &rc.sys)?;
            Ok(vec![
                r,
                bs_density(r) * PER_KM2,
                p * bs_density(r) * PER_KM2,
            ])
        })
        .collect::<Result<_, ModelError>>()?;
    Ok(Table {
        columns: vec!["rc_m", "cell_density_per_km2", "power_density_w_per_km2"],
        rows,
        extra: vec![],
    })
}

fn ratedensity_table(rc: &RunConfig) -> Result<Table, ModelError> {
    let r_inf = rc.r_inf_metres()?;
    let mut rows = Vec::new();
    for &r in &rc.rc_list {
        let cfg = rc.cfg.clone().with_cell_radius(r)?;
        // a finite r_inf is taken as a multiple of the reference cell radius
        let scaled = r_inf * r / rc.cfg.cell_radius();
        let curve = rate_density(rc.coverage_target, &[r], &cfg, scaled)?;
        let pt = curve.points[0];
        rows.push(vec![
            r,
            pt.cell_density * PER_KM2,
            curve.gamma_db,
            curve.capacity,
            pt.rate_density * PER_KM2,
        ]);
    }
    Ok(Table {
        columns: vec![
            "rc_m",
            "cell_density_per_km2",
            "gamma_db",
            "capacity_bps_per_hz",
            "rate_density_bps_per_hz_per_km2",
        ],
        rows,
        extra: vec![],
    })
}

fn simulate_output(rc: &RunConfig) -> Result<String, ModelError> {
    let res = simulate(&rc.sim)?;
    let extra = vec![
        ("total_samples", res.total_samples.to_string()),
        ("attached", res.attached.to_string()),
        ("attached_fraction", fmt(res.attached_fraction)),
        ("mu_f", fmt(res.mu_f)),
        ("var_f", fmt(res.var_f)),
    ];
    match rc.format {
        Format::Json => {
            let doc = json!({ "config": config_json(rc, &extra), "result": res });
            Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
        }
        Format::Csv => {
            let rows = res
                .bins
                .iter()
                .map(|b| {
                    vec![
                        b.r_lo,
                        b.r_hi,
                        b.total as f64,
                        b.attached as f64,
                        b.attach_freq.mean,
                        b.attach_freq.se,
                        b.own_gain.mean,
                        b.own_gain.se,
                        b.ocif.mean,
                        b.ocif.se,
                        b.f.mean,
                        b.f.se,
                        b.f_sq.mean,
                        b.f_sq.se,
                    ]
                })
                .collect();
            Ok(Table {
                columns: vec![
                    "r_lo_m",
                    "r_hi_m",
                    "dropped",
                    "attached",
                    "attach_freq",
                    "attach_freq_se",
                    "own_gain",
                    "own_gain_se",
                    "ocif",
                    "ocif_se",
                    "f_mean",
                    "f_mean_se",
                    "f_sq_mean",
                    "f_sq_mean_se",
                ],
                rows,
                extra,
            }
            .render(rc))
        }
    }
}

/// Output text and whether the run counts as successful.
pub fn execute(rc: &RunConfig) -> Result<(String, bool), ModelError> {
    let text = match rc.command {
        Command::Attach => attach_table(rc)?.render(rc),
        Command::Ocif => ocif_table(rc)?.render(rc),
        Command::Iopr => iopr_table(rc)?.render(rc),
        Command::Coverage => coverage_table(rc)?.render(rc),
        Command::Pmax => pmax_table(rc)?.render(rc),
        Command::Powerdensity => powerdensity_table(rc)?.render(rc),
        Command::Ratedensity => ratedensity_table(rc)?.render(rc),
        Command::Simulate => simulate_output(rc)?,
        Command::Verify => {
            let spec = VerifySpec {
                eta: rc.cfg.eta(),
                cell_radius: rc.cfg.cell_radius(),
                samples: rc.sim.samples,
                seed: rc.sim.seed,
                workers: rc.sim.workers,
                tiers: rc.sim.tiers,
                bins: rc.sim.bins,
            };
            let report = verify::run(&spec)?;
            let text = match rc.format {
                Format::Csv => report.render(),
                Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
            };
            return Ok((text, report.all_passed()));
        }
    };
    Ok((text, true))
}

fn exit_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Convergence { .. } => EXIT_CONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn output_path(rc: &RunConfig) -> Option<PathBuf> {
    if let Some(p) = &rc.output {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUTPUT_DIR_ENV)?;
    let ext = match rc.format {
        Format::Csv if rc.command == Command::Verify => "txt",
        Format::Csv => "csv",
        Format::Json => "json",
    };
    Some(PathBuf::from(dir).join(format!("{}.{ext}", rc.command.name())))
}

/// Parses arguments, runs the command and maps errors to exit codes.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let mut settings = cli.settings;
    let resolved = (|| {
        if let Some(path) = &settings.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ModelError::config("config", format!("{}: {e}", path.display())))?;
            let map = parse_config_file(&text)?;
            settings.merge(&map)?;
        }
        settings.resolve(cli.command)
    })();
    let rc = match resolved {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("bestcell: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let (text, ok) = match execute(&rc) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("bestcell: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = match output_path(&rc) {
        Some(path) => std::fs::write(&path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("bestcell: cannot write output: {e}");
        return ExitCode::FAILURE;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}

pub fn main() -> ExitCode {
    main_with(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("bestcell").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn config_file_parsing() {
        let map = parse_config_file("# comment\neta = 3.5\nsigma-db = 10 # trailing\n\n").unwrap();
        assert_eq!(map["eta"], "3.5");
        assert_eq!(map["sigma_db"], "10");
        assert!(matches!(
            parse_config_file("bogus = 1"),
            Err(ModelError::Config { .. })
        ));
        assert!(parse_config_file("eta 3").is_err());
        assert!(parse_config_file("eta = 3\neta = 4").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut cli = parse(&["coverage", "--eta", "4"]);
        let map = parse_config_file("eta = 3.5\nsigma_db = 10\nno_mc = true").unwrap();
        cli.settings.merge(&map).unwrap();
        let rc = cli.settings.resolve(cli.command).unwrap();
        assert_eq!(rc.cfg.eta(), 4.0);
        assert_eq!(rc.cfg.sigma_db(), 10.0);
        assert!(!rc.run_mc);
        assert_eq!(rc.r_inf, RInf::Infinite);
    }

    #[test]
    fn invalid_values_name_the_field() {
        let cli = parse(&["attach", "--eta", "2"]);
        assert!(matches!(
            cli.settings.resolve(cli.command),
            Err(ModelError::ModelDomain(_))
        ));
        let cli = parse(&["attach", "--r-inf", "nowhere"]);
        let err = cli.settings.resolve(cli.command).unwrap_err().to_string();
        assert!(err.contains("r_inf"), "{err}");
        let cli = parse(&["pmax", "--rc-list", "100,-5"]);
        assert!(cli.settings.resolve(cli.command).is_err());
        let mut s = Settings::default();
        let map = parse_config_file("seed = x").unwrap();
        assert!(s.merge(&map).unwrap_err().to_string().contains("seed"));
    }

    #[test]
    fn gamma_grid_and_defaults() {
        let cli = parse(&["coverage", "--gamma-min-db", "-10", "--gamma-max-db", "20"]);
        let rc = cli.settings.resolve(cli.command).unwrap();
        assert_eq!(rc.gamma_grid_db.len(), 31);
        assert_eq!(rc.gamma_grid_db[0], -10.0);
        assert_eq!(rc.gamma_grid_db[30], 20.0);
        assert_eq!(rc.r_inf, RInf::Grid);
        assert_eq!(rc.format, Format::Csv);
        let cli = parse(&["simulate"]);
        assert_eq!(
            cli.settings.resolve(cli.command).unwrap().format,
            Format::Json
        );
    }

    #[test]
    fn float_format_is_fixed() {
        assert_eq!(fmt(1.0), "1.0000000000000000e0");
        assert_eq!(fmt(f64::INFINITY), "inf");
        assert_eq!(fmt(f64::NAN), "nan");
    }

    #[test]
    fn pmax_csv_layout() {
        let cli = parse(&["pmax", "--rc-list", "125,250,500"]);
        let rc = cli.settings.resolve(cli.command).unwrap();
        let (text, ok) = execute(&rc).unwrap();
        assert!(ok);
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], "rc_m,pmax_w,power_density_w_per_km2");
        let p: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert!(text.contains("# sigma_db = 8.0000000000000000e0"));
    }
}
