//! Command-line front end.
//!
//! Every command reads its inputs (JSON documents, or text for inequality
//! systems), runs one library operation and writes a [`Report`] that embeds
//! the tool version, the seed, the parsed command and the input documents
//! themselves, so `chansim replay --report r.json` reproduces it exactly.
//!
//! Exit status: 0 on success, 2 when a `check-*` command grades `OUT`, 1 on
//! any error.

mod render;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::auxsearch::{
    find_feasible_aux_bc, find_feasible_aux_mac, find_feasible_aux_p2p, max_resource_expression,
    min_markov_functional, MarkovPoint, ResourcePoint, SearchConfig, SearchError, SearchResult,
};
use crate::entrofme::{fm_eliminate, parse_system, region_equal, EntropyError, FmOptions, Relation};
use crate::osrb::casestudy::{casestudy_bec_bsc, CaseStudyConfig, CaseStudyReport};
use crate::osrb::{fix_g_instance, simulate, simulate_monte_carlo, GSelection, OsrbError, Protocol, SimConfig, SimReport};
use crate::regions::{
    bc_inner_check, cuff_from_p2p, cuff_region_check, mac_inner_check, nonbayesian_outer_check, p2p_inner_check,
    p2p_outer_check, wire_rate, AuxBc, AuxMac, AuxP2P, BcInstance, MacInstance, OuterConfig, P2PInstance,
    RegionError, RegionReport, Verdict, Weights, DEFAULT_EPS,
};
use crate::seed;

pub use render::{render, Format};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{what}: {source}")]
    Json { what: String, source: serde_json::Error },
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Osrb(#[from] OsrbError),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug, Clone)]
#[command(name = "chansim", version, about = "Channel simulation: bounds, searches, elimination and binning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Root seed; every stochastic component derives its own from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Search flags shared by the stochastic commands.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchArgs {
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub card_u: Option<usize>,
    #[arg(long)]
    pub card_v: Option<usize>,
    #[arg(long)]
    pub card_w: Option<usize>,
}

impl SearchArgs {
    fn config(&self, root: u64) -> SearchConfig {
        let d = SearchConfig::default();
        SearchConfig {
            seed: seed::component(root, "search"),
            restarts: self.restarts.unwrap_or(d.restarts),
            max_iters: self.iters.unwrap_or(d.max_iters),
            card_u: self.card_u,
            card_v: self.card_v,
            card_w: self.card_w,
            ..d
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolArg {
    A,
    B,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name", deny_unknown_fields)]
pub enum Command {
    /// Grade an auxiliary decomposition against the point-to-point inner bound.
    CheckInnerP2p {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Converse check at the instance's input law.
    CheckOuterP2p {
        #[arg(long)]
        instance: PathBuf,
        /// `beta,gamma,theta`.
        #[arg(long, default_value = "0,0,0")]
        weights: String,
        #[command(flatten)]
        #[serde(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Grade a MAC decomposition.
    CheckInnerMac {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Drop the inequalities that only constrain `V`.
        #[arg(long)]
        disable_v: bool,
    },
    /// Grade a broadcast decomposition.
    CheckInnerBc {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Grade the reduction of a point-to-point decomposition onto a
    /// noiseless link.
    CheckCuff {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        /// Link rate in bits; defaults to log2 of the resource's output count
        /// when the resource is deterministic.
        #[arg(long)]
        wire_rate: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Converse check maximized over input laws on a grid.
    CheckNonbayesian {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "0,0,0")]
        weights: String,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[command(flatten)]
        #[serde(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Search for a point-to-point decomposition.
    SearchInnerP2p {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        search: SearchArgs,
    },
    /// Search for a MAC decomposition.
    SearchInnerMac {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        search: SearchArgs,
    },
    /// Search for a broadcast decomposition.
    SearchInnerBc {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        search: SearchArgs,
    },
    /// Evaluate both sides of the converse with their search traces.
    EvalOuter {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "0,0,0")]
        weights: String,
        #[command(flatten)]
        #[serde(flatten)]
        search: SearchArgs,
    },
    /// Fourier-Motzkin elimination of rate variables from a system file.
    Fme {
        #[arg(long)]
        system: PathBuf,
        /// Comma-separated rates to eliminate, in order.
        #[arg(long, default_value = "")]
        eliminate: String,
        /// System file whose `eq:` lines are used as equalities.
        #[arg(long)]
        equalities: Option<PathBuf>,
        /// Region to compare the result with.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Add non-negativity of the eliminated rates.
        #[arg(long)]
        nonneg: bool,
        /// Drop inequalities implied by the others.
        #[arg(long)]
        prune: bool,
    },
    /// Exact or sampled simulation of the random-binning scheme.
    OsrbSim {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        /// Blocklengths, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "4")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        rate_g: f64,
        #[arg(long, default_value_t = 0.0)]
        rate_w: f64,
        /// Number of binning draws per blocklength.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, value_enum, default_value_t = SimMode::Exact)]
        mode: SimMode,
        #[arg(long, value_enum, default_value_t = ProtocolArg::B)]
        protocol: ProtocolArg,
        /// `best` or a 0-based index: report one value of `g`.
        #[arg(long)]
        fix_g: Option<String>,
        /// Draws per binning in Monte-Carlo mode.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Classify BSC(p) from BEC(e) over a grid of `p`.
    CasestudyBecBsc {
        #[arg(long, default_value_t = 0.5)]
        e: f64,
        /// `start:stop:step`, inclusive.
        #[arg(long, default_value = "0.05:0.5:0.025")]
        p_grid: String,
        /// Shared randomness rate for the inner checks.
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[command(flatten)]
        #[serde(flatten)]
        search: SearchArgs,
    },
    /// Re-run the command embedded in a report, with its embedded inputs.
    Replay {
        #[arg(long)]
        report: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckInnerP2p { .. } => "check-inner-p2p",
            Command::CheckOuterP2p { .. } => "check-outer-p2p",
            Command::CheckInnerMac { .. } => "check-inner-mac",
            Command::CheckInnerBc { .. } => "check-inner-bc",
            Command::CheckCuff { .. } => "check-cuff",
            Command::CheckNonbayesian { .. } => "check-nonbayesian",
            Command::SearchInnerP2p { .. } => "search-inner-p2p",
            Command::SearchInnerMac { .. } => "search-inner-mac",
            Command::SearchInnerBc { .. } => "search-inner-bc",
            Command::EvalOuter { .. } => "eval-outer",
            Command::Fme { .. } => "fme",
            Command::OsrbSim { .. } => "osrb-sim",
            Command::CasestudyBecBsc { .. } => "casestudy-bec-bsc",
            Command::Replay { .. } => "replay",
        }
    }

    /// Input files by role; text inputs are flagged.
    fn input_files(&self) -> Vec<(&'static str, &Path, bool)> {
        use Command::*;
        match self {
            CheckInnerP2p { instance, aux, .. }
            | CheckInnerMac { instance, aux, .. }
            | CheckInnerBc { instance, aux, .. }
            | CheckCuff { instance, aux, .. }
            | OsrbSim { instance, aux, .. } => vec![("instance", instance, false), ("aux", aux, false)],
            CheckOuterP2p { instance, .. }
            | CheckNonbayesian { instance, .. }
            | SearchInnerP2p { instance, .. }
            | SearchInnerMac { instance, .. }
            | SearchInnerBc { instance, .. }
            | EvalOuter { instance, .. } => vec![("instance", instance, false)],
            Fme {
                system,
                equalities,
                compare,
                ..
            } => {
                let mut v = vec![("system", system.as_path(), true)];
                v.extend(equalities.as_deref().map(|p| ("equalities", p, true)));
                v.extend(compare.as_deref().map(|p| ("compare", p, true)));
                v
            }
            CasestudyBecBsc { .. } | Replay { .. } => Vec::new(),
        }
    }
}

/// What a run was asked to do, with its inputs inlined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub command: Command,
    pub inputs: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub result: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOutput<P> {
    pub search: SearchResult<P>,
    /// The best point graded by the region check.
    pub check: RegionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOuterOutput {
    pub lhs: SearchResult<MarkovPoint>,
    pub rhs: SearchResult<ResourcePoint>,
    /// `(beta + gamma + theta) * R`, added to the resource term.
    pub rate_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FmeOutput {
    pub rate_vars: Vec<String>,
    pub inequalities: Vec<String>,
    pub equalities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Relation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsrbOutput {
    pub reports: Vec<SimReport>,
    /// Median `tv_joint` per blocklength, in the order given.
    pub median_tv_joint: Vec<(usize, f64)>,
    pub median_sw_error_prob: Vec<(usize, f64)>,
}

/// Reads one input file. JSON inputs are parsed into their typed form
/// first, so errors carry the line and column in the file.
fn read_input(cmd: &Command, role: &str, path: &Path, text: bool) -> Result<Value> {
    let s = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text {
        return Ok(Value::String(s));
    }
    fn typed<T: Serialize + serde::de::DeserializeOwned>(s: &str, path: &Path) -> Result<Value> {
        let t: T = serde_json::from_str(s).map_err(|source| CliError::Json {
            what: path.display().to_string(),
            source,
        })?;
        Ok(to_value(&t))
    }
    use Command::*;
    match (cmd, role) {
        (CheckInnerMac { .. } | SearchInnerMac { .. }, "instance") => typed::<MacInstance>(&s, path),
        (CheckInnerMac { .. }, _) => typed::<AuxMac>(&s, path),
        (CheckInnerBc { .. } | SearchInnerBc { .. }, "instance") => typed::<BcInstance>(&s, path),
        (CheckInnerBc { .. }, _) => typed::<AuxBc>(&s, path),
        (_, "instance") => typed::<P2PInstance>(&s, path),
        _ => typed::<AuxP2P>(&s, path),
    }
}

fn input<T: serde::de::DeserializeOwned>(inputs: &BTreeMap<String, Value>, role: &str) -> Result<T> {
    let v = inputs
        .get(role)
        .ok_or_else(|| CliError::Usage(format!("missing input `{role}`")))?;
    T::deserialize(v).map_err(|source| CliError::Json {
        what: format!("input `{role}`"),
        source,
    })
}

fn text_input(inputs: &BTreeMap<String, Value>, role: &str) -> Result<Option<String>> {
    match inputs.get(role) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(CliError::Usage(format!("input `{role}` must be text"))),
    }
}

pub fn parse_weights(s: &str) -> Result<Weights> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("weights `{s}`: {e}")))?;
    match v[..] {
        [b, g, t] => Ok(Weights::new(b, g, t)?),
        _ => Err(CliError::Usage(format!("weights `{s}`: expected beta,gamma,theta"))),
    }
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("grid `{s}`: expected start:stop:step with step > 0"));
    let v: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [a, b, step] = v[..] else { return Err(bad()) };
    if !(step > 0.0 && a <= b) {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| a + i as f64 * step).collect())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn graded(r: RegionReport) -> (Value, bool) {
    let out = r.verdict == Verdict::Out;
    (to_value(&r), out)
}

/// Runs `cmd` on already loaded inputs. Returns the result and whether a
/// check graded `OUT`.
fn execute(cmd: &Command, root: u64, inputs: &BTreeMap<String, Value>) -> Result<(Value, bool)> {
    use Command::*;
    Ok(match cmd {
        CheckInnerP2p { eps, .. } => graded(p2p_inner_check(&input(inputs, "instance")?, &input(inputs, "aux")?, *eps)?),
        CheckOuterP2p {
            weights, search, eps, ..
        } => {
            let cfg = OuterConfig {
                search: search.config(root),
                eps: *eps,
                ..Default::default()
            };
            graded(p2p_outer_check(&input(inputs, "instance")?, &parse_weights(weights)?, &cfg)?)
        }
        CheckInnerMac { eps, disable_v, .. } => graded(mac_inner_check(
            &input::<MacInstance>(inputs, "instance")?,
            &input::<AuxMac>(inputs, "aux")?,
            *eps,
            *disable_v,
        )?),
        CheckInnerBc { eps, .. } => graded(bc_inner_check(
            &input::<BcInstance>(inputs, "instance")?,
            &input::<AuxBc>(inputs, "aux")?,
            *eps,
        )?),
        CheckCuff { wire_rate: w, eps, .. } => {
            let inst: P2PInstance = input(inputs, "instance")?;
            let aux: AuxP2P = input(inputs, "aux")?;
            let rate = w.or_else(|| wire_rate(&inst.resource)).ok_or_else(|| {
                CliError::Usage("the resource is not deterministic; pass --wire-rate".into())
            })?;
            let (aux_u, dec) = cuff_from_p2p(&inst, &aux)?;
            graded(cuff_region_check(rate, &inst, &aux_u, &dec, *eps)?)
        }
        CheckNonbayesian {
            weights,
            grid,
            search,
            eps,
            ..
        } => {
            let inst: P2PInstance = input(inputs, "instance")?;
            let cfg = OuterConfig {
                search: search.config(root),
                grid: *grid,
                eps: *eps,
            };
            graded(nonbayesian_outer_check(
                &inst.target,
                &inst.resource,
                inst.rate,
                &parse_weights(weights)?,
                &cfg,
            )?)
        }
        SearchInnerP2p { search, .. } => {
            let inst: P2PInstance = input(inputs, "instance")?;
            let res = find_feasible_aux_p2p(&inst, &search.config(root))?;
            let check = p2p_inner_check(&inst, &res.best_point, DEFAULT_EPS)?;
            (to_value(&SearchOutput { search: res, check }), false)
        }
        SearchInnerMac { search, .. } => {
            let inst: MacInstance = input(inputs, "instance")?;
            let res = find_feasible_aux_mac(&inst, &search.config(root))?;
            let check = mac_inner_check(&inst, &res.best_point, DEFAULT_EPS, false)?;
            (to_value(&SearchOutput { search: res, check }), false)
        }
        SearchInnerBc { search, .. } => {
            let inst: BcInstance = input(inputs, "instance")?;
            let res = find_feasible_aux_bc(&inst, &search.config(root))?;
            let check = bc_inner_check(&inst, &res.best_point, DEFAULT_EPS)?;
            (to_value(&SearchOutput { search: res, check }), false)
        }
        EvalOuter { weights, search, .. } => {
            let inst: P2PInstance = input(inputs, "instance")?;
            let w = parse_weights(weights)?;
            let cfg = search.config(root);
            let out = EvalOuterOutput {
                lhs: min_markov_functional(&inst.target_joint()?, &w, &cfg)?,
                rhs: max_resource_expression(&inst.resource, &w, &cfg)?,
                rate_term: w.sum() * inst.rate,
            };
            (to_value(&out), false)
        }
        Fme {
            eliminate,
            nonneg,
            prune,
            ..
        } => {
            let sys = parse_system(&text_input(inputs, "system")?.unwrap_or_default())?;
            let mut eqs = sys.equalities.clone();
            if let Some(t) = text_input(inputs, "equalities")? {
                eqs.extend(parse_system(&t)?.equalities);
            }
            let elim: Vec<&str> = eliminate.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            let opts = FmOptions {
                nonneg: *nonneg,
                prune: *prune,
            };
            let mut with_eqs = sys.clone();
            with_eqs.equalities = eqs.clone();
            let out = fm_eliminate(&with_eqs, &elim, opts)?;
            let (relation, witness) = match text_input(inputs, "compare")? {
                Some(t) => {
                    let c = region_equal(&out, &parse_system(&t)?, &eqs)?;
                    (Some(c.relation), c.witness.map(|w| w.to_string()))
                }
                None => (None, None),
            };
            let fo = FmeOutput {
                rate_vars: out.rate_vars.clone(),
                inequalities: out.inequalities.iter().map(|q| q.to_string()).collect(),
                equalities: out.equalities.iter().map(|e| format!("{e} = 0")).collect(),
                relation,
                witness,
            };
            (to_value(&fo), false)
        }
        OsrbSim {
            n,
            rate_g,
            rate_w,
            seeds,
            mode,
            protocol,
            fix_g,
            samples,
            ..
        } => {
            let inst: P2PInstance = input(inputs, "instance")?;
            let aux: AuxP2P = input(inputs, "aux")?;
            let selection = match fix_g.as_deref() {
                None => None,
                Some("best") => Some(GSelection::Best),
                Some(k) => Some(GSelection::Index(
                    k.parse().map_err(|_| CliError::Usage(format!("--fix-g `{k}`: expected best or an index")))?,
                )),
            };
            if selection.is_some() && (*protocol == ProtocolArg::A || *mode == SimMode::MonteCarlo) {
                return Err(CliError::Usage("--fix-g needs exact protocol B".into()));
            }
            let binning = seed::component(root, "binning");
            let sampling = seed::component(root, "sampling");
            let mut reports = Vec::new();
            let (mut med_tv, mut med_sw) = (Vec::new(), Vec::new());
            for &len in n {
                let mut tv = Vec::new();
                let mut sw = Vec::new();
                for i in 0..*seeds {
                    let cfg = SimConfig {
                        n: len,
                        rate_g: *rate_g,
                        rate_w: *rate_w,
                        seed: seed::indexed(binning, i as u64),
                        ..Default::default()
                    };
                    let mut r = match (mode, protocol) {
                        (SimMode::Exact, ProtocolArg::A) => simulate(&inst, &aux, &cfg, Protocol::A)?,
                        (SimMode::Exact, ProtocolArg::B) => simulate(&inst, &aux, &cfg, Protocol::B)?,
                        (SimMode::MonteCarlo, _) => {
                            simulate_monte_carlo(&inst, &aux, &cfg, *samples, seed::indexed(sampling, i as u64))?
                        }
                    };
                    if let Some(sel) = selection {
                        r = fix_g_instance(&r, sel)?;
                    }
                    tv.push(r.tv_joint);
                    sw.push(r.sw_error_prob);
                    reports.push(r);
                }
                if !tv.is_empty() {
                    med_tv.push((len, median(&mut tv)));
                    med_sw.push((len, median(&mut sw)));
                }
            }
            let out = OsrbOutput {
                reports,
                median_tv_joint: med_tv,
                median_sw_error_prob: med_sw,
            };
            (to_value(&out), false)
        }
        CasestudyBecBsc { e, p_grid, rate, search } => {
            let cfg = CaseStudyConfig {
                erasure: *e,
                rate: *rate,
                search: search.config(root),
                outer: OuterConfig {
                    search: search.config(root),
                    ..Default::default()
                },
                eps: DEFAULT_EPS,
            };
            (to_value(&casestudy_bec_bsc(&parse_grid(p_grid)?, &cfg)?), false)
        }
        Replay { .. } => return Err(CliError::Usage("replay cannot be nested".into())),
    })
}

/// Loads the inputs of `cli`, runs it and returns the report with the
/// process exit status.
pub fn run(cli: &Cli) -> Result<(Report, u8)> {
    let config = match &cli.command {
        Command::Replay { report } => {
            let text = std::fs::read_to_string(report).map_err(|source| CliError::Io {
                path: report.clone(),
                source,
            })?;
            validate_report(&text)?.config
        }
        cmd => {
            let mut inputs = BTreeMap::new();
            for (role, path, text) in cmd.input_files() {
                inputs.insert(role.to_string(), read_input(cmd, role, path, text)?);
            }
            RunConfig {
                seed: cli.seed,
                command: cmd.clone(),
                inputs,
            }
        }
    };
    let (result, out) = execute(&config.command, config.seed, &config.inputs)?;
    let report = Report {
        tool: "chansim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: config.command.name().into(),
        seed: config.seed,
        config,
        result,
    };
    Ok((report, if out { 2 } else { 0 }))
}

/// Parses a JSON report and checks its result against the typed schema of
/// its command.
pub fn validate_report(text: &str) -> Result<Report> {
    let report: Report = serde_json::from_str(text).map_err(|source| CliError::Json {
        what: "report".into(),
        source,
    })?;
    fn check<T: serde::de::DeserializeOwned>(v: &Value) -> Result<()> {
        T::deserialize(v).map(|_| ()).map_err(|source| CliError::Json {
            what: "report result".into(),
            source,
        })
    }
    use Command::*;
    let r = &report.result;
    match &report.config.command {
        CheckInnerP2p { .. }
        | CheckOuterP2p { .. }
        | CheckInnerMac { .. }
        | CheckInnerBc { .. }
        | CheckCuff { .. }
        | CheckNonbayesian { .. } => check::<RegionReport>(r)?,
        SearchInnerP2p { .. } => check::<SearchOutput<AuxP2P>>(r)?,
        SearchInnerMac { .. } => check::<SearchOutput<AuxMac>>(r)?,
        SearchInnerBc { .. } => check::<SearchOutput<AuxBc>>(r)?,
        EvalOuter { .. } => check::<EvalOuterOutput>(r)?,
        Fme { .. } => check::<FmeOutput>(r)?,
        OsrbSim { .. } => check::<OsrbOutput>(r)?,
        CasestudyBecBsc { .. } => check::<CaseStudyReport>(r)?,
        Replay { .. } => return Err(CliError::Usage("a report cannot embed replay".into())),
    }
    if report.command != report.config.command.name() || report.seed != report.config.seed {
        return Err(CliError::Usage("report header disagrees with its config".into()));
    }
    Ok(report)
}

/// Entry point of the `chansim` binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = run(&cli).and_then(|(report, code)| {
        let text = render(&report, cli.format)?;
        match &cli.out {
            Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.clone(), source })?,
            None => print!("{text}"),
        }
        Ok(code)
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_weights() {
        let g = parse_grid("0.05:0.5:0.025").unwrap();
        assert_eq!(g.len(), 19);
        assert!((g[18] - 0.5).abs() < 1e-12);
        assert!(parse_grid("0.5:0.1:0.1").is_err());
        assert_eq!(parse_weights("1,0,0.5").unwrap(), Weights::new(1.0, 0.0, 0.5).unwrap());
        assert!(parse_weights("1,2").is_err());
        assert!(parse_weights("-1,0,0").is_err());
    }

    #[test]
    fn commands_round_trip() {
        let cli = Cli::try_parse_from([
            "chansim",
            "osrb-sim",
            "--instance",
            "i.json",
            "--aux",
            "a.json",
            "--n",
            "2,4",
            "--rate-g",
            "0.5",
        ])
        .unwrap();
        let v = serde_json::to_value(&cli.command).unwrap();
        assert_eq!(v["name"], "osrb-sim");
        let back: Command = serde_json::from_value(v).unwrap();
        assert_eq!(back, cli.command);
    }
}
