//! Batch front end: config files in, model/strategy/report files out.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::abstraction::{abstract_linear, abstract_nonlinear_sampled, AbstractionParams, InputGrid, LabelSource, Mode, SymbolicModel};
use crate::error::{Error, Result};
use crate::game::{monte_carlo, solve_reach, solve_safe, ClosedLoop, Disturbance, Horizon, MonteCarloConfig, MonteCarloReport, Objective, SimulationConfig, Strategy};
use crate::io::to_canonical_json;
use crate::lattice::{fmt_g12, Lattice, PointSet};
use crate::reach::{control_reach, disturbance_reach, polytope_csv, render_svg, to_vertices, SvgLayer, DEFAULT_REACH_STEPS};
use crate::sysmodel::{validate_parameters, validate_system, BoxRegion, ControlSystem, KLBound, SystemDef, VectorField};
use crate::tsys::{check_alt_bisim, max_alt_bisim, RelationFile, TransitionSystem, Variant};

#[derive(Debug, Parser)]
#[command(name = "symcrtl", version, about = "Symbolic abstraction, bisimulation checking and robust synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a symbolic model and write JSON, table CSV, DOT and SVG files.
    Abstract(Opts),
    /// Check a relation (or compute the maximal one) between two systems.
    Check(Opts),
    /// Solve the configured objective and write the strategy.
    Synthesize(Opts),
    /// Run closed-loop Monte-Carlo simulations of the synthesized controller.
    Simulate(Opts),
    /// Write every export format for a config, model or transition system file.
    Export(Opts),
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub horizon: Option<Horizon>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_file: Option<PathBuf>,
    pub params: AbstractionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_grid: Option<InputGrid>,
    /// Transition table to use instead of building the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach: Option<ReachOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationDef>,
    #[serde(default)]
    pub exports: Exports,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReachOptions {
    #[serde(default = "default_reach_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

fn default_reach_steps() -> usize {
    DEFAULT_REACH_STEPS
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectiveDef {
    pub kind: Objective,
    #[serde(default)]
    pub target_states: Vec<String>,
    /// States whose output lies in any of these boxes join the target.
    #[serde(default)]
    pub target_boxes: Vec<BoxRegion>,
    #[serde(default = "default_horizon")]
    pub horizon: Horizon,
}

fn default_horizon() -> Horizon {
    Horizon::Unbounded
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitialGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points_per_axis: usize,
}

impl InitialGrid {
    /// Evenly spaced points including both ends, first axis slowest.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        let b = BoxRegion::new(self.lower.clone(), self.upper.clone())?;
        if self.points_per_axis == 0 {
            return Err(Error::InvalidParameter("points_per_axis must be positive".into()));
        }
        let k = self.points_per_axis;
        let axes: Vec<Vec<f64>> = (0..b.dim())
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if k == 1 {
                            b.lower()[i]
                        } else {
                            b.lower()[i] + (b.upper()[i] - b.lower()[i]) * j as f64 / (k - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(crate::sysmodel::cartesian(&axes))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_grid: Option<InitialGrid>,
    #[serde(default)]
    pub initial_states: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default = "one")]
    pub pieces: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub steps: usize,
    #[serde(default = "ten")]
    pub segments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_box: Option<BoxRegion>,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Exports {
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub dot: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for Exports {
    fn default() -> Self {
        Exports {
            json: true,
            csv: true,
            dot: true,
            svg: true,
        }
    }
}

/// Check command input; paths are relative to the config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckConfig {
    pub left: PathBuf,
    pub right: PathBuf,
    /// Without a relation the maximal one is computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<PathBuf>,
    pub epsilon: f64,
    #[serde(default = "plain")]
    pub variant: Variant,
}

fn plain() -> Variant {
    Variant::Plain
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

/// Exit code for a finished command: 0 pass, 1 fail, 2 bad input or a
/// violated parameter condition.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(_) => 2,
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn resolve(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn read_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_value<T: serde::de::DeserializeOwned>(v: Value, path: &Path) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    parse_value(read_value(path)?, path)
}

/// A configured pipeline: the continuous system (when declared) and the model.
pub struct Pipeline {
    pub config: RunConfig,
    pub system: Option<ControlSystem>,
    pub beta: Option<KLBound>,
    pub model: SymbolicModel,
    pub warnings: Vec<String>,
}

fn load_system(config: &RunConfig, dir: &Path) -> Result<Option<(ControlSystem, KLBound, Vec<String>)>> {
    let def = match (&config.system, &config.system_file) {
        (Some(d), _) => d.clone(),
        (None, Some(p)) => {
            let p = resolve(dir, p);
            parse_value(read_value(&p)?, &p)?
        }
        (None, None) => return Ok(None),
    };
    let report = validate_system(&def)?;
    Ok(Some((report.system, report.beta, report.warnings)))
}

fn apply_overrides(config: &mut RunConfig, opts: &Opts) {
    if let Some(m) = opts.mode {
        config.params.mode = m;
    }
    if let Some(e) = opts.epsilon {
        config.params.epsilon = e;
    }
    if let Some(h) = opts.horizon {
        if let Some(o) = config.objective.as_mut() {
            o.horizon = h;
        }
    }
    if let Some(s) = opts.seed {
        if let Some(sim) = config.simulation.as_mut() {
            sim.seed = s;
        }
    }
}

/// Builds (or loads from a table) the symbolic model described by a config.
pub fn build_pipeline(config: RunConfig, dir: &Path) -> Result<Pipeline> {
    let loaded = load_system(&config, dir)?;
    let mut warnings = Vec::new();
    let (system, beta) = match loaded {
        Some((s, b, w)) => {
            warnings.extend(w);
            (Some(s), Some(b))
        }
        None => (None, None),
    };
    let model = if let Some(table) = &config.table_file {
        model_from_table(&config, &resolve(dir, table), beta.as_ref())?
    } else {
        match &system {
            Some(ControlSystem::Linear(lin)) => {
                let source = match (&config.labels, &config.reach) {
                    (Some(l), _) => l.clone(),
                    (None, Some(r)) => LabelSource::Computed {
                        steps: r.steps,
                        density: r.density,
                    },
                    (None, None) => LabelSource::default(),
                };
                abstract_linear(lin, &config.params, &source)?
            }
            Some(ControlSystem::Nonlinear(nl)) => {
                let grid = config
                    .input_grid
                    .as_ref()
                    .ok_or_else(|| Error::Parse("nonlinear systems need an `input_grid`".into()))?;
                let beta = beta.as_ref().ok_or(Error::MissingLipschitz)?;
                abstract_nonlinear_sampled(nl, beta, &config.params, grid)?
            }
            None => return Err(Error::Parse("config needs `system`, `system_file` or `table_file`".into())),
        }
    };
    Ok(Pipeline {
        config,
        system,
        beta,
        model,
        warnings,
    })
}

/// States on the η-lattice of the region, transitions from the table.
fn model_from_table(config: &RunConfig, path: &Path, beta: Option<&KLBound>) -> Result<SymbolicModel> {
    let p = &config.params;
    p.validate()?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let outputs = Lattice::new(p.eta, p.state_region.dim())?.enumerate(&p.state_region)?.into_points();
    let (mut cv, mut dv) = (BTreeMap::new(), BTreeMap::new());
    if let Some(LabelSource::Injected { controls, disturbances }) = &config.labels {
        for (i, v) in controls.iter().enumerate() {
            cv.insert(format!("a{}", i + 1), v.clone());
        }
        for (i, v) in disturbances.iter().enumerate() {
            dv.insert(format!("b{}", i + 1), v.clone());
        }
    }
    let system = TransitionSystem::from_table_csv(&text, &outputs, &cv, &dv)?;
    let condition = match beta {
        Some(b) => validate_parameters(b, p.epsilon, p.tau, p.mu, p.eta)?,
        None => crate::sysmodel::ParameterCheck {
            satisfied: false,
            margin: f64::NAN,
            beta: f64::NAN,
        },
    };
    Ok(SymbolicModel {
        system,
        params: p.clone(),
        condition,
        records: Vec::new(),
        control_reach: None,
        disturbance_reach: None,
        certificates: Vec::new(),
        warnings: vec![format!("transitions read from {}", path.display())],
    })
}

fn target_set(t: &TransitionSystem, obj: &ObjectiveDef) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for id in &obj.target_states {
        out.insert(t.state_index(id).ok_or_else(|| Error::Parse(format!("unknown target state `{id}`")))?);
    }
    for b in &obj.target_boxes {
        if b.dim() != t.output_dim() {
            return Err(Error::DimensionMismatch("target box dimension".into()));
        }
        out.extend((0..t.n_states()).filter(|&q| b.contains(t.output(q))));
    }
    Ok(out)
}

pub fn synthesize(pipeline: &Pipeline) -> Result<(BTreeSet<usize>, Strategy)> {
    let obj = pipeline
        .config
        .objective
        .as_ref()
        .ok_or_else(|| Error::Parse("config has no `objective`".into()))?;
    let t = &pipeline.model.system;
    let target = target_set(t, obj)?;
    let strategy = match obj.kind {
        Objective::Reach => solve_reach(t, &target, obj.horizon)?,
        Objective::Safe => solve_safe(t, &target)?,
    };
    Ok((target, strategy))
}

fn monte_carlo_config(sim: &SimulationDef) -> Result<MonteCarloConfig> {
    let mut initial = sim.initial_states.clone();
    if let Some(g) = &sim.initial_grid {
        initial.extend(g.points()?);
    }
    if initial.is_empty() {
        return Err(Error::Parse("simulation needs `initial_grid` or `initial_states`".into()));
    }
    Ok(MonteCarloConfig {
        initial_states: initial,
        runs: sim.runs,
        pieces: sim.pieces,
        seed: sim.seed,
        simulation: SimulationConfig {
            steps: sim.steps,
            segments: sim.segments,
            spec_box: sim.spec_box.clone(),
        },
    })
}

pub fn run_monte_carlo(pipeline: &Pipeline, strategy: &Strategy) -> Result<MonteCarloReport> {
    let sim = pipeline
        .config
        .simulation
        .as_ref()
        .ok_or_else(|| Error::Parse("config has no `simulation`".into()))?;
    let sys = pipeline
        .system
        .as_ref()
        .ok_or_else(|| Error::Parse("simulation needs a continuous system".into()))?;
    monte_carlo(sys, &pipeline.model, strategy, &monte_carlo_config(sim)?)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(name);
    std::fs::write(&p, contents)?;
    Ok(p)
}

fn label_points(labels: &[crate::tsys::Label]) -> Result<PointSet> {
    PointSet::new(labels.iter().map(|l| l.value.clone()).collect())?.with_ids(labels.iter().map(|l| l.id.clone()).collect())
}

/// Writes the model files selected by `exports`, returning their paths.
fn export_model(pipeline: &Pipeline, exports: &Exports, out: &Path) -> Result<Vec<PathBuf>> {
    let m = &pipeline.model;
    let mut files = Vec::new();
    if exports.json {
        files.push(write_file(out, "model.json", &m.to_json()?)?);
    }
    if exports.csv {
        files.push(write_file(out, "table.csv", &m.to_table_csv())?);
        let values_known = |l: &[crate::tsys::Label]| !l.is_empty() && l.iter().all(|l| !l.value.is_empty());
        if values_known(m.system.controls()) {
            files.push(write_file(out, "control_labels.csv", &label_points(m.system.controls())?.to_csv())?);
        }
        if values_known(m.system.disturbances()) {
            files.push(write_file(out, "disturbance_labels.csv", &label_points(m.system.disturbances())?.to_csv())?);
        }
    }
    if exports.dot {
        files.push(write_file(out, "model.dot", &m.system.to_dot("model"))?);
    }
    if let Some(ControlSystem::Linear(lin)) = &pipeline.system {
        if lin.dim() == 2 && (exports.svg || exports.csv) {
            let steps = pipeline.config.reach.as_ref().map_or(DEFAULT_REACH_STEPS, |r| r.steps);
            let ra = match &m.control_reach {
                Some(r) => r.clone(),
                None => control_reach(lin, m.params.tau, steps)?,
            };
            let rb = match &m.disturbance_reach {
                Some(r) => r.clone(),
                None => disturbance_reach(lin, m.params.tau, steps)?,
            };
            let pa = to_vertices(&ra.set)?;
            let pb = to_vertices(&rb.set)?;
            if exports.csv {
                files.push(write_file(out, "reach_control.csv", &polytope_csv(&pa))?);
                files.push(write_file(out, "reach_disturbance.csv", &polytope_csv(&pb))?);
            }
            if exports.svg {
                let ca: Vec<Vec<f64>> = m.system.controls().iter().map(|l| l.value.clone()).collect();
                let cb: Vec<Vec<f64>> = m.system.disturbances().iter().map(|l| l.value.clone()).collect();
                let svg = render_svg(&[
                    (
                        "control reach set and labels",
                        vec![
                            SvgLayer::Polygon { poly: &pa, fill: "#9ecae1" },
                            SvgLayer::Points { points: &ca, color: "black" },
                        ],
                    ),
                    (
                        "disturbance reach set and labels",
                        vec![
                            SvgLayer::Polygon { poly: &pb, fill: "#fdae6b" },
                            SvgLayer::Points { points: &cb, color: "black" },
                        ],
                    ),
                ])?;
                files.push(write_file(out, "reach.svg", &svg)?);
            }
        }
    }
    Ok(files)
}

fn load_pipeline(opts: &Opts) -> Result<Pipeline> {
    let mut config = load_run_config(&opts.config)?;
    apply_overrides(&mut config, opts);
    build_pipeline(config, &base_dir(&opts.config))
}

fn cmd_abstract(opts: &Opts, log: &mut dyn Write) -> Result<Outcome> {
    let p = load_pipeline(opts)?;
    let m = &p.model;
    let files = export_model(&p, &p.config.exports, &opts.out)?;
    writeln!(log, "states: {}", m.system.n_states())?;
    writeln!(log, "control labels: {}", m.system.controls().len())?;
    writeln!(log, "disturbance labels: {}", m.system.disturbances().len())?;
    writeln!(log, "transitions: {}", m.system.transitions().len())?;
    writeln!(log, "parameter margin: {}", fmt_g12(m.condition.margin))?;
    for r in [&m.control_reach, &m.disturbance_reach].into_iter().flatten() {
        writeln!(log, "reach error bound: {:e}", r.error_bound)?;
    }
    for c in &m.certificates {
        writeln!(log, "label certificate {:?}: pass={}", c.kind, c.pass)?;
    }
    for w in p.warnings.iter().chain(&m.warnings) {
        writeln!(log, "warning: {w}")?;
    }
    for f in files {
        writeln!(log, "wrote {}", f.display())?;
    }
    Ok(Outcome::Pass)
}

/// Loads a transition system from a run config, a model dump or a plain
/// transition system document.
pub fn load_transition_system(path: &Path) -> Result<TransitionSystem> {
    let v = read_value(path)?;
    if v.get("params").is_some() && v.get("records").is_none() {
        let config: RunConfig = parse_value(v, path)?;
        return Ok(build_pipeline(config, &base_dir(path))?.model.system);
    }
    if v.get("records").is_some() {
        let m: SymbolicModel = parse_value(v, path)?;
        return Ok(m.system);
    }
    parse_value(v, path)
}

fn cmd_check(opts: &Opts, log: &mut dyn Write) -> Result<Outcome> {
    let mut cc: CheckConfig = parse_value(read_value(&opts.config)?, &opts.config)?;
    if let Some(e) = opts.epsilon {
        cc.epsilon = e;
    }
    if let Some(v) = opts.variant {
        cc.variant = v;
    }
    let dir = base_dir(&opts.config);
    let t1 = load_transition_system(&resolve(&dir, &cc.left))?;
    let t2 = load_transition_system(&resolve(&dir, &cc.right))?;
    match &cc.relation {
        Some(rp) => {
            let rp = resolve(&dir, rp);
            let rf: RelationFile = parse_value(read_value(&rp)?, &rp)?;
            let r = rf.resolve(&t1, &t2)?;
            let report = check_alt_bisim(&t1, &t2, &r, cc.epsilon, cc.variant)?;
            write_file(&opts.out, "report.json", &to_canonical_json(&report)?)?;
            let text = report.to_text();
            write_file(&opts.out, "report.txt", &text)?;
            log.write_all(text.as_bytes())?;
            Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
        }
        None => {
            let res = max_alt_bisim(&t1, &t2, cc.epsilon, cc.variant)?;
            write_file(&opts.out, "relation.json", &to_canonical_json(&res.relation.to_file(&t1, &t2))?)?;
            writeln!(
                log,
                "maximal relation: {} pairs after {} sweeps; full domain left={} right={}",
                res.relation.len(),
                res.sweeps,
                res.full_domain_left,
                res.full_domain_right
            )?;
            writeln!(log, "verdict: {}", if res.bisimilar() { "PASS" } else { "FAIL" })?;
            Ok(if res.bisimilar() { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

fn write_strategy(strategy: &Strategy, out: &Path) -> Result<()> {
    write_file(out, "strategy.json", &to_canonical_json(strategy)?)?;
    write_file(out, "strategy.csv", &strategy.to_csv())?;
    Ok(())
}

fn report_monte_carlo(r: &MonteCarloReport, log: &mut dyn Write) -> Result<()> {
    writeln!(
        log,
        "monte carlo: {}/{} runs pass ({:.2}%)",
        r.passed,
        r.total,
        100.0 * r.pass_rate()
    )?;
    let mins: Vec<String> = r.final_min.iter().map(|v| fmt_g12(*v)).collect();
    writeln!(log, "final state minimum per axis: [{}]", mins.join(", "))?;
    for f in &r.failures {
        writeln!(log, "failure: initial {:?} run {}: {}", f.initial, f.run, f.reason)?;
    }
    Ok(())
}

fn cmd_synthesize(opts: &Opts, log: &mut dyn Write) -> Result<Outcome> {
    let p = load_pipeline(opts)?;
    let (target, strategy) = synthesize(&p)?;
    write_strategy(&strategy, &opts.out)?;
    let ids: Vec<&str> = target.iter().map(|q| p.model.system.states()[*q].id.as_str()).collect();
    writeln!(log, "target: {{{}}}", ids.join(", "))?;
    writeln!(log, "horizon: {}", strategy.horizon)?;
    for (q, l) in &strategy.labels {
        writeln!(log, "U*({q}) = {{{}}}", l.join(", "))?;
    }
    if strategy.is_empty() {
        writeln!(log, "winning set is empty")?;
        return Ok(Outcome::Fail);
    }
    if p.config.simulation.is_some() && p.system.is_some() {
        let r = run_monte_carlo(&p, &strategy)?;
        write_file(&opts.out, "montecarlo.json", &to_canonical_json(&r)?)?;
        report_monte_carlo(&r, log)?;
        if r.passed != r.total {
            return Ok(Outcome::Fail);
        }
    }
    Ok(Outcome::Pass)
}

fn cmd_simulate(opts: &Opts, log: &mut dyn Write) -> Result<Outcome> {
    let p = load_pipeline(opts)?;
    let (_, strategy) = synthesize(&p)?;
    if strategy.is_empty() {
        writeln!(log, "winning set is empty")?;
        return Ok(Outcome::Fail);
    }
    let sim = p
        .config
        .simulation
        .as_ref()
        .ok_or_else(|| Error::Parse("config has no `simulation`".into()))?;
    let sys = p
        .system
        .as_ref()
        .ok_or_else(|| Error::Parse("simulation needs a continuous system".into()))?;
    let mc = monte_carlo_config(sim)?;
    // Trajectories under the extreme constant disturbances, one per initial state.
    let cl = ClosedLoop::new(sys, &p.model, &strategy, mc.simulation.clone())?;
    let mut csv = String::from("initial,disturbance,step,state\n");
    let vb = sys.v_box();
    for (i, x0) in mc.initial_states.iter().enumerate() {
        for (name, v) in [("lower", vb.lower()), ("upper", vb.upper())] {
            let res = cl.simulate(x0, &Disturbance::Constant { value: v.to_vec() })?;
            for (k, x) in res.trajectory.iter().enumerate() {
                let xs: Vec<String> = x.iter().map(|v| fmt_g12(*v)).collect();
                csv.push_str(&format!("{i},{name},{k},{}\n", xs.join(" ")));
            }
        }
    }
    write_file(&opts.out, "trajectories.csv", &csv)?;
    let r = monte_carlo(sys, &p.model, &strategy, &mc)?;
    write_file(&opts.out, "montecarlo.json", &to_canonical_json(&r)?)?;
    report_monte_carlo(&r, log)?;
    Ok(if r.passed == r.total { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_export(opts: &Opts, log: &mut dyn Write) -> Result<Outcome> {
    let v = read_value(&opts.config)?;
    let all = Exports::default();
    let files = if v.get("params").is_some() && v.get("records").is_none() {
        let p = load_pipeline(opts)?;
        export_model(&p, &all, &opts.out)?
    } else {
        let t = load_transition_system(&opts.config)?;
        vec![
            write_file(&opts.out, "system.json", &to_canonical_json(&t)?)?,
            write_file(&opts.out, "table.csv", &t.to_table_csv())?,
            write_file(&opts.out, "model.dot", &t.to_dot("model"))?,
        ]
    };
    for f in files {
        writeln!(log, "wrote {}", f.display())?;
    }
    Ok(Outcome::Pass)
}

/// Runs one command, writing human-readable output to `log`.
pub fn run(cli: &Cli, log: &mut dyn Write) -> Result<Outcome> {
    match &cli.command {
        Command::Abstract(o) => cmd_abstract(o, log),
        Command::Check(o) => cmd_check(o, log),
        Command::Synthesize(o) => cmd_synthesize(o, log),
        Command::Simulate(o) => cmd_simulate(o, log),
        Command::Export(o) => cmd_export(o, log),
    }
}
