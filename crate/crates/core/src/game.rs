//! Robust synthesis on alternating transition systems and refinement of the
//! resulting label strategies to continuous inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::abstraction::SymbolicModel;
use crate::error::{Error, Result};
use crate::lattice::{canonical, Lattice};
use crate::numerics::{default_rk4_steps, exp_integral, mat_exp, rk4_trajectory, vec_inf_dist, vec_inf_norm, DiscreteFlow, Matrix};
use crate::sysmodel::{BoxRegion, ControlSystem, LinearSystem, VectorField};
use crate::tsys::TransitionSystem;

/// Labels `a` at `q` such that every disturbance label has a transition and
/// every successor lies in `w`.
pub fn winning_labels(t: &TransitionSystem, q: usize, w: &[bool]) -> Vec<usize> {
    let nb = t.disturbances().len();
    (0..t.controls().len())
        .filter(|&a| {
            nb > 0
                && (0..nb).all(|b| {
                    let s = t.succ(q, a, b);
                    !s.is_empty() && s.iter().all(|p| w[*p])
                })
        })
        .collect()
}

fn mask(t: &TransitionSystem, w: &BTreeSet<usize>) -> Result<Vec<bool>> {
    let mut m = vec![false; t.n_states()];
    for &q in w {
        if q >= t.n_states() {
            return Err(Error::InvalidParameter(format!("target state index {q} out of range")));
        }
        m[q] = true;
    }
    Ok(m)
}

/// Controllable predecessor with the certifying labels per state.
pub fn cpre_labels(t: &TransitionSystem, w: &BTreeSet<usize>) -> Result<BTreeMap<usize, Vec<usize>>> {
    let m = mask(t, w)?;
    Ok((0..t.n_states())
        .filter_map(|q| {
            let l = winning_labels(t, q, &m);
            (!l.is_empty()).then_some((q, l))
        })
        .collect())
}

pub fn cpre(t: &TransitionSystem, w: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    Ok(cpre_labels(t, w)?.into_keys().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Bounded(usize),
    Unbounded,
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Bounded(k) => s.serialize_u64(*k as u64),
            Horizon::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(k) => Ok(Horizon::Bounded(k)),
            Raw::S(s) if s == "unbounded" => Ok(Horizon::Unbounded),
            Raw::S(s) => Err(serde::de::Error::custom(format!("horizon must be a number or \"unbounded\", got {s:?}"))),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Bounded(k) => write!(f, "{k}"),
            Horizon::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "unbounded" {
            return Ok(Horizon::Unbounded);
        }
        s.parse::<usize>()
            .map(Horizon::Bounded)
            .map_err(|_| format!("horizon must be a positive integer or `unbounded`, got `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Reach,
    Safe,
}

/// Winning states with their admissible control labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub objective: Objective,
    pub horizon: Horizon,
    /// State id to label ids, in label order.
    pub labels: BTreeMap<String, Vec<String>>,
    /// Reach only: the step at which a state first wins.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub levels: BTreeMap<String, usize>,
}

impl Strategy {
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,labels\n");
        for (q, l) in &self.labels {
            out.push_str(q);
            out.push(',');
            out.push_str(&l.join("|"));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, objective: Objective, horizon: Horizon) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for (i, line) in text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
            if i == 0 && line.starts_with("state") {
                continue;
            }
            let (q, l) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("strategy row `{line}` lacks a comma")))?;
            labels.insert(q.trim().to_string(), l.split('|').map(|s| s.trim().to_string()).collect());
        }
        Ok(Strategy {
            objective,
            horizon,
            labels,
            levels: BTreeMap::new(),
        })
    }

    /// First label of `q` in the system's label order.
    pub fn first_label(&self, t: &TransitionSystem, q: &str) -> Option<usize> {
        self.labels
            .get(q)?
            .iter()
            .filter_map(|l| t.control_index(l))
            .min()
    }
}

fn ids(t: &TransitionSystem, labels: &[usize]) -> Vec<String> {
    labels.iter().map(|a| t.controls()[*a].id.clone()).collect()
}

/// Robust reachability: `Win_1 = cpre(W)`, `Win_{j+1} = Win_j ∪ cpre(W ∪ Win_j)`.
/// Each state keeps the labels certified at its first winning step.
pub fn solve_reach(t: &TransitionSystem, w: &BTreeSet<usize>, horizon: Horizon) -> Result<Strategy> {
    if horizon == Horizon::Bounded(0) {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut goal = mask(t, w)?;
    let mut labels = BTreeMap::new();
    let mut levels = BTreeMap::new();
    let mut level = 0;
    loop {
        level += 1;
        if let Horizon::Bounded(k) = horizon {
            if level > k {
                break;
            }
        }
        let fresh: Vec<(usize, Vec<usize>)> = (0..t.n_states())
            .filter(|q| !levels.contains_key(&t.states()[*q].id))
            .filter_map(|q| {
                let l = winning_labels(t, q, &goal);
                (!l.is_empty()).then_some((q, l))
            })
            .collect();
        if fresh.is_empty() {
            break;
        }
        for (q, l) in fresh {
            let id = t.states()[q].id.clone();
            labels.insert(id.clone(), ids(t, &l));
            levels.insert(id, level);
            goal[q] = true;
        }
    }
    Ok(Strategy {
        objective: Objective::Reach,
        horizon,
        labels,
        levels,
    })
}

/// Robust safety: greatest fixpoint of `S ∩ cpre(·)`.
pub fn solve_safe(t: &TransitionSystem, s: &BTreeSet<usize>) -> Result<Strategy> {
    let mut x = mask(t, s)?;
    loop {
        let next: Vec<bool> = (0..t.n_states())
            .map(|q| x[q] && !winning_labels(t, q, &x).is_empty())
            .collect();
        if next == x {
            break;
        }
        x = next;
    }
    let labels = (0..t.n_states())
        .filter(|&q| x[q])
        .map(|q| (t.states()[q].id.clone(), ids(t, &winning_labels(t, q, &x))))
        .collect();
    Ok(Strategy {
        objective: Objective::Safe,
        horizon: Horizon::Unbounded,
        labels,
        levels: BTreeMap::new(),
    })
}

/// Replays every strategy move on the model: each chosen label must be total
/// over disturbances and land in the target or an earlier level (reach) or in
/// the winning set (safety). Returns the first offending `(state, label)`.
pub fn verify_strategy(t: &TransitionSystem, w: &BTreeSet<usize>, strategy: &Strategy) -> Result<Option<(String, String)>> {
    let target = mask(t, w)?;
    for (q_id, labels) in &strategy.labels {
        let q = t
            .state_index(q_id)
            .ok_or_else(|| Error::Parse(format!("unknown strategy state `{q_id}`")))?;
        let allowed: Vec<bool> = match strategy.objective {
            Objective::Reach => {
                let lvl = strategy.levels.get(q_id).copied().unwrap_or(1);
                (0..t.n_states())
                    .map(|p| target[p] || strategy.levels.get(&t.states()[p].id).is_some_and(|l| *l < lvl))
                    .collect()
            }
            Objective::Safe => (0..t.n_states()).map(|p| strategy.labels.contains_key(&t.states()[p].id)).collect(),
        };
        for l in labels {
            let a = t
                .control_index(l)
                .ok_or_else(|| Error::Parse(format!("unknown strategy label `{l}`")))?;
            if !winning_labels(t, q, &allowed).contains(&a) {
                return Ok(Some((q_id.clone(), l.clone())));
            }
        }
    }
    Ok(None)
}

/// Piecewise-constant input realizing a control label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Input per segment after clamping to the control box.
    pub segments: Vec<Vec<f64>>,
    /// Minimum-norm solution before clamping.
    pub unclamped: Vec<Vec<f64>>,
    pub segment_duration: f64,
    pub residual_before_clamp: f64,
    pub residual: f64,
    pub clamped: bool,
}

/// Response matrix mapping the stacked segment inputs to `∫₀^τ e^{A(τ−t)}Bu(t)dt`.
fn response_matrix(sys: &LinearSystem, tau: f64, segments: usize) -> Result<Matrix> {
    let n = sys.dim();
    let m = sys.b.cols();
    let h = tau / segments as f64;
    let gb = exp_integral(&sys.a, h)?.matmul(&sys.b);
    let mut out = Matrix::zeros(n, segments * m);
    for j in 0..segments {
        let lag = tau - (j + 1) as f64 * h;
        let block = mat_exp(&sys.a, lag)?.matmul(&gb);
        out.set_block(0, j * m, &block);
    }
    Ok(out)
}

/// `Mᵀ(MMᵀ + λI)⁻¹b` with a tiny ridge, usable when `M` loses rank.
fn ridge_solve(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let mut gram = m.matmul(&m.transpose());
    let lam = 1e-14 * gram.inf_norm().max(f64::MIN_POSITIVE);
    for i in 0..gram.rows() {
        gram[(i, i)] += lam;
    }
    let y = gram.solve(&Matrix::column(b))?;
    Ok(m.transpose().mul_vec(y.as_slice()))
}

/// Solves `a = ∫₀^τ e^{A(τ−t)}Bu(t)dt` for `u` constant on `segments` equal
/// pieces, then clamps to the control box with an active-set refit.
pub fn refine_control(sys: &LinearSystem, a: &[f64], tau: f64, segments: usize) -> Result<Refinement> {
    if a.len() != sys.dim() {
        return Err(Error::DimensionMismatch("label dimension vs state dimension".into()));
    }
    if segments == 0 || !(tau > 0.0) {
        return Err(Error::InvalidParameter("segments and tau must be positive".into()));
    }
    let m = sys.b.cols();
    let k = segments * m;
    let resp = response_matrix(sys, tau, segments)?;
    let u = resp.min_norm_solve(a).map_err(|e| match e {
        Error::Singular => Error::Precondition("segment response matrix is rank deficient; the label is not reachable".into()),
        other => other,
    })?;
    let residual_before_clamp = vec_inf_dist(&resp.mul_vec(&u), a);
    let tolerance = 1e-6 * vec_inf_norm(a);
    if residual_before_clamp > tolerance.max(1e-15) {
        return Err(Error::RefinementInfeasible {
            residual: residual_before_clamp,
            tolerance,
        });
    }
    let lo = sys.u_box.lower();
    let hi = sys.u_box.upper();
    let bound = |i: usize, v: f64| v.clamp(lo[i % m], hi[i % m]);
    let mut fixed = vec![false; k];
    let mut cur = u.clone();
    for _ in 0..=k {
        let mut changed = false;
        for i in 0..k {
            if !fixed[i] && bound(i, cur[i]) != cur[i] {
                fixed[i] = true;
                cur[i] = bound(i, cur[i]);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let free: Vec<usize> = (0..k).filter(|i| !fixed[*i]).collect();
        if free.is_empty() {
            break;
        }
        let mut rhs = a.to_vec();
        for i in (0..k).filter(|i| fixed[*i]) {
            for (r, row) in rhs.iter_mut().enumerate() {
                *row -= resp[(r, i)] * cur[i];
            }
        }
        let mut sub = Matrix::zeros(a.len(), free.len());
        for (c, &i) in free.iter().enumerate() {
            for r in 0..a.len() {
                sub[(r, c)] = resp[(r, i)];
            }
        }
        for (c, v) in ridge_solve(&sub, &rhs)?.into_iter().enumerate() {
            cur[free[c]] = v;
        }
    }
    let cur: Vec<f64> = cur.iter().enumerate().map(|(i, v)| bound(i, *v)).collect();
    let clamped = fixed.iter().any(|f| *f);
    let residual = vec_inf_dist(&resp.mul_vec(&cur), a);
    let chunk = |v: &[f64]| v.chunks(m).map(|c| c.to_vec()).collect::<Vec<_>>();
    Ok(Refinement {
        segments: chunk(&cur),
        unclamped: chunk(&u),
        segment_duration: tau / segments as f64,
        residual_before_clamp,
        residual,
        clamped,
    })
}

/// Disturbance over the whole simulation horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Disturbance {
    Constant { value: Vec<f64> },
    /// Equal-length pieces covering `[0, steps·τ]`.
    Pieces { values: Vec<Vec<f64>> },
}

impl Disturbance {
    /// Breakpoints and values inside `[t0, t1]`.
    fn pieces_in(&self, t0: f64, t1: f64, total: f64) -> Vec<(f64, f64, Vec<f64>)> {
        match self {
            Disturbance::Constant { value } => vec![(t0, t1, value.clone())],
            Disturbance::Pieces { values } => {
                let k = values.len();
                let h = total / k as f64;
                let mut out = Vec::new();
                for (i, v) in values.iter().enumerate() {
                    let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                    let (a, b) = (a.max(t0), b.min(t1));
                    if b - a > 1e-12 * total {
                        out.push((a, b, v.clone()));
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub steps: usize,
    /// Refinement segments per step (linear systems).
    pub segments: usize,
    /// Box that the final state must lie in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_box: Option<BoxRegion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub state: Vec<f64>,
    pub abstract_state: String,
    /// The quantized cell was not winning and a nearby winning state was used.
    pub snapped: bool,
    pub label: String,
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopResult {
    pub trajectory: Vec<Vec<f64>>,
    pub log: Vec<StepLog>,
    pub verdict: Verdict,
}

impl ClosedLoopResult {
    pub fn final_state(&self) -> &[f64] {
        self.trajectory.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Closed-loop simulator with refinements and discrete flows cached.
pub struct ClosedLoop<'a> {
    sys: &'a ControlSystem,
    model: &'a SymbolicModel,
    strategy: &'a Strategy,
    config: SimulationConfig,
    lattice: Lattice,
    refinements: RwLock<HashMap<usize, Arc<Refinement>>>,
    flows: RwLock<HashMap<u64, Arc<DiscreteFlow>>>,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(sys: &'a ControlSystem, model: &'a SymbolicModel, strategy: &'a Strategy, config: SimulationConfig) -> Result<Self> {
        if config.steps == 0 || config.segments == 0 {
            return Err(Error::InvalidParameter("steps and segments must be positive".into()));
        }
        if sys.dim() != model.system.output_dim() {
            return Err(Error::DimensionMismatch("system vs model dimension".into()));
        }
        let p = &model.params;
        let lattice = Lattice::new(p.eta, sys.dim())?.with_clip(p.state_region.clone())?;
        Ok(ClosedLoop {
            sys,
            model,
            strategy,
            config,
            lattice,
            refinements: RwLock::new(HashMap::new()),
            flows: RwLock::new(HashMap::new()),
        })
    }

    fn flow(&self, lin: &LinearSystem, h: f64) -> Result<Arc<DiscreteFlow>> {
        let key = canonical(h).to_bits();
        if let Some(f) = self.flows.read().map_err(|_| poisoned())?.get(&key) {
            return Ok(f.clone());
        }
        let f = Arc::new(DiscreteFlow::new(lin, canonical(h))?);
        self.flows.write().map_err(|_| poisoned())?.insert(key, f.clone());
        Ok(f)
    }

    fn refinement(&self, lin: &LinearSystem, a: usize) -> Result<Arc<Refinement>> {
        if let Some(r) = self.refinements.read().map_err(|_| poisoned())?.get(&a) {
            return Ok(r.clone());
        }
        let value = &self.model.system.controls()[a].value;
        let r = Arc::new(refine_control(lin, value, self.model.params.tau, self.config.segments)?);
        self.refinements.write().map_err(|_| poisoned())?.insert(a, r.clone());
        Ok(r)
    }

    /// Abstract state for `x`: its quantization when winning, else the
    /// nearest winning state within `ε`.
    fn locate(&self, x: &[f64]) -> Result<Option<(usize, bool)>> {
        let t = &self.model.system;
        let cell = self.lattice.quantize(x)?;
        if let Some(q) = t.states().iter().position(|s| s.output == cell) {
            if self.strategy.labels.contains_key(&t.states()[q].id) {
                return Ok(Some((q, false)));
            }
        }
        let eps = self.model.params.epsilon;
        let best = t
            .states()
            .iter()
            .enumerate()
            .filter(|(_, s)| self.strategy.labels.contains_key(&s.id))
            .map(|(q, s)| (q, vec_inf_dist(&s.output, x)))
            .filter(|(_, d)| *d <= eps)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(best.map(|(q, _)| (q, true)))
    }

    /// Fails with `Precondition` when `x0` is not within `ε` of a winning state.
    pub fn simulate(&self, x0: &[f64], disturbance: &Disturbance) -> Result<ClosedLoopResult> {
        if x0.len() != self.sys.dim() {
            return Err(Error::DimensionMismatch("initial state dimension".into()));
        }
        if self.locate(x0)?.is_none() {
            return Err(Error::Precondition(format!(
                "initial state {x0:?} is not within epsilon of a winning state"
            )));
        }
        let tau = self.model.params.tau;
        let total = tau * self.config.steps as f64;
        let t = &self.model.system;
        let mut x = x0.to_vec();
        let mut trajectory = vec![x.clone()];
        let mut log = Vec::new();
        for step in 0..self.config.steps {
            let Some((q, snapped)) = self.locate(&x)? else {
                return Ok(ClosedLoopResult {
                    trajectory,
                    log,
                    verdict: Verdict {
                        pass: false,
                        failed_step: Some(step),
                        reason: format!("state {x:?} left the epsilon-neighborhood of the winning set"),
                    },
                });
            };
            let q_id = &t.states()[q].id;
            let a = self
                .strategy
                .first_label(t, q_id)
                .ok_or_else(|| Error::Parse(format!("strategy for `{q_id}` names no known label")))?;
            let t0 = step as f64 * tau;
            let mut clamped = false;
            x = match self.sys {
                ControlSystem::Linear(lin) => {
                    let r = match self.refinement(lin, a) {
                        Ok(r) => r,
                        Err(e @ (Error::RefinementInfeasible { .. } | Error::Precondition(_))) => {
                            return Ok(ClosedLoopResult {
                                trajectory,
                                log,
                                verdict: Verdict {
                                    pass: false,
                                    failed_step: Some(step),
                                    reason: e.to_string(),
                                },
                            })
                        }
                        Err(e) => return Err(e),
                    };
                    clamped = r.clamped;
                    self.integrate_linear(lin, &x, &r, disturbance, t0, total)?
                }
                ControlSystem::Nonlinear(nl) => {
                    let u = t.controls()[a].value.clone();
                    let steps = default_rk4_steps(tau, nl.lipschitz);
                    let mut y = x.clone();
                    for (s0, s1, v) in disturbance.pieces_in(t0, t0 + tau, total) {
                        let k = ((steps as f64) * (s1 - s0) / tau).ceil().max(1.0) as usize;
                        y = rk4_trajectory(nl, &y, &u, &v, s1 - s0, k)?.point;
                    }
                    y
                }
            };
            log.push(StepLog {
                step,
                state: trajectory.last().cloned().unwrap_or_default(),
                abstract_state: q_id.clone(),
                snapped,
                label: t.controls()[a].id.clone(),
                clamped,
            });
            trajectory.push(x.clone());
        }
        let verdict = match &self.config.spec_box {
            Some(b) if !b.contains(&x) => Verdict {
                pass: false,
                failed_step: Some(self.config.steps),
                reason: format!("final state {x:?} leaves the target box"),
            },
            _ => Verdict {
                pass: true,
                failed_step: None,
                reason: "ok".into(),
            },
        };
        Ok(ClosedLoopResult {
            trajectory,
            log,
            verdict,
        })
    }

    /// One `τ`-step over the merged control and disturbance breakpoints.
    fn integrate_linear(
        &self,
        lin: &LinearSystem,
        x0: &[f64],
        r: &Refinement,
        disturbance: &Disturbance,
        t0: f64,
        total: f64,
    ) -> Result<Vec<f64>> {
        let tau = self.model.params.tau;
        let h = r.segment_duration;
        let mut x = x0.to_vec();
        for (s0, s1, v) in disturbance.pieces_in(t0, t0 + tau, total) {
            let mut a = s0;
            while a < s1 - 1e-12 * tau {
                let seg = (((a - t0) / h + 1e-9).floor() as usize).min(r.segments.len() - 1);
                let seg_end = t0 + (seg + 1) as f64 * h;
                let b = if seg_end < s1 - 1e-12 * tau { seg_end } else { s1 };
                x = self.flow(lin, b - a)?.step(&x, &r.segments[seg], &v);
                a = b;
            }
        }
        Ok(x)
    }
}

fn poisoned() -> Error {
    Error::Precondition("simulation cache lock poisoned".into())
}

pub fn closed_loop_simulate(
    sys: &ControlSystem,
    model: &SymbolicModel,
    strategy: &Strategy,
    x0: &[f64],
    disturbance: &Disturbance,
    config: SimulationConfig,
) -> Result<ClosedLoopResult> {
    ClosedLoop::new(sys, model, strategy, config)?.simulate(x0, disturbance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub initial_states: Vec<Vec<f64>>,
    pub runs: usize,
    pub pieces: usize,
    pub seed: u64,
    pub simulation: SimulationConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloFailure {
    pub initial: Vec<f64>,
    pub run: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub total: usize,
    pub passed: usize,
    /// Smallest value of every final-state coordinate over all runs.
    pub final_min: Vec<f64>,
    pub final_max: Vec<f64>,
    /// At most 20 failures, in (initial state, run) order.
    pub failures: Vec<MonteCarloFailure>,
}

impl MonteCarloReport {
    pub fn pass_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }
}

/// Disturbance of run `run`: `pieces` uniform samples from the box, drawn
/// from a generator seeded with `seed + run`.
pub fn random_disturbance(v_box: &BoxRegion, pieces: usize, seed: u64, run: usize) -> Disturbance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
    let values = (0..pieces.max(1))
        .map(|_| {
            v_box
                .lower()
                .iter()
                .zip(v_box.upper())
                .map(|(l, u)| if u > l { rng.gen_range(*l..=*u) } else { *l })
                .collect()
        })
        .collect();
    Disturbance::Pieces { values }
}

/// Every initial state against every random disturbance, in parallel.
pub fn monte_carlo(
    sys: &ControlSystem,
    model: &SymbolicModel,
    strategy: &Strategy,
    config: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    let sim = ClosedLoop::new(sys, model, strategy, config.simulation.clone())?;
    let disturbances: Vec<Disturbance> = (0..config.runs)
        .map(|r| random_disturbance(sys.v_box(), config.pieces, config.seed, r))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..config.initial_states.len())
        .flat_map(|i| (0..config.runs).map(move |r| (i, r)))
        .collect();
    let results: Vec<ClosedLoopResult> = jobs
        .par_iter()
        .map(|&(i, r)| sim.simulate(&config.initial_states[i], &disturbances[r]))
        .collect::<Result<_>>()?;
    let n = sys.dim();
    let mut report = MonteCarloReport {
        total: results.len(),
        passed: 0,
        final_min: vec![f64::INFINITY; n],
        final_max: vec![f64::NEG_INFINITY; n],
        failures: Vec::new(),
    };
    for (&(i, r), res) in jobs.iter().zip(&results) {
        if res.verdict.pass {
            report.passed += 1;
        } else if report.failures.len() < 20 {
            report.failures.push(MonteCarloFailure {
                initial: config.initial_states[i].clone(),
                run: r,
                reason: res.verdict.reason.clone(),
            });
        }
        for (k, v) in res.final_state().iter().enumerate() {
            report.final_min[k] = report.final_min[k].min(*v);
            report.final_max[k] = report.final_max[k].max(*v);
        }
    }
    Ok(report)
}
