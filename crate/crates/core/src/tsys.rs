//! Finite alternating transition systems and the approximate bisimulation
//! checkers: plain, alternating (control-first), dual (disturbance-first) and
//! combined.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::canonical;
use crate::numerics::vec_inf_dist;
use crate::sysmodel::BoxRegion;

const EPS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub id: String,
    pub output: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub id: String,
    /// Continuous meaning of the label (reach-set point or input value); may be empty.
    #[serde(default)]
    pub value: Vec<f64>,
}

impl Label {
    pub fn new(id: impl Into<String>, value: Vec<f64>) -> Self {
        Label {
            id: id.into(),
            value: value.into_iter().map(canonical).collect(),
        }
    }
}

/// `(Q, A×B, →, O, H)` with `O = R^n` and outputs stored per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TsDef", into = "TsDef")]
pub struct TransitionSystem {
    states: Vec<State>,
    controls: Vec<Label>,
    disturbances: Vec<Label>,
    transitions: Vec<[usize; 4]>,
    output_dim: usize,
    succ: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TsDef {
    output_dim: usize,
    states: Vec<State>,
    control_labels: Vec<Label>,
    disturbance_labels: Vec<Label>,
    transitions: Vec<[String; 4]>,
}

impl TryFrom<TsDef> for TransitionSystem {
    type Error = Error;
    fn try_from(d: TsDef) -> Result<Self> {
        let find = |list: Vec<&str>, id: &str, what: &str| {
            list.iter()
                .position(|s| *s == id)
                .ok_or_else(|| Error::Parse(format!("unknown {what} `{id}`")))
        };
        let sids: Vec<&str> = d.states.iter().map(|s| s.id.as_str()).collect();
        let aids: Vec<&str> = d.control_labels.iter().map(|s| s.id.as_str()).collect();
        let bids: Vec<&str> = d.disturbance_labels.iter().map(|s| s.id.as_str()).collect();
        let mut trans = Vec::with_capacity(d.transitions.len());
        for [q, a, b, p] in &d.transitions {
            trans.push([
                find(sids.clone(), q, "state")?,
                find(aids.clone(), a, "control label")?,
                find(bids.clone(), b, "disturbance label")?,
                find(sids.clone(), p, "state")?,
            ]);
        }
        let ts = TransitionSystem::new(d.states, d.control_labels, d.disturbance_labels, trans)?;
        if ts.output_dim != d.output_dim {
            return Err(Error::DimensionMismatch(format!(
                "declared output_dim {} but outputs have dimension {}",
                d.output_dim, ts.output_dim
            )));
        }
        Ok(ts)
    }
}

impl From<TransitionSystem> for TsDef {
    fn from(t: TransitionSystem) -> Self {
        let transitions = t
            .transitions
            .iter()
            .map(|[q, a, b, p]| {
                [
                    t.states[*q].id.clone(),
                    t.controls[*a].id.clone(),
                    t.disturbances[*b].id.clone(),
                    t.states[*p].id.clone(),
                ]
            })
            .collect();
        TsDef {
            output_dim: t.output_dim,
            states: t.states,
            control_labels: t.controls,
            disturbance_labels: t.disturbances,
            transitions,
        }
    }
}

fn unique_ids<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::InvalidParameter(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

impl TransitionSystem {
    /// Transitions are `[q, a, b, p]` index quadruples; duplicates are merged.
    pub fn new(
        states: Vec<State>,
        controls: Vec<Label>,
        disturbances: Vec<Label>,
        mut transitions: Vec<[usize; 4]>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("transition system without states".into()));
        }
        let output_dim = states[0].output.len();
        if states.iter().any(|s| s.output.len() != output_dim) {
            return Err(Error::DimensionMismatch("state outputs of different dimensions".into()));
        }
        unique_ids(states.iter().map(|s| s.id.as_str()), "state")?;
        unique_ids(controls.iter().map(|s| s.id.as_str()), "control label")?;
        unique_ids(disturbances.iter().map(|s| s.id.as_str()), "disturbance label")?;
        let (nq, na, nb) = (states.len(), controls.len(), disturbances.len());
        for t in &transitions {
            if t[0] >= nq || t[3] >= nq || t[1] >= na || t[2] >= nb {
                return Err(Error::InvalidParameter(format!("transition {t:?} references a missing id")));
            }
        }
        transitions.sort_unstable();
        transitions.dedup();
        let mut succ = vec![Vec::new(); nq * na * nb];
        for [q, a, b, p] in &transitions {
            succ[(q * na + a) * nb + b].push(*p);
        }
        let states = states
            .into_iter()
            .map(|s| State {
                output: s.output.into_iter().map(canonical).collect(),
                ..s
            })
            .collect();
        Ok(TransitionSystem {
            states,
            controls,
            disturbances,
            transitions,
            output_dim,
            succ,
        })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn controls(&self) -> &[Label] {
        &self.controls
    }

    pub fn disturbances(&self) -> &[Label] {
        &self.disturbances
    }

    pub fn transitions(&self) -> &[[usize; 4]] {
        &self.transitions
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn output(&self, q: usize) -> &[f64] {
        &self.states[q].output
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.id == id)
    }

    pub fn control_index(&self, id: &str) -> Option<usize> {
        self.controls.iter().position(|s| s.id == id)
    }

    pub fn disturbance_index(&self, id: &str) -> Option<usize> {
        self.disturbances.iter().position(|s| s.id == id)
    }

    /// Successors of `q` under `(a, b)`, sorted.
    pub fn succ(&self, q: usize, a: usize, b: usize) -> &[usize] {
        &self.succ[(q * self.controls.len() + a) * self.disturbances.len() + b]
    }

    /// Control labels with at least one transition from `q`.
    pub fn enabled_controls(&self, q: usize) -> Vec<usize> {
        (0..self.controls.len())
            .filter(|&a| (0..self.disturbances.len()).any(|b| !self.succ(q, a, b).is_empty()))
            .collect()
    }

    /// Disturbance labels with at least one transition from `q`.
    pub fn enabled_disturbances(&self, q: usize) -> Vec<usize> {
        (0..self.disturbances.len())
            .filter(|&b| (0..self.controls.len()).any(|a| !self.succ(q, a, b).is_empty()))
            .collect()
    }

    /// Every successor of `q` under any label.
    pub fn all_successors(&self, q: usize) -> BTreeSet<usize> {
        let (na, nb) = (self.controls.len(), self.disturbances.len());
        self.succ[q * na * nb..(q + 1) * na * nb].iter().flatten().copied().collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.succ.iter().all(|s| s.len() <= 1)
    }

    /// Table layout: one row per `(a, b)`, one column per state; cells list
    /// targets joined by `|`, or `--` when there is none.
    pub fn to_table_csv(&self) -> String {
        let mut out = String::from("a,b");
        for s in &self.states {
            out.push(',');
            out.push_str(&s.id);
        }
        out.push('\n');
        for a in 0..self.controls.len() {
            for b in 0..self.disturbances.len() {
                let _ = write!(out, "{},{}", self.controls[a].id, self.disturbances[b].id);
                for q in 0..self.states.len() {
                    let t = self.succ(q, a, b);
                    out.push(',');
                    if t.is_empty() {
                        out.push_str("--");
                    } else {
                        let ids: Vec<&str> = t.iter().map(|p| self.states[*p].id.as_str()).collect();
                        out.push_str(&ids.join("|"));
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Reads the table layout. `outputs` gives `H(q)` per column in order;
    /// label values are attached from the optional maps.
    pub fn from_table_csv(
        text: &str,
        outputs: &[Vec<f64>],
        control_values: &BTreeMap<String, Vec<f64>>,
        disturbance_values: &BTreeMap<String, Vec<f64>>,
    ) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty table".into()))?
            .split(',')
            .map(str::trim)
            .collect();
        if header.len() < 3 || header[0] != "a" || header[1] != "b" {
            return Err(Error::Parse("table header must start with `a,b`".into()));
        }
        let state_ids: Vec<String> = header[2..].iter().map(|s| s.to_string()).collect();
        if state_ids.len() != outputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "table has {} state columns but {} outputs were given",
                state_ids.len(),
                outputs.len()
            )));
        }
        let states: Vec<State> = state_ids
            .iter()
            .zip(outputs)
            .map(|(id, o)| State {
                id: id.clone(),
                output: o.clone(),
            })
            .collect();
        let mut controls: Vec<String> = Vec::new();
        let mut disturbances: Vec<String> = Vec::new();
        let mut raw: Vec<(usize, usize, usize, String)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != header.len() {
                return Err(Error::Parse(format!("row {} has {} cells, expected {}", lineno + 2, cells.len(), header.len())));
            }
            let a = position_or_push(&mut controls, cells[0]);
            let b = position_or_push(&mut disturbances, cells[1]);
            for (q, cell) in cells[2..].iter().enumerate() {
                if *cell != "--" {
                    for target in cell.split('|') {
                        raw.push((q, a, b, target.trim().to_string()));
                    }
                }
            }
        }
        let mut trans = Vec::with_capacity(raw.len());
        for (q, a, b, target) in raw {
            let p = state_ids
                .iter()
                .position(|s| *s == target)
                .ok_or_else(|| Error::Parse(format!("unknown target state `{target}`")))?;
            trans.push([q, a, b, p]);
        }
        let mk = |ids: Vec<String>, values: &BTreeMap<String, Vec<f64>>| {
            ids.into_iter()
                .map(|id| {
                    let v = values.get(&id).cloned().unwrap_or_default();
                    Label::new(id, v)
                })
                .collect::<Vec<_>>()
        };
        TransitionSystem::new(states, mk(controls, control_values), mk(disturbances, disturbance_values), trans)
    }

    /// One edge per `(q, p)` listing every label pair that produces it.
    pub fn to_dot(&self, name: &str) -> String {
        let mut edges: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
        for [q, a, b, p] in &self.transitions {
            edges
                .entry((*q, *p))
                .or_default()
                .push(format!("{}/{}", self.controls[*a].id, self.disturbances[*b].id));
        }
        let mut out = format!("digraph \"{name}\" {{\n  rankdir=LR;\n  node [shape=circle];\n");
        for s in &self.states {
            let coords: Vec<String> = s.output.iter().map(|v| crate::lattice::fmt_g12(*v)).collect();
            let _ = writeln!(out, "  \"{}\" [label=\"{}\\n({})\"];", s.id, s.id, coords.join(","));
        }
        for ((q, p), labels) in edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                self.states[q].id,
                self.states[p].id,
                labels.join(" ")
            );
        }
        out.push_str("}\n");
        out
    }
}

fn position_or_push(list: &mut Vec<String>, id: &str) -> usize {
    match list.iter().position(|s| s == id) {
        Some(i) => i,
        None => {
            list.push(id.to_string());
            list.len() - 1
        }
    }
}

/// `R ⊆ Q1 × Q2` as index pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Relation {
    pairs: BTreeSet<(usize, usize)>,
}

impl Relation {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Relation {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Relation::new((0..n).map(|i| (i, i)))
    }

    /// `{(q1, q2) : ‖H1(q1) − H2(q2)‖ ≤ ε}`.
    pub fn within(t1: &TransitionSystem, t2: &TransitionSystem, epsilon: f64) -> Result<Self> {
        same_outputs(t1, t2)?;
        let mut pairs = BTreeSet::new();
        for q1 in 0..t1.n_states() {
            for q2 in 0..t2.n_states() {
                if vec_inf_dist(t1.output(q1), t2.output(q2)) <= epsilon + EPS_TOL * epsilon.max(1.0) {
                    pairs.insert((q1, q2));
                }
            }
        }
        Ok(Relation { pairs })
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, q1: usize, q2: usize) -> bool {
        self.pairs.contains(&(q1, q2))
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// `R(Q1) = Q2` and `R⁻¹(Q2) = Q1`.
    pub fn full_domain(&self, n1: usize, n2: usize) -> (bool, bool) {
        let left: BTreeSet<usize> = self.pairs.iter().map(|p| p.0).collect();
        let right: BTreeSet<usize> = self.pairs.iter().map(|p| p.1).collect();
        (left.len() == n1, right.len() == n2)
    }

    pub fn to_file(&self, t1: &TransitionSystem, t2: &TransitionSystem) -> RelationFile {
        RelationFile::Pairs {
            pairs: self
                .pairs
                .iter()
                .map(|(a, b)| (t1.states[*a].id.clone(), t2.states[*b].id.clone()))
                .collect(),
        }
    }
}

/// Relation documents: explicit id pairs, or boxes of left outputs related
/// to named right states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RelationFile {
    Pairs { pairs: Vec<(String, String)> },
    OutputBoxes { boxes: Vec<OutputBox> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub state: String,
}

impl RelationFile {
    pub fn resolve(&self, t1: &TransitionSystem, t2: &TransitionSystem) -> Result<Relation> {
        let mut pairs = BTreeSet::new();
        match self {
            RelationFile::Pairs { pairs: list } => {
                for (a, b) in list {
                    let i = t1.state_index(a).ok_or_else(|| Error::Parse(format!("unknown left state `{a}`")))?;
                    let j = t2.state_index(b).ok_or_else(|| Error::Parse(format!("unknown right state `{b}`")))?;
                    pairs.insert((i, j));
                }
            }
            RelationFile::OutputBoxes { boxes } => {
                for ob in boxes {
                    let region = BoxRegion::new(ob.lower.clone(), ob.upper.clone())?;
                    let j = t2
                        .state_index(&ob.state)
                        .ok_or_else(|| Error::Parse(format!("unknown right state `{}`", ob.state)))?;
                    for i in 0..t1.n_states() {
                        if region.contains(t1.output(i)) {
                            pairs.insert((i, j));
                        }
                    }
                }
            }
        }
        Ok(Relation { pairs })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Control,
    Dual,
    Combined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    Ii,
    #[serde(rename = "iii")]
    Iii,
    #[serde(rename = "ii'")]
    IiDual,
    #[serde(rename = "iii'")]
    IiiDual,
    #[serde(rename = "totality-left")]
    TotalityLeft,
    #[serde(rename = "totality-right")]
    TotalityRight,
}

impl Condition {
    pub fn tag(self) -> &'static str {
        match self {
            Condition::I => "i",
            Condition::Ii => "ii",
            Condition::Iii => "iii",
            Condition::IiDual => "ii'",
            Condition::IiiDual => "iii'",
            Condition::TotalityLeft => "totality-left",
            Condition::TotalityRight => "totality-right",
        }
    }
}

/// One answer tried by the existential player and the label that defeats it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    pub answer: String,
    pub answer_value: Vec<f64>,
    pub counter: String,
    pub counter_value: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub left: String,
    pub right: String,
    pub condition: Condition,
    /// Universally chosen label (or `a/b` transition label for the plain check).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub challenge: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub challenge_value: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub successor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    /// Every existential answer with its defeating counter-choice.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refutations: Vec<Refutation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub pass: bool,
    pub variant: Variant,
    pub epsilon: f64,
    pub pairs_checked: usize,
    /// All violations found at the first failing pair.
    pub witnesses: Vec<Witness>,
    pub full_domain_left: bool,
    pub full_domain_right: bool,
}

impl CheckReport {
    pub fn condition(&self) -> Option<Condition> {
        self.witnesses.first().map(|w| w.condition)
    }

    /// Bisimilarity additionally needs the relation to cover both state sets.
    pub fn bisimilar(&self) -> std::result::Result<(), Condition> {
        if let Some(c) = self.condition() {
            return Err(c);
        }
        if !self.full_domain_left {
            return Err(Condition::TotalityLeft);
        }
        if !self.full_domain_right {
            return Err(Condition::TotalityRight);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "verdict: {}\nvariant: {:?}\nepsilon: {}\npairs checked: {}\nfull domain: left={} right={}\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.variant,
            self.epsilon,
            self.pairs_checked,
            self.full_domain_left,
            self.full_domain_right
        );
        for w in &self.witnesses {
            let _ = write!(out, "violation ({}) at ({}, {})", w.condition.tag(), w.left, w.right);
            if let Some(d) = w.distance {
                let _ = write!(out, " distance {d}");
            }
            if let Some(c) = &w.challenge {
                let _ = write!(out, " challenge {c} {:?}", w.challenge_value);
            }
            if let Some(s) = &w.successor {
                let _ = write!(out, " successor {s}");
            }
            out.push('\n');
            for r in &w.refutations {
                let _ = writeln!(
                    out,
                    "  answer {} {:?} defeated by {} {:?}",
                    r.answer, r.answer_value, r.counter, r.counter_value
                );
            }
        }
        out
    }
}

fn same_outputs(t1: &TransitionSystem, t2: &TransitionSystem) -> Result<()> {
    if t1.output_dim() != t2.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "output dimensions {} and {} differ",
            t1.output_dim(),
            t2.output_dim()
        )));
    }
    Ok(())
}

/// Dense membership table for fast lookups during checks.
struct Membership {
    n2: usize,
    bits: Vec<bool>,
}

impl Membership {
    fn new(r: &Relation, n1: usize, n2: usize) -> Self {
        let mut bits = vec![false; n1 * n2];
        for (a, b) in &r.pairs {
            bits[a * n2 + b] = true;
        }
        Membership { n2, bits }
    }

    fn has(&self, q1: usize, q2: usize) -> bool {
        self.bits[q1 * self.n2 + q2]
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum First {
    Control,
    Disturbance,
}

struct Ctx<'a> {
    t1: &'a TransitionSystem,
    t2: &'a TransitionSystem,
    mem: &'a Membership,
}

impl Ctx<'_> {
    fn sys(&self, side: Side) -> &TransitionSystem {
        match side {
            Side::Left => self.t1,
            Side::Right => self.t2,
        }
    }

    /// Labels of the leading kind enabled at `q`.
    fn first_labels(&self, side: Side, q: usize, first: First) -> Vec<usize> {
        let t = self.sys(side);
        match first {
            First::Control => t.enabled_controls(q),
            First::Disturbance => t.enabled_disturbances(q),
        }
    }

    /// Labels of the trailing kind that complete a transition with `x`.
    fn second_labels(&self, side: Side, q: usize, first: First, x: usize) -> Vec<usize> {
        let t = self.sys(side);
        match first {
            First::Control => (0..t.disturbances.len()).filter(|&b| !t.succ(q, x, b).is_empty()).collect(),
            First::Disturbance => (0..t.controls.len()).filter(|&a| !t.succ(q, a, x).is_empty()).collect(),
        }
    }

    fn successors(&self, side: Side, q: usize, first: First, x: usize, y: usize) -> &[usize] {
        let t = self.sys(side);
        match first {
            First::Control => t.succ(q, x, y),
            First::Disturbance => t.succ(q, y, x),
        }
    }

    fn label(&self, side: Side, first: First, leading: bool, idx: usize) -> &Label {
        let t = self.sys(side);
        let control = (first == First::Control) == leading;
        if control {
            &t.controls[idx]
        } else {
            &t.disturbances[idx]
        }
    }

    /// The single predicate carrying the nondeterminism reading: some pair of
    /// successors is related.
    fn successors_match(&self, u_side: Side, pu: &[usize], pe: &[usize]) -> bool {
        pu.iter().any(|&a| {
            pe.iter().any(|&b| match u_side {
                Side::Left => self.mem.has(a, b),
                Side::Right => self.mem.has(b, a),
            })
        })
    }

    /// `∀x ∃y ∀y' ∃x'` with the universal player on `u_side`. Returns the
    /// first challenge `x` that cannot be answered together with all refutations.
    fn alternation(&self, u_side: Side, qu: usize, qe: usize, first: First) -> Vec<(usize, Vec<(usize, usize)>)> {
        let e_side = if u_side == Side::Left { Side::Right } else { Side::Left };
        let mut failures = Vec::new();
        for x in self.first_labels(u_side, qu, first) {
            let xs = self.second_labels(u_side, qu, first, x);
            let mut refutations = Vec::new();
            let mut answered = false;
            for y in self.first_labels(e_side, qe, first) {
                let counter = self.second_labels(e_side, qe, first, y).into_iter().find(|&yp| {
                    let pe = self.successors(e_side, qe, first, y, yp);
                    !xs.iter().any(|&xp| self.successors_match(u_side, self.successors(u_side, qu, first, x, xp), pe))
                });
                match counter {
                    None => {
                        answered = true;
                        break;
                    }
                    Some(yp) => refutations.push((y, yp)),
                }
            }
            if !answered {
                failures.push((x, refutations));
            }
        }
        failures
    }

    fn alt_witnesses(&self, q1: usize, q2: usize, cond: Condition, all: bool) -> Vec<Witness> {
        let (u_side, qu, qe, first) = match cond {
            Condition::Ii => (Side::Left, q1, q2, First::Control),
            Condition::Iii => (Side::Right, q2, q1, First::Control),
            Condition::IiDual => (Side::Left, q1, q2, First::Disturbance),
            Condition::IiiDual => (Side::Right, q2, q1, First::Disturbance),
            _ => unreachable!("not an alternation condition"),
        };
        let e_side = if u_side == Side::Left { Side::Right } else { Side::Left };
        let mut failures = self.alternation(u_side, qu, qe, first);
        if !all {
            failures.truncate(1);
        }
        failures
            .into_iter()
            .map(|(x, refs)| {
                let xl = self.label(u_side, first, true, x);
                Witness {
                    left: self.t1.states[q1].id.clone(),
                    right: self.t2.states[q2].id.clone(),
                    condition: cond,
                    challenge: Some(xl.id.clone()),
                    challenge_value: xl.value.clone(),
                    successor: None,
                    distance: None,
                    refutations: refs
                        .into_iter()
                        .map(|(y, yp)| {
                            let yl = self.label(e_side, first, true, y);
                            let ypl = self.label(e_side, first, false, yp);
                            Refutation {
                                answer: yl.id.clone(),
                                answer_value: yl.value.clone(),
                                counter: ypl.id.clone(),
                                counter_value: ypl.value.clone(),
                            }
                        })
                        .collect(),
                }
            })
            .collect()
    }

    /// Plain condition: every transition of one side is matched by some
    /// transition of the other, labels unrestricted.
    fn plain_witnesses(&self, q1: usize, q2: usize, cond: Condition, all: bool) -> Vec<Witness> {
        let (u_side, qu, qe) = match cond {
            Condition::Ii => (Side::Left, q1, q2),
            _ => (Side::Right, q2, q1),
        };
        let tu = self.sys(u_side);
        let e_succ: Vec<usize> = self
            .sys(if u_side == Side::Left { Side::Right } else { Side::Left })
            .all_successors(qe)
            .into_iter()
            .collect();
        let mut out = Vec::new();
        for a in 0..tu.controls.len() {
            for b in 0..tu.disturbances.len() {
                for &p in tu.succ(qu, a, b) {
                    if !self.successors_match(u_side, &[p], &e_succ) {
                        out.push(Witness {
                            left: self.t1.states[q1].id.clone(),
                            right: self.t2.states[q2].id.clone(),
                            condition: cond,
                            challenge: Some(format!("{}/{}", tu.controls[a].id, tu.disturbances[b].id)),
                            challenge_value: Vec::new(),
                            successor: Some(tu.states[p].id.clone()),
                            distance: None,
                            refutations: Vec::new(),
                        });
                        if !all {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    fn conditions(variant: Variant) -> &'static [Condition] {
        match variant {
            Variant::Plain | Variant::Control => &[Condition::Ii, Condition::Iii],
            Variant::Dual => &[Condition::IiDual, Condition::IiiDual],
            Variant::Combined => &[Condition::Ii, Condition::Iii, Condition::IiDual, Condition::IiiDual],
        }
    }

    /// Transition conditions only; `(i)` is checked separately.
    fn pair_witnesses(&self, q1: usize, q2: usize, variant: Variant, all: bool) -> Vec<Witness> {
        let mut out = Vec::new();
        for &cond in Self::conditions(variant) {
            let w = if variant == Variant::Plain {
                self.plain_witnesses(q1, q2, cond, all)
            } else {
                self.alt_witnesses(q1, q2, cond, all)
            };
            out.extend(w);
            if !all && !out.is_empty() {
                break;
            }
        }
        out
    }
}

fn check(t1: &TransitionSystem, t2: &TransitionSystem, r: &Relation, epsilon: f64, variant: Variant) -> Result<CheckReport> {
    same_outputs(t1, t2)?;
    if r.is_empty() {
        return Err(Error::Precondition("relation is empty".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if r.pairs.iter().any(|(a, b)| *a >= t1.n_states() || *b >= t2.n_states()) {
        return Err(Error::InvalidParameter("relation references a missing state".into()));
    }
    let mem = Membership::new(r, t1.n_states(), t2.n_states());
    let ctx = Ctx { t1, t2, mem: &mem };
    let (full_domain_left, full_domain_right) = r.full_domain(t1.n_states(), t2.n_states());
    let mut pairs_checked = 0;
    let mut witnesses = Vec::new();
    for &(q1, q2) in &r.pairs {
        pairs_checked += 1;
        let d = vec_inf_dist(t1.output(q1), t2.output(q2));
        if d > epsilon + EPS_TOL * epsilon.max(1.0) {
            witnesses.push(Witness {
                left: t1.states[q1].id.clone(),
                right: t2.states[q2].id.clone(),
                condition: Condition::I,
                challenge: None,
                challenge_value: Vec::new(),
                successor: None,
                distance: Some(d),
                refutations: Vec::new(),
            });
        }
        witnesses.extend(ctx.pair_witnesses(q1, q2, variant, true));
        if !witnesses.is_empty() {
            break;
        }
    }
    Ok(CheckReport {
        pass: witnesses.is_empty(),
        variant,
        epsilon,
        pairs_checked,
        witnesses,
        full_domain_left,
        full_domain_right,
    })
}

/// ε-approximate bisimulation check; any label may answer any label.
pub fn check_approx_bisim(t1: &TransitionSystem, t2: &TransitionSystem, r: &Relation, epsilon: f64) -> Result<CheckReport> {
    check(t1, t2, r, epsilon, Variant::Plain)
}

/// Alternating check with the quantifier order of the chosen variant.
pub fn check_alt_bisim(
    t1: &TransitionSystem,
    t2: &TransitionSystem,
    r: &Relation,
    epsilon: f64,
    variant: Variant,
) -> Result<CheckReport> {
    check(t1, t2, r, epsilon, variant)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxResult {
    pub relation: Relation,
    pub full_domain_left: bool,
    pub full_domain_right: bool,
    pub sweeps: usize,
}

impl MaxResult {
    pub fn bisimilar(&self) -> bool {
        !self.relation.is_empty() && self.full_domain_left && self.full_domain_right
    }
}

/// Greatest fixpoint: start from all ε-close pairs and delete, one batch per
/// sweep, every pair violating a transition condition.
fn max_relation(t1: &TransitionSystem, t2: &TransitionSystem, epsilon: f64, variant: Variant) -> Result<MaxResult> {
    let mut r = Relation::within(t1, t2, epsilon)?;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mem = Membership::new(&r, t1.n_states(), t2.n_states());
        let ctx = Ctx { t1, t2, mem: &mem };
        let pairs: Vec<(usize, usize)> = r.pairs.iter().copied().collect();
        let doomed: Vec<(usize, usize)> = pairs
            .par_iter()
            .filter(|(q1, q2)| !ctx.pair_witnesses(*q1, *q2, variant, false).is_empty())
            .copied()
            .collect();
        if doomed.is_empty() {
            break;
        }
        for p in doomed {
            r.pairs.remove(&p);
        }
    }
    let (full_domain_left, full_domain_right) = r.full_domain(t1.n_states(), t2.n_states());
    Ok(MaxResult {
        relation: r,
        full_domain_left,
        full_domain_right,
        sweeps,
    })
}

pub fn max_approx_bisim(t1: &TransitionSystem, t2: &TransitionSystem, epsilon: f64) -> Result<MaxResult> {
    max_relation(t1, t2, epsilon, Variant::Plain)
}

pub fn max_alt_bisim(t1: &TransitionSystem, t2: &TransitionSystem, epsilon: f64, variant: Variant) -> Result<MaxResult> {
    max_relation(t1, t2, epsilon, variant)
}
