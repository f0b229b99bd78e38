#![allow(dead_code)]

use rand::Rng;
use symcrtl::abstraction::{abstract_linear, AbstractionParams, LabelSource, Mode, SymbolicModel};
use symcrtl::cli::{build_pipeline, RunConfig};
use symcrtl::fixtures;
use symcrtl::numerics::Matrix;
use symcrtl::sysmodel::{BoxRegion, LinearSystem};
use symcrtl::tsys::{Label, State, TransitionSystem};

pub fn states_1d(outputs: &[f64]) -> Vec<State> {
    outputs
        .iter()
        .enumerate()
        .map(|(i, &y)| State {
            id: format!("q{}", i + 1),
            output: vec![y],
        })
        .collect()
}

pub fn labels(prefix: &str, n: usize) -> Vec<Label> {
    (1..=n).map(|i| Label::new(format!("{prefix}{i}"), vec![i as f64])).collect()
}

/// Small random system with outputs in {0, 0.5, 1}; every (q,a,b) has a
/// successor with probability 0.8.
pub fn random_system<R: Rng>(rng: &mut R, max_states: usize, n_b: usize, deterministic: bool) -> TransitionSystem {
    let n = rng.gen_range(1..=max_states);
    let n_a = rng.gen_range(1..=3);
    let outputs: Vec<f64> = (0..n).map(|_| 0.5 * rng.gen_range(0..3) as f64).collect();
    let mut tr = Vec::new();
    for q in 0..n {
        for a in 0..n_a {
            for b in 0..n_b {
                if rng.gen_bool(0.8) {
                    let k = if deterministic { 1 } else { rng.gen_range(1..=2) };
                    for _ in 0..k {
                        tr.push([q, a, b, rng.gen_range(0..n)]);
                    }
                }
            }
        }
    }
    TransitionSystem::new(states_1d(&outputs), labels("a", n_a), labels("b", n_b), tr).unwrap()
}

/// Unlabelled deterministic chain `q_0 → q_1 → … → q_K` (last state blocks).
pub fn chain(outputs: &[f64]) -> TransitionSystem {
    let tr = (0..outputs.len().saturating_sub(1)).map(|k| [k, 0, 0, k + 1]).collect();
    TransitionSystem::new(states_1d(outputs), labels("a", 1), labels("b", 1), tr).unwrap()
}

/// Scalar `ẋ = −x + u + v` with `U = [0.1,0.9]`, `V = [−0.1,0.1]` on `[0,1]`;
/// every constant-input endpoint stays inside the region.
pub fn scalar_system() -> LinearSystem {
    let m = |v: f64| Matrix::from_rows(&[vec![v]]).unwrap();
    LinearSystem::new(
        m(-1.0),
        m(1.0),
        m(1.0),
        BoxRegion::new(vec![0.1], vec![0.9]).unwrap(),
        BoxRegion::new(vec![-0.1], vec![0.1]).unwrap(),
        BoxRegion::new(vec![0.0], vec![1.0]).unwrap(),
    )
    .unwrap()
}

pub fn scalar_params() -> AbstractionParams {
    AbstractionParams {
        epsilon: 0.5,
        tau: 2.0,
        eta: 0.25,
        mu: 0.2,
        mu_label: 0.05,
        state_region: BoxRegion::new(vec![0.0], vec![1.0]).unwrap(),
        mode: Mode::Nearest,
        error_augment: None,
    }
}

pub fn scalar_model() -> SymbolicModel {
    abstract_linear(&scalar_system(), &scalar_params(), &LabelSource::default()).unwrap()
}

/// Finite sample of the time-`τ` system of [`scalar_system`]: 31 states on a
/// 1/30 grid, constant inputs on 0.05 grids, exact endpoints rounded to the
/// state grid.
pub fn scalar_sampled() -> TransitionSystem {
    let h = 1.0 / 30.0;
    let tau = 2.0;
    let xs: Vec<f64> = (0..=30).map(|i| h * i as f64).collect();
    let us: Vec<f64> = (0..=16).map(|i| 0.1 + 0.05 * i as f64).collect();
    let vs: Vec<f64> = (0..=4).map(|i| -0.1 + 0.05 * i as f64).collect();
    let decay = (-tau as f64).exp();
    let mut tr = Vec::new();
    for (qi, &x) in xs.iter().enumerate() {
        for (ai, &u) in us.iter().enumerate() {
            for (bi, &v) in vs.iter().enumerate() {
                let y = decay * x + (1.0 - decay) * (u + v);
                let p = (y / h).round().clamp(0.0, 30.0) as usize;
                tr.push([qi, ai, bi, p]);
            }
        }
    }
    let ctl = us
        .iter()
        .enumerate()
        .map(|(i, &u)| Label::new(format!("u{}", i + 1), vec![u]))
        .collect();
    let dis = vs
        .iter()
        .enumerate()
        .map(|(i, &v)| Label::new(format!("v{}", i + 1), vec![v]))
        .collect();
    TransitionSystem::new(states_1d(&xs), ctl, dis, tr).unwrap()
}

/// The sampled nonlinear example, built through the config pipeline.
pub fn example35_system() -> TransitionSystem {
    let config: RunConfig = serde_json::from_str(fixtures::EXAMPLE35).unwrap();
    build_pipeline(config, &fixtures::dir()).unwrap().model.system
}

pub fn t2_system() -> TransitionSystem {
    serde_json::from_str(fixtures::T2_EXAMPLE).unwrap()
}
