mod common;

use std::collections::BTreeSet;

use symcrtl::abstraction::certify_label_sets;
use symcrtl::cli::{build_pipeline, Pipeline, RunConfig};
use symcrtl::fixtures;
use symcrtl::game::{closed_loop_simulate, cpre, refine_control, solve_reach, solve_safe, Disturbance, Horizon, SimulationConfig};
use symcrtl::numerics::{linear_flow, rk4_integrate, rk4_trajectory};
use symcrtl::reach::{control_reach, to_vertices, DEFAULT_REACH_STEPS};
use symcrtl::sysmodel::{BoxRegion, ControlSystem, LinearSystem, NonlinearSystem};
use symcrtl::tsys::{check_alt_bisim, check_approx_bisim, max_approx_bisim, Relation, RelationFile, TransitionSystem, Variant};

fn pipeline(text: &str) -> Pipeline {
    let config: RunConfig = serde_json::from_str(text).unwrap();
    build_pipeline(config, &fixtures::dir()).unwrap()
}

fn dc_linear(p: &Pipeline) -> &LinearSystem {
    match p.system.as_ref().unwrap() {
        ControlSystem::Linear(l) => l,
        ControlSystem::Nonlinear(_) => panic!("expected a linear system"),
    }
}

fn states(t: &TransitionSystem, names: &[&str]) -> BTreeSet<usize> {
    names.iter().map(|q| t.state_index(q).unwrap()).collect()
}

fn example35_nonlinear() -> NonlinearSystem {
    let p = pipeline(fixtures::EXAMPLE35);
    match p.system.unwrap() {
        ControlSystem::Nonlinear(n) => n,
        ControlSystem::Linear(_) => panic!("expected a nonlinear system"),
    }
}

#[test]
fn fixture_sizes() {
    let dc = pipeline(fixtures::DC_MOTOR);
    let t = &dc.model.system;
    assert_eq!((t.n_states(), t.controls().len(), t.disturbances().len()), (9, 4, 3));
    assert_eq!(t.output(t.state_index("q2").unwrap()), &[0.0, 0.15]);
    let ex = common::example35_system();
    assert_eq!(ex.n_states(), 21);
    assert_eq!(ex.controls().len(), 3);
    assert_eq!(ex.disturbances().len(), 3);
}

#[test]
fn example35_endpoints() {
    let sys = example35_nonlinear();
    let hi = rk4_trajectory(&sys, &[0.0], &[2.0], &[1.0], 1.0, 1000).unwrap().point[0];
    let lo = rk4_trajectory(&sys, &[0.0], &[2.0], &[0.4], 1.0, 1000).unwrap().point[0];
    let decay = 1.0 - (-2.0f64).exp();
    assert!((hi - 2.0 * decay).abs() < 1e-9, "{hi}");
    assert!((lo - 0.8 * decay).abs() < 1e-9, "{lo}");
    assert!((hi - 1.73).abs() < 5e-3);
    assert!((lo - 0.692).abs() < 5e-4);
}

#[test]
fn dc_motor_free_response() {
    let dc = pipeline(fixtures::DC_MOTOR);
    let sys = dc_linear(&dc);
    let exact = linear_flow(sys, &[0.3, 0.0], &[0.0], &[0.0], 5.0).unwrap();
    let rk = rk4_integrate(
        |x| Ok(sys.a.mul_vec(x)),
        &[0.3, 0.0],
        5.0,
        50_000,
    )
    .unwrap();
    for (a, b) in exact.iter().zip(&rk) {
        assert!((a - b).abs() <= 1e-6);
    }
    assert!((exact[0] + 0.0001).abs() < 5e-5 && (exact[1] - 0.0165).abs() < 5e-5, "{exact:?}");
}

#[test]
fn control_reach_matches_reference_ranges() {
    let dc = pipeline(fixtures::DC_MOTOR);
    let reach = control_reach(dc_linear(&dc), 5.0, DEFAULT_REACH_STEPS).unwrap();
    let b = to_vertices(&reach.set).unwrap().bounds();
    let near = |x: f64, y: f64| (x - y).abs() <= 0.02;
    assert!(
        near(b.lower()[0], 0.02) && near(b.upper()[0], 0.17) && near(b.lower()[1], 0.23) && near(b.upper()[1], 0.57),
        "hull bounds {:?}..{:?}",
        b.lower(),
        b.upper()
    );
}

#[test]
fn injected_label_sets_certify() {
    let dc = pipeline(fixtures::DC_MOTOR);
    let certs = certify_label_sets(&dc.model, dc_linear(&dc), DEFAULT_REACH_STEPS, 1e-3).unwrap();
    for c in &certs {
        assert!(c.pass, "{c:?}");
    }
}

#[test]
fn example35_relation_passes_plain_and_fails_control() {
    let t1 = common::example35_system();
    let t2 = common::t2_system();
    let rf: RelationFile = serde_json::from_str(fixtures::RR_EXAMPLE).unwrap();
    let r = rf.resolve(&t1, &t2).unwrap();
    assert_eq!(r.len(), 27);
    assert!(check_approx_bisim(&t1, &t2, &r, 0.6).unwrap().pass);

    let alt = check_alt_bisim(&t1, &t2, &r, 0.6, Variant::Control).unwrap();
    assert!(!alt.pass);
    let w = &alt.witnesses[0];
    assert_eq!((w.left.as_str(), w.right.as_str()), ("q1", "q1"));
    assert_eq!(t1.output(t1.state_index("q1").unwrap()), &[0.0]);
    assert!(w.refutations.iter().any(|f| f.counter_value == vec![0.4]));

    let max = max_approx_bisim(&t1, &t2, 0.6).unwrap();
    assert!(r.is_subset(&max.relation));
    assert!(check_approx_bisim(&t1, &t2, &max.relation, 0.6).unwrap().pass);
}

#[test]
fn dc_model_is_combined_bisimilar_to_a_copy() {
    let dc = pipeline(fixtures::TABLE1_CONFIG);
    let t = &dc.model.system;
    let copy: TransitionSystem = serde_json::from_str(&serde_json::to_string(t).unwrap()).unwrap();
    let r = Relation::identity(t.n_states());
    let report = check_alt_bisim(t, &copy, &r, 0.0, Variant::Combined).unwrap();
    assert!(report.pass && report.bisimilar().is_ok());
}

#[test]
fn table_games() {
    let dc = pipeline(fixtures::TABLE1_CONFIG);
    let t = &dc.model.system;
    let all: BTreeSet<usize> = (0..t.n_states()).collect();
    let q7 = t.state_index("q7").unwrap();
    let labels = symcrtl::game::cpre_labels(t, &all).unwrap();
    let q7_labels: Vec<&str> = labels[&q7].iter().map(|&a| t.controls()[a].id.as_str()).collect();
    assert_eq!(q7_labels, ["a2", "a3", "a4"]);

    let w = states(t, &["q3", "q6", "q9"]);
    assert_eq!(cpre(t, &w).unwrap().len(), 9);
    let s = solve_reach(t, &w, Horizon::Bounded(1)).unwrap();
    let csv = s.to_csv();
    assert_eq!(
        csv,
        "state,labels\nq1,a1\nq2,a1\nq3,a1\nq4,a1|a2\nq5,a1|a2\nq6,a1|a2\nq7,a2|a3\nq8,a2|a3\nq9,a2|a3\n"
    );

    let safe = solve_safe(t, &states(t, &["q2", "q3"])).unwrap();
    for q in ["q2", "q3"] {
        assert!(safe.labels[q].contains(&"a4".to_string()), "{:?}", safe.labels);
    }
}

#[test]
fn example35_one_step_reach() {
    let t = common::example35_system();
    let w: BTreeSet<usize> = (0..t.n_states()).filter(|&q| t.output(q)[0] >= 0.4 - 1e-12).collect();
    let labels = symcrtl::game::cpre_labels(&t, &w).unwrap();
    let q0 = t.state_index("q1").unwrap();
    let winning: Vec<f64> = labels[&q0].iter().map(|&a| t.controls()[a].value[0]).collect();
    let decay = 1.0 - (-2.0f64).exp();
    let oracle: Vec<f64> = t
        .controls()
        .iter()
        .map(|l| l.value[0])
        .filter(|u| {
            // Worst disturbance is the smallest v; snapping uses the 0.1 grid.
            let z = 0.4 * u * decay;
            (z / 0.1).round() * 0.1 >= 0.4 - 1e-12
        })
        .collect();
    assert_eq!(winning, oracle);
    assert!(winning.contains(&2.0) && !winning.contains(&1.0));
}

#[test]
fn refine_first_control_label() {
    let dc = pipeline(fixtures::DC_MOTOR);
    let r = refine_control(dc_linear(&dc), &[0.15, 0.525], 5.0, 10).unwrap();
    assert!(r.residual_before_clamp <= 1e-6, "{}", r.residual_before_clamp);
}

#[test]
fn worst_constant_disturbance_from_origin() {
    let dc = pipeline(fixtures::TABLE1_CONFIG);
    let table = dc.model.clone();
    let sys = pipeline(fixtures::DC_MOTOR).system.unwrap();
    let t = &table.system;
    let s = solve_reach(t, &states(t, &["q3", "q6", "q9"]), Horizon::Bounded(1)).unwrap();
    let cfg = SimulationConfig {
        steps: 1,
        segments: 10,
        spec_box: Some(BoxRegion::new(vec![0.0, 0.1], vec![0.6, 0.6]).unwrap()),
    };
    let res = closed_loop_simulate(&sys, &table, &s, &[0.0, 0.0], &Disturbance::Constant { value: vec![-0.02] }, cfg).unwrap();
    assert_eq!(res.log[0].label, "a1");
    assert!(res.final_state()[1] >= 0.1, "x2(5) = {}", res.final_state()[1]);
}
