//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symcrtl::abstraction::compare_with_table;
use symcrtl::cli::{build_pipeline, run_monte_carlo, synthesize, RunConfig};
use symcrtl::fixtures;
use symcrtl::game::{cpre, solve_reach, Horizon};
use symcrtl::lattice::{hausdorff, PointSet};
use symcrtl::numerics::{mat_exp, rk4_integrate, Matrix};
use symcrtl::reach::{control_reach, disturbance_reach, polygon_hausdorff, to_vertices, Polytope, DEFAULT_REACH_STEPS};
use symcrtl::sysmodel::{validate_parameters, validate_system, ControlSystem, LinearSystem, SystemDef};
use symcrtl::tsys::{check_alt_bisim, check_approx_bisim, max_alt_bisim, max_approx_bisim, Relation, RelationFile, Variant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn dc_config() -> RunConfig {
    serde_json::from_str(fixtures::DC_MOTOR).unwrap()
}

fn dc_system() -> LinearSystem {
    let def: SystemDef = dc_config().system.unwrap();
    match validate_system(&def).unwrap().system {
        ControlSystem::Linear(l) => l,
        ControlSystem::Nonlinear(_) => unreachable!(),
    }
}

fn reach_sets() -> Outcome {
    let sys = dc_system();
    let start = Instant::now();
    let ra = control_reach(&sys, 5.0, DEFAULT_REACH_STEPS).unwrap();
    let rb = disturbance_reach(&sys, 5.0, DEFAULT_REACH_STEPS).unwrap();
    let pa = to_vertices(&ra.set).unwrap();
    let pb = to_vertices(&rb.set).unwrap();
    let elapsed = start.elapsed();
    let ref_a = Polytope::new(vec![
        vec![0.1627, 0.5524],
        vec![0.0908, 0.2320],
        vec![0.0220, 0.2474],
        vec![0.0939, 0.5678],
    ])
    .unwrap();
    let ref_b = Polytope::new(vec![
        vec![-0.0002, 0.0862],
        vec![0.0002, -0.0862],
        vec![0.0002, -0.0862],
        vec![-0.0002, 0.0862],
    ])
    .unwrap();
    let da = polygon_hausdorff(&pa, &ref_a).unwrap();
    let db = polygon_hausdorff(&pb, &ref_b).unwrap();
    let pass = da <= 0.02 && db <= 0.02 && elapsed < Duration::from_secs(5) && ra.error_bound < 0.01 && rb.error_bound < 0.01;
    outcome(
        pass,
        format!(
            "d_H(R_A) = {da:.4}, d_H(R_B) = {db:.4} (limit 0.02); error bounds {:.2e} / {:.2e} (limit 0.01); {:.2?} (limit 5s); R_A bounds {:?}..{:?}",
            ra.error_bound,
            rb.error_bound,
            elapsed,
            pa.bounds().lower(),
            pa.bounds().upper()
        ),
    )
}

fn strategy_table() -> Outcome {
    let start = Instant::now();
    let config: RunConfig = serde_json::from_str(fixtures::TABLE1_CONFIG).unwrap();
    let p = build_pipeline(config, &fixtures::dir()).unwrap();
    let t = &p.model.system;
    let target: BTreeSet<usize> = ["q3", "q6", "q9"].iter().map(|q| t.state_index(q).unwrap()).collect();
    let s = solve_reach(t, &target, Horizon::Bounded(1)).unwrap();
    let elapsed = start.elapsed();
    let expected = [
        ("q1", "a1"),
        ("q2", "a1"),
        ("q3", "a1"),
        ("q4", "a1|a2"),
        ("q5", "a1|a2"),
        ("q6", "a1|a2"),
        ("q7", "a2|a3"),
        ("q8", "a2|a3"),
        ("q9", "a2|a3"),
    ];
    let exact = s.labels.len() == 9
        && expected
            .iter()
            .all(|(q, l)| s.labels.get(*q).map(|v| v.join("|")).as_deref() == Some(*l));
    outcome(
        exact && elapsed < Duration::from_secs(1),
        format!("strategy {:?}; {:.2?} (limit 1s)", s.labels, elapsed),
    )
}

fn table_reproduction() -> Outcome {
    let ours = build_pipeline(dc_config(), &fixtures::dir()).unwrap();
    let table: RunConfig = serde_json::from_str(fixtures::TABLE1_CONFIG).unwrap();
    let reference = build_pipeline(table, &fixtures::dir()).unwrap();
    let cmp = compare_with_table(&ours.model, &reference.model.system).unwrap();
    for m in &cmp.mismatches {
        println!(
            "    mismatch {} --{},{}--> table {:?} ours {:?} endpoint {:?}",
            m.q, m.a, m.b, m.expected, m.got, m.endpoint
        );
    }
    outcome(
        cmp.fraction() >= 0.95,
        format!("{}/{} entries match ({:.1}%, need 95%)", cmp.matched, cmp.total, 100.0 * cmp.fraction()),
    )
}

fn disturbance_rejection() -> Outcome {
    let start = Instant::now();
    let p = build_pipeline(dc_config(), &fixtures::dir()).unwrap();
    let (_, strategy) = synthesize(&p).unwrap();
    let sim = p.config.simulation.as_ref().unwrap();
    assert_eq!((sim.runs, sim.pieces), (1000, 50));
    let r = run_monte_carlo(&p, &strategy).unwrap();
    let elapsed = start.elapsed();
    outcome(
        r.total == 100_000 && r.passed == r.total && elapsed < Duration::from_secs(60),
        format!(
            "{}/{} runs end in [0,0.6]x[0.1,0.6]; min final x2 = {:.4}; {:.2?} (limit 60s)",
            r.passed, r.total, r.final_min[1], elapsed
        ),
    )
}

/// `(Σ_{k<200} (hA)^k/k!)^m` with `h = t/m`.
fn series_exp(a: &Matrix, t: f64, m: usize) -> Matrix {
    let h = a.scale(t / m as f64);
    let n = a.rows();
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..200 {
        term = term.matmul(&h).scale(1.0 / k as f64);
        sum = sum.add(&term);
    }
    let mut out = Matrix::identity(n);
    for _ in 0..m {
        out = out.matmul(&sum);
    }
    out
}

fn parameters() -> Outcome {
    let sys = dc_system();
    let beta = sys.kl_bound();
    let check = validate_parameters(&beta, 0.5, 5.0, 0.3, 0.15).unwrap();
    let norm = mat_exp(&sys.a, 5.0).unwrap().inf_norm();
    let oracle = series_exp(&sys.a, 5.0, 10).inf_norm();
    let diff = (norm - oracle).abs();
    outcome(
        check.satisfied && diff <= 1e-10,
        format!("margin {:.6}; ‖e^(5A)‖∞ = {norm:.12} vs series {oracle:.12} (diff {diff:.1e})", check.margin),
    )
}

fn separation() -> Outcome {
    let t1 = common::example35_system();
    let t2 = common::t2_system();
    let rf: RelationFile = serde_json::from_str(fixtures::RR_EXAMPLE).unwrap();
    let r = rf.resolve(&t1, &t2).unwrap();
    let plain = check_approx_bisim(&t1, &t2, &r, 0.6).unwrap();
    let alt = check_alt_bisim(&t1, &t2, &r, 0.6, Variant::Control).unwrap();
    let witness_04 = alt
        .witnesses
        .iter()
        .any(|w| w.refutations.iter().any(|f| f.counter_value.len() == 1 && (f.counter_value[0] - 0.4).abs() < 1e-12));
    let first = alt
        .witnesses
        .first()
        .map(|w| format!("{} at ({}, {})", w.condition.tag(), w.left, w.right))
        .unwrap_or_default();
    outcome(
        plain.pass && !alt.pass && witness_04,
        format!(
            "plain {}; control {} {first}; disturbance 0.4 in witness: {witness_04}",
            if plain.pass { "PASS" } else { "FAIL" },
            if alt.pass { "PASS" } else { "FAIL" }
        ),
    )
}

fn random_points(rng: &mut ChaCha8Rng) -> PointSet {
    let n = rng.gen_range(1..8);
    PointSet::new((0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect()).unwrap()
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();

    let mut ok = true;
    for _ in 0..500 {
        let (x, y, z) = (random_points(&mut rng), random_points(&mut rng), random_points(&mut rng));
        let dxy = hausdorff(&x, &y).unwrap();
        ok &= hausdorff(&x, &x).unwrap() == 0.0;
        ok &= dxy >= 0.0 && dxy == hausdorff(&y, &x).unwrap();
        ok &= hausdorff(&x, &z).unwrap() <= dxy + hausdorff(&y, &z).unwrap() + 1e-12;
    }
    if !ok {
        failures.push("hausdorff axioms");
    }

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = Matrix::from_row_major(3, 3, (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let (s, t) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let lhs = mat_exp(&a, s + t).unwrap();
        let rhs = mat_exp(&a, s).unwrap().matmul(&mat_exp(&a, t).unwrap());
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    if worst > 1e-9 {
        failures.push("semigroup");
    }

    let f = |x: &[f64]| Ok(vec![-2.0 * x[0] + x[0].sin()]);
    let fine = rk4_integrate(f, &[1.0], 1.0, 4096).unwrap()[0];
    let e1 = (rk4_integrate(f, &[1.0], 1.0, 10).unwrap()[0] - fine).abs();
    let e2 = (rk4_integrate(f, &[1.0], 1.0, 20).unwrap()[0] - fine).abs();
    let ratio = e1 / e2;
    if !(14.0..18.0).contains(&ratio) {
        failures.push("rk4 order");
    }

    for _ in 0..100 {
        let t = common::random_system(&mut rng, 6, 2, false);
        let n = t.n_states();
        let w: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        let mut w2 = w.clone();
        w2.extend((0..n).filter(|_| rng.gen_bool(0.3)));
        if !cpre(&t, &w).unwrap().is_subset(&cpre(&t, &w2).unwrap()) {
            failures.push("cpre monotonicity");
            break;
        }
    }

    let mut compared = 0;
    while compared < 100 {
        let t1 = common::random_system(&mut rng, 5, 1, true);
        let t2 = common::random_system(&mut rng, 5, 1, true);
        let r = Relation::within(&t1, &t2, 0.0).unwrap();
        if r.is_empty() {
            continue;
        }
        compared += 1;
        let plain = check_approx_bisim(&t1, &t2, &r, 0.0).unwrap().pass;
        let alt = check_alt_bisim(&t1, &t2, &r, 0.0, Variant::Control).unwrap().pass;
        if plain != alt {
            failures.push("checker equivalence");
            break;
        }
    }

    for _ in 0..50 {
        let t1 = common::random_system(&mut rng, 5, 2, false);
        let t2 = common::random_system(&mut rng, 5, 2, false);
        for variant in [Variant::Plain, Variant::Control, Variant::Dual, Variant::Combined] {
            let m = max_alt_bisim(&t1, &t2, 0.5, variant).unwrap();
            if !m.relation.is_empty() && !check_alt_bisim(&t1, &t2, &m.relation, 0.5, variant).unwrap().pass {
                failures.push("fixpoint idempotence");
            }
        }
    }

    let sampled = common::scalar_sampled();
    let model = common::scalar_model();
    let r = Relation::within(&sampled, &model.system, 0.5).unwrap();
    let proof = check_alt_bisim(&sampled, &model.system, &r, 0.5, Variant::Combined).unwrap();
    if proof.bisimilar().is_err() {
        failures.push("1-D cross-check relation");
    }

    failures.dedup();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("all suites hold (rk4 error ratio {ratio:.2}, semigroup {worst:.1e})")
        } else {
            format!("failing: {}", failures.join(", "))
        },
    )
}

fn unstable_growth() -> Outcome {
    let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
    let step = mat_exp(&a, 1.0).unwrap().as_slice()[0];
    let (x0, y0) = (1.0, 1.5);
    let (lambda, eps) = (0.4, 1.0);
    let k_forced = (0..).find(|&k| (k as f64).exp() * lambda - eps > eps).unwrap();
    let mut growth_ok = true;
    let mut empties_ok = true;
    let (mut xs, mut ys) = (vec![x0], vec![y0]);
    for k in 1..=8usize {
        xs.push(xs[k - 1] * step);
        ys.push(ys[k - 1] * step);
        let expect = (k as f64).exp() * (y0 - x0);
        growth_ok &= ((ys[k] - xs[k]) - expect).abs() <= 1e-9 * expect;
    }
    for window in 0..=8usize {
        let t1 = common::chain(&xs[..=window]);
        let t2 = common::chain(&ys[..=window]);
        let m = max_approx_bisim(&t1, &t2, eps).unwrap();
        let forced_empty = (window as f64).exp() * (y0 - x0) > eps;
        empties_ok &= m.relation.is_empty() == forced_empty;
        if window >= k_forced {
            empties_ok &= m.relation.is_empty();
        }
    }
    outcome(
        growth_ok && empties_ok,
        format!("growth exact: {growth_ok}; relation empty from window k' = {k_forced} on: {empties_ok}"),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 reach sets", reach_sets),
        ("2 strategy from table", strategy_table),
        ("3 table reproduction", table_reproduction),
        ("4 disturbance rejection", disturbance_rejection),
        ("5 parameter conditions", parameters),
        ("6 alternating vs plain", separation),
        ("7 property suites", property_suites),
        ("8 unstable growth", unstable_growth),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {failed} criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
