//! Acceptance suite: ten end-to-end criteria, one PASS/FAIL line each.
//! Run with `cargo test --test acceptance`.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use collapse_lab::cli::PERIOD_STREAM;
use collapse_lab::measure::{backdated_run, collapse, selected_input_state, stream_rng};
use collapse_lab::oracle::{brute_force_reverse, random_periodic, PeriodicOracle};
use collapse_lab::satnet::{compile, eval, CnfFormula};
use collapse_lab::simon::{
    dot, recover_period, state_t2, wave_pair_states, z_distribution, PipelineTime,
};
use collapse_lab::statevec::{Bits, OUTPUT_REGISTER};
use collapse_lab::waves::{delta_averaged_density, round_trip_error, Wave};
use collapse_lab::zeno::{
    default_suite, prepare_phi, prepare_phi_via_circuit, prepare_phi_via_enumeration,
    random_single_solution, slicing_distance, ConstrainedSubspace, ZenoError, ZenoInstance,
    ZenoTestbed,
};
use num_complex::Complex64;
use rand::Rng;

use common::{brute_force_consistent, control_testbed, max_diff, projected_generator_evolution};

const SUITE_SEED: u64 = 2024;

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

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("simon pipeline recovers r", simon_pipeline),
        (
            "selected input state from output value",
            selected_state_identity,
        ),
        (
            "back-dated collapse matches measurement",
            backdating_equivalence,
        ),
        ("deferred output measurement", deferred_measurement),
        ("wave identities", wave_identities),
        ("zeno freeze under frequent measurement", zeno_freeze),
        ("compiler agrees with clause evaluation", compiler_agreement),
        ("constrained subspace and initial state", subspace_fidelity),
        ("projected mode determinism and convergence", projected_mode),
        ("byte-identical reports", reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}

fn oracles_up_to(max_n: usize, per_width: usize, seed: u64) -> Vec<PeriodicOracle> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let mut rs: Vec<u64> = if (1u64 << n) - 1 <= per_width as u64 {
            (1..1u64 << n).collect()
        } else {
            let mut rng = stream_rng(seed, n as u64);
            (0..per_width)
                .map(|_| rng.random_range(1..1u64 << n))
                .collect()
        };
        rs.dedup();
        for (i, r) in rs.into_iter().enumerate() {
            out.push(random_periodic(n, r, seed + 97 * i as u64).unwrap());
        }
    }
    out
}

fn image_bits(o: &PeriodicOracle) -> impl Iterator<Item = Bits> + '_ {
    o.image().into_iter().map(|v| Bits::new(v, o.n()).unwrap())
}

fn simon_pipeline() -> Outcome {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for n in 2..=10usize {
        for t in 0..100u64 {
            let seed = 1000 * n as u64 + t;
            let r = stream_rng(seed, PERIOD_STREAM).random_range(1..1u64 << n);
            let oracle = random_periodic(n, r, seed).unwrap();
            match recover_period(&oracle, &mut stream_rng(seed, 1), 10 * n, false) {
                Ok(rep) if rep.recovered_r == r => {
                    worst = worst.max(rep.samples_used as f64 / n as f64)
                }
                other => failures.push(format!("n={n} trial={t}: {other:?}")),
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 60.0,
        format!(
            "900 trials, {} failures, worst samples/n {worst:.1}, {secs:.1}s{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!(", first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn selected_state_identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for o in oracles_up_to(8, 4, 11) {
        let phi = state_t2(&o).unwrap();
        for f_bar in image_bits(&o) {
            let (x0, x1) = brute_force_reverse(&o, &f_bar).unwrap();
            let mut want = vec![Complex64::new(0.0, 0.0); 1 << o.n()];
            want[x0 as usize] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            want[x1 as usize] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            let got = selected_input_state(&phi, &f_bar).unwrap();
            worst = worst.max(max_diff(got.amplitudes(), &want));
            cases += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{cases} (oracle, f̄) pairs, max deviation {worst:.2e}"),
    )
}

fn backdating_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for o in oracles_up_to(8, 4, 12) {
        let phi = state_t2(&o).unwrap();
        for f_bar in image_bits(&o) {
            let measured = collapse(&phi, OUTPUT_REGISTER, &f_bar).unwrap().post_state;
            let back = backdated_run(&o, &f_bar).unwrap();
            worst = worst.max(back.distance(&measured).unwrap());
            cases += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{cases} (oracle, f̄) pairs, max distance {worst:.2e}"),
    )
}

fn deferred_measurement() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut worst_uniform = 0.0f64;
    let mut cases = 0;
    for o in oracles_up_to(10, 2, 13) {
        let skipped = z_distribution(&o, true).unwrap();
        let measured = z_distribution(&o, false).unwrap();
        let mass = 0.5f64.powi(o.n() as i32 - 1);
        for (z, (a, b)) in skipped.iter().zip(&measured).enumerate() {
            worst_gap = worst_gap.max((a - b).abs());
            let want = if dot(z as u64, o.r()) == 0 { mass } else { 0.0 };
            worst_uniform = worst_uniform.max((a - want).abs()).max((b - want).abs());
        }
        cases += 1;
    }
    outcome(
        worst_gap <= 1e-12 && worst_uniform <= 1e-12,
        format!("{cases} oracles, n ≤ 10, with/without gap {worst_gap:.2e}, deviation from uniform {worst_uniform:.2e}"),
    )
}

fn wave_identities() -> Outcome {
    let mut worst_round_trip = 0.0f64;
    let mut worst_average = 0.0f64;
    let mut cases = 0;
    for o in oracles_up_to(4, 3, 14) {
        for f_bar in image_bits(&o) {
            for time in [PipelineTime::T1, PipelineTime::T2] {
                let (phi, beta) = wave_pair_states(&o, &f_bar, time).unwrap();
                for k in 0..16 {
                    let delta = TAU * k as f64 / 16.0 + 0.1;
                    worst_round_trip =
                        worst_round_trip.max(round_trip_error(&phi, &beta, delta).unwrap());
                }
                let plus = delta_averaged_density(&phi, &beta, Wave::Plus, 8).unwrap();
                let minus = delta_averaged_density(&phi, &beta, Wave::Minus, 8).unwrap();
                worst_average = worst_average.max(plus.max_abs_diff(&minus));
                cases += 1;
            }
        }
    }
    outcome(
        worst_round_trip <= 1e-12 && worst_average <= 1e-12,
        format!("{cases} (φ, β) pairs at t1/t2, round trip {worst_round_trip:.2e}, K=8 plus/minus gap {worst_average:.2e}"),
    )
}

fn zeno_freeze() -> Outcome {
    let instance = ZenoInstance::unconstrained(CnfFormula::new(1, vec![vec![1]]).unwrap()).unwrap();
    let bed = ZenoTestbed::from_instance(&instance).unwrap();
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for k in [1usize, 4, 16, 64, 256] {
        let want = (FRAC_PI_2 / k as f64).cos().powi(2 * k as i32);
        let traces: Vec<_> = (0..200)
            .map(|t| bed.run_frequent(k, &mut stream_rng(6, t)).unwrap())
            .collect();
        let full: Vec<_> = traces.iter().filter(|t| t.samples.len() == k + 1).collect();
        if full.is_empty() {
            return outcome(
                false,
                format!("k={k}: no trajectory reached the last slice"),
            );
        }
        for t in &full {
            worst = worst.max((t.last().survival_probability - want).abs());
        }
        let survived = traces.iter().filter(|t| t.terminated_at.is_none()).count();
        notes.push(format!("k={k} survived {survived}/200 vs {:.3}", want));
    }
    let mut ratios = Vec::new();
    let mut halves = true;
    let mut k = 4usize;
    while k <= 256 {
        let infidelity = |k: usize| {
            let full = (0..200)
                .map(|t| bed.run_frequent(k, &mut stream_rng(6, t)).unwrap())
                .find(|t| t.samples.len() == k + 1)
                .expect("some trajectory reaches the last slice");
            1.0 - full.last().fidelity_with_initial
        };
        let ratio = infidelity(2 * k) / infidelity(k);
        halves &= (0.25..=0.75).contains(&ratio);
        ratios.push(format!("{ratio:.3}"));
        k *= 2;
    }
    outcome(
        worst <= 1e-10 && halves,
        format!(
            "survival vs cos^2k(π/2k) max error {worst:.2e}; infidelity ratios on doubling [{}]; {}",
            ratios.join(", "),
            notes.join("; ")
        ),
    )
}

fn random_formula(num_vars: usize, clauses: usize, seed: u64) -> CnfFormula {
    let mut rng = stream_rng(seed, num_vars as u64);
    let cl = (0..clauses)
        .map(|_| {
            let width = rng.random_range(1..=3.min(num_vars));
            (0..width)
                .map(|_| {
                    let v = rng.random_range(1..=num_vars as i32);
                    if rng.random::<bool>() {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    CnfFormula::new(num_vars, cl).unwrap()
}

fn compiler_suite() -> Vec<CnfFormula> {
    let mut out: Vec<CnfFormula> = default_suite(SUITE_SEED)
        .iter()
        .map(|i| i.formula().clone())
        .collect();
    for v in [9, 10] {
        out.push(random_single_solution(v, SUITE_SEED).formula().clone());
    }
    for s in 0..40 {
        let v = 1 + (s as usize % 10);
        out.push(random_formula(v, 1 + (s as usize * 7) % 12, 500 + s));
    }
    out.push(CnfFormula::new(3, vec![]).unwrap());
    out.push(CnfFormula::new(2, vec![vec![1, -1], vec![2, 2]]).unwrap());
    out
}

fn compiler_agreement() -> Outcome {
    let suite = compiler_suite();
    let mut mismatches = 0;
    let mut dirty = 0;
    let mut bijective_checked = 0;
    let mut bijection_failures = 0;
    for f in &suite {
        let c = compile(f);
        for a in 0..1u64 << f.num_vars() {
            let rec = eval(&c, &Bits::new(a, f.num_vars()).unwrap()).unwrap();
            mismatches += usize::from(rec.y != f.evaluate(a));
            dirty += usize::from(!rec.ancillas_clear());
        }
        if c.total_qubits() <= 12 {
            let dim = 1u64 << c.total_qubits();
            let mut seen = vec![false; dim as usize];
            for i in 0..dim {
                let j = c.apply_to_index(i);
                if j >= dim || seen[j as usize] || c.apply_inverse_to_index(j) != i {
                    bijection_failures += 1;
                } else {
                    seen[j as usize] = true;
                }
            }
            bijective_checked += 1;
        }
    }
    outcome(
        mismatches == 0 && dirty == 0 && bijection_failures == 0,
        format!(
            "{} formulas (≤ 10 vars): {mismatches} truth-table mismatches, {dirty} dirty ancillas, {bijective_checked} circuits checked bijective with {bijection_failures} failures",
            suite.len()
        ),
    )
}

fn pinned_variants() -> Vec<ZenoInstance> {
    let mut out = Vec::new();
    for inst in default_suite(SUITE_SEED) {
        let v = inst.num_vars() as i32;
        out.push(inst.clone());
        for fix in [
            vec![1],
            vec![-1],
            vec![v],
            vec![1, -v],
            (1..=v).collect::<Vec<_>>(),
        ] {
            out.push(ZenoInstance::new(inst.formula().clone(), fix).unwrap());
        }
    }
    out
}

fn subspace_fidelity() -> Outcome {
    let mut set_mismatches = 0;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut empty = 0;
    for inst in pinned_variants() {
        let want = brute_force_consistent(&inst);
        if want.is_empty() {
            empty += 1;
            set_mismatches += usize::from(
                ConstrainedSubspace::from_instance(&inst) != Err(ZenoError::EmptySubspace),
            );
            continue;
        }
        let sub = ConstrainedSubspace::from_instance(&inst).unwrap();
        set_mismatches += usize::from(sub.basis_indices() != want.as_slice());
        let a = prepare_phi_via_circuit(&inst).unwrap();
        let b = prepare_phi_via_enumeration(&sub);
        worst = worst.max(a.distance(&b).unwrap());
        set_mismatches += usize::from(prepare_phi(&inst).is_err());
        checked += 1;
    }
    outcome(
        set_mismatches == 0 && worst <= 1e-12,
        format!("{checked} instances ({empty} contradictory), {set_mismatches} basis mismatches, max path distance {worst:.2e}"),
    )
}

/// Distances at or below this are float round-off on normalized states.
const ROUND_OFF_FLOOR: f64 = 1e-14;

fn doubling_distances(bed: &ZenoTestbed) -> Vec<f64> {
    let ks = [16usize, 32, 64, 128, 256, 512, 1024];
    let states: Vec<_> = ks
        .iter()
        .map(|&k| bed.projected_states(k).unwrap())
        .collect();
    states
        .windows(2)
        .map(|w| slicing_distance(&w[0], &w[1]))
        .collect()
}

fn non_increasing(d: &[f64]) -> bool {
    d.windows(2)
        .all(|w| w[1] <= w[0] || w[1] <= ROUND_OFF_FLOOR)
}

fn projected_mode() -> Outcome {
    let mut nondeterministic = 0;
    let mut non_monotone = 0;
    let mut at_floor = 0;
    let mut worst_distance = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut oracle_cases = 0;
    let mut initial_overlap = 0.0;
    let mut final_overlap = 0.0;
    let suite = default_suite(SUITE_SEED);
    for inst in &suite {
        let bed = ZenoTestbed::from_instance(inst).unwrap();
        let a = bed.run_projected(64).unwrap();
        nondeterministic += usize::from(a != bed.run_projected(64).unwrap());
        let d = doubling_distances(&bed);
        worst_distance = worst_distance.max(d.iter().copied().fold(0.0, f64::max));
        non_monotone += usize::from(!non_increasing(&d));
        at_floor += usize::from(d.windows(2).any(|w| w[1] > w[0]));
        let trace = bed.run_projected(512).unwrap();
        initial_overlap += trace.samples[0].solution_overlap;
        final_overlap += trace.last().solution_overlap;
        if bed.subspace().dim() <= 16 {
            let bit = 0;
            let evolved = projected_generator_evolution(
                bed.phi().amplitudes(),
                bed.subspace().basis_indices(),
                bit,
                FRAC_PI_2,
            );
            let solutions = inst.combined_formula();
            let want: f64 = evolved
                .iter()
                .enumerate()
                .filter(|(i, _)| i & 1 == 1 && solutions.evaluate((i >> 1) as u64))
                .map(|(_, a)| a.norm_sqr())
                .sum::<f64>()
                / evolved.iter().map(|a| a.norm_sqr()).sum::<f64>();
            worst_oracle = worst_oracle.max((trace.last().solution_overlap - want).abs());
            oracle_cases += 1;
        }
    }

    // a subspace where the projected generator does not vanish
    let control = control_testbed();
    let control_d = doubling_distances(&control);
    let strictly = control_d.windows(2).all(|w| w[1] < w[0]);
    let limit = projected_generator_evolution(
        control.phi().amplitudes(),
        control.subspace().basis_indices(),
        0,
        FRAC_PI_2,
    );
    let limit = common::normalize(&limit);
    let control_gap = max_diff(
        control
            .run_projected(4096)
            .unwrap()
            .final_state
            .amplitudes(),
        &limit,
    );

    let count = suite.len() as f64;
    outcome(
        nondeterministic == 0 && non_monotone == 0 && worst_oracle <= 1e-8 && strictly && control_gap < 1e-3,
        format!(
            "{} instances: {nondeterministic} nondeterministic, {non_monotone} non-monotone (max k/2k distance {worst_distance:.1e}, {at_floor} only within the {ROUND_OFF_FLOOR:.0e} round-off floor), \
             oracle overlap error {worst_oracle:.1e} over {oracle_cases} with dim ≤ 16; \
             mean solution overlap {:.4} → {:.4} (recorded, not asserted); \
             control k/2k distances {} → {}, k=4096 vs generator limit {control_gap:.1e}",
            suite.len(),
            initial_overlap / count,
            final_overlap / count,
            fmt_e(control_d[0]),
            fmt_e(*control_d.last().unwrap())
        ),
    )
}

fn fmt_e(x: f64) -> String {
    format!("{x:.2e}")
}

fn run_cli(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_collapse-lab"))
        .args(args)
        .env("COLLAPSE_LAB_OUT_DIR", dir)
        .current_dir(dir)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn reproducibility() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let cnf = root.path().join("f.cnf");
    std::fs::write(&cnf, "p cnf 3 3\n1 -2 0\n2 3 0\n-1 -3 0\n").unwrap();
    let cnf = cnf.to_str().unwrap().to_string();
    let jobs: Vec<Vec<String>> = [
        vec![
            "simon",
            "--n",
            "6",
            "--r",
            "random",
            "--trials",
            "24",
            "--seed",
            "7",
            "--out",
            "simon.json",
        ],
        vec![
            "simon",
            "--n",
            "4",
            "--r",
            "0101",
            "--trials",
            "10",
            "--skip-step-d",
            "--seed",
            "8",
            "--out",
            "simon_skip.json",
        ],
        vec![
            "zeno",
            "--cnf",
            &cnf,
            "--mode",
            "frequent",
            "--slices",
            "32",
            "--trajectories",
            "40",
            "--seed",
            "3",
            "--trace",
            "freq.csv",
            "--out",
            "freq.json",
        ],
        vec![
            "zeno",
            "--cnf",
            &cnf,
            "--fix",
            "-1",
            "--mode",
            "projected",
            "--slices",
            "64",
            "--seed",
            "3",
            "--trace",
            "proj.csv",
            "--out",
            "proj.json",
        ],
        vec![
            "zeno",
            "--cnf",
            &cnf,
            "--mode",
            "unitary",
            "--slices",
            "16",
            "--trace",
            "unit.csv",
            "--out",
            "unit.json",
        ],
        vec![
            "waves",
            "--n",
            "3",
            "--seed",
            "5",
            "--time",
            "t1",
            "--out",
            "waves.json",
        ],
        vec![
            "oracle-gen",
            "--n",
            "5",
            "--seed",
            "9",
            "--out",
            "oracle.json",
        ],
        vec!["compile", "--cnf", &cnf, "--emit", "circuit.json"],
    ]
    .iter()
    .map(|j| j.iter().map(|s| s.to_string()).collect())
    .collect();
    let files = [
        "simon.json",
        "simon_skip.json",
        "freq.csv",
        "freq.json",
        "proj.csv",
        "proj.json",
        "unit.csv",
        "unit.json",
        "waves.json",
        "oracle.json",
        "circuit.json",
    ];
    let variants: [(&str, Option<&str>); 4] = [
        ("run0", None),
        ("run1", None),
        ("run2", None),
        ("threads4", Some("4")),
    ];
    let mut bad_exit = Vec::new();
    for (name, threads) in variants {
        let dir = root.path().join(name);
        std::fs::create_dir_all(&dir).unwrap();
        for job in &jobs {
            let mut args: Vec<&str> = job.iter().map(String::as_str).collect();
            let threads_arg = match (threads, args[0]) {
                (Some(t), "simon" | "zeno") => Some(t),
                (None, "simon" | "zeno") => Some("1"),
                _ => None,
            };
            if let Some(t) = threads_arg {
                args.extend(["--threads", t]);
            }
            let code = run_cli(&dir, &args);
            if code != 0 {
                bad_exit.push(format!("{name} {} exited {code}", job[0]));
            }
        }
    }
    let mut differing = Vec::new();
    for file in files {
        let reference = std::fs::read(root.path().join("run0").join(file)).unwrap_or_default();
        if reference.is_empty() {
            differing.push(format!("{file} missing"));
            continue;
        }
        for (name, _) in &variants[1..] {
            if std::fs::read(root.path().join(name).join(file)).unwrap_or_default() != reference {
                differing.push(format!("{file} differs in {name}"));
            }
        }
    }
    outcome(
        bad_exit.is_empty() && differing.is_empty(),
        format!(
            "{} output files × 3 runs + 4-thread run: {} differences, {} failed runs{}",
            files.len(),
            differing.len(),
            bad_exit.len(),
            differing
                .iter()
                .chain(&bad_exit)
                .next()
                .map(|m| format!(" ({m})"))
                .unwrap_or_default()
        ),
    )
}
