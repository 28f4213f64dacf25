//! Instance families with exactly one satisfying assignment.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::ZenoInstance;
use crate::measure::stream_rng;
use crate::satnet::{brute_force_sat, CnfFormula};

/// Non-tautological clauses over `num_vars` variables, each variable used at
/// most once, ordered by size then lexicographically.
fn all_clauses(num_vars: usize) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    for mask in 1u32..1 << num_vars {
        let vars: Vec<i32> = (0..num_vars as i32)
            .filter(|v| mask >> v & 1 == 1)
            .map(|v| v + 1)
            .collect();
        for signs in 0u32..1 << vars.len() {
            out.push(
                vars.iter()
                    .enumerate()
                    .map(|(i, &v)| if signs >> i & 1 == 1 { -v } else { v })
                    .collect(),
            );
        }
    }
    out.sort_by(|a: &Vec<i32>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::new(), &mut out);
    out
}

fn has_unique_solution(formula: &CnfFormula) -> bool {
    brute_force_sat(formula)
        .map(|s| s.len() == 1)
        .unwrap_or(false)
}

/// Every formula over 1 to 3 variables built from at most three distinct
/// non-tautological clauses that has exactly one solution.
pub fn exhaustive_small_instances() -> Vec<ZenoInstance> {
    let mut out = Vec::new();
    for num_vars in 1..=3 {
        let clauses = all_clauses(num_vars);
        for size in 1..=3 {
            for pick in subsets(clauses.len(), size) {
                let formula =
                    CnfFormula::new(num_vars, pick.iter().map(|&i| clauses[i].clone()).collect())
                        .expect("generated clauses are in range");
                if has_unique_solution(&formula) {
                    out.push(ZenoInstance::unconstrained(formula).expect("small formula"));
                }
            }
        }
    }
    out
}

/// Random 3-literal clauses consistent with a hidden assignment, added until
/// that assignment is the only solution.
pub fn random_single_solution(num_vars: usize, seed: u64) -> ZenoInstance {
    assert!((1..=20).contains(&num_vars), "num_vars must be in 1..=20");
    let mut rng = stream_rng(seed, num_vars as u64);
    let hidden = rng.random_range(0..1u64 << num_vars);
    let vars: Vec<i32> = (1..=num_vars as i32).collect();
    let width = num_vars.min(3);
    let mut formula = CnfFormula::new(num_vars, Vec::new()).expect("num_vars checked");
    let mut count = 1usize << num_vars;
    while count > 1 {
        let clause: Vec<i32> = vars
            .choose_multiple(&mut rng, width)
            .map(|&v| if rng.random::<bool>() { v } else { -v })
            .collect();
        if !clause.iter().any(|&l| formula.literal_value(hidden, l)) {
            continue;
        }
        let candidate = formula.with_clauses([clause]).expect("clause in range");
        let next = brute_force_sat(&candidate).expect("num_vars checked").len();
        if next < count {
            formula = candidate;
            count = next;
        }
    }
    ZenoInstance::unconstrained(formula).expect("num_vars checked")
}

/// The exhaustive small family plus one random instance for each of 4 to 8
/// variables.
pub fn default_suite(seed: u64) -> Vec<ZenoInstance> {
    let mut out = exhaustive_small_instances();
    out.extend((4..=8).map(|v| random_single_solution(v, seed)));
    out
}
