//! End-to-end validation: every named experiment at its default sizes under
//! a fixed seed, one test per criterion, each report printed as a pass/fail
//! line. These are the runs `csbp validate all` performs.

use csbp::harness::{self, ExperimentConfig};

fn run_and_assert(name: &str, seed: u64) {
    let cfg = ExperimentConfig::named(name, seed);
    let reports = harness::run(&cfg).unwrap_or_else(|e| panic!("experiment `{name}`: {e}"));
    assert!(!reports.is_empty(), "experiment `{name}` produced no reports");
    let mut failed = Vec::new();
    for r in &reports {
        println!("{r}");
        if !r.pass {
            failed.push(r.name.clone());
        }
    }
    assert!(failed.is_empty(), "failing checks in `{name}`: {}", failed.join(", "));
}

#[test]
fn criterion_01_semigroup_composition() {
    run_and_assert("semigroup", 0xC5B9_0001);
}

#[test]
fn criterion_02_feller_cpp_window_law() {
    run_and_assert("feller-cpp", 0xC5B9_0002);
}

#[test]
fn criterion_03_inverse_flow_exponential() {
    run_and_assert("inverse-flow", 0xC5B9_0003);
}

#[test]
fn criterion_04_box_cross_construction() {
    run_and_assert("box", 0xC5B9_0004);
}

#[test]
fn criterion_05_first_block_generating_function() {
    run_and_assert("marginal-gf", 0xC5B9_0005);
}

#[test]
fn criterion_06_partition_law_vs_matrix_exponential() {
    run_and_assert("ctmc", 0xC5B9_0006);
}

#[test]
fn criterion_07_block_count_chain_and_scaling() {
    run_and_assert("block-count", 0xC5B9_0007);
}

#[test]
fn criterion_08_subcritical_limits() {
    run_and_assert("interval-genealogy", 0xC5B9_0008);
}

#[test]
fn criterion_09_supercritical_stationarity() {
    run_and_assert("supercritical", 0xC5B9_0009);
}

#[test]
fn criterion_10_generator_identities() {
    run_and_assert("generator", 0xC5B9_000A);
}

#[test]
fn criterion_11_coming_down_from_infinity() {
    run_and_assert("explosive", 0xC5B9_000B);
}

#[test]
fn criterion_12_singleton_fraction() {
    run_and_assert("singleton", 0xC5B9_000C);
}
