mod common;

use common::*;
use floquet_core::decoder::*;
use floquet_core::defects::{defect_schedule, static_stabilizers};
use floquet_core::floquet::{FloquetCode, Schedule};
use floquet_core::{HexLattice, ModParams, PauliWord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn torus() -> FloquetCode {
    FloquetCode::torus(6, ModParams::qubit()).unwrap()
}

fn residual_word(res: &(Vec<u8>, Vec<u8>)) -> PauliWord {
    let x = res.0.iter().map(|&b| b as i64).collect();
    let z = res.1.iter().map(|&b| b as i64).collect();
    PauliWord::from_parts(2, x, z, 0).unwrap()
}

#[test]
fn clean_sweeps_flip_pairs() {
    let r = single_error_sweep(&torus(), &Schedule::standard(), 4).unwrap();
    assert!(r.all_pairs(), "{r:?}");
    let planar = FloquetCode::new(HexLattice::build_planar(9, 9).unwrap(), ModParams::qubit()).unwrap();
    let r = single_error_sweep(&planar, &Schedule::standard(), 4).unwrap();
    assert!(r.all_pairs(), "{:?}", r.violations);
}

#[test]
fn line_sweep_has_no_undecomposable_class() {
    let c = torus_with_line(6, ModParams::qubit());
    let s = defect_schedule(&c, 1, false).unwrap();
    let r = single_error_sweep(&c, &s, 4).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
}

#[test]
fn only_qubits_supported() {
    let code = FloquetCode::torus(3, ModParams::new(3, 2, 2).unwrap()).unwrap();
    assert!(build_syndrome_graph(&code, &Schedule::standard(), 2, 0.01).is_err());
}

#[test]
fn zero_noise_never_fails() {
    let g = build_syndrome_graph(&torus(), &Schedule::standard(), 4, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sample_errors(&g, 0.0, &mut rng).is_empty());
    assert!(decode(&g, &[]).unwrap().is_empty());
    let r = estimate_logical_error_rate(&g, 0.0, 1000, 3);
    assert_eq!(r.failures, 0);
    assert_eq!(r.rate, 0.0);
}

#[test]
fn single_errors_are_corrected() {
    let c = torus_with_line(6, ModParams::qubit());
    let s = defect_schedule(&c, 1, false).unwrap();
    let g = build_syndrome_graph(&c, &s, 3, 0.01).unwrap();
    for k in 0..g.classes.len() {
        let syn = syndrome_of(&g, &[k]);
        let corr = decode(&g, &syn).unwrap();
        let res = residual(&g, &[k], &corr);
        assert!(!is_logical_failure(&g, &res), "class {k}: {:?}", g.classes[k].event);
        if g.classes[k].edges.len() == 1 {
            assert_eq!(corr.len(), 1, "class {k}");
        }
    }
}

#[test]
fn residual_commutes_with_static_stabilizers() {
    for code in [torus(), torus_with_line(6, ModParams::qubit())] {
        let s = if code.defect_lines.is_empty() { Schedule::standard() } else { defect_schedule(&code, 1, false).unwrap() };
        let g = build_syndrome_graph(&code, &s, 3, 0.005).unwrap();
        let st = static_stabilizers(&code).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let errs = sample_classes(&g, 0.005, &mut rng);
            let corr = decode(&g, &syndrome_of(&g, &errs)).unwrap();
            let w = residual_word(&residual(&g, &errs, &corr));
            assert!(st.generators().iter().all(|s| s.commutes_with(&w)));
        }
    }
}

#[test]
fn event_counts_follow_binomial() {
    let g = build_syndrome_graph(&torus(), &Schedule::standard(), 2, 0.01).unwrap();
    let (p, trials) = (0.01, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let total: usize = (0..trials).map(|_| sample_errors(&g, p, &mut rng).len()).sum();
    let c = g.classes.len() as f64;
    let mean = p * c * trials as f64;
    let sd = (trials as f64 * c * p * (1.0 - p)).sqrt();
    assert!((total as f64 - mean).abs() < 5.0 * sd, "{total} vs {mean} ± {sd}");
}

#[test]
fn sampled_events_match_their_checks() {
    let g = build_syndrome_graph(&torus(), &Schedule::standard(), 2, 0.01).unwrap();
    for class in &g.classes {
        if let ErrorKind::Pauli { .. } = class.event.kind {
            assert!(g.noisy.contains(&class.event.time));
        }
    }
}

#[test]
fn planar_boundary_uses_terminals() {
    let planar = FloquetCode::new(HexLattice::build_planar(9, 9).unwrap(), ModParams::qubit()).unwrap();
    let g = build_syndrome_graph(&planar, &Schedule::standard(), 3, 0.01).unwrap();
    assert!(!g.terminals.is_empty());
    assert!(g.edges.iter().any(|e| g.is_terminal(e.a) || g.is_terminal(e.b)));
    let torus_graph = build_syndrome_graph(&torus(), &Schedule::standard(), 3, 0.01).unwrap();
    assert!(torus_graph.terminals.is_empty());
}

#[test]
fn estimates_independent_of_threading() {
    let g = build_syndrome_graph(&torus(), &Schedule::standard(), 3, 0.02).unwrap();
    let a = estimate_sequential(&g, 0.02, 300, 5);
    let b = estimate_logical_error_rate(&g, 0.02, 300, 5);
    assert_eq!(a, b);
    assert!(RateEstimate::csv_header().starts_with("p,d_or_layout"));
    assert_eq!(a.csv_row("L6").split(',').count(), 7);
}

#[test]
fn exports() {
    let g = build_syndrome_graph(&torus(), &Schedule::standard(), 2, 0.01).unwrap();
    assert!(g.to_dot().starts_with("graph syndrome {"));
    let j = g.to_json();
    assert_eq!(j["vertices"].as_array().unwrap().len(), g.n_vertices());
}
