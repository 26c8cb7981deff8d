mod common;

use common::*;
use floquet_core::defects::*;
use floquet_core::floquet::*;
use floquet_core::{Error, LatticePath, ModParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn count_after(code: &FloquetCode, s: &Schedule, periods: usize) -> i64 {
    let recs = run_rounds(code, &s.period.repeat(periods), code.empty_group(), &mut rng(1)).unwrap();
    recs.last().unwrap().isg.logical_count().as_integer().unwrap()
}

#[test]
fn short_line_has_one_defect_check() {
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let path = zigzag_line(&code.lattice, 1, 2, 3).unwrap();
    let (c, line) = insert_defect_line(&code, &path).unwrap();
    assert_eq!(line.defect_checks.len(), 1);
    assert_eq!(line.removed.len(), 2);
    for d in c.defect_checks() {
        for (_, k) in c.active_checks() {
            assert!(d.commutes_with(&k));
        }
    }
}

#[test]
fn line_sizes_follow_length() {
    for params in [ModParams::qubit(), ModParams::new(3, 2, 2).unwrap()] {
        let code = FloquetCode::torus(6, params).unwrap();
        for len in [3, 5, 7] {
            let path = zigzag_line(&code.lattice, 0, 2, len).unwrap();
            let (c, line) = insert_defect_line(&code, &path).unwrap();
            assert_eq!(line.defect_checks.len(), len / 2);
            assert_eq!(line.removed.len(), len / 2 + 1);
            let ds = c.defect_checks();
            for (i, a) in ds.iter().enumerate() {
                for b in &ds[i + 1..] {
                    assert!(a.commutes_with(b));
                }
            }
        }
    }
}

#[test]
fn even_and_overlapping_lines_rejected() {
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let even = zigzag_line(&code.lattice, 0, 2, 4).unwrap();
    assert_eq!(insert_defect_line(&code, &even).unwrap_err(), Error::OddLengthRequired(4));
    let path = zigzag_line(&code.lattice, 0, 2, 5).unwrap();
    let (c, _) = insert_defect_line(&code, &path).unwrap();
    assert!(matches!(insert_defect_line(&c, &path), Err(Error::DefectConflict(_))));
}

#[test]
fn fermion_loop_around_plaquette() {
    for params in [ModParams::qubit(), ModParams::new(3, 2, 2).unwrap()] {
        let code = FloquetCode::torus(6, params).unwrap();
        for p in [0, 7, 20] {
            let mut cyc = code.lattice.plaquette_cycle(p).unwrap().to_vec();
            cyc.push(cyc[0]);
            let path = LatticePath::from_vertices(&code.lattice, cyc).unwrap();
            let w = fermion_string(&code, &path).unwrap();
            let s = code.plaquette_stabilizer(p);
            let same = w.phaseless() == s.phaseless() || w.phaseless() == s.pow(-1).phaseless();
            assert!(same, "p={p}: {w} vs {s}");
        }
    }
}

#[test]
fn open_fermion_string_only_fails_at_ends() {
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let path = zigzag_line(&code.lattice, 0, 2, 7).unwrap();
    let w = fermion_string(&code, &path).unwrap();
    let ends = [path.vertices[0], *path.vertices.last().unwrap()];
    let near: Vec<usize> = ends.iter().flat_map(|&v| ball(&code.lattice, v, 1)).collect();
    for (id, k) in code.all_checks() {
        if !k.commutes_with(&w) {
            assert!(k.support().iter().any(|s| near.contains(s)), "{id:?} anticommutes away from the ends");
        }
    }
}

#[test]
fn noncontractible_loop_is_logical() {
    let code = FloquetCode::torus(3, ModParams::qubit()).unwrap();
    for h in [true, false] {
        let w = closed_fermion_loop(&code, h).unwrap();
        assert!(code.all_checks().iter().all(|(_, k)| k.commutes_with(&w)));
        assert!(code.plaquette_stabilizers().iter().all(|s| s.commutes_with(&w)));
    }
}

#[test]
fn defect_schedule_shapes() {
    let c = torus_with_line(6, ModParams::qubit());
    let s = defect_schedule(&c, 3, false).unwrap();
    assert_eq!(s.init.len(), 4 + 6);
    assert_eq!(s.period, vec![Round::Tilde(0), Round::Star(1), Round::Star(2)]);
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let start = code.lattice.vertex_at((1, 1), 0).unwrap();
    let zero = insert_defect_line(&code, &find_line(&code.lattice, start, 7, Some(0)).unwrap()).unwrap().0;
    assert_eq!(defect_schedule(&zero, 1, true).unwrap().period.len(), 6);
    assert!(defect_schedule(&code, 1, false).is_err());
}

#[test]
fn six_round_rejects_removed_two_checks() {
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let start = code.lattice.vertex_at((1, 1), 0).unwrap();
    for color in 0..3u8 {
        let path = find_line(&code.lattice, start, 7, Some(color)).unwrap();
        let (c, line) = insert_defect_line(&code, &path).unwrap();
        assert!(line.removed.iter().all(|&e| c.lattice.edges[e].color == color));
        let r = defect_schedule(&c, 1, true);
        if color == 2 {
            assert_eq!(r.unwrap_err(), Error::InferenceImpossible);
        } else {
            assert!(r.is_ok());
        }
    }
}

#[test]
fn defect_line_verified_in_all_rounds() {
    for params in [ModParams::qubit(), ModParams::new(3, 2, 2).unwrap()] {
        let code = FloquetCode::torus(6, params).unwrap();
        let path = zigzag_line(&code.lattice, 0, 2, 7).unwrap();
        let (c, line) = insert_defect_line(&code, &path).unwrap();
        let s = defect_schedule(&c, 2, false).unwrap();
        let tr = run_schedule(&c, &s, 2, &mut rng(5)).unwrap();
        let rep = verify_defect_line(&c, &line, &tr).unwrap();
        assert_eq!(rep.rounds.len(), 3);
        assert!(rep.passed(), "N={}: {rep:?}", params.n);

        let plain = run_schedule(&code, &Schedule::standard(), 3, &mut rng(5)).unwrap();
        let control = verify_defect_line(&code, &line, &plain).unwrap();
        assert!(!control.passed());
        assert_eq!(control.order_parameter, 0.0);
    }
}

#[test]
fn logical_strings_need_two_lines() {
    let one = torus_with_lines(6, ModParams::qubit(), 1);
    assert!(matches!(logical_defect_operators(&one), Err(Error::InsufficientDefects { .. })));
}

#[test]
fn logical_strings_commute_and_persist() {
    for params in [ModParams::qubit(), ModParams::new(3, 2, 2).unwrap()] {
        let c = torus_with_lines(6, params, 2);
        let ops = logical_defect_operators(&c).unwrap();
        assert_eq!(ops.len(), 1);
        for w in &ops {
            assert!(c.active_checks().iter().all(|(_, k)| k.commutes_with(w)));
        }
        let s = defect_schedule(&c, 1, false).unwrap();
        let tr = run_schedule(&c, &s, 5, &mut rng(9)).unwrap();
        let first = tr.rounds.iter().position(|r| r.label.is_defect_round()).unwrap();
        for w in &ops {
            let phases: Vec<_> = tr.rounds[first..].iter().map(|r| r.isg.contains(w).unwrap().phase_offset()).collect();
            assert!(phases[0].is_some());
            assert!(phases.iter().all(|p| *p == phases[0]), "{phases:?}");
        }
    }
}

#[test]
fn logical_count_grows_with_lines() {
    for k in 2..=4 {
        let c = torus_with_lines(6, ModParams::qubit(), k);
        let s = defect_schedule(&c, 1, false).unwrap();
        assert_eq!(count_after(&c, &s, 3), 2 + (k as i64 - 1), "k={k}");
    }
}

#[test]
fn planar_four_twists_encode_one_qubit() {
    let c = planar_four_twists();
    let s = defect_schedule(&c, 1, false).unwrap();
    assert_eq!(count_after(&c, &s, 3), 1);
}

#[test]
fn insertion_conserves_constraints() {
    for k in 1..=3 {
        let c = torus_with_lines(6, ModParams::qubit(), k);
        let s = defect_schedule(&c, 1, false).unwrap();
        let tr = run_schedule(&c, &s, 2, &mut rng(11)).unwrap();
        let first = tr.rounds.iter().position(|r| r.label.is_defect_round()).unwrap();
        let before = tr.rounds[first - 1].isg.logical_count();
        let after = tr.rounds[first].isg.logical_count();
        assert_eq!(before, after, "k={k}");
    }
}

#[test]
fn static_stabilizers_without_defects_are_plaquettes() {
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let st = static_stabilizers(&code).unwrap();
    assert_eq!(st.generators(), code.plaquette_stabilizers().as_slice());
}

#[test]
fn static_stabilizers_pair_flip() {
    let c = torus_with_line(6, ModParams::qubit());
    let st = static_stabilizers(&c).unwrap();
    assert_eq!(pair_flip_violations(&c, st.generators()), 0);
    assert!(!st.products.is_empty());
    assert_eq!(st.defects.len(), c.defect_checks().len());
    for g in st.generators() {
        assert!(c.active_checks().iter().all(|(_, k)| k.commutes_with(g)));
    }
    let planar = planar_four_twists();
    let st = static_stabilizers(&planar).unwrap();
    assert_eq!(pair_flip_violations(&planar, st.generators()), 0);
}

#[test]
fn three_round_inference_within_one_period() {
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let start = code.lattice.vertex_at((1, 1), 0).unwrap();
    for color in 0..3u8 {
        let path = find_line(&code.lattice, start, 7, Some(color)).unwrap();
        let (c, _) = insert_defect_line(&code, &path).unwrap();
        let s = defect_schedule(&c, 1, false).unwrap();
        let rep = verify_inference(&c, &s, 3, &mut rng(5)).unwrap();
        assert!(!rep.entries.is_empty());
        assert!(rep.within_one_period(), "color {color}: {rep:?}");
    }
}

fn six_round(init: Vec<Round>) -> Schedule {
    let period = "~0*,1*,2*,1*,~0*,2*".split(',').map(|t| t.parse().unwrap()).collect();
    Schedule { init, period }
}

#[test]
fn six_round_inference_depends_on_removed_color() {
    let code = FloquetCode::torus(6, ModParams::qubit()).unwrap();
    let start = code.lattice.vertex_at((1, 1), 0).unwrap();
    for color in 0..3u8 {
        let path = find_line(&code.lattice, start, 7, Some(color)).unwrap();
        let (c, _) = insert_defect_line(&code, &path).unwrap();
        let s = six_round(Schedule::standard().init);
        let rep = verify_inference(&c, &s, 3, &mut rng(5)).unwrap();
        assert!(rep.entries.iter().all(|e| e.member_at.is_some()));
        if color == 2 {
            assert!(rep.none_inferred(), "{rep:?}");
        } else {
            assert!(rep.all_inferred(), "color {color}: {rep:?}");
            assert_eq!(rep, verify_inference(&c, &defect_schedule(&c, 1, true).unwrap(), 3, &mut rng(5)).unwrap());
        }
    }
}

#[test]
fn qutrit_line_condenses() {
    let c = torus_with_line(6, ModParams::new(3, 2, 2).unwrap());
    let line = c.defect_lines[0].clone();
    let s = defect_schedule(&c, 1, false).unwrap();
    let tr = run_schedule(&c, &s, 2, &mut rng(3)).unwrap();
    let rep = verify_defect_line(&c, &line, &tr).unwrap();
    assert!(rep.rounds.iter().all(|r| r.condensed.iter().all(|&x| x)));
    assert!(rep.rounds.iter().all(|r| r.crossing_charge == Some(2)));
}
