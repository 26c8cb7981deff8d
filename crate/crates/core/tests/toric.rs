use floquet_core::toric::*;
use floquet_core::PauliWord;

fn torus(l: usize) -> SquareToricCode {
    build_toric(SquareTopology::Torus { lx: l, ly: l }).unwrap()
}

#[test]
fn short_string_violations() {
    let c = torus(5);
    for e in 0..c.n_qubits() {
        let (v, p) = violations(&c, &short_string(&c, Species::E, e).unwrap());
        assert_eq!((v.len(), p.len()), (2, 0));
        let (v, p) = violations(&c, &short_string(&c, Species::M, e).unwrap());
        assert_eq!((v.len(), p.len()), (0, 2));
        let w = short_string(&c, Species::Psi, e).unwrap();
        assert_eq!(w.weight(), 2);
        let (v, p) = violations(&c, &w);
        assert_eq!((v.len(), p.len()), (2, 2));
        // Each end carries a vertex at a corner of a flagged plaquette.
        for &x in &v {
            assert!(p.iter().any(|&q| c.plaquette_corners(q).contains(&x)));
        }
    }
}

#[test]
fn psi_string_only_violates_endpoints() {
    let c = torus(8);
    let path = l_path(&c, 1, 1, 4, 3).unwrap();
    let w = open_psi_string(&c, &path).unwrap();
    let (v, p) = violations(&c, &w);
    assert_eq!((v.len(), p.len()), (2, 2));
    assert!(p.contains(&path[0]) && p.contains(path.last().unwrap()));
}

#[test]
fn boundary_edge_has_no_psi_hop() {
    let c = build_toric(SquareTopology::Planar { width: 3, height: 3 }).unwrap();
    let e = c.v_edge(0, 1).unwrap();
    assert!(short_string(&c, Species::Psi, e).is_err());
}

#[test]
fn straight_line_uses_plain_short_strings() {
    let c = torus(10);
    let path = straight_path(&c, 2, 4, 5).unwrap();
    let d = condense_fermion_line(&c, &path).unwrap();
    let line = &d.lines[0];
    assert!(line.corners.is_empty());
    assert!(line.trimmed.is_empty());
    let plain: Vec<PauliWord> =
        path.windows(2).map(|s| short_string(&c, Species::Psi, c.shared_edge(s[0], s[1]).unwrap()).unwrap()).collect();
    assert_eq!(line.pieces.len(), plain.len());
    for (a, b) in line.pieces.iter().zip(&plain) {
        assert_eq!(a.phaseless(), b.phaseless());
    }
}

#[test]
fn corner_pairs_x_with_y() {
    let c = torus(10);
    let path = l_path(&c, 2, 2, 4, 4).unwrap();
    let d = condense_fermion_line(&c, &path).unwrap();
    let line = &d.lines[0];
    assert_eq!(line.corners.len(), 1);
    let corner = line.pieces.iter().find(|p| p.support().iter().any(|&s| p.x_at(s) == 1 && p.z_at(s) == 1)).unwrap();
    let kinds: Vec<(u32, u32)> = corner.support().iter().map(|&s| (corner.x_at(s), corner.z_at(s))).collect();
    assert!(kinds.contains(&(1, 1)) && kinds.contains(&(1, 0)), "{kinds:?}");
}

#[test]
fn pieces_commute_disjoint_and_create_psi_pairs() {
    let c = torus(10);
    for path in [straight_path(&c, 1, 3, 6).unwrap(), l_path(&c, 1, 1, 5, 4).unwrap()] {
        let d = condense_fermion_line(&c, &path).unwrap();
        let pieces = &d.lines[0].pieces;
        let group = d.group().unwrap();
        for (i, a) in pieces.iter().enumerate() {
            assert_eq!(a.weight(), 2);
            for b in &pieces[i + 1..] {
                assert!(a.commutes_with(b));
                assert!(a.support().iter().all(|s| !b.support().contains(s)));
            }
            let (vs, ps) = violations(&c, a);
            assert_eq!((vs.len(), ps.len()), (2, 2));
            // The detecting terms leave the group while the piece joins it.
            for &v in &vs {
                assert!(!group.contains(&c.vertex_term(v)).unwrap().up_to_phase());
            }
            for &p in &ps {
                assert!(!group.contains(&c.plaquette_term(p)).unwrap().up_to_phase());
            }
            assert!(group.contains(a).unwrap().up_to_phase());
        }
        for g in d.generators() {
            for h in d.generators() {
                assert!(g.commutes_with(&h));
            }
        }
    }
}

#[test]
fn twist_verification_straight_lines() {
    let c = torus(12);
    for len in [5, 6, 7] {
        let d = condense_fermion_line(&c, &straight_path(&c, 2, 5, len).unwrap()).unwrap();
        let r = verify_tc_twist(&d, 0).unwrap();
        assert!(r.passed(), "len {len}: {r:?}");
    }
}

#[test]
fn twist_verification_l_shaped() {
    let c = torus(14);
    let d = condense_fermion_line(&c, &l_path(&c, 2, 3, 6, 6).unwrap()).unwrap();
    let r = verify_tc_twist(&d, 0).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn planar_patch_interior() {
    let c = build_toric(SquareTopology::Planar { width: 21, height: 15 }).unwrap();
    let d = condense_fermion_line(&c, &straight_path(&c, 8, 7, 6).unwrap()).unwrap();
    let r = verify_tc_twist(&d, 0).unwrap();
    assert!(r.passed(), "{r:?}");
    let near = condense_fermion_line(&c, &straight_path(&c, 0, 7, 6).unwrap()).unwrap();
    assert!(!verify_tc_twist(&near, 0).unwrap().interior);
}

#[test]
fn defect_free_has_no_condensation() {
    let c = torus(12);
    let path = straight_path(&c, 2, 5, 6).unwrap();
    let d = condense_fermion_line(&c, &path).unwrap();
    let inner = &path[1..path.len() - 1];
    let w = open_psi_string(&c, inner).unwrap();
    assert_eq!(expectation(&c, &w).unwrap(), 0.0);
    assert_eq!(expectation(&d, &w).unwrap().abs(), 1.0);

    // No local e-to-m string exists without the line.
    let gens = c.toric_generators();
    let v = c.vertex_at(4, 8).unwrap();
    let q = c.plaquette_at(4, 3).unwrap();
    let region = c.edges_near((4.5, 5.5), 3.5);
    assert!(local_string(&c, &gens, &region, &[c.vertex_term(v), c.plaquette_term(q)]).is_none());
    let dg = d.generators();
    assert!(local_string(&d, &dg, &region, &[c.vertex_term(v), c.plaquette_term(q)]).is_some());
}

#[test]
fn two_lines_add_a_logical() {
    let c = torus(12);
    let base = c.logical_count().unwrap().as_integer().unwrap();
    let one = condense_fermion_line(&c, &straight_path(&c, 1, 2, 5).unwrap()).unwrap();
    assert_eq!(one.logical_count().unwrap().as_integer(), Some(base));
    let two = condense_fermion_line(&one, &straight_path(&c, 1, 8, 5).unwrap()).unwrap();
    assert_eq!(two.logical_count().unwrap().as_integer(), Some(base + 1));
    for k in 0..2 {
        assert!(verify_tc_twist(&two, k).unwrap().passed());
    }
}

#[test]
fn removing_line_restores_toric_code() {
    let c = torus(8);
    let d = condense_fermion_line(&c, &l_path(&c, 1, 1, 3, 3).unwrap()).unwrap();
    assert!(!d.group().unwrap().group_equal(&c.toric_group().unwrap()));
    let back = d.without_line(0).unwrap();
    assert!(back.group().unwrap().group_equal(&c.toric_group().unwrap()));
}

#[test]
fn bad_paths_rejected() {
    let c = torus(6);
    let a = c.plaquette_at(0, 0).unwrap();
    let b = c.plaquette_at(2, 0).unwrap();
    assert!(condense_fermion_line(&c, &[a, b]).is_err());
    assert!(condense_fermion_line(&c, &[a]).is_err());
    let p = straight_path(&c, 0, 0, 3).unwrap();
    assert!(condense_fermion_line(&c, &[p[0], p[1], p[0]]).is_err());
    let d = condense_fermion_line(&c, &p).unwrap();
    assert!(condense_fermion_line(&d, &p).is_err());
}

#[test]
fn line_long_products_are_the_only_nonlocal_part() {
    let c = torus(12);
    assert_eq!(c.nonlocal_rank(), 0);
    let one = condense_fermion_line(&c, &straight_path(&c, 1, 2, 5).unwrap()).unwrap();
    // On a torus the lone line's vertex product equals all other vertex terms.
    assert_eq!(one.nonlocal_rank(), 0);
    let two = condense_fermion_line(&one, &straight_path(&c, 1, 8, 5).unwrap()).unwrap();
    assert_eq!(two.nonlocal_rank(), 1);
}
