#![allow(dead_code)]

use floquet_core::defects::{insert_defect_line, zigzag_line};
use floquet_core::floquet::FloquetCode;
use floquet_core::{HexLattice, ModParams};

/// Torus with the standard straight line used across the tests.
pub fn torus_with_line(l: usize, params: ModParams) -> FloquetCode {
    let code = FloquetCode::torus(l, params).unwrap();
    let path = zigzag_line(&code.lattice, 0, 2, 7).unwrap();
    insert_defect_line(&code, &path).unwrap().0
}

/// Torus with `k` short lines on a 2×2 grid of well-separated spots.
pub fn torus_with_lines(l: usize, params: ModParams, k: usize) -> FloquetCode {
    let mut c = FloquetCode::torus(l, params).unwrap();
    let h = (l / 2) as i64;
    for &(i, j) in [(0i64, 0i64), (h, 0), (0, h), (h, h)].iter().take(k) {
        let path = zigzag_line(&c.lattice, i, j, 3).unwrap();
        c = insert_defect_line(&c, &path).unwrap().0;
    }
    c
}

/// Planar patch with zigzag lines of length `len` on the given rows, starting at column `i0`.
pub fn planar_twists(size: usize, len: usize, rows: &[i64], i0: i64) -> FloquetCode {
    let lat = HexLattice::build_planar(size, size).unwrap();
    let mut c = FloquetCode::new(lat, ModParams::qubit()).unwrap();
    for &j in rows {
        let path = zigzag_line(&c.lattice, i0, j, len).unwrap();
        c = insert_defect_line(&c, &path).unwrap().0;
    }
    c
}

/// Two-line planar layout whose twist separation scales with `d`.
pub fn separation_layout(d: usize) -> FloquetCode {
    let size = 3 * d;
    let len = 2 * d - 3;
    let i0 = ((size - len.div_ceil(2)) / 2) as i64;
    planar_twists(size, len, &[d as i64, 2 * d as i64], i0)
}

/// The four-twist planar patch (two length-3 lines).
pub fn planar_four_twists() -> FloquetCode {
    planar_twists(9, 3, &[3, 6], 2)
}

pub mod dense;
