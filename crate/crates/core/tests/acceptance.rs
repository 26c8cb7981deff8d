//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::dense::run_oracle;
use common::*;
use floquet_core::decoder::*;
use floquet_core::defects::*;
use floquet_core::floquet::*;
use floquet_core::toric::{self, SquareTopology};
use floquet_core::{HexLattice, ModParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = floquet_core::Result<(bool, String)>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn qutrit() -> ModParams {
    ModParams::new(3, 2, 2).unwrap()
}

fn count_from_empty(code: &FloquetCode, s: &Schedule) -> floquet_core::Result<Option<i64>> {
    let recs = run_rounds(code, &s.period.repeat(3), code.empty_group(), &mut rng(1))?;
    Ok(recs.last().unwrap().isg.logical_count().as_integer())
}

fn isg_structure() -> Outcome {
    let mut bad = Vec::new();
    for params in [ModParams::qubit(), qutrit()] {
        for l in [3, 6] {
            let code = FloquetCode::torus(l, params)?;
            let tr = run_schedule(&code, &Schedule::standard(), 5, &mut rng(1))?;
            for t in tr.init_len..tr.len() {
                if !verify_isg(&code, &tr, t)?.equal {
                    bad.push(format!("N={} L={l} t={t}", params.n));
                }
            }
        }
    }
    Ok((bad.is_empty(), format!("mismatched rounds {bad:?}")))
}

fn logical_counting() -> Outcome {
    let torus = FloquetCode::torus(6, ModParams::qubit())?;
    let tr = run_schedule(&torus, &Schedule::standard(), 2, &mut rng(2))?;
    let t = tr.final_isg().unwrap().logical_count().as_integer();
    let planar = FloquetCode::new(HexLattice::build_planar(6, 6)?, ModParams::qubit())?;
    let tr = run_schedule(&planar, &Schedule::standard(), 2, &mut rng(3))?;
    let p = tr.final_isg().unwrap().logical_count().as_integer();
    let four = planar_four_twists();
    let f = count_from_empty(&four, &defect_schedule(&four, 1, false)?)?;
    let mut lines = Vec::new();
    for k in 2..=4 {
        let c = torus_with_lines(6, ModParams::qubit(), k);
        lines.push(count_from_empty(&c, &defect_schedule(&c, 1, false)?)?);
    }
    let ok = t == Some(2) && p == Some(0) && f == Some(1) && lines == vec![Some(3), Some(4), Some(5)];
    Ok((ok, format!("torus {t:?}, planar {p:?}, four twists {f:?}, k=2..4 lines {lines:?}")))
}

fn automorphism() -> Outcome {
    let mut ok = true;
    let mut seen = Vec::new();
    for params in [ModParams::qubit(), qutrit()] {
        let code = FloquetCode::torus(6, params)?;
        for h in [true, false] {
            let rep = verify_automorphism(&code, h, &mut rng(5))?;
            let want = if params.n == 2 { 1 } else { 2 };
            ok &= rep.passed() && rep.e.to == Some((Anyon::M, want)) && rep.m.to == Some((Anyon::E, want));
            seen.push(format!("N={} e->{:?} m->{:?} psi={}", params.n, rep.e.to, rep.m.to, rep.psi_invariant));
        }
    }
    Ok((ok, seen.join("; ")))
}

fn defect_verification() -> Outcome {
    let mut ok = true;
    let mut seen = Vec::new();
    for params in [ModParams::qubit(), qutrit()] {
        let code = FloquetCode::torus(6, params)?;
        let path = zigzag_line(&code.lattice, 0, 2, 7)?;
        let (c, line) = insert_defect_line(&code, &path)?;
        let tr = run_schedule(&c, &defect_schedule(&c, 2, false)?, 2, &mut rng(5))?;
        let rep = verify_defect_line(&c, &line, &tr)?;
        let plain = run_schedule(&code, &Schedule::standard(), 3, &mut rng(5))?;
        let control = verify_defect_line(&code, &line, &plain)?.order_parameter;
        ok &= rep.passed() && rep.rounds.len() == 3 && control == 0.0;
        seen.push(format!(
            "N={} rounds passed {}/{} order {} (defect-free {control})",
            params.n,
            rep.rounds.iter().filter(|r| r.passed()).count(),
            rep.rounds.len(),
            rep.order_parameter
        ));
    }
    Ok((ok, seen.join("; ")))
}

fn insertion_conservation() -> Outcome {
    let mut pairs = Vec::new();
    for k in 1..=3 {
        let c = torus_with_lines(6, ModParams::qubit(), k);
        let tr = run_schedule(&c, &defect_schedule(&c, 1, false)?, 2, &mut rng(11))?;
        let first = tr.rounds.iter().position(|r| r.label.is_defect_round()).unwrap();
        let before = tr.rounds[first - 1].isg.logical_count().as_integer();
        let after = tr.rounds[first].isg.logical_count().as_integer();
        pairs.push((before, after));
    }
    Ok((pairs.iter().all(|(a, b)| a == b), format!("before/after for k=1..3 {pairs:?}")))
}

fn inference() -> Outcome {
    let code = FloquetCode::torus(6, ModParams::qubit())?;
    let start = code.lattice.vertex_at((1, 1), 0).unwrap();
    let six: Vec<Round> = "~0*,1*,2*,1*,~0*,2*".split(',').map(|t| t.parse().unwrap()).collect();
    let mut ok = true;
    let mut seen = Vec::new();
    for color in 0..3u8 {
        let path = find_line(&code.lattice, start, 7, Some(color)).unwrap();
        let (c, _) = insert_defect_line(&code, &path)?;
        let three = verify_inference(&c, &defect_schedule(&c, 1, false)?, 3, &mut rng(5))?;
        let s6 = Schedule { init: Schedule::standard().init, period: six.clone() };
        let r6 = verify_inference(&c, &s6, 3, &mut rng(5))?;
        let expect_six = color != 2;
        let six_ok = if expect_six { r6.all_inferred() } else { r6.none_inferred() };
        let refused = defect_schedule(&c, 1, true).is_err();
        ok &= three.within_one_period() && six_ok && refused == !expect_six;
        seen.push(format!(
            "{color}-checks: three-round {:?}, six-round {}",
            three.entries.iter().map(|e| e.inferred_at).collect::<Vec<_>>(),
            if r6.all_inferred() {
                "inferred"
            } else if r6.none_inferred() {
                "never"
            } else {
                "partial"
            }
        ));
    }
    Ok((ok, seen.join("; ")))
}

fn sweep_soundness() -> Outcome {
    let torus = FloquetCode::torus(6, ModParams::qubit())?;
    let planar = FloquetCode::new(HexLattice::build_planar(9, 9)?, ModParams::qubit())?;
    let line = torus_with_line(6, ModParams::qubit());
    let four = planar_four_twists();
    let cases = [
        ("torus", Schedule::standard(), &torus),
        ("planar", Schedule::standard(), &planar),
        ("torus+line", defect_schedule(&line, 1, false)?, &line),
        ("planar+lines", defect_schedule(&four, 1, false)?, &four),
    ];
    let mut ok = true;
    let mut seen = Vec::new();
    for (name, s, code) in cases {
        let r = single_error_sweep(code, &s, 4)?;
        ok &= r.all_pairs();
        seen.push(format!("{name}: {} classes, {} undecomposable, {} with 4 flips", r.classes, r.violations.len(), r.split.len()));
    }
    Ok((ok, seen.join("; ")))
}

fn decoding_sanity() -> Outcome {
    let s = |c: &FloquetCode| defect_schedule(c, 1, false);
    let small = separation_layout(3);
    let g3 = build_syndrome_graph(&small, &s(&small)?, 3, 0.005)?;
    let zero = estimate_logical_error_rate(&g3, 0.0, 1000, 1);

    let grid = [0.001, 0.005, 0.01, 0.02, 0.05];
    let rates: Vec<RateEstimate> = grid.iter().map(|&p| estimate_logical_error_rate(&g3, p, 2000, 2)).collect();
    let monotone = rates.windows(2).all(|w| w[1].rate >= w[0].rate - 3.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt());

    let large = separation_layout(6);
    let g6 = build_syndrome_graph(&large, &s(&large)?, 3, 0.005)?;
    let a = estimate_logical_error_rate(&g3, 0.005, 10_000, 3);
    let b = estimate_logical_error_rate(&g6, 0.005, 10_000, 3);
    let sep = a.rate - b.rate > 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();

    let ok = zero.failures == 0 && monotone && sep;
    Ok((
        ok,
        format!(
            "p=0 failures {}; grid rates {:?}; p=0.5% small {:.4}±{:.4} vs large {:.4}±{:.4}",
            zero.failures,
            rates.iter().map(|r| format!("{:.4}", r.rate)).collect::<Vec<_>>(),
            a.rate,
            a.stderr,
            b.rate,
            b.stderr
        ),
    ))
}

fn dense_oracle() -> Outcome {
    let mut ok = true;
    let mut seen = Vec::new();
    for (dim, seed) in [(2u32, 11u64), (3, 12), (4, 13)] {
        let rep = run_oracle(dim, 1000, 6, seed);
        ok &= rep.passed();
        seen.push(format!(
            "N={dim}: {} measurements, {} support mismatches, z={:.2}, max err {:.1e}/{:.1e}",
            rep.measurements, rep.support_mismatches, rep.z_score, rep.max_stabilizer_error, rep.max_projector_error
        ));
    }
    Ok((ok, seen.join("; ")))
}

fn toric_oracle() -> Outcome {
    let c = toric::build_toric(SquareTopology::Torus { lx: 12, ly: 12 })?;
    let straight = toric::condense_fermion_line(&c, &toric::straight_path(&c, 2, 5, 6)?)?;
    let s = toric::verify_tc_twist(&straight, 0)?.passed();
    let lc = toric::build_toric(SquareTopology::Torus { lx: 14, ly: 14 })?;
    let bent = toric::condense_fermion_line(&lc, &toric::l_path(&lc, 2, 3, 6, 6)?)?;
    let l = toric::verify_tc_twist(&bent, 0)?.passed();
    let base = c.logical_count()?.as_integer();
    let one = toric::condense_fermion_line(&c, &toric::straight_path(&c, 1, 2, 5)?)?;
    let two = toric::condense_fermion_line(&one, &toric::straight_path(&c, 1, 8, 5)?)?;
    let after = two.logical_count()?.as_integer();
    let ok = s && l && base.is_some() && after == base.map(|b| b + 1);
    Ok((ok, format!("straight {s}, L-shaped {l}, logical {base:?} -> {after:?}")))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Option<u64>); 10] = [
        ("ISG structure", isg_structure, Some(10)),
        ("logical counting", logical_counting, Some(30)),
        ("automorphism", automorphism, Some(30)),
        ("defect verification", defect_verification, Some(30)),
        ("insertion conservation", insertion_conservation, None),
        ("stabilizer inference", inference, None),
        ("syndrome-graph soundness", sweep_soundness, None),
        ("decoding sanity", decoding_sanity, Some(600)),
        ("dense-oracle equivalence", dense_oracle, Some(120)),
        ("toric twist oracle", toric_oracle, Some(10)),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let took = t0.elapsed();
        let in_time = limit.is_none_or(|s| took < Duration::from_secs(s));
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|s| format!(" (limit {s} s)")).unwrap_or_default();
        println!("criterion {:>2} {:<26} {} [{:.2?}{budget}] {detail}", i + 1, name, if pass { "PASS" } else { "FAIL" }, took);
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
