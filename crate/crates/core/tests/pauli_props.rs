use floquet_core::floquet::make_measurable;
use floquet_core::modular::howell_rows;
use floquet_core::{Expectation, Membership, ModParams, PauliWord, StabilizerGroup};
use proptest::prelude::*;

const N_SITES: usize = 4;

fn word(dim: u32) -> impl Strategy<Value = PauliWord> {
    (prop::collection::vec(0..dim as i64, N_SITES), prop::collection::vec(0..dim as i64, N_SITES), 0..2 * dim as i64)
        .prop_map(move |(x, z, p)| PauliWord::from_parts(dim, x, z, p).unwrap())
}

fn dim_and_words(k: usize) -> impl Strategy<Value = (u32, Vec<PauliWord>)> {
    prop_oneof![Just(2u32), Just(3u32), Just(4u32), Just(6u32)].prop_flat_map(move |d| (Just(d), prop::collection::vec(word(d), k)))
}

fn params(dim: u32) -> ModParams {
    ModParams::new(dim, 1, 1).unwrap()
}

proptest! {
    #[test]
    fn product_is_associative((_, w) in dim_and_words(3)) {
        let l = w[0].mul(&w[1]).unwrap().mul(&w[2]).unwrap();
        let r = w[0].mul(&w[1].mul(&w[2]).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn commutation_phase((d, w) in dim_and_words(2)) {
        let c = w[0].comm_exponent(&w[1]).unwrap();
        prop_assert_eq!((c + w[1].comm_exponent(&w[0]).unwrap()) % d, 0);
        let mut ba = w[1].mul(&w[0]).unwrap();
        ba.add_phase(2 * c as i64);
        prop_assert_eq!(w[0].mul(&w[1]).unwrap(), ba);
    }

    #[test]
    fn adjoint_inverts((_, w) in dim_and_words(1)) {
        prop_assert!(w[0].mul(&w[0].adjoint()).unwrap().is_identity());
        prop_assert!(w[0].pow(-3).mul(&w[0].pow(3)).unwrap().is_identity());
    }

    #[test]
    fn powers_add((_, w) in dim_and_words(1), a in 0i64..9, b in 0i64..9) {
        let lhs = w[0].pow(a).mul(&w[0].pow(b)).unwrap();
        prop_assert_eq!(lhs, w[0].pow(a + b));
    }

    #[test]
    fn measurable_nth_power((d, w) in dim_and_words(1)) {
        prop_assert!(make_measurable(w[0].clone()).pow(d as i64).is_identity());
    }

    #[test]
    fn text_round_trip((d, w) in dim_and_words(1)) {
        prop_assert_eq!(PauliWord::parse(&w[0].to_text(), N_SITES, d).unwrap(), w[0].clone());
    }

    #[test]
    fn howell_form_is_canonical((d, w) in dim_and_words(4), k in 1i64..5) {
        let rows = |ws: &[PauliWord]| -> Vec<Vec<u64>> {
            ws.iter()
                .map(|p| (0..N_SITES).flat_map(|i| [p.x_at(i) as u64, p.z_at(i) as u64]).collect())
                .collect()
        };
        let mut mixed = w.clone();
        mixed.reverse();
        mixed[0] = mixed[0].mul(&mixed[1].pow(k)).unwrap();
        mixed.push(w[0].mul(&w[2]).unwrap());
        prop_assert_eq!(howell_rows(rows(&w), d as u64), howell_rows(rows(&mixed), d as u64));
    }

    #[test]
    fn measured_words_join_the_group((d, w) in dim_and_words(4)) {
        let zs = (0..N_SITES).map(|i| PauliWord::z_on(N_SITES, d, i)).collect();
        let mut g = StabilizerGroup::new(N_SITES, params(d), zs).unwrap();
        for x in w {
            let x = make_measurable(x);
            let (base, _, _) = g.outcome_support(&x).unwrap();
            g.measure_forced(&x, base).unwrap();
            let mut shifted = x.clone();
            shifted.add_phase(-2 * base as i64);
            prop_assert_eq!(g.contains(&shifted).unwrap(), Membership::InGroup);
            prop_assert_eq!(g.expectation(&x), Expectation::Gamma(2 * base));
            prop_assert_eq!(g.logical_count().as_integer(), Some(0));
            for s in g.generators() {
                prop_assert!(s.commutes_with(&x));
            }
        }
    }
}
