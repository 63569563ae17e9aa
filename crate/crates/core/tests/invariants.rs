use freemul_core::{
    cumulants_from_moments, free_mult_convolve, mixed_moment_xy, moments_of,
    verify_proof_identities, LawSpec, MomentSequence, Word,
};
use proptest::prelude::*;

const ORDER: usize = 8;

fn any_law() -> impl Strategy<Value = LawSpec> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|variance| LawSpec::Semicircle { variance }),
        nonzero_mean_law(),
    ]
}

fn nonzero_mean_law() -> impl Strategy<Value = LawSpec> {
    prop_oneof![
        (0.3..3.0f64).prop_map(|rate| LawSpec::FreePoisson { rate }),
        (0.5..2.0f64, -2.0..2.0f64)
            .prop_filter("mean away from zero", |(rate, shift)| (rate - shift).abs() > 0.25)
            .prop_map(|(rate, shift)| LawSpec::ShiftedFreePoisson { rate, shift }),
        (0.5..2.0f64).prop_map(|c| LawSpec::PointMass { c }),
    ]
}

fn moments(law: &LawSpec) -> MomentSequence {
    moments_of(law, ORDER).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_partition_oracle(a in any_law(), b in nonzero_mean_law()) {
        let (ma, mb) = (moments(&a), moments(&b));
        let r = free_mult_convolve(&ma, &mb, ORDER).unwrap();
        let (ka, kb) = (cumulants_from_moments(&ma), cumulants_from_moments(&mb));
        for n in 1..=ORDER {
            let oracle = mixed_moment_xy(&ka, &kb, Word::XyPower, n).unwrap();
            prop_assert!(rel(r.moments.as_slice()[n - 1], oracle) < 1e-8, "n={n}");
        }
    }

    #[test]
    fn symmetric_in_factors(a in any_law(), b in nonzero_mean_law()) {
        let (ma, mb) = (moments(&a), moments(&b));
        let ab = free_mult_convolve(&ma, &mb, ORDER).unwrap();
        let ba = free_mult_convolve(&mb, &ma, ORDER).unwrap();
        prop_assert_eq!(ab.case_tag, ba.case_tag);
        for (x, y) in ab.moments.as_slice().iter().zip(ba.moments.as_slice()) {
            prop_assert!(rel(*x, *y) < 1e-9);
        }
    }

    #[test]
    fn unit_is_neutral(a in any_law()) {
        let ma = moments(&a);
        let unit = moments(&LawSpec::PointMass { c: 1.0 });
        let r = free_mult_convolve(&ma, &unit, ORDER).unwrap();
        for (x, y) in r.moments.as_slice().iter().zip(ma.as_slice()) {
            prop_assert!(rel(*x, *y) < 1e-9);
        }
    }

    #[test]
    fn auxiliary_identities_hold(a in any_law(), b in nonzero_mean_law()) {
        let report = verify_proof_identities(&moments(&a), &moments(&b), 6).unwrap();
        prop_assert!(report.passed(1e-8), "max residual {}", report.max_residual());
    }
}
