mod common;

use common::*;
use isostring::fields::{
    bc_residuals, beta, beta_closed_form, build_fields, endpoint_identities, k_diagnostic,
    zs_matrix_entries, FlowSpec,
};
use isostring::flow::{flow_rhs, invariants, lax_residuals};
use isostring::inverse::{
    euclidean_cf, proper_part, proper_part_of_cf, reassemble, InverseProblem,
};
use isostring::liouville::map_state;
use isostring::scalar::{pow2, Rational};
use isostring::string::{
    char_poly, char_poly_transfer, characteristic_value, characteristic_value_right, eigenvalues,
    greens_function,
};
use isostring::weyl::{cf_expand, partial_fractions, weyl_at_zero, weyl_eval};
use isostring::{BoundaryConditions, Error, Scalar};
use num_traits::Zero;
use proptest::prelude::*;

fn specs() -> Vec<FlowSpec<Rational>> {
    vec![
        FlowSpec::limit(),
        FlowSpec::Limit { rescaled: false },
        FlowSpec::SinglePole {
            epsilon: q(1, 3),
            rescaled: false,
        },
        FlowSpec::SinglePole {
            epsilon: q(5, 2),
            rescaled: true,
        },
        FlowSpec::MultiPole {
            mu0: q(1, 1),
            poles: vec![(q(1, 2), q(1, 1)), (q(3, 1), q(2, 5))],
            rescaled: false,
        },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn characteristic_polynomial_routes_agree(s in string_strategy(6), bc in bc_strategy(), lambda in z_strategy()) {
        let p = char_poly(&s, &bc);
        prop_assert_eq!(&p, &char_poly_transfer(&s, &bc));
        prop_assert_eq!(p.degree(), Some(s.len()));
        prop_assert_eq!(p.eval(&lambda), characteristic_value(&s, &bc, &lambda));
        prop_assert_eq!(p.eval(&-lambda.clone()), characteristic_value_right(&s, &bc, &-lambda.clone()));
        // D(z)/D(0) is the normalised determinant of K - z M
        let z = lambda;
        prop_assert_eq!(
            p.eval(&-z.clone()) / p.eval(&q(0, 1)),
            pencil_determinant_ratio(&s, &bc, &z)
        );
    }

    #[test]
    fn eigenvalues_are_simple_positive_roots(s in string_strategy(5), bc in bc_strategy()) {
        let ev = eigenvalues(&s, &bc).unwrap();
        prop_assert_eq!(ev.len(), s.len());
        prop_assert!(ev[0] > q(0, 1));
        prop_assert!(ev.windows(2).all(|w| w[0] < w[1]));
        let p = char_poly(&s, &bc);
        let dp = p.derivative();
        for z in &ev {
            // Newton correction far below the working precision
            let step = p.eval(&-z.clone()) / dp.eval(&-z.clone());
            prop_assert!(step.abs() <= z.clone() * pow2(-180));
        }
        let evf = eigenvalues(&to_f64_string(&s), &to_f64_bc(&bc)).unwrap();
        for (a, b) in evf.iter().zip(&ev) {
            prop_assert!((a - as_f64(b)).abs() <= 1e-11 * as_f64(b));
        }
    }

    #[test]
    fn weyl_data_is_consistent(s in string_strategy(5), bc in weyl_bc_strategy(), z in z_strategy()) {
        let sd = partial_fractions(&s, &bc).unwrap();
        prop_assert!(sd.residues.iter().all(|a| *a > q(0, 1)));
        let w0 = weyl_at_zero(&bc.left).unwrap();
        prop_assert_eq!(weyl_eval(&s, &bc.left, &q(0, 1)).unwrap(), w0.clone());
        prop_assert!(sd.zero_defect().unwrap().abs() < pow2(-150));
        let cf = cf_expand(&s, &bc.left).unwrap();
        prop_assert_eq!(cf.last_length.clone(), sd.w_infinity.clone());
        if let Ok(w) = weyl_eval(&s, &bc.left, &z) {
            prop_assert_eq!(cf.eval(&z).unwrap(), w.clone());
            prop_assert!((sd.eval(&z).unwrap() - w.clone()).abs() < pow2(-120) * (q(1, 1) + w.abs()));
        }
    }

    #[test]
    fn fields_satisfy_boundary_and_jump_conditions(s in string_strategy(4), bc in bc_strategy(), z in z_strategy()) {
        for spec in specs() {
            let f = build_fields(&s, &bc, &spec).unwrap();
            for (l, r) in bc_residuals(&f, &bc) {
                prop_assert!(l.is_zero() && r.is_zero());
            }
            for (r1, r2) in lax_residuals(&s, &f, &z).unwrap() {
                prop_assert!(r1.is_zero() && r2.is_zero());
            }
            match k_diagnostic(&f, &bc, &z) {
                Ok(k) => prop_assert_eq!(k, q(-1, 1)),
                Err(e) => prop_assert_eq!(e, Error::BetaZero),
            }
            prop_assert_eq!(beta(&f, &bc), beta_closed_form(&s, &bc, &spec).unwrap());
            let (a, _, d) = zs_matrix_entries(&f, &bc, &z, &q(1, 2)).unwrap();
            prop_assert_eq!(a + d, beta(&f, &bc).eval(&z).unwrap() * q(2, 1));
            // every field is piecewise cubic or lower
            prop_assert!(f.components().all(|b| b.max_degree().unwrap_or(0) <= 3));
        }
    }

    #[test]
    fn limit_fields_match_green_sums(s in string_strategy(5), bc in bc_strategy()) {
        let f = build_fields(&s, &bc, &FlowSpec::limit()).unwrap();
        for k in 1..=9 {
            let x = q(k, 10);
            prop_assert_eq!(f.b0.eval(&x), limit_b0_oracle(&s, &bc, &x));
            prop_assert_eq!(f.poles[0].field.eval(&x), greens_function(&bc, &x, &x).unwrap());
        }
        let rhs = flow_rhs(&s, &bc, &FlowSpec::limit()).unwrap();
        let (dx, dm) = limit_rhs_oracle(&s, &bc);
        prop_assert_eq!(rhs.dx, dx);
        prop_assert_eq!(rhs.dm, dm);
    }

    #[test]
    fn endpoint_identities_hold(s in string_strategy(5), bc in bc_strategy(), lambda in z_strategy()) {
        let e = endpoint_identities(&s, &bc, &lambda);
        let left = e.e1.clone().or_else(|| e.e2.clone().map(|v| -v)).unwrap();
        if let Some(e2) = &e.e2 { prop_assert_eq!(e2.clone(), -left.clone()); }
        if let Some(e3) = &e.e3 { prop_assert_eq!(e3.clone(), -left.clone()); }
        if let Some(e4) = &e.e4 { prop_assert_eq!(e4.clone(), left.clone()); }
        prop_assert_eq!(e.left_link.clone(), -(e.delta.clone() / q(2, 1)));
    }

    #[test]
    fn invariants_are_normalised_coefficients(s in string_strategy(6), bc in bc_strategy()) {
        let p = char_poly(&s, &bc);
        let raw = invariants(&s, &bc, false).unwrap();
        prop_assert_eq!(&raw[..], &p.coeffs()[1..]);
        let w = -bc.wronskian();
        let scaled = invariants(&s, &bc, true).unwrap();
        for (a, b) in scaled.iter().zip(&raw) {
            prop_assert_eq!(a.clone(), b.clone() / w.clone());
        }
    }

    #[test]
    fn continued_fraction_roundtrip(s in string_strategy(8), bc in weyl_bc_strategy()) {
        let cf = cf_expand(&s, &bc.left).unwrap();
        let (num, den) = proper_part_of_cf(&cf);
        let back = reassemble(&euclidean_cf(&num, &den, &cf.tail).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn inverse_problem_at_zero_is_identity(s in string_strategy(5), bc in weyl_bc_strategy()) {
        let ip = InverseProblem::new(&s, &bc, &FlowSpec::limit()).unwrap();
        let st = ip.state_at(&q(0, 1)).unwrap();
        prop_assert_eq!(&st.string, &s);
        // the partial-fraction route reproduces it to working precision
        let (num, den) = proper_part(&ip.data.eigenvalues, &ip.data.residues);
        let back = reassemble(&euclidean_cf(&num, &den, &bc.left.reciprocal().unwrap()).unwrap()).unwrap();
        for (a, b) in back.positions().iter().zip(s.positions()) {
            prop_assert!((a.clone() - b.clone()).abs() < pow2(-120));
        }
    }

    #[test]
    fn liouville_jump_conditions(s in string_strategy(4), bc in bc_strategy()) {
        let sf = to_f64_string(&s);
        let bcf: BoundaryConditions<f64> = to_f64_bc(&bc);
        let f = build_fields(&sf, &bcf, &FlowSpec::limit()).unwrap();
        let line = map_state(&sf, &f).unwrap();
        for (r1, r2) in line.residuals() {
            prop_assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9, "{} {}", r1, r2);
        }
    }
}

#[test]
fn float_backend_lax_residuals_are_small() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = rand::Rng::gen_range(&mut rng, 1..=4);
        let s = to_f64_string(&random_string(&mut rng, n));
        let bc = to_f64_bc(&random_bc(&mut rng));
        let f = build_fields(&s, &bc, &FlowSpec::limit()).unwrap();
        for z in [0.3, 1.7, 4.0, 11.5, 60.0] {
            for (r1, r2) in lax_residuals(&s, &f, &z).unwrap() {
                assert!(r1.abs() < 1e-10 && r2.abs() < 1e-10, "{r1} {r2}");
            }
        }
    }
}

#[test]
fn rescaling_changes_only_the_time_scale() {
    let s = isostring::DiscreteString::new(vec![q(1, 4), q(3, 5)], vec![q(2, 1), q(1, 3)]).unwrap();
    for bc in [
        BoundaryConditions::dirichlet_dirichlet(),
        BoundaryConditions::robin_neumann(q(2, 1)).unwrap(),
    ] {
        let a = flow_rhs(&s, &bc, &FlowSpec::limit()).unwrap();
        let b = flow_rhs(&s, &bc, &FlowSpec::Limit { rescaled: false }).unwrap();
        let w = -bc.wronskian();
        for (x, y) in a.dx.iter().zip(&b.dx).chain(a.dm.iter().zip(&b.dm)) {
            assert_eq!(x.clone() * w.clone(), y.clone());
        }
    }
}

#[test]
fn scalar_conversion_is_exact_for_dyadics() {
    let v = q(3, 8);
    assert_eq!(as_f64(&v), 0.375);
    assert_eq!(Rational::from_f64(0.375).unwrap(), v);
}
